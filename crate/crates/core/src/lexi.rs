//! The m-Lexi sign matrix and the binary bookkeeping of the separable basis.
//!
//! Row `i` of the sign matrix holds the sign pattern applied to the shared
//! frequency vector of a sub-network for its `i`-th cosine neuron. Rows start
//! with `+1` and are sorted lexicographically with `+1` ranked before `-1`,
//! so row `i` (0-based) is the binary expansion of `i` over the trailing
//! `m - 1` coordinates with a set bit meaning `-1`.
//!
//! Basis functions of the separable series are numbered `k = 1..=2^m`. The
//! sine-index set of basis `k` is read off the `m`-bit binary expansion of
//! `k - 1`: coordinate `j` (1-based, counted from the most significant bit)
//! carries a sine factor iff that bit is set.

use crate::error::{FlmError, Result};

/// Largest supported input dimension. The sign matrix has `2^(m-1)` rows.
pub const MAX_DIM: usize = 20;

fn check_dim(m: usize) -> Result<()> {
    if m == 0 || m > MAX_DIM {
        return Err(FlmError::InvalidDimension { m, max: MAX_DIM });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignMatrix {
    m: usize,
    rows: Vec<i8>,
}

impl SignMatrix {
    pub fn new(m: usize) -> Result<Self> {
        check_dim(m)?;
        let l = 1usize << (m - 1);
        let mut rows = Vec::with_capacity(l * m);
        for i in 0..l {
            rows.push(1);
            for j in 1..m {
                let bit = (i >> (m - 1 - j)) & 1;
                rows.push(if bit == 1 { -1 } else { 1 });
            }
        }
        Ok(Self { m, rows })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Number of rows, `2^(m-1)`.
    pub fn len(&self) -> usize {
        self.rows.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row `i`, 0-based.
    pub fn row(&self, i: usize) -> &[i8] {
        &self.rows[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i8]> {
        self.rows.chunks_exact(self.m)
    }

    /// Bitmask of the `-1` entries of row `i` (0-based), bit `m-1-j` for coordinate `j`.
    pub fn negative_mask(&self, i: usize) -> u32 {
        // rows are generated from i itself; the leading coordinate is always +1
        i as u32
    }

    /// `s_{i,k}`: the product of row `i`'s entries over the sine set of basis `k`.
    /// Both indices are 1-based, as in the series notation.
    pub fn sign_factor(&self, i: usize, k: usize) -> Result<i8> {
        if i == 0 || i > self.len() {
            return Err(FlmError::IndexOutOfRange {
                what: "sign-matrix row",
                index: i,
                bound: self.len(),
            });
        }
        let basis = BasisIndex::new(k, self.m)?;
        Ok(self.sign_factor_unchecked(i - 1, &basis))
    }

    /// 0-based row index; `basis` must share this matrix's dimension.
    #[inline]
    pub(crate) fn sign_factor_unchecked(&self, row: usize, basis: &BasisIndex) -> i8 {
        if (self.negative_mask(row) & basis.sine_mask)
            .count_ones()
            .is_multiple_of(2)
        {
            1
        } else {
            -1
        }
    }
}

/// Sequential index of a separable basis function together with its sine set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisIndex {
    k: usize,
    m: usize,
    /// Bit `m-1-j` set iff coordinate `j` (0-based) carries a sine factor.
    sine_mask: u32,
}

impl BasisIndex {
    /// `k` is 1-based, `1..=2^m`.
    pub fn new(k: usize, m: usize) -> Result<Self> {
        check_dim(m)?;
        let count = 1usize << m;
        if k == 0 || k > count {
            return Err(FlmError::IndexOutOfRange {
                what: "basis",
                index: k,
                bound: count,
            });
        }
        Ok(Self {
            k,
            m,
            sine_mask: (k - 1) as u32,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Raw bitmask of the sine set, most significant bit = first coordinate.
    pub fn mask(&self) -> u32 {
        self.sine_mask
    }

    /// Whether coordinate `j` (0-based) carries a sine factor.
    #[inline]
    pub fn is_sine(&self, j: usize) -> bool {
        (self.sine_mask >> (self.m - 1 - j)) & 1 == 1
    }

    /// `I_k` as 1-based coordinate indices, ascending.
    pub fn sine_set(&self) -> Vec<usize> {
        (0..self.m)
            .filter(|&j| self.is_sine(j))
            .map(|j| j + 1)
            .collect()
    }

    /// `I_k^c` as 1-based coordinate indices, ascending.
    pub fn cosine_set(&self) -> Vec<usize> {
        (0..self.m)
            .filter(|&j| !self.is_sine(j))
            .map(|j| j + 1)
            .collect()
    }

    pub fn sine_count(&self) -> u32 {
        self.sine_mask.count_ones()
    }

    /// All `2^m` basis indices in sequential order.
    pub fn all(m: usize) -> Result<impl Iterator<Item = BasisIndex>> {
        check_dim(m)?;
        Ok((1..=(1usize << m)).map(move |k| BasisIndex {
            k,
            m,
            sine_mask: (k - 1) as u32,
        }))
    }
}

pub fn sign_matrix(m: usize) -> Result<SignMatrix> {
    SignMatrix::new(m)
}

pub fn index_set(k: usize, m: usize) -> Result<BasisIndex> {
    BasisIndex::new(k, m)
}
