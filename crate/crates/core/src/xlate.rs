//! Translation from phase-shifted cosines to separable sine/cosine products.
//!
//! A sub-network `Σ_i A_i cos((e_i ⊙ n)·x − φ_i)` expands into the `2^m`
//! products `Π_{p∉I_k} cos(n_p x_p) Π_{q∈I_k} sin(n_q x_q)`. With
//! `s_{i,k} = Π_{j∈I_k} e_{ij}` the coefficient of basis `k` is
//!
//! ```text
//! |I_k| mod 4 = 0:   Σ_i A_i s_{i,k} cos φ_i
//! |I_k| mod 4 = 1:   Σ_i A_i s_{i,k} sin φ_i
//! |I_k| mod 4 = 2:  −Σ_i A_i s_{i,k} cos φ_i
//! |I_k| mod 4 = 3:  −Σ_i A_i s_{i,k} sin φ_i
//! ```

use crate::error::{FlmError, Result};
use crate::lexi::{BasisIndex, SignMatrix};
use crate::model::{FlmModel, SubnetRef};

/// Separable coefficients of one frequency vector, indexed by `k - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableBlock {
    pub freq: Vec<f64>,
    pub coeffs: Vec<f64>,
}

/// Two-input closed form: `(a1, a2, a3, a4)` for the bases
/// `cos·cos, cos·sin, sin·cos, sin·sin`.
pub fn to_separable_2d(a1: f64, a2: f64, phi1: f64, phi2: f64) -> [f64; 4] {
    let (s1, c1) = phi1.sin_cos();
    let (s2, c2) = phi2.sin_cos();
    [
        a1 * c1 + a2 * c2,
        a1 * s1 - a2 * s2,
        a1 * s1 + a2 * s2,
        -a1 * c1 + a2 * c2,
    ]
}

pub fn to_separable(subnet: SubnetRef<'_>, signs: &SignMatrix) -> Result<SeparableBlock> {
    let m = signs.dim();
    if subnet.freq.len() != m {
        return Err(FlmError::DimensionMismatch {
            expected: m,
            got: subnet.freq.len(),
        });
    }
    if subnet.amp.len() != signs.len() || subnet.bias.len() != signs.len() {
        return Err(FlmError::DimensionMismatch {
            expected: signs.len(),
            got: subnet.amp.len().min(subnet.bias.len()),
        });
    }
    let trig: Vec<(f64, f64)> = subnet.bias.iter().map(|b| b.sin_cos()).collect();
    let coeffs = BasisIndex::all(m)?
        .map(|basis| {
            let order = basis.sine_count() % 4;
            let mut acc = 0.0;
            for (i, (&amp, &(s, c))) in subnet.amp.iter().zip(&trig).enumerate() {
                let sign = f64::from(signs.sign_factor_unchecked(i, &basis));
                acc += amp * sign * if order % 2 == 0 { c } else { s };
            }
            if order >= 2 {
                -acc
            } else {
                acc
            }
        })
        .collect();
    Ok(SeparableBlock {
        freq: subnet.freq.to_vec(),
        coeffs,
    })
}

/// One block per sub-network.
pub fn model_to_separable(model: &FlmModel) -> Result<Vec<SeparableBlock>> {
    model
        .subnets()
        .map(|s| to_separable(s, model.shape().signs()))
        .collect()
}

pub fn eval_separable(block: &SeparableBlock, x: &[f64]) -> Result<f64> {
    let m = block.freq.len();
    if x.len() != m {
        return Err(FlmError::DimensionMismatch {
            expected: m,
            got: x.len(),
        });
    }
    if block.coeffs.len() != 1 << m {
        return Err(FlmError::DimensionMismatch {
            expected: 1 << m,
            got: block.coeffs.len(),
        });
    }
    let factors: Vec<(f64, f64)> = block
        .freq
        .iter()
        .zip(x)
        .map(|(n, xi)| (n * xi).sin_cos())
        .collect();
    let mut total = 0.0;
    for (basis, a) in BasisIndex::all(m)?.zip(&block.coeffs) {
        let mut prod = *a;
        for (j, &(s, c)) in factors.iter().enumerate() {
            prod *= if basis.is_sine(j) { s } else { c };
        }
        total += prod;
    }
    Ok(total)
}

pub fn eval_separable_series(blocks: &[SeparableBlock], x: &[f64]) -> Result<f64> {
    blocks.iter().map(|b| eval_separable(b, x)).sum()
}
