//! Batched evaluation on a tensor grid of times × context vectors.
//!
//! The first input is time and its sign-matrix entry is always `+1`, so every
//! phase splits as `α_s(t) + β_u(c)` with `α_s = n_{s,0} t` shared by the
//! whole sub-network. Angle addition then turns the sums over the grid into a
//! handful of `(times × sub-networks) · (sub-networks × contexts)` products.

use ndarray::{Array2, ArrayView2};

use crate::error::{FlmError, Result};
use crate::model::FlmShape;

#[derive(Debug, Clone, PartialEq)]
pub struct ProductGrid {
    times: Vec<f64>,
    /// One row per context, `dim - 1` columns.
    contexts: Array2<f64>,
}

impl ProductGrid {
    pub fn new(times: Vec<f64>, contexts: Array2<f64>) -> Self {
        Self { times, contexts }
    }

    /// A time-only grid for one-input models.
    pub fn times_only(times: Vec<f64>) -> Self {
        Self {
            times,
            contexts: Array2::zeros((1, 0)),
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn contexts(&self) -> ArrayView2<'_, f64> {
        self.contexts.view()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn n_contexts(&self) -> usize {
        self.contexts.nrows()
    }
}

/// Values and time derivatives, indexed `[time, context]`, plus the trig
/// tables the backward pass reuses.
#[derive(Debug, Clone)]
pub struct GridPass {
    pub value: Array2<f64>,
    pub dt: Array2<f64>,
    cos_a: Array2<f64>,
    sin_a: Array2<f64>,
    cos_b: Array2<f64>,
    sin_b: Array2<f64>,
}

fn check(shape: &FlmShape, grid: &ProductGrid) -> Result<()> {
    if grid.contexts.ncols() + 1 != shape.dim() {
        return Err(FlmError::DimensionMismatch {
            expected: shape.dim(),
            got: grid.contexts.ncols() + 1,
        });
    }
    Ok(())
}

pub fn forward(shape: &FlmShape, params: &[f64], grid: &ProductGrid) -> Result<GridPass> {
    check(shape, grid)?;
    let (q_len, b_len) = (grid.n_times(), grid.n_contexts());
    let (n, l, m) = (shape.n_sub(), shape.width(), shape.dim());

    let mut cos_a = Array2::zeros((q_len, n));
    let mut sin_a = Array2::zeros((q_len, n));
    let mut w0 = vec![0.0; n];
    for s in 0..n {
        let (f, _, _) = shape.offsets(s);
        w0[s] = params[f];
        for (q, &t) in grid.times.iter().enumerate() {
            let (sn, c) = (w0[s] * t).sin_cos();
            cos_a[[q, s]] = c;
            sin_a[[q, s]] = sn;
        }
    }

    let mut cos_b = Array2::zeros((n * l, b_len));
    let mut sin_b = Array2::zeros((n * l, b_len));
    let mut kc = Array2::zeros((n, b_len));
    let mut ks = Array2::zeros((n, b_len));
    for s in 0..n {
        let (f, a, bo) = shape.offsets(s);
        for (i, row) in shape.signs().rows().enumerate() {
            let u = s * l + i;
            let amp = params[a + i];
            for (b, ctx) in grid.contexts.rows().into_iter().enumerate() {
                let mut beta = -params[bo + i];
                for j in 1..m {
                    beta += f64::from(row[j]) * params[f + j] * ctx[j - 1];
                }
                let (sn, c) = beta.sin_cos();
                cos_b[[u, b]] = c;
                sin_b[[u, b]] = sn;
                kc[[s, b]] += amp * c;
                ks[[s, b]] += amp * sn;
            }
        }
    }

    let value = cos_a.dot(&kc) - sin_a.dot(&ks);
    let mut cos_aw = cos_a.clone();
    let mut sin_aw = sin_a.clone();
    for mut row in cos_aw.rows_mut() {
        row.iter_mut().zip(&w0).for_each(|(v, w)| *v *= -w);
    }
    for mut row in sin_aw.rows_mut() {
        row.iter_mut().zip(&w0).for_each(|(v, w)| *v *= -w);
    }
    let dt = sin_aw.dot(&kc) + cos_aw.dot(&ks);

    Ok(GridPass {
        value,
        dt,
        cos_a,
        sin_a,
        cos_b,
        sin_b,
    })
}

/// Adds `∂/∂θ Σ (g_value ⊙ value + g_dt ⊙ dt)` into `grad`.
pub fn backward(
    shape: &FlmShape,
    params: &[f64],
    grid: &ProductGrid,
    pass: &GridPass,
    g_value: &Array2<f64>,
    g_dt: &Array2<f64>,
    grad: &mut [f64],
) {
    let (n, l, m) = (shape.n_sub(), shape.width(), shape.dim());
    let b_len = grid.n_contexts();

    let mut tcos_a = pass.cos_a.clone();
    let mut tsin_a = pass.sin_a.clone();
    for (q, &t) in grid.times.iter().enumerate() {
        tcos_a.row_mut(q).mapv_inplace(|v| v * t);
        tsin_a.row_mut(q).mapv_inplace(|v| v * t);
    }
    let p1 = pass.cos_a.t().dot(g_value);
    let p2 = pass.sin_a.t().dot(g_value);
    let p3 = pass.cos_a.t().dot(g_dt);
    let p4 = pass.sin_a.t().dot(g_dt);
    let p5 = tcos_a.t().dot(g_value);
    let p6 = tsin_a.t().dot(g_value);
    let p7 = tcos_a.t().dot(g_dt);
    let p8 = tsin_a.t().dot(g_dt);

    let mut r3 = vec![0.0; m];
    let mut r4 = vec![0.0; m];
    for s in 0..n {
        let (f, a, bo) = shape.offsets(s);
        let w0 = params[f];
        for (i, row) in shape.signs().rows().enumerate() {
            let u = s * l + i;
            let amp = params[a + i];
            let (mut s1, mut s2, mut s3, mut s4, mut t3, mut t4) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            r3.fill(0.0);
            r4.fill(0.0);
            for b in 0..b_len {
                let (cb, sb) = (pass.cos_b[[u, b]], pass.sin_b[[u, b]]);
                let sv = p2[[s, b]] * cb + p1[[s, b]] * sb;
                let cv = p1[[s, b]] * cb - p2[[s, b]] * sb;
                let sd = p4[[s, b]] * cb + p3[[s, b]] * sb;
                let cd = p3[[s, b]] * cb - p4[[s, b]] * sb;
                s1 += cv;
                s2 += sd;
                s3 += sv;
                s4 += cd;
                t3 += p6[[s, b]] * cb + p5[[s, b]] * sb;
                t4 += p7[[s, b]] * cb - p8[[s, b]] * sb;
                for j in 1..m {
                    let c = grid.contexts[[b, j - 1]];
                    r3[j] += sv * c;
                    r4[j] += cd * c;
                }
            }
            grad[a + i] += s1 - w0 * s2;
            grad[bo + i] += amp * (s3 + w0 * s4);
            grad[f] -= amp * (t3 + w0 * t4 + s2);
            for j in 1..m {
                grad[f + j] -= f64::from(row[j]) * amp * (r3[j] + w0 * r4[j]);
            }
        }
    }
}
