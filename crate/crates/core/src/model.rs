//! The Fourier Learning Machine.
//!
//! A model over `m` inputs is a sum of `N` sub-networks. Sub-network `s` owns a
//! frequency vector `n` (length `m`) and `l = 2^(m-1)` cosine neurons; neuron
//! `i` uses input weights `w = e_i ⊙ n`, where `e_i` is row `i` of the sign
//! matrix, a bias `b_i` and an output weight (amplitude) `A_i`:
//!
//! ```text
//! f(x) = Σ_s Σ_i A_i cos(w·x − b_i)
//! ```
//!
//! Parameters live in one flat vector, sub-network by sub-network, each block
//! laid out as `[n_1..n_m, A_1..A_l, b_1..b_l]`. Every derivative the solvers
//! need is a polynomial in `(A, w, x)` times `sin φ` or `cos φ`, so input
//! derivatives and all parameter gradients are evaluated in closed form from a
//! single `sin_cos` per neuron.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{FlmError, Result};
use crate::lexi::SignMatrix;

/// Network topology: input dimension, sub-network count and the sign matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FlmShape {
    dim: usize,
    n_sub: usize,
    signs: SignMatrix,
}

/// One sub-network, owned.
#[derive(Debug, Clone, PartialEq)]
pub struct SubNetwork {
    pub freq: Vec<f64>,
    pub amp: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Borrowed view of one sub-network inside a flat parameter vector.
#[derive(Debug, Clone, Copy)]
pub struct SubnetRef<'a> {
    pub freq: &'a [f64],
    pub amp: &'a [f64],
    pub bias: &'a [f64],
}

impl SubnetRef<'_> {
    pub fn to_owned(&self) -> SubNetwork {
        SubNetwork {
            freq: self.freq.to_vec(),
            amp: self.amp.to_vec(),
            bias: self.bias.to_vec(),
        }
    }
}

/// Value, input gradient and diagonal of the input Hessian at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivs {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess_diag: Vec<f64>,
}

impl Derivs {
    pub fn zeros(dim: usize) -> Self {
        Self {
            value: 0.0,
            grad: vec![0.0; dim],
            hess_diag: vec![0.0; dim],
        }
    }
}

/// Weights of a linear functional of [`Derivs`], used to pull a loss
/// sensitivity back onto the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Cotangent {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess_diag: Vec<f64>,
}

impl Cotangent {
    pub fn zeros(dim: usize) -> Self {
        Self {
            value: 0.0,
            grad: vec![0.0; dim],
            hess_diag: vec![0.0; dim],
        }
    }

    pub fn clear(&mut self) {
        self.value = 0.0;
        self.grad.iter_mut().for_each(|g| *g = 0.0);
        self.hess_diag.iter_mut().for_each(|h| *h = 0.0);
    }
}

/// Everything about the model at one point, including the full Jacobians of
/// value / gradient / Hessian diagonal with respect to every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalBundle {
    pub value: f64,
    pub grad_x: Vec<f64>,
    pub diag_hess_x: Vec<f64>,
    pub param_grads: ParamGrads,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    /// `∂f/∂θ`, one entry per parameter.
    pub value: Vec<f64>,
    /// `∂(∂f/∂x_j)/∂θ`, indexed `[j][θ]`.
    pub grad_x: Vec<Vec<f64>>,
    /// `∂(∂²f/∂x_j²)/∂θ`, indexed `[j][θ]`.
    pub diag_hess_x: Vec<Vec<f64>>,
}

/// Initialization knobs. The default bias spread is `π/3`, read as a
/// standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitConfig {
    pub seed: u64,
    pub bias_std: f64,
}

impl InitConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            bias_std: std::f64::consts::FRAC_PI_3,
        }
    }
}

impl FlmShape {
    pub fn new(dim: usize, n_sub: usize) -> Result<Self> {
        let signs = SignMatrix::new(dim)?;
        Ok(Self { dim, n_sub, signs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    /// Neurons per sub-network, `2^(m-1)`.
    pub fn width(&self) -> usize {
        self.signs.len()
    }

    pub fn signs(&self) -> &SignMatrix {
        &self.signs
    }

    /// Parameters per sub-network, `m + 2^m`.
    pub fn stride(&self) -> usize {
        self.dim + 2 * self.width()
    }

    pub fn num_params(&self) -> usize {
        self.n_sub * self.stride()
    }

    /// Offsets of `(n, A, b)` inside sub-network `s`'s block.
    #[inline]
    pub fn offsets(&self, s: usize) -> (usize, usize, usize) {
        let base = s * self.stride();
        (base, base + self.dim, base + self.dim + self.width())
    }

    pub fn subnet<'a>(&self, params: &'a [f64], s: usize) -> SubnetRef<'a> {
        let (f, a, b) = self.offsets(s);
        let l = self.width();
        SubnetRef {
            freq: &params[f..f + self.dim],
            amp: &params[a..a + l],
            bias: &params[b..b + l],
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(FlmError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Calls `f(s, i, w, φ)` for every neuron with its input weights and phase.
    #[inline]
    fn for_each_neuron(
        &self,
        params: &[f64],
        x: &[f64],
        mut f: impl FnMut(usize, usize, &[f64], f64),
    ) {
        let m = self.dim;
        let mut w = [0.0f64; crate::lexi::MAX_DIM];
        for s in 0..self.n_sub {
            let (fo, _, bo) = self.offsets(s);
            let freq = &params[fo..fo + m];
            for (i, row) in self.signs.rows().enumerate() {
                let mut phase = -params[bo + i];
                for j in 0..m {
                    w[j] = f64::from(row[j]) * freq[j];
                    phase += w[j] * x[j];
                }
                f(s, i, &w[..m], phase);
            }
        }
    }

    pub fn eval(&self, params: &[f64], x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(params, x))
    }

    pub fn eval_unchecked(&self, params: &[f64], x: &[f64]) -> f64 {
        let mut total = 0.0;
        self.for_each_neuron(params, x, |s, i, _, phase| {
            let (_, ao, _) = self.offsets(s);
            total += params[ao + i] * phase.cos();
        });
        total
    }

    /// Value and first/second input derivatives, written into `out`.
    pub fn derivs_into(&self, params: &[f64], x: &[f64], out: &mut Derivs) {
        let m = self.dim;
        out.value = 0.0;
        out.grad.clear();
        out.grad.resize(m, 0.0);
        out.hess_diag.clear();
        out.hess_diag.resize(m, 0.0);
        self.for_each_neuron(params, x, |s, i, w, phase| {
            let (_, ao, _) = self.offsets(s);
            let amp = params[ao + i];
            let (sn, c) = phase.sin_cos();
            out.value += amp * c;
            for j in 0..m {
                out.grad[j] -= amp * w[j] * sn;
                out.hess_diag[j] -= amp * w[j] * w[j] * c;
            }
        });
    }

    pub fn derivs(&self, params: &[f64], x: &[f64]) -> Result<Derivs> {
        self.check_point(x)?;
        let mut out = Derivs::zeros(self.dim);
        self.derivs_into(params, x, &mut out);
        Ok(out)
    }

    /// Adds `∂/∂θ [cot · derivs(x)]` into `grad_out`.
    pub fn backprop(&self, params: &[f64], x: &[f64], cot: &Cotangent, grad_out: &mut [f64]) {
        let m = self.dim;
        self.for_each_neuron(params, x, |s, i, w, phase| {
            let (fo, ao, bo) = self.offsets(s);
            let amp = params[ao + i];
            let (sn, c) = phase.sin_cos();
            let mut g = 0.0;
            let mut h = 0.0;
            for j in 0..m {
                g += cot.grad[j] * w[j];
                h += cot.hess_diag[j] * w[j] * w[j];
            }
            grad_out[ao + i] += cot.value * c - g * sn - h * c;
            let d = cot.value * sn + g * c - h * sn;
            grad_out[bo + i] += amp * d;
            let row = self.signs.row(i);
            for q in 0..m {
                let dw = -amp * (x[q] * d + cot.grad[q] * sn + 2.0 * cot.hess_diag[q] * w[q] * c);
                grad_out[fo + q] += f64::from(row[q]) * dw;
            }
        });
    }

    /// [`FlmShape::derivs_into`] that also records each neuron's `(sin φ, cos φ)`
    /// for a following [`FlmShape::backprop_cached`] at the same point.
    pub fn derivs_cached(
        &self,
        params: &[f64],
        x: &[f64],
        out: &mut Derivs,
        trig: &mut Vec<(f64, f64)>,
    ) {
        let m = self.dim;
        out.value = 0.0;
        out.grad.clear();
        out.grad.resize(m, 0.0);
        out.hess_diag.clear();
        out.hess_diag.resize(m, 0.0);
        trig.clear();
        self.for_each_neuron(params, x, |s, i, w, phase| {
            let (_, ao, _) = self.offsets(s);
            let amp = params[ao + i];
            let (sn, c) = phase.sin_cos();
            trig.push((sn, c));
            out.value += amp * c;
            for j in 0..m {
                out.grad[j] -= amp * w[j] * sn;
                out.hess_diag[j] -= amp * w[j] * w[j] * c;
            }
        });
    }

    /// [`FlmShape::backprop`] reusing the trig values from [`FlmShape::derivs_cached`].
    pub fn backprop_cached(
        &self,
        params: &[f64],
        x: &[f64],
        cot: &Cotangent,
        trig: &[(f64, f64)],
        grad_out: &mut [f64],
    ) {
        let m = self.dim;
        let l = self.width();
        let mut w = [0.0f64; crate::lexi::MAX_DIM];
        for s in 0..self.n_sub {
            let (fo, ao, bo) = self.offsets(s);
            for (i, row) in self.signs.rows().enumerate() {
                let (sn, c) = trig[s * l + i];
                let amp = params[ao + i];
                let mut g = 0.0;
                let mut h = 0.0;
                for j in 0..m {
                    w[j] = f64::from(row[j]) * params[fo + j];
                    g += cot.grad[j] * w[j];
                    h += cot.hess_diag[j] * w[j] * w[j];
                }
                grad_out[ao + i] += cot.value * c - g * sn - h * c;
                let d = cot.value * sn + g * c - h * sn;
                grad_out[bo + i] += amp * d;
                for q in 0..m {
                    let dw =
                        -amp * (x[q] * d + cot.grad[q] * sn + 2.0 * cot.hess_diag[q] * w[q] * c);
                    grad_out[fo + q] += f64::from(row[q]) * dw;
                }
            }
        }
    }

    pub fn eval_bundle(&self, params: &[f64], x: &[f64]) -> Result<EvalBundle> {
        self.check_point(x)?;
        let m = self.dim;
        let p = self.num_params();
        let mut bundle = EvalBundle {
            value: 0.0,
            grad_x: vec![0.0; m],
            diag_hess_x: vec![0.0; m],
            param_grads: ParamGrads {
                value: vec![0.0; p],
                grad_x: vec![vec![0.0; p]; m],
                diag_hess_x: vec![vec![0.0; p]; m],
            },
        };
        self.for_each_neuron(params, x, |s, i, w, phase| {
            let (fo, ao, bo) = self.offsets(s);
            let amp = params[ao + i];
            let (sn, c) = phase.sin_cos();
            let row = self.signs.row(i);
            let pg = &mut bundle.param_grads;

            bundle.value += amp * c;
            pg.value[ao + i] += c;
            pg.value[bo + i] += amp * sn;
            for q in 0..m {
                pg.value[fo + q] += f64::from(row[q]) * (-amp * sn * x[q]);
            }

            for j in 0..m {
                bundle.grad_x[j] -= amp * w[j] * sn;
                bundle.diag_hess_x[j] -= amp * w[j] * w[j] * c;

                let gj = &mut pg.grad_x[j];
                gj[ao + i] += -w[j] * sn;
                gj[bo + i] += amp * w[j] * c;
                for q in 0..m {
                    let direct = if q == j { sn } else { 0.0 };
                    gj[fo + q] += f64::from(row[q]) * (-amp * (direct + w[j] * c * x[q]));
                }

                let hj = &mut pg.diag_hess_x[j];
                hj[ao + i] += -w[j] * w[j] * c;
                hj[bo + i] += -amp * w[j] * w[j] * sn;
                for q in 0..m {
                    let direct = if q == j { 2.0 * w[j] * c } else { 0.0 };
                    hj[fo + q] += f64::from(row[q]) * (-amp * (direct - w[j] * w[j] * sn * x[q]));
                }
            }
        });
        Ok(bundle)
    }

    /// Frequencies of the first `n_sub` points of the box `{0..k-1}^m`,
    /// enumerated lexicographically with the last coordinate fastest, where
    /// `k` is the smallest integer with `k^m ≥ n_sub`.
    pub fn lattice_frequencies(&self) -> Vec<Vec<f64>> {
        let m = self.dim;
        let mut k: usize = 1;
        while k.checked_pow(m as u32).is_some_and(|v| v < self.n_sub) {
            k += 1;
        }
        let mut out = Vec::with_capacity(self.n_sub);
        let mut digits = vec![0usize; m];
        for _ in 0..self.n_sub {
            out.push(digits.iter().map(|&d| d as f64).collect());
            for j in (0..m).rev() {
                digits[j] += 1;
                if digits[j] < k {
                    break;
                }
                digits[j] = 0;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlmModel {
    shape: FlmShape,
    params: Vec<f64>,
}

impl FlmModel {
    pub fn zeros(dim: usize, n_sub: usize) -> Result<Self> {
        let shape = FlmShape::new(dim, n_sub)?;
        let params = vec![0.0; shape.num_params()];
        Ok(Self { shape, params })
    }

    pub fn from_params(dim: usize, n_sub: usize, params: Vec<f64>) -> Result<Self> {
        let shape = FlmShape::new(dim, n_sub)?;
        if params.len() != shape.num_params() {
            return Err(FlmError::DimensionMismatch {
                expected: shape.num_params(),
                got: params.len(),
            });
        }
        Ok(Self { shape, params })
    }

    pub fn from_subnets(dim: usize, subnets: &[SubNetwork]) -> Result<Self> {
        let mut model = Self::zeros(dim, subnets.len())?;
        let l = model.shape.width();
        for (s, sub) in subnets.iter().enumerate() {
            if sub.freq.len() != dim {
                return Err(FlmError::Invariant(format!(
                    "sub-network {s}: {} frequencies for input dimension {dim}",
                    sub.freq.len()
                )));
            }
            if sub.amp.len() != l || sub.bias.len() != l {
                return Err(FlmError::Invariant(format!(
                    "sub-network {s}: expected {l} amplitudes and biases, got {} and {}",
                    sub.amp.len(),
                    sub.bias.len()
                )));
            }
            let (f, a, b) = model.shape.offsets(s);
            model.params[f..f + dim].copy_from_slice(&sub.freq);
            model.params[a..a + l].copy_from_slice(&sub.amp);
            model.params[b..b + l].copy_from_slice(&sub.bias);
        }
        Ok(model)
    }

    /// Lattice frequencies, zero amplitudes, normally distributed biases.
    pub fn init(dim: usize, n_sub: usize, cfg: &InitConfig) -> Result<Self> {
        if n_sub == 0 {
            return Err(FlmError::Config(
                "a model needs at least one sub-network".into(),
            ));
        }
        let normal = Normal::new(0.0, cfg.bias_std)
            .map_err(|e| FlmError::Config(format!("bias spread: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut model = Self::zeros(dim, n_sub)?;
        let l = model.shape.width();
        for (s, freq) in model.shape.lattice_frequencies().into_iter().enumerate() {
            let (f, _, b) = model.shape.offsets(s);
            model.params[f..f + dim].copy_from_slice(&freq);
            for i in 0..l {
                model.params[b + i] = normal.sample(&mut rng);
            }
        }
        Ok(model)
    }

    pub fn shape(&self) -> &FlmShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim
    }

    pub fn n_sub(&self) -> usize {
        self.shape.n_sub
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(FlmError::DimensionMismatch {
                expected: self.params.len(),
                got: params.len(),
            });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    pub fn subnet(&self, s: usize) -> SubnetRef<'_> {
        self.shape.subnet(&self.params, s)
    }

    pub fn subnets(&self) -> impl Iterator<Item = SubnetRef<'_>> {
        (0..self.shape.n_sub).map(|s| self.subnet(s))
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.shape.eval(&self.params, x)
    }

    pub fn derivs(&self, x: &[f64]) -> Result<Derivs> {
        self.shape.derivs(&self.params, x)
    }

    pub fn eval_bundle(&self, x: &[f64]) -> Result<EvalBundle> {
        self.shape.eval_bundle(&self.params, x)
    }

    /// The model obtained by negating frequency component `q` (0-based) of
    /// every sub-network while permuting each sub-network's neurons so the
    /// represented function is unchanged.
    ///
    /// Flipping coordinate `q > 0` maps row `i` onto the row with that sign
    /// flipped. Flipping the leading coordinate produces a row starting with
    /// `-1`; its negation is a valid row, and `cos` being even turns the bias
    /// into its negative.
    pub fn reflect(&self, q: usize) -> Result<Self> {
        let m = self.shape.dim;
        if q >= m {
            return Err(FlmError::IndexOutOfRange {
                what: "frequency component",
                index: q + 1,
                bound: m,
            });
        }
        let l = self.shape.width();
        let mut out = self.clone();
        for s in 0..self.shape.n_sub {
            let (f, a, b) = self.shape.offsets(s);
            out.params[f + q] = -self.params[f + q];
            for i in 0..l {
                let (src, bias_sign) = if q == 0 {
                    (i ^ (l - 1), -1.0)
                } else {
                    (i ^ (1 << (m - 1 - q)), 1.0)
                };
                out.params[a + i] = self.params[a + src];
                out.params[b + i] = bias_sign * self.params[b + src];
            }
        }
        Ok(out)
    }
}

pub fn init_model(dim: usize, n_sub: usize, seed: u64) -> Result<FlmModel> {
    FlmModel::init(dim, n_sub, &InitConfig::new(seed))
}
