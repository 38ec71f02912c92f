//! Penalty-method optimal control of a Rock-Paper-Scissors replicator system.
//!
//! The state `u` lives on the 2-simplex and follows `u̇ = F(u) + γ G(u)` with
//! `F_i = u_i (e_i − u)ᵀ L u` and `G_i = u_i (e_i − u)ᵀ M u`. Two networks learn
//! `u₁, u₂` (the third share is `1 − u₁ − u₂`) and a third learns the control
//! `γ`, either as functions of time alone for one initial condition or of
//! `(t, u₀₁, u₀₂)` for a whole disk of initial conditions.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FlmError, Result};
use crate::grid::{self, ProductGrid};
use crate::model::{FlmModel, FlmShape, InitConfig};
use crate::optim::{train, Adam, AdamConfig, StopReason, TrainConfig, TrainReport};

pub type Mat3 = [[f64; 3]; 3];

pub const L3: Mat3 = [[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]];
pub const M3: Mat3 = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
pub const U_STAR: [f64; 3] = [1.0 / 3.0; 3];

const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcpConfig {
    pub horizon: f64,
    pub r: f64,
    pub mu1: [f64; 3],
    pub mu2: [f64; 3],
    pub quad_n: usize,
}

impl Default for OcpConfig {
    fn default() -> Self {
        Self {
            horizon: 6.0,
            r: 0.2,
            mu1: [1e4; 3],
            mu2: [1e4; 3],
            quad_n: 101,
        }
    }
}

impl OcpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(FlmError::Config(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(FlmError::Config(format!(
                "control weight must be positive, got {}",
                self.r
            )));
        }
        if self
            .mu1
            .iter()
            .chain(&self.mu2)
            .any(|m| !(*m > 0.0 && m.is_finite()))
        {
            return Err(FlmError::Config(
                "penalty coefficients must be positive".into(),
            ));
        }
        if self.quad_n < 2 {
            return Err(FlmError::Config(
                "quadrature needs at least two points".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint {
    u: [f64; 3],
}

impl SimplexPoint {
    pub fn new(u: [f64; 3]) -> Result<Self> {
        let sum: f64 = u.iter().sum();
        if u.iter().any(|v| !v.is_finite() || *v < -SIMPLEX_TOL) || (sum - 1.0).abs() > SIMPLEX_TOL
        {
            return Err(FlmError::Domain(format!("{u:?} is not on the simplex")));
        }
        Ok(Self { u })
    }

    /// The point `(u1, u2, 1 − u1 − u2)`.
    pub fn from_pair(u1: f64, u2: f64) -> Result<Self> {
        Self::new([u1, u2, 1.0 - u1 - u2])
    }

    pub fn coords(&self) -> [f64; 3] {
        self.u
    }

    /// `(u1, u2, u3) → (u2, u3, u1)`.
    pub fn cycle(&self) -> Self {
        Self {
            u: [self.u[1], self.u[2], self.u[0]],
        }
    }

    /// Inverse of [`SimplexPoint::cycle`].
    pub fn cycle_back(&self) -> Self {
        Self {
            u: [self.u[2], self.u[0], self.u[1]],
        }
    }

    pub fn cycle_by(&self, k: usize) -> Self {
        (0..k % 3).fold(*self, |p, _| p.cycle())
    }

    pub fn cycle_back_by(&self, k: usize) -> Self {
        (0..k % 3).fold(*self, |p, _| p.cycle_back())
    }
}

pub fn mat_vec(a: &Mat3, u: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| a[i][0] * u[0] + a[i][1] * u[1] + a[i][2] * u[2])
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `u_i ((A u)_i − uᵀ A u)`, defined on all of ℝ³.
pub fn field(a: &Mat3, u: &[f64; 3]) -> [f64; 3] {
    let au = mat_vec(a, u);
    let uau = dot(u, &au);
    std::array::from_fn(|i| u[i] * (au[i] - uau))
}

/// `∂field_i/∂u_k`.
pub fn field_jacobian(a: &Mat3, u: &[f64; 3]) -> Mat3 {
    let au = mat_vec(a, u);
    let uau = dot(u, &au);
    let sym: [f64; 3] =
        std::array::from_fn(|k| au[k] + (0..3).map(|i| a[i][k] * u[i]).sum::<f64>());
    std::array::from_fn(|i| {
        std::array::from_fn(|k| {
            let diag = if i == k { au[i] - uau } else { 0.0 };
            diag + u[i] * (a[i][k] - sym[k])
        })
    })
}

/// `(F(u), G(u))` without a simplex check.
pub fn fields(u: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    (field(&L3, u), field(&M3, u))
}

pub fn replicator_fields(u: &SimplexPoint) -> ([f64; 3], [f64; 3]) {
    fields(&u.u)
}

/// Trapezoid weights for `n` uniform points on `[0, horizon]`.
pub fn trapezoid_weights(n: usize, horizon: f64) -> Vec<f64> {
    let h = horizon / (n - 1) as f64;
    (0..n)
        .map(|q| if q == 0 || q == n - 1 { 0.5 * h } else { h })
        .collect()
}

pub fn uniform_times(n: usize, horizon: f64) -> Vec<f64> {
    (0..n)
        .map(|q| horizon * q as f64 / (n - 1) as f64)
        .collect()
}

/// `½‖u − u*‖² + (r/2)γ²`.
pub fn running_cost(u: &[f64; 3], gamma: f64, r: f64) -> f64 {
    let d2: f64 = u.iter().zip(&U_STAR).map(|(a, b)| (a - b) * (a - b)).sum();
    0.5 * d2 + 0.5 * r * gamma * gamma
}

/// Trapezoid rule over uniformly sampled state and control paths on `[0, horizon]`.
pub fn objective(us: &[[f64; 3]], gammas: &[f64], horizon: f64, r: f64) -> Result<f64> {
    if us.len() != gammas.len() {
        return Err(FlmError::DimensionMismatch {
            expected: us.len(),
            got: gammas.len(),
        });
    }
    if us.len() < 2 {
        return Err(FlmError::Config(
            "quadrature needs at least two points".into(),
        ));
    }
    Ok(trapezoid_weights(us.len(), horizon)
        .iter()
        .zip(us.iter().zip(gammas))
        .map(|(w, (u, g))| w * running_cost(u, *g, r))
        .sum())
}

const V1: [f64; 3] = [
    std::f64::consts::FRAC_1_SQRT_2,
    -std::f64::consts::FRAC_1_SQRT_2,
    0.0,
];
const V2: [f64; 3] = [
    0.408_248_290_463_863,
    0.408_248_290_463_863,
    -0.816_496_580_927_726,
];

/// Orthonormal basis of the simplex plane used by [`sample_disk`].
pub fn disk_basis() -> [[f64; 3]; 2] {
    [V1, V2]
}

/// Whether the planar disk stays strictly inside the simplex.
pub fn disk_fits(center: &SimplexPoint, radius: f64) -> bool {
    // the in-plane distance from the center to the face u_i = 0 is u_i / √(2/3)
    let reach = (2.0f64 / 3.0).sqrt();
    radius >= 0.0 && center.u.iter().all(|c| c / reach > radius)
}

pub fn sample_disk(
    center: &SimplexPoint,
    radius: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<SimplexPoint>> {
    sample_disk_with_basis(center, radius, count, seed, disk_basis())
}

/// Uniform samples from the disk `center + ρ (cos θ v₁ + sin θ v₂)`, `ρ ≤ radius`.
pub fn sample_disk_with_basis(
    center: &SimplexPoint,
    radius: f64,
    count: usize,
    seed: u64,
    basis: [[f64; 3]; 2],
) -> Result<Vec<SimplexPoint>> {
    if !disk_fits(center, radius) {
        return Err(FlmError::Config(format!(
            "disk of radius {radius} around {:?} leaves the simplex",
            center.u
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let rho = radius * rng.random::<f64>().sqrt();
            let theta = 2.0 * PI * rng.random::<f64>();
            let (s, c) = theta.sin_cos();
            SimplexPoint::new(std::array::from_fn(|i| {
                center.u[i] + rho * (c * basis[0][i] + s * basis[1][i])
            }))
        })
        .collect()
}

/// Mean absolute percentage error.
pub fn mape(j_flm: &[f64], j_ref: &[f64]) -> Result<f64> {
    paired(j_flm, j_ref)?;
    if let Some(pos) = j_ref.iter().position(|r| *r == 0.0) {
        return Err(FlmError::Domain(format!("reference value {pos} is zero")));
    }
    Ok(100.0
        * j_flm
            .iter()
            .zip(j_ref)
            .map(|(a, b)| ((a - b) / b).abs())
            .sum::<f64>()
        / j_ref.len() as f64)
}

pub fn mae(a: &[f64], b: &[f64]) -> Result<f64> {
    paired(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

fn paired(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(FlmError::DimensionMismatch {
            expected: b.len(),
            got: a.len(),
        });
    }
    if a.is_empty() {
        return Err(FlmError::Domain("empty comparison".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcMode {
    /// One initial condition; networks take `t`.
    Fixed,
    /// A family of initial conditions; networks take `(t, u₀₁, u₀₂)`.
    Varying,
}

impl IcMode {
    pub fn input_dim(self) -> usize {
        match self {
            IcMode::Fixed => 1,
            IcMode::Varying => 3,
        }
    }
}

impl std::str::FromStr for IcMode {
    type Err = FlmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(IcMode::Fixed),
            "varying" => Ok(IcMode::Varying),
            _ => Err(FlmError::Config(format!(
                "unknown mode `{s}` (expected fixed or varying)"
            ))),
        }
    }
}

pub const STATE1: usize = 0;
pub const STATE2: usize = 1;
pub const CONTROL: usize = 2;

/// The two state networks and the control network, sharing one shape and one
/// flat parameter vector `[û₁ | û₂ | γ̂]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OcpNetworks {
    mode: IcMode,
    shape: FlmShape,
    params: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub u: [f64; 3],
    pub gamma: f64,
}

impl OcpNetworks {
    pub fn init(mode: IcMode, n_sub: usize, seed: u64) -> Result<Self> {
        let models = [0u64, 1, 2].map(|k| {
            FlmModel::init(
                mode.input_dim(),
                n_sub,
                &InitConfig::new(seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15))),
            )
        });
        let [a, b, c] = models;
        Self::from_models(mode, [a?, b?, c?])
    }

    pub fn from_models(mode: IcMode, models: [FlmModel; 3]) -> Result<Self> {
        let shape = models[0].shape().clone();
        if shape.dim() != mode.input_dim() {
            return Err(FlmError::DimensionMismatch {
                expected: mode.input_dim(),
                got: shape.dim(),
            });
        }
        if models.iter().any(|m| m.shape() != &shape) {
            return Err(FlmError::Invariant(
                "all three networks must share one shape".into(),
            ));
        }
        let params = models
            .iter()
            .flat_map(|m| m.params().iter().copied())
            .collect();
        Ok(Self {
            mode,
            shape,
            params,
        })
    }

    pub fn mode(&self) -> IcMode {
        self.mode
    }

    pub fn shape(&self) -> &FlmShape {
        &self.shape
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn net_params(&self, k: usize) -> &[f64] {
        let p = self.shape.num_params();
        &self.params[k * p..(k + 1) * p]
    }

    pub fn net(&self, k: usize) -> FlmModel {
        FlmModel::from_params(
            self.shape.dim(),
            self.shape.n_sub(),
            self.net_params(k).to_vec(),
        )
        .expect("shape already validated")
    }

    fn input(&self, t: f64, u0: &SimplexPoint) -> Vec<f64> {
        match self.mode {
            IcMode::Fixed => vec![t],
            IcMode::Varying => vec![t, u0.u[0], u0.u[1]],
        }
    }

    pub fn state(&self, t: f64, u0: &SimplexPoint) -> ([f64; 3], f64) {
        let x = self.input(t, u0);
        let v = |k| self.shape.eval_unchecked(self.net_params(k), &x);
        let (u1, u2) = (v(STATE1), v(STATE2));
        ([u1, u2, 1.0 - u1 - u2], v(CONTROL))
    }

    pub fn trajectory(&self, u0: &SimplexPoint, times: &[f64]) -> Vec<TrajectoryPoint> {
        times
            .iter()
            .map(|&t| {
                let (u, gamma) = self.state(t, u0);
                TrajectoryPoint { t, u, gamma }
            })
            .collect()
    }

    /// The objective of the network trajectory, by the trapezoid rule on `eval_n` points.
    pub fn objective(&self, u0: &SimplexPoint, cfg: &OcpConfig, eval_n: usize) -> Result<f64> {
        let traj = self.trajectory(u0, &uniform_times(eval_n, cfg.horizon));
        let us: Vec<[f64; 3]> = traj.iter().map(|p| p.u).collect();
        let gs: Vec<f64> = traj.iter().map(|p| p.gamma).collect();
        objective(&us, &gs, cfg.horizon, cfg.r)
    }
}

/// Batch means of the penalty-loss ingredients.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OcpLoss {
    pub total: f64,
    pub objective: f64,
    pub v_dyn: [f64; 3],
    pub v_init: [f64; 3],
}

/// Loss contributions of one quadrature node and their derivatives with
/// respect to `u`, `u̇` and `γ` (all three state components treated as free).
struct NodeTerms {
    cost: f64,
    v_dyn: [f64; 3],
    g_u: [f64; 3],
    g_du: [f64; 3],
    g_gamma: f64,
}

fn node_terms(u: &[f64; 3], du: &[f64; 3], gamma: f64, weight: f64, cfg: &OcpConfig) -> NodeTerms {
    let (f, g) = fields(u);
    let jf = field_jacobian(&L3, u);
    let jg = field_jacobian(&M3, u);
    let mut out = NodeTerms {
        cost: weight * running_cost(u, gamma, cfg.r),
        v_dyn: [0.0; 3],
        g_u: std::array::from_fn(|i| weight * (u[i] - U_STAR[i])),
        g_du: [0.0; 3],
        g_gamma: weight * cfg.r * gamma,
    };
    for i in 0..3 {
        let res = du[i] - f[i] - gamma * g[i];
        out.v_dyn[i] = weight * res * res;
        let rho = cfg.mu1[i] * weight * res;
        out.g_du[i] = rho;
        for k in 0..3 {
            out.g_u[k] -= rho * (jf[i][k] + gamma * jg[i][k]);
        }
        out.g_gamma -= rho * g[i];
    }
    out
}

fn combine(objective: f64, v_dyn: [f64; 3], v_init: [f64; 3], cfg: &OcpConfig) -> f64 {
    objective
        + (0..3)
            .map(|i| 0.5 * cfg.mu1[i] * v_dyn[i] + 0.5 * cfg.mu2[i] * v_init[i])
            .sum::<f64>()
}

/// The penalty loss of explicitly sampled paths on the uniform quadrature grid.
pub fn penalty_from_paths(
    us: &[[f64; 3]],
    dus: &[[f64; 3]],
    gammas: &[f64],
    u0: &SimplexPoint,
    cfg: &OcpConfig,
) -> Result<OcpLoss> {
    if us.len() != dus.len() || us.len() != gammas.len() {
        return Err(FlmError::DimensionMismatch {
            expected: us.len(),
            got: dus.len().min(gammas.len()),
        });
    }
    if us.len() < 2 {
        return Err(FlmError::Config(
            "quadrature needs at least two points".into(),
        ));
    }
    let weights = trapezoid_weights(us.len(), cfg.horizon);
    let mut loss = OcpLoss::default();
    for q in 0..us.len() {
        let t = node_terms(&us[q], &dus[q], gammas[q], weights[q], cfg);
        loss.objective += t.cost;
        for i in 0..3 {
            loss.v_dyn[i] += t.v_dyn[i];
        }
    }
    loss.v_init = std::array::from_fn(|i| (us[0][i] - u0.u[i]).powi(2));
    loss.total = combine(loss.objective, loss.v_dyn, loss.v_init, cfg);
    Ok(loss)
}

/// The penalty loss over a batch of initial conditions, ready for training.
#[derive(Debug, Clone)]
pub struct OcpObjective {
    cfg: OcpConfig,
    shape: FlmShape,
    grid: ProductGrid,
    weights: Vec<f64>,
    ics: Vec<SimplexPoint>,
}

impl OcpObjective {
    pub fn new(
        cfg: OcpConfig,
        mode: IcMode,
        shape: &FlmShape,
        ics: Vec<SimplexPoint>,
    ) -> Result<Self> {
        cfg.validate()?;
        if shape.dim() != mode.input_dim() {
            return Err(FlmError::DimensionMismatch {
                expected: mode.input_dim(),
                got: shape.dim(),
            });
        }
        let times = uniform_times(cfg.quad_n, cfg.horizon);
        let grid = match mode {
            IcMode::Fixed if ics.len() == 1 => ProductGrid::times_only(times),
            IcMode::Fixed => {
                return Err(FlmError::Config(format!(
                    "fixed mode takes exactly one initial condition, got {}",
                    ics.len()
                )))
            }
            IcMode::Varying if ics.is_empty() => {
                return Err(FlmError::Config("no initial conditions".into()));
            }
            IcMode::Varying => {
                let ctx = Array2::from_shape_fn((ics.len(), 2), |(b, j)| ics[b].u[j]);
                ProductGrid::new(times, ctx)
            }
        };
        Ok(Self {
            cfg,
            shape: shape.clone(),
            grid,
            weights: trapezoid_weights(cfg.quad_n, cfg.horizon),
            ics,
        })
    }

    pub fn for_networks(
        cfg: OcpConfig,
        nets: &OcpNetworks,
        ics: Vec<SimplexPoint>,
    ) -> Result<Self> {
        Self::new(cfg, nets.mode, &nets.shape, ics)
    }

    /// Loss parts at `params`; the gradient of the total is added into `grad`.
    pub fn evaluate(&self, params: &[f64], grad: &mut [f64]) -> Result<OcpLoss> {
        let p = self.shape.num_params();
        let pass = |k: usize| grid::forward(&self.shape, &params[k * p..(k + 1) * p], &self.grid);
        let passes = [pass(STATE1)?, pass(STATE2)?, pass(CONTROL)?];
        let (q_len, b_len) = (self.grid.n_times(), self.grid.n_contexts());
        let scale = 1.0 / b_len as f64;

        let mut g_value: [Array2<f64>; 3] = std::array::from_fn(|_| Array2::zeros((q_len, b_len)));
        let mut g_dt: [Array2<f64>; 3] = std::array::from_fn(|_| Array2::zeros((q_len, b_len)));
        let mut loss = OcpLoss::default();
        for (b, ic) in self.ics.iter().enumerate() {
            for q in 0..q_len {
                let (u1, u2) = (passes[0].value[[q, b]], passes[1].value[[q, b]]);
                let (d1, d2) = (passes[0].dt[[q, b]], passes[1].dt[[q, b]]);
                let gamma = passes[2].value[[q, b]];
                let u = [u1, u2, 1.0 - u1 - u2];
                let du = [d1, d2, -d1 - d2];
                let mut t = node_terms(&u, &du, gamma, self.weights[q], &self.cfg);
                loss.objective += t.cost * scale;
                for i in 0..3 {
                    loss.v_dyn[i] += t.v_dyn[i] * scale;
                }
                if q == 0 {
                    for i in 0..3 {
                        let e = u[i] - ic.u[i];
                        loss.v_init[i] += e * e * scale;
                        t.g_u[i] += self.cfg.mu2[i] * e;
                    }
                }
                // u₃ = 1 − u₁ − u₂
                g_value[0][[q, b]] = (t.g_u[0] - t.g_u[2]) * scale;
                g_value[1][[q, b]] = (t.g_u[1] - t.g_u[2]) * scale;
                g_value[2][[q, b]] = t.g_gamma * scale;
                g_dt[0][[q, b]] = (t.g_du[0] - t.g_du[2]) * scale;
                g_dt[1][[q, b]] = (t.g_du[1] - t.g_du[2]) * scale;
            }
        }
        loss.total = combine(loss.objective, loss.v_dyn, loss.v_init, &self.cfg);
        for k in 0..3 {
            let slot = &mut grad[k * p..(k + 1) * p];
            grid::backward(
                &self.shape,
                &params[k * p..(k + 1) * p],
                &self.grid,
                &passes[k],
                &g_value[k],
                &g_dt[k],
                slot,
            );
        }
        Ok(loss)
    }
}

/// Loss and exact gradient for the networks over `u0_batch`.
pub fn penalty_loss(
    nets: &OcpNetworks,
    u0_batch: &[SimplexPoint],
    cfg: &OcpConfig,
) -> Result<(OcpLoss, Vec<f64>)> {
    let objective = OcpObjective::for_networks(*cfg, nets, u0_batch.to_vec())?;
    let mut grad = vec![0.0; nets.params.len()];
    let loss = objective.evaluate(&nets.params, &mut grad)?;
    if !loss.total.is_finite() {
        return Err(FlmError::NonFinite("penalty loss"));
    }
    Ok((loss, grad))
}

/// One step of penalty continuation: both penalty vectors set to `mu`, Adam
/// run at `lr` for `epochs` epochs. The Adam moments carry over between stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyStage {
    pub mu: f64,
    pub lr: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcpRun {
    pub mode: IcMode,
    pub n_sub: usize,
    pub adam: AdamConfig,
    pub train: TrainConfig,
    pub cfg: OcpConfig,
    /// When empty, a single stage with the penalties of `cfg`, `adam.lr` and
    /// `train.max_epochs`.
    #[serde(default)]
    pub stages: Vec<PenaltyStage>,
    pub seed: u64,
}

impl OcpRun {
    /// Three one-input networks with five sub-networks each.
    pub fn fixed(seed: u64) -> Self {
        let mut train = TrainConfig::new(30_000, 1e-6);
        train.seed = seed;
        Self {
            mode: IcMode::Fixed,
            n_sub: 5,
            adam: AdamConfig::new(0.001, 0.99, 0.999),
            train,
            cfg: OcpConfig::default(),
            stages: Vec::new(),
            seed,
        }
    }

    /// Three `(t, u₀₁, u₀₂)` networks with 27 sub-networks each, trained with
    /// the penalty raised tenfold every 10,000 epochs up to `1e4` and a final
    /// stage at a lower learning rate.
    pub fn varying(seed: u64) -> Self {
        let mut train = TrainConfig::new(50_000, 1e-6);
        train.seed = seed;
        let stage = |mu, lr| PenaltyStage {
            mu,
            lr,
            epochs: 10_000,
        };
        Self {
            mode: IcMode::Varying,
            n_sub: 27,
            adam: AdamConfig::new(0.001, 0.99, 0.999),
            train,
            cfg: OcpConfig::default(),
            stages: vec![
                stage(10.0, 1e-3),
                stage(100.0, 1e-3),
                stage(1e3, 1e-3),
                stage(1e4, 1e-3),
                stage(1e4, 3e-4),
            ],
            seed,
        }
    }
}

fn merge(total: &mut Option<TrainReport>, next: TrainReport) {
    let Some(acc) = total else {
        *total = Some(next);
        return;
    };
    let offset = acc.epochs_run;
    acc.loss_curve
        .extend(next.loss_curve.iter().map(|&(e, v)| (e + offset, v)));
    acc.epochs_run += next.epochs_run;
    acc.steps += next.steps;
    acc.final_loss = next.final_loss;
    acc.stop_reason = next.stop_reason;
}

/// Trains the networks through every stage of the schedule. Training stops
/// early if a stage diverges or reaches the loss tolerance.
pub fn solve(run: &OcpRun, ics: &[SimplexPoint]) -> Result<(OcpNetworks, TrainReport)> {
    let mut nets = OcpNetworks::init(run.mode, run.n_sub, run.seed)?;
    let mut adam = Adam::new(run.adam, nets.params.len());
    let single = [(run.cfg, run.adam.lr, run.train.max_epochs)];
    let staged: Vec<_> = run
        .stages
        .iter()
        .map(|st| {
            let cfg = OcpConfig {
                mu1: [st.mu; 3],
                mu2: [st.mu; 3],
                ..run.cfg
            };
            (cfg, st.lr, st.epochs)
        })
        .collect();
    let schedule = if staged.is_empty() {
        &single[..]
    } else {
        &staged[..]
    };
    let mut report = None;
    for &(cfg, lr, epochs) in schedule {
        adam.cfg.lr = lr;
        let mut train_cfg = run.train;
        train_cfg.max_epochs = epochs;
        let objective = OcpObjective::for_networks(cfg, &nets, ics.to_vec())?;
        let stage = train(
            |p: &[f64], g: &mut [f64]| objective.evaluate(p, g).map_or(f64::NAN, |l| l.total),
            &mut nets.params,
            &mut adam,
            &train_cfg,
        )?;
        let done = stage.stop_reason != StopReason::EpochCap;
        merge(&mut report, stage);
        if done {
            break;
        }
    }
    Ok((nets, report.expect("schedule has at least one stage")))
}

/// One row of an objective comparison against reference values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveComparison {
    pub u0: [f64; 3],
    pub j_flm: f64,
    pub j_ref: f64,
    pub pct_err: f64,
    pub abs_err: f64,
}

impl ObjectiveComparison {
    pub fn new(u0: &SimplexPoint, j_flm: f64, j_ref: f64) -> Self {
        Self {
            u0: u0.u,
            j_flm,
            j_ref,
            pct_err: 100.0 * ((j_flm - j_ref) / j_ref).abs(),
            abs_err: (j_flm - j_ref).abs(),
        }
    }
}

/// Network objective for a test point of the disk cycled `k` times from the
/// training disk: the query is mapped back into the training disk, which
/// leaves the objective unchanged because `u*` is fixed by the cycle.
pub fn objective_on_cycled_disk(
    nets: &OcpNetworks,
    test_point: &SimplexPoint,
    k: usize,
    cfg: &OcpConfig,
    eval_n: usize,
) -> Result<f64> {
    nets.objective(&test_point.cycle_back_by(k), cfg, eval_n)
}
