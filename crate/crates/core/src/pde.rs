//! Collocation solvers for the heat, Poisson and generalized Black-Scholes
//! benchmarks.
//!
//! Every problem is two-dimensional (`(x, t)` or `(x, y)`) and linear, so the
//! interior residual at a point is a fixed linear combination of the model's
//! value, input gradient and Hessian diagonal minus a source term. That
//! combination ([`Stencil`]) doubles as the cotangent when pulling the squared
//! residual back onto the parameters.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FlmError, Result};
use crate::model::{Cotangent, Derivs, FlmModel, FlmShape, InitConfig};
use crate::optim::{run_protocol, Adam, AdamConfig, Protocol, ProtocolReport};

const HEAT_DIFFUSIVITY: f64 = 0.1;
const VALID_PROBLEMS: &str = "heat, poisson, gbs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdeKind {
    Heat,
    Poisson,
    Gbs,
}

impl PdeKind {
    pub fn name(self) -> &'static str {
        match self {
            PdeKind::Heat => "heat",
            PdeKind::Poisson => "poisson",
            PdeKind::Gbs => "gbs",
        }
    }
}

impl std::str::FromStr for PdeKind {
    type Err = FlmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heat" => Ok(PdeKind::Heat),
            "poisson" => Ok(PdeKind::Poisson),
            "gbs" => Ok(PdeKind::Gbs),
            _ => Err(FlmError::UnknownProblem {
                name: s.to_string(),
                valid: VALID_PROBLEMS,
            }),
        }
    }
}

/// `residual = value·u + grad·∇u + hess·diag(∇²u) − rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 2],
    pub rhs: f64,
}

impl Stencil {
    pub fn apply(&self, d: &Derivs) -> f64 {
        self.value * d.value
            + self.grad[0] * d.grad[0]
            + self.grad[1] * d.grad[1]
            + self.hess[0] * d.hess_diag[0]
            + self.hess[1] * d.hess_diag[1]
            - self.rhs
    }
}

/// A face of the spatial boundary: coordinate `axis` pinned at `at`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub axis: usize,
    pub at: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeProblem {
    pub kind: PdeKind,
    /// Per-coordinate closed intervals.
    pub domain: [(f64, f64); 2],
}

fn gbs_a(x: f64, t: f64) -> f64 {
    let s = 2.0 + (1.0 - t) * x.exp().sin();
    0.08 * s * s
}

fn gbs_b(x: f64, t: f64) -> f64 {
    let ex = x.exp();
    0.06 * (1.0 + t * (-ex).exp()) - 0.02 * (-t - ex).exp() - gbs_a(x, t)
}

fn gbs_c(x: f64, t: f64) -> f64 {
    -0.06 * (1.0 + t * (-x.exp()).exp())
}

fn gbs_d(x: f64, t: f64) -> f64 {
    0.02 * (x - x.exp() - 2.0 * t).exp() - (x - t).exp()
}

impl PdeProblem {
    pub fn new(kind: PdeKind) -> Self {
        let domain = match kind {
            PdeKind::Heat | PdeKind::Poisson => [(0.0, 1.0), (0.0, 1.0)],
            PdeKind::Gbs => [(-2.0, 2.0), (0.0, 1.0)],
        };
        Self { kind, domain }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Whether the second coordinate is time with an initial condition at its lower end.
    pub fn is_evolution(&self) -> bool {
        !matches!(self.kind, PdeKind::Poisson)
    }

    pub fn faces(&self) -> Vec<Face> {
        let [(x0, x1), (y0, y1)] = self.domain;
        let mut faces = vec![Face { axis: 0, at: x0 }, Face { axis: 0, at: x1 }];
        if !self.is_evolution() {
            faces.push(Face { axis: 1, at: y0 });
            faces.push(Face { axis: 1, at: y1 });
        }
        faces
    }

    pub fn exact(&self, p: [f64; 2]) -> f64 {
        let [x, y] = p;
        match self.kind {
            PdeKind::Heat => (PI * x).sin() * (-HEAT_DIFFUSIVITY * PI * PI * y).exp(),
            PdeKind::Poisson => (PI * x).sin() * (PI * y).sin(),
            PdeKind::Gbs => (x - y).exp(),
        }
    }

    /// Closed-form derivatives of the exact solution.
    pub fn exact_derivs(&self, p: [f64; 2]) -> Derivs {
        let [x, y] = p;
        let (value, grad, hess) = match self.kind {
            PdeKind::Heat => {
                let decay = (-HEAT_DIFFUSIVITY * PI * PI * y).exp();
                let (s, c) = (PI * x).sin_cos();
                let u = s * decay;
                (
                    u,
                    [PI * c * decay, -HEAT_DIFFUSIVITY * PI * PI * u],
                    [-PI * PI * u, (HEAT_DIFFUSIVITY * PI * PI).powi(2) * u],
                )
            }
            PdeKind::Poisson => {
                let (sx, cx) = (PI * x).sin_cos();
                let (sy, cy) = (PI * y).sin_cos();
                let u = sx * sy;
                (
                    u,
                    [PI * cx * sy, PI * sx * cy],
                    [-PI * PI * u, -PI * PI * u],
                )
            }
            PdeKind::Gbs => {
                let u = (x - y).exp();
                (u, [u, -u], [u, u])
            }
        };
        Derivs {
            value,
            grad: grad.to_vec(),
            hess_diag: hess.to_vec(),
        }
    }

    pub fn stencil(&self, p: [f64; 2]) -> Stencil {
        let [x, y] = p;
        match self.kind {
            // u_t − α u_xx = 0
            PdeKind::Heat => Stencil {
                value: 0.0,
                grad: [0.0, 1.0],
                hess: [-HEAT_DIFFUSIVITY, 0.0],
                rhs: 0.0,
            },
            // u_xx + u_yy = −2π² sin(πx) sin(πy)
            PdeKind::Poisson => Stencil {
                value: 0.0,
                grad: [0.0, 0.0],
                hess: [1.0, 1.0],
                rhs: -2.0 * PI * PI * (PI * x).sin() * (PI * y).sin(),
            },
            // u_t − a u_xx − b u_x − c u = d
            PdeKind::Gbs => Stencil {
                value: -gbs_c(x, y),
                grad: [-gbs_b(x, y), 1.0],
                hess: [-gbs_a(x, y), 0.0],
                rhs: gbs_d(x, y),
            },
        }
    }

    pub fn residual(&self, p: [f64; 2], d: &Derivs) -> f64 {
        self.stencil(p).apply(d)
    }

    pub fn initial_value(&self, x: f64) -> f64 {
        match self.kind {
            PdeKind::Heat => (PI * x).sin(),
            PdeKind::Poisson => 0.0,
            PdeKind::Gbs => x.exp(),
        }
    }

    pub fn boundary_value(&self, p: [f64; 2]) -> f64 {
        match self.kind {
            PdeKind::Heat | PdeKind::Poisson => 0.0,
            PdeKind::Gbs => (p[0] - p[1]).exp(),
        }
    }
}

pub fn make_problem(name: &str) -> Result<PdeProblem> {
    Ok(PdeProblem::new(name.parse()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub point: [f64; 2],
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollocationSet {
    pub ic: Vec<Target>,
    pub bc: Vec<Target>,
    pub pde: Vec<[f64; 2]>,
    pub seed: u64,
}

/// Uniform on the open interval `(lo, hi)`.
fn open_interval(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    loop {
        let v = rng.random_range(lo..hi);
        if v > lo {
            return v;
        }
    }
}

/// Uniform on `(lo, hi]`.
fn left_open_interval(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    hi - (hi - lo) * rng.random::<f64>()
}

/// Uniform i.i.d. samples. Boundary points are split equally across faces,
/// with any remainder going to the first faces. The initial set is empty for
/// problems without a time axis.
pub fn sample_collocation(
    problem: &PdeProblem,
    n_ic: usize,
    n_bc: usize,
    n_pde: usize,
    seed: u64,
) -> CollocationSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // keep clear of the stream used for model initialization
    rng.set_stream(1);
    let [(x0, x1), (y0, y1)] = problem.domain;
    let evolution = problem.is_evolution();

    let mut ic = Vec::new();
    if evolution {
        for _ in 0..n_ic {
            let x = open_interval(&mut rng, x0, x1);
            ic.push(Target {
                point: [x, y0],
                value: problem.initial_value(x),
            });
        }
    }

    let faces = problem.faces();
    let mut bc = Vec::with_capacity(n_bc);
    for (f, face) in faces.iter().enumerate() {
        let count = n_bc / faces.len() + usize::from(f < n_bc % faces.len());
        let other = 1 - face.axis;
        let (lo, hi) = problem.domain[other];
        for _ in 0..count {
            let free = if evolution {
                left_open_interval(&mut rng, lo, hi)
            } else {
                rng.random_range(lo..=hi)
            };
            let mut point = [0.0; 2];
            point[face.axis] = face.at;
            point[other] = free;
            bc.push(Target {
                point,
                value: problem.boundary_value(point),
            });
        }
    }

    let pde = (0..n_pde)
        .map(|_| {
            let x = open_interval(&mut rng, x0, x1);
            let y = if evolution {
                left_open_interval(&mut rng, y0, y1)
            } else {
                open_interval(&mut rng, y0, y1)
            };
            [x, y]
        })
        .collect();

    CollocationSet { ic, bc, pde, seed }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeLoss {
    pub total: f64,
    pub ic: f64,
    pub bc: f64,
    pub pde: f64,
}

/// The composite collocation loss over a fixed point set, ready for training.
#[derive(Debug, Clone)]
pub struct PdeObjective {
    shape: FlmShape,
    ic: Vec<Target>,
    bc: Vec<Target>,
    interior: Vec<([f64; 2], Stencil)>,
}

impl PdeObjective {
    pub fn new(shape: &FlmShape, problem: &PdeProblem, colloc: &CollocationSet) -> Result<Self> {
        if shape.dim() != 2 {
            return Err(FlmError::DimensionMismatch {
                expected: 2,
                got: shape.dim(),
            });
        }
        Ok(Self {
            shape: shape.clone(),
            ic: colloc.ic.clone(),
            bc: colloc.bc.clone(),
            interior: colloc
                .pde
                .iter()
                .map(|&p| (p, problem.stencil(p)))
                .collect(),
        })
    }

    pub fn num_params(&self) -> usize {
        self.shape.num_params()
    }

    /// Loss components at `params`; the gradient of the total is added into `grad`.
    pub fn evaluate(&self, params: &[f64], grad: &mut [f64]) -> PdeLoss {
        let mut derivs = Derivs::zeros(2);
        let mut cot = Cotangent::zeros(2);
        let mut trig = Vec::with_capacity(self.shape.n_sub() * self.shape.width());

        let mut fit = |targets: &[Target], grad: &mut [f64]| -> f64 {
            if targets.is_empty() {
                return 0.0;
            }
            let scale = 1.0 / targets.len() as f64;
            let mut sum = 0.0;
            for t in targets {
                let r = self.shape.eval_unchecked(params, &t.point) - t.value;
                sum += r * r;
                cot.clear();
                cot.value = 2.0 * r * scale;
                self.shape.backprop(params, &t.point, &cot, grad);
            }
            sum * scale
        };
        let ic = fit(&self.ic, grad);
        let bc = fit(&self.bc, grad);

        let mut pde = 0.0;
        if !self.interior.is_empty() {
            let scale = 1.0 / self.interior.len() as f64;
            for (p, st) in &self.interior {
                self.shape.derivs_cached(params, p, &mut derivs, &mut trig);
                let r = st.apply(&derivs);
                pde += r * r;
                let w = 2.0 * r * scale;
                cot.value = w * st.value;
                cot.grad.copy_from_slice(&[w * st.grad[0], w * st.grad[1]]);
                cot.hess_diag
                    .copy_from_slice(&[w * st.hess[0], w * st.hess[1]]);
                self.shape.backprop_cached(params, p, &cot, &trig, grad);
            }
            pde *= scale;
        }
        PdeLoss {
            total: ic + bc + pde,
            ic,
            bc,
            pde,
        }
    }
}

/// Loss components and the exact gradient of the total.
pub fn pde_loss(
    model: &FlmModel,
    problem: &PdeProblem,
    colloc: &CollocationSet,
) -> Result<(PdeLoss, Vec<f64>)> {
    let objective = PdeObjective::new(model.shape(), problem, colloc)?;
    let mut grad = vec![0.0; model.num_params()];
    let loss = objective.evaluate(model.params(), &mut grad);
    if !loss.total.is_finite() {
        return Err(FlmError::NonFinite("pde loss"));
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub mse: f64,
    pub mae: f64,
    pub max_err: f64,
}

impl ErrorMetrics {
    pub fn from_errors(errors: impl IntoIterator<Item = f64>) -> Self {
        let (mut n, mut sq, mut abs, mut max) = (0usize, 0.0, 0.0, 0.0f64);
        for e in errors {
            let e = e.abs();
            n += 1;
            sq += e * e;
            abs += e;
            max = max.max(e);
        }
        let n = n.max(1) as f64;
        Self {
            mse: sq / n,
            mae: abs / n,
            max_err: max,
        }
    }
}

/// The evenly spaced `grid_n × grid_n` grid over the closed domain, row-major in the first coordinate.
pub fn test_grid(problem: &PdeProblem, grid_n: usize) -> Vec<[f64; 2]> {
    let n = grid_n.max(2);
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    };
    let xs = axis(problem.domain[0]);
    let ys = axis(problem.domain[1]);
    xs.iter()
        .flat_map(|&x| ys.iter().map(move |&y| [x, y]))
        .collect()
}

pub fn evaluate_metrics(model: &FlmModel, problem: &PdeProblem, grid_n: usize) -> ErrorMetrics {
    ErrorMetrics::from_errors(
        test_grid(problem, grid_n)
            .into_iter()
            .map(|p| model.shape().eval_unchecked(model.params(), &p) - problem.exact(p)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub x: f64,
    pub y: f64,
    pub u_exact: f64,
    pub u_flm: f64,
    pub abs_err: f64,
}

pub fn solution_surface(
    model: &FlmModel,
    problem: &PdeProblem,
    grid_n: usize,
) -> Vec<SurfacePoint> {
    test_grid(problem, grid_n)
        .into_iter()
        .map(|p| {
            let u_exact = problem.exact(p);
            let u_flm = model.shape().eval_unchecked(model.params(), &p);
            SurfacePoint {
                x: p[0],
                y: p[1],
                u_exact,
                u_flm,
                abs_err: (u_flm - u_exact).abs(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollocationCounts {
    pub n_ic: usize,
    pub n_bc: usize,
    pub n_pde: usize,
}

impl CollocationCounts {
    pub fn for_problem(kind: PdeKind) -> Self {
        Self {
            n_ic: if kind == PdeKind::Poisson { 0 } else { 100 },
            n_bc: 200,
            n_pde: 1000,
        }
    }
}

/// One training run: a single seed drives both the initialization and the collocation set.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeRun {
    pub problem: PdeProblem,
    pub n_sub: usize,
    pub adam: AdamConfig,
    pub protocol: Protocol,
    pub counts: CollocationCounts,
    pub seed: u64,
    pub grid_n: usize,
}

impl PdeRun {
    pub fn new(kind: PdeKind, n_sub: usize, adam: AdamConfig, seed: u64) -> Self {
        Self {
            problem: PdeProblem::new(kind),
            n_sub,
            adam,
            protocol: Protocol::standard(seed),
            counts: CollocationCounts::for_problem(kind),
            seed,
            grid_n: 101,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PdeOutcome {
    pub model: FlmModel,
    pub report: ProtocolReport,
    pub loss: PdeLoss,
    pub metrics: ErrorMetrics,
}

pub fn solve(run: &PdeRun) -> Result<PdeOutcome> {
    let mut model = FlmModel::init(2, run.n_sub, &InitConfig::new(run.seed))?;
    let c = run.counts;
    let colloc = sample_collocation(&run.problem, c.n_ic, c.n_bc, c.n_pde, run.seed);
    let objective = PdeObjective::new(model.shape(), &run.problem, &colloc)?;
    let mut adam = Adam::new(run.adam, model.num_params());
    let report = run_protocol(
        |p: &[f64], g: &mut [f64]| objective.evaluate(p, g).total,
        model.params_mut(),
        &mut adam,
        &run.protocol,
    )?;
    let mut scratch = vec![0.0; model.num_params()];
    let loss = objective.evaluate(model.params(), &mut scratch);
    let metrics = evaluate_metrics(&model, &run.problem, run.grid_n);
    Ok(PdeOutcome {
        model,
        report,
        loss,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_model;

    const KINDS: [PdeKind; 3] = [PdeKind::Heat, PdeKind::Poisson, PdeKind::Gbs];

    #[test]
    fn exact_values() {
        assert!((make_problem("heat").unwrap().exact([0.5, 0.0]) - 1.0).abs() < 1e-15);
        assert!(
            (make_problem("gbs").unwrap().exact([2.0, 1.0]) - std::f64::consts::E).abs() < 1e-9
        );
        assert!(matches!(
            make_problem("wave"),
            Err(FlmError::UnknownProblem { .. })
        ));
    }

    #[test]
    fn exact_derivatives_match_finite_differences() {
        let h = 1e-5;
        for kind in KINDS {
            let problem = PdeProblem::new(kind);
            for p in [[0.3, 0.4], [0.71, 0.05], [-1.2, 0.9]] {
                let d = problem.exact_derivs(p);
                for j in 0..2 {
                    let mut plus = p;
                    let mut minus = p;
                    plus[j] += h;
                    minus[j] -= h;
                    let (fp, fm, f0) =
                        (problem.exact(plus), problem.exact(minus), problem.exact(p));
                    assert!((d.grad[j] - (fp - fm) / (2.0 * h)).abs() < 1e-7);
                    assert!((d.hess_diag[j] - (fp - 2.0 * f0 + fm) / (h * h)).abs() < 1e-4);
                }
            }
        }
    }

    #[test]
    fn exact_solution_satisfies_problem() {
        for kind in KINDS {
            let problem = PdeProblem::new(kind);
            let colloc = sample_collocation(&problem, 100, 100, 1000, 5);
            for p in &colloc.pde {
                let r = problem.residual(*p, &problem.exact_derivs(*p));
                assert!(r.abs() <= 1e-8, "{kind:?} residual {r} at {p:?}");
            }
            for t in colloc.bc.iter().chain(&colloc.ic) {
                assert!((problem.exact(t.point) - t.value).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn collocation_domains() {
        let heat = make_problem("heat").unwrap();
        let c = sample_collocation(&heat, 100, 200, 1000, 3);
        assert_eq!((c.ic.len(), c.bc.len(), c.pde.len()), (100, 200, 1000));
        assert!(c
            .pde
            .iter()
            .all(|&[x, t]| 0.0 < x && x < 1.0 && 0.0 < t && t <= 1.0));
        assert!(c.ic.iter().all(|t| t.point[1] == 0.0));
        assert!(c
            .bc
            .iter()
            .all(|t| (t.point[0] == 0.0 || t.point[0] == 1.0) && t.point[1] > 0.0));
        assert_eq!(c, sample_collocation(&heat, 100, 200, 1000, 3));
        assert_ne!(c.pde, sample_collocation(&heat, 100, 200, 1000, 4).pde);
    }

    #[test]
    fn poisson_boundary_split() {
        let poisson = make_problem("poisson").unwrap();
        let c = sample_collocation(&poisson, 100, 200, 10, 0);
        assert!(c.ic.is_empty());
        let on = |axis: usize, at: f64| c.bc.iter().filter(|t| t.point[axis] == at).count();
        assert_eq!(
            [on(0, 0.0), on(0, 1.0), on(1, 0.0), on(1, 1.0)],
            [50, 50, 50, 50]
        );
    }

    #[test]
    fn zero_model_on_poisson() {
        let poisson = make_problem("poisson").unwrap();
        let c = sample_collocation(&poisson, 0, 200, 300, 1);
        let model = FlmModel::zeros(2, 4).unwrap();
        let (loss, _) = pde_loss(&model, &poisson, &c).unwrap();
        assert_eq!(loss.bc, 0.0);
        assert_eq!(loss.ic, 0.0);
        let expected: f64 = c
            .pde
            .iter()
            .map(|&[x, y]| (2.0 * PI * PI * (PI * x).sin() * (PI * y).sin()).powi(2))
            .sum::<f64>()
            / c.pde.len() as f64;
        assert!((loss.pde - expected).abs() <= 1e-12 * expected);
        assert!(loss.pde > 0.0);
        assert_eq!(loss.total, loss.ic + loss.bc + loss.pde);
    }

    #[test]
    fn zero_model_metrics_on_poisson() {
        let poisson = make_problem("poisson").unwrap();
        let m = evaluate_metrics(&FlmModel::zeros(2, 1).unwrap(), &poisson, 101);
        // independent grid sum
        let mut abs = 0.0;
        let mut sq = 0.0;
        for i in 0..101 {
            for j in 0..101 {
                let u = (PI * i as f64 / 100.0).sin() * (PI * j as f64 / 100.0).sin();
                abs += u.abs();
                sq += u * u;
            }
        }
        assert!((m.mae - abs / 10201.0).abs() < 1e-14);
        assert!((m.mse - sq / 10201.0).abs() < 1e-14);
        assert!((m.max_err - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_includes_corners() {
        let gbs = make_problem("gbs").unwrap();
        let grid = test_grid(&gbs, 101);
        assert_eq!(grid.len(), 101 * 101);
        assert_eq!(grid[0], [-2.0, 0.0]);
        assert_eq!(grid[grid.len() - 1], [2.0, 1.0]);
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        for kind in KINDS {
            let problem = PdeProblem::new(kind);
            let colloc = sample_collocation(&problem, 5, 5, 5, 9);
            let mut model = init_model(2, 2, 4).unwrap();
            for (k, p) in model.params_mut().iter_mut().enumerate() {
                *p += 0.3 * ((k as f64) * 1.7).sin();
            }
            let objective = PdeObjective::new(model.shape(), &problem, &colloc).unwrap();
            let mut grad = vec![0.0; model.num_params()];
            objective.evaluate(model.params(), &mut grad);
            let h = 1e-6;
            for k in 0..model.num_params() {
                let mut plus = model.params().to_vec();
                let mut minus = plus.clone();
                plus[k] += h;
                minus[k] -= h;
                let mut scratch = vec![0.0; grad.len()];
                let fd = (objective.evaluate(&plus, &mut scratch).total
                    - objective.evaluate(&minus, &mut scratch).total)
                    / (2.0 * h);
                let err = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-3);
                assert!(
                    err <= 1e-5,
                    "{kind:?} param {k}: analytic {} fd {fd}",
                    grad[k]
                );
            }
        }
    }
}
