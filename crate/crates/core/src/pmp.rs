//! Indirect reference solutions from Pontryagin's minimum principle.
//!
//! With `H = ½‖u − u*‖² + (r/2)γ² + λᵀ(F(u) + γ G(u))` the optimal control is
//! `γ = −λᵀG(u)/r`, the costate obeys `λ̇ = −(u − u*) − (J_F + γ J_G)ᵀ λ`, and
//! the free terminal state gives `λ(T) = 0`. The initial costate is found by
//! single shooting with Newton's method.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{FlmError, Result};
use crate::ocp::{field_jacobian, fields, running_cost, OcpConfig, SimplexPoint, L3, M3, U_STAR};
use crate::ode::rk4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmpConfig {
    /// RK4 steps over the full horizon.
    pub steps: usize,
    /// Required `‖λ(T)‖∞`.
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    /// Number of horizon stages tried when direct Newton stalls.
    pub continuation: usize,
}

impl Default for PmpConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            tol: 1e-8,
            max_iter: 50,
            fd_step: 1e-7,
            continuation: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmpSolution {
    pub times: Vec<f64>,
    pub u: Vec<[f64; 3]>,
    pub lambda: Vec<[f64; 3]>,
    pub gamma: Vec<f64>,
    pub j_star: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// `(u̇, λ̇, γ)` at one state/costate pair.
pub fn pmp_rhs(u: &[f64; 3], lambda: &[f64; 3], cfg: &OcpConfig) -> ([f64; 3], [f64; 3], f64) {
    let (f, g) = fields(u);
    let gamma = -(lambda[0] * g[0] + lambda[1] * g[1] + lambda[2] * g[2]) / cfg.r;
    let jf = field_jacobian(&L3, u);
    let jg = field_jacobian(&M3, u);
    let du = std::array::from_fn(|i| f[i] + gamma * g[i]);
    let dl = std::array::from_fn(|k| {
        let mut acc = -(u[k] - U_STAR[k]);
        for i in 0..3 {
            acc -= (jf[i][k] + gamma * jg[i][k]) * lambda[i];
        }
        acc
    });
    (du, dl, gamma)
}

fn split(y: &[f64; 6]) -> ([f64; 3], [f64; 3]) {
    ([y[0], y[1], y[2]], [y[3], y[4], y[5]])
}

/// Integrates state and costate forward from `(u0, λ0)` over `[0, horizon]`.
pub fn shoot(
    u0: &[f64; 3],
    lambda0: &[f64; 3],
    horizon: f64,
    cfg: &OcpConfig,
    steps: usize,
) -> Result<Vec<[f64; 6]>> {
    let y0 = [u0[0], u0[1], u0[2], lambda0[0], lambda0[1], lambda0[2]];
    rk4(
        |_, y| {
            let (u, l) = split(y);
            let (du, dl, _) = pmp_rhs(&u, &l, cfg);
            [du[0], du[1], du[2], dl[0], dl[1], dl[2]]
        },
        y0,
        0.0,
        horizon,
        steps,
    )
}

fn terminal_costate(
    u0: &[f64; 3],
    lambda0: &[f64; 3],
    horizon: f64,
    cfg: &OcpConfig,
    steps: usize,
) -> Result<Vector3<f64>> {
    let path = shoot(u0, lambda0, horizon, cfg, steps)?;
    let (_, l) = split(path.last().expect("rk4 returns at least two states"));
    Ok(Vector3::from(l))
}

fn sup_norm(v: &Vector3<f64>) -> f64 {
    v.amax()
}

/// Newton iterations on `λ(0)` for one horizon. Returns the costate and the iteration count.
fn newton(
    u0: &[f64; 3],
    start: Vector3<f64>,
    horizon: f64,
    cfg: &OcpConfig,
    pmp: &PmpConfig,
    steps: usize,
) -> Result<(Vector3<f64>, usize)> {
    let mut lambda0 = start;
    let mut res = terminal_costate(u0, &lambda0.into(), horizon, cfg, steps)?;
    for iter in 0..pmp.max_iter {
        if sup_norm(&res) <= pmp.tol {
            return Ok((lambda0, iter));
        }
        let mut jac = Matrix3::zeros();
        for k in 0..3 {
            let mut probe = lambda0;
            probe[k] += pmp.fd_step;
            let col =
                (terminal_costate(u0, &probe.into(), horizon, cfg, steps)? - res) / pmp.fd_step;
            jac.set_column(k, &col);
        }
        let step = jac.lu().solve(&(-res)).ok_or(FlmError::NoConvergence {
            iterations: iter,
            residual: sup_norm(&res),
        })?;
        let mut alpha = 1.0;
        loop {
            let trial = lambda0 + step * alpha;
            if let Ok(trial_res) = terminal_costate(u0, &trial.into(), horizon, cfg, steps) {
                if sup_norm(&trial_res) < sup_norm(&res) {
                    lambda0 = trial;
                    res = trial_res;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-6 {
                return Err(FlmError::NoConvergence {
                    iterations: iter,
                    residual: sup_norm(&res),
                });
            }
        }
    }
    if sup_norm(&res) <= pmp.tol {
        Ok((lambda0, pmp.max_iter))
    } else {
        Err(FlmError::NoConvergence {
            iterations: pmp.max_iter,
            residual: sup_norm(&res),
        })
    }
}

/// Solves the boundary value problem from `u0`, falling back to continuation in
/// the horizon when Newton from `λ(0) = 0` fails.
pub fn solve_bvp(u0: &SimplexPoint, cfg: &OcpConfig, pmp: &PmpConfig) -> Result<PmpSolution> {
    cfg.validate()?;
    if pmp.steps == 0 || !(pmp.tol > 0.0) || !(pmp.fd_step > 0.0) {
        return Err(FlmError::Config("invalid shooting settings".into()));
    }
    if u0.coords().iter().any(|v| *v <= 0.0) {
        return Err(FlmError::Domain(format!(
            "{:?} is not inside the simplex",
            u0.coords()
        )));
    }
    let u = u0.coords();
    let (lambda0, iterations) = match newton(&u, Vector3::zeros(), cfg.horizon, cfg, pmp, pmp.steps)
    {
        Ok(found) => found,
        Err(direct) => {
            let stages = pmp.continuation.max(1);
            let mut guess = Vector3::zeros();
            let mut total = 0;
            for k in 1..=stages {
                let horizon = cfg.horizon * k as f64 / stages as f64;
                let steps = (pmp.steps * k).div_ceil(stages).max(1);
                let Ok((found, iters)) = newton(&u, guess, horizon, cfg, pmp, steps) else {
                    return Err(direct);
                };
                guess = found;
                total += iters;
            }
            (guess, total)
        }
    };
    let path = shoot(&u, &lambda0.into(), cfg.horizon, cfg, pmp.steps)?;
    let h = cfg.horizon / pmp.steps as f64;
    let mut sol = PmpSolution {
        times: (0..=pmp.steps).map(|n| n as f64 * h).collect(),
        u: Vec::with_capacity(path.len()),
        lambda: Vec::with_capacity(path.len()),
        gamma: Vec::with_capacity(path.len()),
        j_star: 0.0,
        residual_norm: 0.0,
        iterations,
    };
    for y in &path {
        let (u, l) = split(y);
        let (_, _, gamma) = pmp_rhs(&u, &l, cfg);
        sol.u.push(u);
        sol.lambda.push(l);
        sol.gamma.push(gamma);
    }
    sol.residual_norm = sup_norm(&Vector3::from(*sol.lambda.last().expect("non-empty path")));
    sol.j_star = crate::ocp::objective(&sol.u, &sol.gamma, cfg.horizon, cfg.r)?;
    Ok(sol)
}

impl PmpSolution {
    /// Running cost at each grid time.
    pub fn running_costs(&self, cfg: &OcpConfig) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.gamma)
            .map(|(u, g)| running_cost(u, *g, cfg.r))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_costate_gives_free_dynamics() {
        let cfg = OcpConfig::default();
        let u = [0.2, 0.3, 0.5];
        let (du, _, gamma) = pmp_rhs(&u, &[0.0; 3], &cfg);
        assert_eq!(gamma, 0.0);
        assert_eq!(du, fields(&u).0);
        let (du, dl, gamma) = pmp_rhs(&U_STAR, &[0.0; 3], &cfg);
        assert!(du.iter().chain(&dl).all(|v| v.abs() < 1e-16) && gamma == 0.0);
    }

    #[test]
    fn costate_rhs_is_minus_state_gradient_of_hamiltonian() {
        let cfg = OcpConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-6;
        for _ in 0..20 {
            let u: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..1.0));
            let l: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let (_, dl, gamma) = pmp_rhs(&u, &l, &cfg);
            // H at fixed γ
            let ham = |u: &[f64; 3]| {
                let (f, g) = fields(u);
                running_cost(u, gamma, cfg.r)
                    + (0..3).map(|i| l[i] * (f[i] + gamma * g[i])).sum::<f64>()
            };
            for k in 0..3 {
                let mut plus = u;
                let mut minus = u;
                plus[k] += h;
                minus[k] -= h;
                let fd = -(ham(&plus) - ham(&minus)) / (2.0 * h);
                assert!((dl[k] - fd).abs() <= 1e-6 * fd.abs().max(1.0));
            }
        }
    }

    #[test]
    fn uncontrolled_flow_stays_on_simplex() {
        let cfg = OcpConfig::default();
        let path = shoot(&[0.2, 0.2, 0.6], &[0.0; 3], 6.0, &cfg, 2000).unwrap();
        for y in &path {
            assert!((y[0] + y[1] + y[2] - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn equilibrium_start() {
        let sol = solve_bvp(
            &SimplexPoint::new(U_STAR).unwrap(),
            &OcpConfig::default(),
            &PmpConfig::default(),
        )
        .unwrap();
        assert_eq!(sol.j_star, 0.0);
        assert!(sol.gamma.iter().all(|g| *g == 0.0));
        assert!(sol.lambda.iter().flatten().all(|l| *l == 0.0));
    }

    #[test]
    fn reference_solution_invariants() {
        let cfg = OcpConfig::default();
        let u0 = SimplexPoint::new([0.2, 0.2, 0.6]).unwrap();
        let sol = solve_bvp(&u0, &cfg, &PmpConfig::default()).unwrap();
        assert!(sol.residual_norm <= 1e-8);
        assert!(sol.j_star > 0.0);
        for (u, (l, g)) in sol.u.iter().zip(sol.lambda.iter().zip(&sol.gamma)) {
            assert!((u.iter().sum::<f64>() - 1.0).abs() <= 1e-8);
            let (_, gf) = fields(u);
            let expected = -(l[0] * gf[0] + l[1] * gf[1] + l[2] * gf[2]) / cfg.r;
            assert!((g - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_point_rejected() {
        let u0 = SimplexPoint::new([0.0, 0.4, 0.6]).unwrap();
        assert!(matches!(
            solve_bvp(&u0, &OcpConfig::default(), &PmpConfig::default()),
            Err(FlmError::Domain(_))
        ));
    }
}
