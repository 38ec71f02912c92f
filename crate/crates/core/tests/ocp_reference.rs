use flm_core::ocp::{fields, objective, penalty_from_paths, OcpConfig, SimplexPoint};
use flm_core::ode::rk4;
use flm_core::pmp::{pmp_rhs, solve_bvp, PmpConfig, PmpSolution};

fn reference(u0: [f64; 3]) -> (PmpSolution, OcpConfig) {
    let cfg = OcpConfig::default();
    let sol = solve_bvp(&SimplexPoint::new(u0).unwrap(), &cfg, &PmpConfig::default()).unwrap();
    (sol, cfg)
}

#[test]
fn optimal_path_has_no_penalty() {
    let (sol, cfg) = reference([0.5, 0.3, 0.2]);
    let u0 = SimplexPoint::new([0.5, 0.3, 0.2]).unwrap();

    let exact: Vec<[f64; 3]> = sol
        .u
        .iter()
        .zip(&sol.lambda)
        .map(|(u, l)| pmp_rhs(u, l, &cfg).0)
        .collect();
    let loss = penalty_from_paths(&sol.u, &exact, &sol.gamma, &u0, &cfg).unwrap();
    assert!(loss.v_dyn.iter().all(|v| *v < 1e-24), "{:?}", loss.v_dyn);
    assert!(loss.v_init.iter().all(|v| *v == 0.0));
    assert!((loss.total - sol.j_star).abs() <= 0.01 * sol.j_star);

    // derivatives read off the sampled path instead of the right-hand side
    let h = sol.times[1] - sol.times[0];
    let n = sol.u.len();
    let fd: Vec<[f64; 3]> = (0..n)
        .map(|q| {
            let (a, b, span) = match q {
                0 => (0, 1, h),
                q if q == n - 1 => (n - 2, n - 1, h),
                q => (q - 1, q + 1, 2.0 * h),
            };
            std::array::from_fn(|i| (sol.u[b][i] - sol.u[a][i]) / span)
        })
        .collect();
    let loss = penalty_from_paths(&sol.u, &fd, &sol.gamma, &u0, &cfg).unwrap();
    assert!(loss.v_dyn.iter().sum::<f64>() < 1e-8, "{:?}", loss.v_dyn);
    assert!((loss.total - sol.j_star).abs() <= 0.01 * sol.j_star);
}

/// Objective of the dynamics driven by `γ*(t) + eps·sin(πt/T)`, with `γ*`
/// interpolated linearly between grid times.
fn perturbed_objective(sol: &PmpSolution, cfg: &OcpConfig, eps: f64) -> f64 {
    let h = sol.times[1] - sol.times[0];
    let gamma = |t: f64| {
        let s = (t / h).clamp(0.0, (sol.gamma.len() - 1) as f64);
        let q = (s.floor() as usize).min(sol.gamma.len() - 2);
        let w = s - q as f64;
        (1.0 - w) * sol.gamma[q]
            + w * sol.gamma[q + 1]
            + eps * (std::f64::consts::PI * t / cfg.horizon).sin()
    };
    let steps = sol.times.len() - 1;
    let path = rk4(
        |t, u| {
            let (f, g) = fields(u);
            let c = gamma(t);
            std::array::from_fn(|i| f[i] + c * g[i])
        },
        sol.u[0],
        0.0,
        cfg.horizon,
        steps,
    )
    .unwrap();
    let gs: Vec<f64> = sol.times.iter().map(|t| gamma(*t)).collect();
    objective(&path, &gs, cfg.horizon, cfg.r).unwrap()
}

#[test]
fn reference_control_is_locally_optimal() {
    let (sol, cfg) = reference([0.2, 0.2, 0.6]);
    let base = perturbed_objective(&sol, &cfg, 0.0);
    assert!((base - sol.j_star).abs() < 1e-6 * sol.j_star);
    for eps in [-0.05, -0.01, 0.01, 0.05] {
        let j = perturbed_objective(&sol, &cfg, eps);
        assert!(j > base, "eps {eps}: {j} <= {base}");
    }
}

#[test]
fn cyclic_permutation_permutes_the_solution() {
    let (sol, _) = reference([0.25, 0.6, 0.15]);
    let (cycled, _) = reference([0.6, 0.15, 0.25]);
    assert!((sol.j_star - cycled.j_star).abs() <= 1e-6);
    for ((a, b), (ga, gb)) in sol
        .u
        .iter()
        .zip(&cycled.u)
        .zip(sol.gamma.iter().zip(&cycled.gamma))
    {
        assert!(
            (a[1] - b[0]).abs() < 1e-6 && (a[2] - b[1]).abs() < 1e-6 && (a[0] - b[2]).abs() < 1e-6
        );
        assert!((ga - gb).abs() < 1e-6);
    }
}
