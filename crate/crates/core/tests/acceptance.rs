//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout. Pass
//! criterion numbers as arguments to run a subset. `FLM_ACCEPTANCE_SMOKE=1`
//! skips the full varying-initial-condition run and keeps only its reduced
//! variant.

use std::f64::consts::PI;
use std::time::Instant;

use flm_core::lexi::SignMatrix;
use flm_core::ocp::{self, IcMode, OcpConfig, OcpNetworks, OcpRun, SimplexPoint, U_STAR};
use flm_core::optim::{AdamConfig, StopReason};
use flm_core::pde::{self, PdeKind, PdeOutcome, PdeRun};
use flm_core::pmp::{solve_bvp, PmpConfig};
use flm_core::xlate::{eval_separable, to_separable};
use flm_core::{FlmModel, SubNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Verdict {
    fn new(pass: bool, summary: String) -> Self {
        Self {
            pass,
            summary,
            details: Vec::new(),
        }
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn random_subnet(rng: &mut ChaCha8Rng, m: usize) -> SubNetwork {
    let l = 1 << (m - 1);
    SubNetwork {
        freq: (0..m).map(|_| rng.random_range(-3.0..3.0)).collect(),
        amp: (0..l).map(|_| rng.random_range(-1.0..1.0)).collect(),
        bias: (0..l).map(|_| rng.random_range(-PI..PI)).collect(),
    }
}

fn translation_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for m in 1..=4 {
        let signs = SignMatrix::new(m).unwrap();
        for _ in 0..100 {
            let model = FlmModel::from_subnets(m, &[random_subnet(&mut rng, m)]).unwrap();
            let block = to_separable(model.subnet(0), &signs).unwrap();
            for _ in 0..1000 {
                let x: Vec<f64> = (0..m).map(|_| rng.random_range(-PI..PI)).collect();
                let err = (model.eval(&x).unwrap() - eval_separable(&block, &x).unwrap()).abs();
                worst = worst.max(err);
                points += 1;
            }
        }
    }
    Verdict::new(
        worst <= 1e-12,
        format!("max |FLM - separable| = {worst:.2e} over {points} evaluations (<= 1e-12)"),
    )
}

fn derivative_suite() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let rel = |a: f64, fd: f64| (a - fd).abs() / fd.abs().max(1.0);
    for m in 1..=4 {
        for _ in 0..30 {
            let subnets: Vec<SubNetwork> = (0..2).map(|_| random_subnet(&mut rng, m)).collect();
            let model = FlmModel::from_subnets(m, &subnets).unwrap();
            let x: Vec<f64> = (0..m).map(|_| rng.random_range(-PI..PI)).collect();
            let b = model.eval_bundle(&x).unwrap();
            for j in 0..m {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[j] += h;
                xm[j] -= h;
                let fd = (model.eval(&xp).unwrap() - model.eval(&xm).unwrap()) / (2.0 * h);
                worst = worst.max(rel(b.grad_x[j], fd));
                let fd = (model.derivs(&xp).unwrap().grad[j] - model.derivs(&xm).unwrap().grad[j])
                    / (2.0 * h);
                worst = worst.max(rel(b.diag_hess_x[j], fd));
            }
            for k in 0..model.num_params() {
                let (mut p, mut q) = (model.clone(), model.clone());
                p.params_mut()[k] += h;
                q.params_mut()[k] -= h;
                let (bp, bq) = (p.eval_bundle(&x).unwrap(), q.eval_bundle(&x).unwrap());
                worst = worst.max(rel(
                    b.param_grads.value[k],
                    (bp.value - bq.value) / (2.0 * h),
                ));
                for j in 0..m {
                    let fd = (bp.grad_x[j] - bq.grad_x[j]) / (2.0 * h);
                    worst = worst.max(rel(b.param_grads.grad_x[j][k], fd));
                    let fd = (bp.diag_hess_x[j] - bq.diag_hess_x[j]) / (2.0 * h);
                    worst = worst.max(rel(b.param_grads.diag_hess_x[j][k], fd));
                }
            }
            cases += 1;
        }
    }
    Verdict::new(
        cases >= 100 && worst <= 1e-5,
        format!("{cases} random cases, max relative error {worst:.2e} (<= 1e-5, relative to max(|fd|, 1))"),
    )
}

struct PdeBatch {
    kind: PdeKind,
    runs: Vec<(u64, PdeOutcome, f64)>,
}

fn run_pde(kind: PdeKind, n_sub: usize, adam: AdamConfig) -> PdeBatch {
    let runs = (0..5)
        .map(|seed| {
            let start = Instant::now();
            let out = pde::solve(&PdeRun::new(kind, n_sub, adam, seed)).unwrap();
            (seed, out, start.elapsed().as_secs_f64())
        })
        .collect();
    PdeBatch { kind, runs }
}

fn pde_verdict(batch: &PdeBatch, mse_max: f64, mae_max: Option<f64>, max_max: f64) -> Verdict {
    let col =
        |f: fn(&PdeOutcome) -> f64| median(&batch.runs.iter().map(|r| f(&r.1)).collect::<Vec<_>>());
    let mse = col(|o| o.metrics.mse);
    let mae = col(|o| o.metrics.mae);
    let max = col(|o| o.metrics.max_err);
    let pass = mse <= mse_max && mae_max.is_none_or(|t| mae <= t) && max <= max_max;
    let mae_bound = mae_max.map_or(String::new(), |t| format!(" (<= {t:.0e})"));
    let mut v = Verdict::new(
        pass,
        format!(
            "{} median over seeds 0-4: MSE {mse:.3e} (<= {mse_max:.0e}), MAE {mae:.3e}{mae_bound}, Max {max:.3e} (<= {max_max:.0e})",
            batch.kind.name()
        ),
    );
    for (seed, o, wall) in &batch.runs {
        v.details.push(format!(
            "seed {seed}: MSE {:.3e} MAE {:.3e} Max {:.3e}, epochs {} + {}, {wall:.0}s",
            o.metrics.mse,
            o.metrics.mae,
            o.metrics.max_err,
            o.report.phase1.epochs_run,
            o.report.phase2.as_ref().map_or(0, |r| r.epochs_run),
        ));
    }
    v
}

fn phase1_speed(heat: &PdeBatch) -> Verdict {
    let epochs: Vec<f64> = heat
        .runs
        .iter()
        .map(|(_, o, _)| match o.report.phase1.stop_reason {
            StopReason::Tol => o.report.phase1.epochs_run as f64,
            _ => f64::INFINITY,
        })
        .collect();
    let med = median(&epochs);
    Verdict::new(
        med <= 3000.0,
        format!("heat phase 1 reaches loss 1e-4 after a median of {med} epochs (<= 3000); per seed {epochs:?}"),
    )
}

fn pmp_consistency() -> Verdict {
    let cfg = OcpConfig::default();
    let pmp = PmpConfig::default();
    let u0 = SimplexPoint::new([0.2, 0.2, 0.6]).unwrap();
    let base = solve_bvp(&u0, &cfg, &pmp).unwrap();
    let fine = solve_bvp(
        &u0,
        &cfg,
        &PmpConfig {
            steps: 2 * pmp.steps,
            ..pmp
        },
    )
    .unwrap();
    let halving = (base.j_star - fine.j_star).abs();
    let j1 = solve_bvp(&u0.cycle(), &cfg, &pmp).unwrap().j_star;
    let j2 = solve_bvp(&u0.cycle_by(2), &cfg, &pmp).unwrap().j_star;
    let cyclic = (base.j_star - j1).abs().max((base.j_star - j2).abs());
    Verdict::new(
        base.residual_norm <= 1e-8 && halving <= 1e-6 && cyclic <= 1e-6,
        format!(
            "J* = {:.9}, |lambda(T)| = {:.1e} (<= 1e-8), step halving {halving:.1e} (<= 1e-6), cyclic {cyclic:.1e} (<= 1e-6)",
            base.j_star, base.residual_norm
        ),
    )
}

fn fixed_ocp() -> Verdict {
    let cfg = OcpConfig::default();
    let mut v = Verdict::new(true, String::new());
    let mut errs = Vec::new();
    for u in [[0.2, 0.2, 0.6], [0.5, 0.3, 0.2], [0.25, 0.6, 0.15]] {
        let u0 = SimplexPoint::new(u).unwrap();
        let start = Instant::now();
        let (nets, report) = ocp::solve(&OcpRun::fixed(0), &[u0]).unwrap();
        let j_flm = nets.objective(&u0, &cfg, 1001).unwrap();
        let j_ref = solve_bvp(&u0, &cfg, &PmpConfig::default()).unwrap().j_star;
        let pct = 100.0 * ((j_flm - j_ref) / j_ref).abs();
        errs.push(pct);
        v.pass &= pct <= 1.5;
        v.details.push(format!(
            "u0 {u:?}: J_FLM {j_flm:.6} J_PMP {j_ref:.6} error {pct:.3}%, {} epochs, {:.0}s",
            report.epochs_run,
            start.elapsed().as_secs_f64()
        ));
    }
    v.summary = format!(
        "fixed-IC percentage errors {} (each <= 1.5%)",
        errs.iter()
            .map(|e| format!("{e:.3}%"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    v
}

fn varying_ocp(n_train: usize, n_test: usize, mape_max: f64, mae_max: Option<f64>) -> Verdict {
    let cfg = OcpConfig::default();
    let center = SimplexPoint::new([0.2, 0.2, 0.6]).unwrap();
    let train = ocp::sample_disk(&center, 0.15, n_train, 1).unwrap();
    let test = ocp::sample_disk(&center, 0.15, n_test, 2).unwrap();
    let start = Instant::now();
    let run = OcpRun::varying(0);
    let (nets, report): (OcpNetworks, _) = ocp::solve(&run, &train).unwrap();
    assert_eq!(nets.mode(), IcMode::Varying);
    let flm: Vec<f64> = test
        .iter()
        .map(|p| nets.objective(p, &cfg, 1001).unwrap())
        .collect();
    let refs: Vec<f64> = test
        .iter()
        .map(|p| solve_bvp(p, &cfg, &PmpConfig::default()).unwrap().j_star)
        .collect();
    let mape = ocp::mape(&flm, &refs).unwrap();
    let mae = ocp::mae(&flm, &refs).unwrap();
    let pass = mape <= mape_max && mae_max.is_none_or(|t| mae <= t);
    let mae_bound = mae_max.map_or(String::new(), |t| format!(" (<= {t:.0e})"));
    let mut v = Verdict::new(
        pass,
        format!("{n_train} train / {n_test} test: MAPE {mape:.3}% (<= {mape_max}%), MAE {mae:.3e}{mae_bound}"),
    );
    v.details.push(format!(
        "{} epochs, final loss {:.4e}, {:.0}s",
        report.epochs_run,
        report.final_loss,
        start.elapsed().as_secs_f64()
    ));
    v
}

fn dynamics_properties() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let (mut cons, mut equi): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let u = SimplexPoint::from_pair(lo, hi - lo).unwrap();
        let (f, g) = ocp::replicator_fields(&u);
        cons = cons
            .max(f.iter().sum::<f64>().abs())
            .max(g.iter().sum::<f64>().abs());
        let (fp, gp) = ocp::replicator_fields(&u.cycle());
        for i in 0..3 {
            let j = (i + 1) % 3;
            equi = equi.max((fp[i] - f[j]).abs()).max((gp[i] - g[j]).abs());
        }
    }
    let (f, g) = ocp::replicator_fields(&SimplexPoint::new(U_STAR).unwrap());
    let eq = f.iter().chain(&g).fold(0.0f64, |a, v| a.max(v.abs()));
    Verdict::new(
        cons <= 1e-14 && eq <= 1e-14 && equi <= 1e-12,
        format!("1000 simplex points: |sum F|, |sum G| <= {cons:.1e}; |F(u*)|, |G(u*)| <= {eq:.1e}; |F(Pu) - PF(u)| <= {equi:.1e}"),
    )
}

fn report(id: &str, name: &str, start: Instant, v: &Verdict, failures: &mut Vec<String>) {
    let tag = if v.pass { "PASS" } else { "FAIL" };
    println!(
        "{tag} [{id}] {name}: {} [{:.1}s]",
        v.summary,
        start.elapsed().as_secs_f64()
    );
    for d in &v.details {
        println!("       {d}");
    }
    if !v.pass {
        failures.push(id.to_string());
    }
}

fn main() {
    let selected: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let wants = |id: &str| selected.is_empty() || selected.iter().any(|s| s == id);
    let smoke_only = std::env::var("FLM_ACCEPTANCE_SMOKE").is_ok_and(|v| v == "1");
    let mut failures = Vec::new();

    macro_rules! criterion {
        ($id:expr, $name:expr, $body:expr) => {
            if wants($id) {
                let start = Instant::now();
                let v = $body;
                report($id, $name, start, &v, &mut failures);
            }
        };
    }

    criterion!(
        "1",
        "coefficient translation equivalence",
        translation_equivalence()
    );
    criterion!("2", "derivative suite", derivative_suite());

    let heat = (wants("3") || wants("6")).then(|| {
        let start = Instant::now();
        (
            run_pde(PdeKind::Heat, 16, AdamConfig::new(0.001, 0.95, 0.97)),
            start,
        )
    });
    if let Some((batch, start)) = &heat {
        if wants("3") {
            report(
                "3",
                "heat PDE",
                *start,
                &pde_verdict(batch, 1e-5, Some(1e-3), 5e-3),
                &mut failures,
            );
        }
    }
    criterion!(
        "4",
        "Poisson PDE",
        pde_verdict(
            &run_pde(PdeKind::Poisson, 4, AdamConfig::new(0.001, 0.95, 0.97)),
            1e-5,
            None,
            5e-3
        )
    );
    criterion!(
        "5",
        "GBS PDE",
        pde_verdict(
            &run_pde(PdeKind::Gbs, 25, AdamConfig::new(0.001, 0.97, 0.95)),
            1e-5,
            None,
            2e-2
        )
    );
    if let Some((batch, _)) = &heat {
        criterion!("6", "phase-1 convergence speed", phase1_speed(batch));
    }
    criterion!("7", "PMP reference self-consistency", pmp_consistency());
    criterion!("8", "fixed-IC OCP", fixed_ocp());
    criterion!(
        "9",
        "varying-IC OCP (reduced)",
        varying_ocp(50, 20, 5.0, None)
    );
    if smoke_only {
        if wants("9") {
            println!("SKIP [9] varying-IC OCP (full): FLM_ACCEPTANCE_SMOKE=1");
        }
    } else {
        criterion!(
            "9",
            "varying-IC OCP (full)",
            varying_ocp(250, 100, 2.5, Some(1e-2))
        );
    }
    criterion!("10", "dynamics properties", dynamics_properties());

    if failures.is_empty() {
        println!("acceptance: all selected criteria passed");
    } else {
        println!("acceptance: failed {}", failures.join(", "));
        std::process::exit(1);
    }
}
