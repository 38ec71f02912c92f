//! Experiment execution and artifact emission.
//!
//! Seeds, initial conditions and sweep cells run on the current rayon pool.
//! Every job owns its data; results are collected first and written
//! afterwards, so the files do not depend on scheduling.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use flm_core::checkpoint;
use flm_core::lexi::BasisIndex;
use flm_core::ocp::{self, IcMode, ObjectiveComparison, OcpNetworks, OcpRun, SimplexPoint};
use flm_core::optim::{AdamConfig, Protocol, StopReason, TrainConfig};
use flm_core::pde::{self, PdeOutcome, PdeRun};
use flm_core::pmp::{self, PmpSolution};
use flm_core::xlate::model_to_separable;
use rayon::prelude::*;

use crate::config::{Experiment, OcpSection, RunConfig, TrainSection};
use crate::error::{CliError, Result};
use crate::manifest::{aggregate, CellSummary, RunManifest, SeedRecord, Status, TrainSummary};
use crate::output::{fmt_f64, Table};
use crate::row;

pub const METRICS_HEADER: [&str; 11] = [
    "problem", "N", "lr", "beta1", "beta2", "seed", "mse", "mae", "max_err", "epochs", "wall_s",
];
pub const OCP_METRICS_HEADER: [&str; 13] = [
    "mode",
    "N",
    "lr",
    "beta1",
    "beta2",
    "seed",
    "set",
    "mape",
    "mae",
    "max_pct_err",
    "epochs",
    "final_loss",
    "wall_s",
];
pub const COMPARISON_HEADER: [&str; 10] = [
    "seed", "set", "ic", "u01", "u02", "u03", "j_flm", "j_pmp", "pct_err", "abs_err",
];

/// Runs a resolved config, writes every artifact under `out_dir` and returns
/// the manifest (also written as `manifest.json`).
pub fn execute(cfg: RunConfig, out_dir: &Path) -> Result<RunManifest> {
    let cfg = cfg.resolve()?;
    std::fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let mut manifest = match cfg.experiment {
        Experiment::Pde => run_pde(&cfg, out_dir)?,
        Experiment::Sweep => run_sweep(&cfg, out_dir)?,
        Experiment::Ocp => run_ocp(&cfg, out_dir)?,
        Experiment::Bvp => run_bvp(&cfg, out_dir)?,
        Experiment::Translate => run_translate(&cfg, out_dir)?,
    };
    manifest.wall_s = start.elapsed().as_secs_f64();
    let path = out_dir.join("manifest.json");
    manifest.artifacts.push(path.clone());
    manifest.write(&path)?;
    if !manifest.any_ok() {
        return Err(CliError::AllDiverged);
    }
    Ok(manifest)
}

fn new_manifest(cfg: &RunConfig) -> RunManifest {
    RunManifest {
        config: cfg.clone(),
        runs: Vec::new(),
        aggregate: BTreeMap::new(),
        cells: Vec::new(),
        best: None,
        wall_s: 0.0,
        artifacts: Vec::new(),
    }
}

fn write_table(table: &Table, dir: &Path, name: &str, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    table.write(&path)?;
    artifacts.push(path);
    Ok(())
}

fn protocol(t: &TrainSection, seed: u64) -> Protocol {
    let mut phase1 = TrainConfig::new(t.max_epochs, t.loss_tol);
    phase1.seed = seed;
    phase1.log_every = t.log_every;
    let phase2 = t.phase2.then(|| {
        let mut p = TrainConfig::new(t.phase2_epochs, t.phase2_tol);
        p.seed = seed;
        p.log_every = t.log_every;
        p
    });
    Protocol {
        phase1,
        phase2,
        reset_adam: t.reset_adam,
    }
}

fn pde_run(cfg: &RunConfig, n_sub: usize, adam: AdamConfig, seed: u64) -> Result<PdeRun> {
    let mut run = PdeRun::new(cfg.pde_kind()?, n_sub, adam, seed);
    run.protocol = protocol(&cfg.train.expect("resolved"), seed);
    run.counts = cfg.collocation.expect("resolved");
    run.grid_n = cfg.grid_n.expect("resolved");
    Ok(run)
}

struct PdeJob {
    cell: Option<usize>,
    n_sub: usize,
    adam: AdamConfig,
    seed: u64,
    outcome: std::result::Result<PdeOutcome, String>,
    wall_s: f64,
}

fn run_pde_jobs(
    cfg: &RunConfig,
    jobs: Vec<(Option<usize>, usize, AdamConfig, u64)>,
) -> Result<Vec<PdeJob>> {
    let runs = jobs
        .iter()
        .map(|&(_, n, adam, seed)| pde_run(cfg, n, adam, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(jobs
        .into_par_iter()
        .zip(runs)
        .map(|((cell, n_sub, adam, seed), run)| {
            let start = Instant::now();
            let outcome = pde::solve(&run).map_err(|e| e.to_string());
            PdeJob {
                cell,
                n_sub,
                adam,
                seed,
                outcome,
                wall_s: start.elapsed().as_secs_f64(),
            }
        })
        .collect())
}

fn pde_record(job: &PdeJob) -> SeedRecord {
    let out = match &job.outcome {
        Ok(out) => out,
        Err(e) => {
            let mut r = SeedRecord::failed(job.seed, e.clone(), job.wall_s);
            r.cell = job.cell;
            return r;
        }
    };
    let train = TrainSummary::from_protocol(&out.report);
    let m = out.metrics;
    let diverged = out.report.phase1.stop_reason == StopReason::Divergence
        || train.stop_reason == StopReason::Divergence
        || ![m.mse, m.mae, m.max_err].iter().all(|v| v.is_finite());
    let metrics = BTreeMap::from([
        ("mse".to_string(), m.mse),
        ("mae".to_string(), m.mae),
        ("max_err".to_string(), m.max_err),
        ("epochs".to_string(), train.total_epochs as f64),
        ("phase1_epochs".to_string(), train.phase1_epochs as f64),
        ("final_loss".to_string(), train.final_loss),
    ]);
    SeedRecord {
        seed: job.seed,
        cell: job.cell,
        label: None,
        status: if diverged {
            Status::Diverged
        } else {
            Status::Ok
        },
        error: None,
        metrics,
        train: Some(train),
        wall_s: job.wall_s,
    }
}

fn metrics_row(problem: &str, job: &PdeJob, record: &SeedRecord) -> Vec<String> {
    let get = |k: &str| record.metrics.get(k).copied().unwrap_or(f64::NAN);
    let epochs = record.train.as_ref().map_or(0, |t| t.total_epochs);
    row![
        problem,
        job.n_sub,
        job.adam.lr,
        job.adam.beta1,
        job.adam.beta2,
        job.seed,
        get("mse"),
        get("mae"),
        get("max_err"),
        epochs,
        job.wall_s,
    ]
}

/// `(epoch, phase, loss)` with epochs counted across both phases.
fn loss_curve_table(out: &PdeOutcome) -> Table {
    let mut t = Table::new(&["epoch", "phase", "loss"]);
    for (e, v) in &out.report.phase1.loss_curve {
        t.push(row![*e, 1usize, *v]);
    }
    if let Some(p2) = &out.report.phase2 {
        let offset = out.report.phase1.epochs_run;
        for (e, v) in &p2.loss_curve {
            t.push(row![offset + e, 2usize, *v]);
        }
    }
    t
}

fn run_pde(cfg: &RunConfig, dir: &Path) -> Result<RunManifest> {
    let kind = cfg.pde_kind()?;
    let (problem, surface_problem) = (kind.name(), pde::PdeProblem::new(kind));
    let adam = cfg.adam.expect("resolved");
    let jobs = cfg
        .seeds
        .iter()
        .map(|&s| (None, cfg.n_sub(), adam, s))
        .collect();
    let results = run_pde_jobs(cfg, jobs)?;
    let grid_n = cfg.grid_n.expect("resolved");

    let mut manifest = new_manifest(cfg);
    let mut metrics = Table::new(&METRICS_HEADER);
    for job in &results {
        let record = pde_record(job);
        if let Ok(out) = &job.outcome {
            metrics.push(metrics_row(problem, job, &record));
            write_table(
                &loss_curve_table(out),
                dir,
                &format!("loss_curve_{}.csv", job.seed),
                &mut manifest.artifacts,
            )?;
            let mut surface = Table::new(&["x", "y", "u_exact", "u_flm", "abs_err"]);
            for p in pde::solution_surface(&out.model, &surface_problem, grid_n) {
                surface.push(row![p.x, p.y, p.u_exact, p.u_flm, p.abs_err]);
            }
            write_table(
                &surface,
                dir,
                &format!("surface_{}.csv", job.seed),
                &mut manifest.artifacts,
            )?;
            if out.model.params().iter().all(|v| v.is_finite()) {
                let path = dir.join(format!("checkpoint_{}.json", job.seed));
                checkpoint::save(&out.model, &path)?;
                manifest.artifacts.push(path);
            }
        }
        manifest.runs.push(record);
    }
    write_table(&metrics, dir, "metrics.csv", &mut manifest.artifacts)?;
    manifest.aggregate = aggregate(&manifest.runs);
    Ok(manifest)
}

/// Index of the cell with the lowest mean MSE, ties broken by mean epochs.
pub fn best_cell(cells: &[CellSummary]) -> Option<usize> {
    cells
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            Some((
                i,
                c.aggregate.get("mse")?.mean,
                c.aggregate.get("epochs")?.mean,
            ))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.2.total_cmp(&b.2)))
        .map(|(i, _, _)| i)
}

fn run_sweep(cfg: &RunConfig, dir: &Path) -> Result<RunManifest> {
    let problem = cfg.pde_kind()?.name();
    let cells = cfg.sweep.as_ref().expect("resolved").cells();
    let jobs = cells
        .iter()
        .enumerate()
        .flat_map(|(c, &(n, adam))| cfg.seeds.iter().map(move |&s| (Some(c), n, adam, s)))
        .collect();
    let results = run_pde_jobs(cfg, jobs)?;

    let mut manifest = new_manifest(cfg);
    let mut metrics = Table::new(&METRICS_HEADER);
    for job in &results {
        let record = pde_record(job);
        if job.outcome.is_ok() {
            metrics.push(metrics_row(problem, job, &record));
        }
        manifest.runs.push(record);
    }
    write_table(&metrics, dir, "metrics.csv", &mut manifest.artifacts)?;

    let mut table = Table::new(&[
        "cell",
        "N",
        "lr",
        "beta1",
        "beta2",
        "ok",
        "mse_mean",
        "mse_sd",
        "mae_mean",
        "mae_sd",
        "max_err_mean",
        "max_err_sd",
        "epochs_mean",
        "epochs_sd",
    ]);
    for (c, &(n_sub, adam)) in cells.iter().enumerate() {
        let agg = aggregate(manifest.runs.iter().filter(|r| r.cell == Some(c)));
        let stat = |k: &str| agg.get(k).map_or((f64::NAN, f64::NAN), |s| (s.mean, s.sd));
        let ok = agg.get("mse").map_or(0, |s| s.n);
        let (mse, mae, max, ep) = (stat("mse"), stat("mae"), stat("max_err"), stat("epochs"));
        table.push(row![
            c, n_sub, adam.lr, adam.beta1, adam.beta2, ok, mse.0, mse.1, mae.0, mae.1, max.0,
            max.1, ep.0, ep.1
        ]);
        manifest.cells.push(CellSummary {
            cell: c,
            n_sub,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            aggregate: agg,
        });
    }
    write_table(&table, dir, "cells.csv", &mut manifest.artifacts)?;
    manifest.best = best_cell(&manifest.cells).map(|i| manifest.cells[i].clone());
    Ok(manifest)
}

fn ocp_run(cfg: &RunConfig, section: &OcpSection, seed: u64) -> OcpRun {
    let mut run = match section.mode {
        IcMode::Fixed => OcpRun::fixed(seed),
        IcMode::Varying => OcpRun::varying(seed),
    };
    let t = cfg.train.expect("resolved");
    run.n_sub = cfg.n_sub();
    run.adam = cfg.adam.expect("resolved");
    run.train = TrainConfig::new(t.max_epochs, t.loss_tol);
    run.train.seed = seed;
    run.train.log_every = t.log_every;
    run.cfg = section.problem;
    run.stages = section.stages.clone().unwrap_or_default();
    run
}

fn reference_objectives(points: &[SimplexPoint], section: &OcpSection) -> Result<Vec<f64>> {
    points
        .par_iter()
        .map(|p| Ok(pmp::solve_bvp(p, &section.problem, &section.pmp)?.j_star))
        .collect()
}

fn trajectory_table(with_seed: bool) -> Table {
    if with_seed {
        Table::new(&["seed", "t", "u1", "u2", "u3", "gamma"])
    } else {
        Table::new(&["t", "u1", "u2", "u3", "gamma"])
    }
}

struct OcpJob {
    seed: u64,
    ic: Option<usize>,
    result: std::result::Result<(OcpNetworks, flm_core::optim::TrainReport), String>,
    wall_s: f64,
}

fn run_ocp(cfg: &RunConfig, dir: &Path) -> Result<RunManifest> {
    let section = cfg.ocp.as_ref().expect("resolved");
    let mode = section.mode;
    let mut manifest = new_manifest(cfg);
    let adam = cfg.adam.expect("resolved");

    // (set name, cycle count, test points, reference objectives)
    let mut sets: Vec<(String, usize, Vec<SimplexPoint>, Vec<f64>)> = Vec::new();
    let jobs: Vec<(u64, Option<usize>)>;
    let train_sets: Vec<Vec<SimplexPoint>>;
    match mode {
        IcMode::Fixed => {
            let ics = section
                .ics
                .iter()
                .map(|u| SimplexPoint::new(*u))
                .collect::<flm_core::Result<Vec<_>>>()?;
            let refs = reference_objectives(&ics, section)?;
            train_sets = ics.iter().map(|p| vec![*p]).collect();
            jobs = cfg
                .seeds
                .iter()
                .flat_map(|&s| (0..ics.len()).map(move |i| (s, Some(i))))
                .collect();
            sets.push(("ics".into(), 0, ics, refs));
        }
        IcMode::Varying => {
            let d = section.disk;
            let center = SimplexPoint::new(d.center)?;
            train_sets = vec![ocp::sample_disk(
                &center,
                d.radius,
                d.n_train,
                d.train_seed,
            )?];
            let test = ocp::sample_disk(&center, d.radius, d.n_test, d.test_seed)?;
            let cycles = if d.cycled { 3 } else { 1 };
            for k in 0..cycles {
                let pts: Vec<SimplexPoint> = test.iter().map(|p| p.cycle_by(k)).collect();
                let refs = reference_objectives(&pts, section)?;
                sets.push((format!("disk{k}"), k, pts, refs));
            }
            jobs = cfg.seeds.iter().map(|&s| (s, None)).collect();
        }
    }

    let results: Vec<OcpJob> = jobs
        .into_par_iter()
        .map(|(seed, ic)| {
            let start = Instant::now();
            let run = ocp_run(cfg, section, seed);
            let result = ocp::solve(&run, &train_sets[ic.unwrap_or(0)]).map_err(|e| e.to_string());
            OcpJob {
                seed,
                ic,
                result,
                wall_s: start.elapsed().as_secs_f64(),
            }
        })
        .collect();

    let mut metrics = Table::new(&OCP_METRICS_HEADER);
    let mut comparisons = Table::new(&COMPARISON_HEADER);
    let mut curves: BTreeMap<u64, Table> = BTreeMap::new();
    let n_traj = section.trajectory_n;
    let times = ocp::uniform_times(n_traj, section.problem.horizon);
    let traj_count = match mode {
        IcMode::Fixed => section.ics.len(),
        IcMode::Varying => 1,
    };
    let mut trajectories: Vec<Table> = (0..traj_count).map(|_| trajectory_table(true)).collect();
    let mode_name = match mode {
        IcMode::Fixed => "fixed",
        IcMode::Varying => "varying",
    };

    // Fixed mode trains once per initial condition; rows are grouped per seed.
    let mut per_seed: BTreeMap<u64, Vec<&OcpJob>> = BTreeMap::new();
    for job in &results {
        per_seed.entry(job.seed).or_default().push(job);
    }
    for (&seed, seed_jobs) in &per_seed {
        let curve = curves
            .entry(seed)
            .or_insert_with(|| Table::new(&["ic", "epoch", "loss"]));
        let mut wall = 0.0;
        let mut epochs = 0;
        let mut final_loss: f64 = 0.0;
        let mut failure = None;
        let mut diverged = false;
        for job in seed_jobs {
            wall += job.wall_s;
            match &job.result {
                Ok((nets, report)) => {
                    let ic = job.ic.unwrap_or(0);
                    for (e, v) in &report.loss_curve {
                        curve.push(row![ic, *e, *v]);
                    }
                    epochs += report.epochs_run;
                    final_loss = final_loss.max(report.final_loss);
                    diverged |= report.stop_reason == StopReason::Divergence;
                    let u0 = match mode {
                        IcMode::Fixed => SimplexPoint::new(section.ics[ic])?,
                        IcMode::Varying => SimplexPoint::new(section.disk.center)?,
                    };
                    for p in nets.trajectory(&u0, &times) {
                        trajectories[ic].push(row![seed, p.t, p.u[0], p.u[1], p.u[2], p.gamma]);
                    }
                }
                Err(e) => failure = Some(e.clone()),
            }
        }
        if let Some(e) = failure {
            manifest.runs.push(SeedRecord::failed(seed, e, wall));
            continue;
        }

        let mut record = SeedRecord {
            seed,
            cell: None,
            label: None,
            status: if diverged {
                Status::Diverged
            } else {
                Status::Ok
            },
            error: None,
            metrics: BTreeMap::new(),
            train: None,
            wall_s: wall,
        };
        if let [job] = seed_jobs.as_slice() {
            if let Ok((_, report)) = &job.result {
                record.train = Some(TrainSummary::from_report(report));
            }
        }
        for (name, k, points, refs) in &sets {
            let mut flm = Vec::with_capacity(points.len());
            for (i, p) in points.iter().enumerate() {
                let j = match mode {
                    IcMode::Fixed => {
                        let job = seed_jobs
                            .iter()
                            .find(|j| j.ic == Some(i))
                            .expect("one job per initial condition");
                        let (nets, _) = job.result.as_ref().expect("failures handled above");
                        nets.objective(p, &section.problem, section.eval_n)?
                    }
                    IcMode::Varying => {
                        let (nets, _) = seed_jobs[0]
                            .result
                            .as_ref()
                            .expect("failures handled above");
                        ocp::objective_on_cycled_disk(
                            nets,
                            p,
                            *k,
                            &section.problem,
                            section.eval_n,
                        )?
                    }
                };
                let c = ObjectiveComparison::new(p, j, refs[i]);
                comparisons.push(row![
                    seed,
                    name.as_str(),
                    i,
                    c.u0[0],
                    c.u0[1],
                    c.u0[2],
                    c.j_flm,
                    c.j_ref,
                    c.pct_err,
                    c.abs_err
                ]);
                flm.push(j);
            }
            let mape = ocp::mape(&flm, refs)?;
            let mae = ocp::mae(&flm, refs)?;
            let max_pct = flm
                .iter()
                .zip(refs)
                .map(|(a, b)| 100.0 * ((a - b) / b).abs())
                .fold(0.0, f64::max);
            let finite = mape.is_finite() && mae.is_finite();
            if !finite {
                record.status = Status::Diverged;
            }
            metrics.push(row![
                mode_name,
                cfg.n_sub(),
                adam.lr,
                adam.beta1,
                adam.beta2,
                seed,
                name.as_str(),
                mape,
                mae,
                max_pct,
                epochs,
                final_loss,
                wall
            ]);
            let suffix = if sets.len() > 1 {
                format!("_{name}")
            } else {
                String::new()
            };
            record.metrics.insert(format!("mape{suffix}"), mape);
            record.metrics.insert(format!("mae{suffix}"), mae);
            record
                .metrics
                .insert(format!("max_pct_err{suffix}"), max_pct);
        }
        record.metrics.insert("epochs".into(), epochs as f64);
        record.metrics.insert("final_loss".into(), final_loss);
        manifest.runs.push(record);
    }

    for (seed, curve) in &curves {
        write_table(
            curve,
            dir,
            &format!("loss_curve_{seed}.csv"),
            &mut manifest.artifacts,
        )?;
    }
    for (ic, t) in trajectories.iter().enumerate() {
        write_table(
            t,
            dir,
            &format!("trajectory_{ic}.csv"),
            &mut manifest.artifacts,
        )?;
    }
    write_table(&comparisons, dir, "objectives.csv", &mut manifest.artifacts)?;
    write_table(&metrics, dir, "metrics.csv", &mut manifest.artifacts)?;
    manifest.aggregate = aggregate(&manifest.runs);
    Ok(manifest)
}

fn run_bvp(cfg: &RunConfig, dir: &Path) -> Result<RunManifest> {
    let section = cfg.ocp.as_ref().expect("resolved");
    let points = section
        .ics
        .iter()
        .map(|u| SimplexPoint::new(*u))
        .collect::<flm_core::Result<Vec<_>>>()?;
    let solved: Vec<(std::result::Result<PmpSolution, String>, f64)> = points
        .par_iter()
        .map(|p| {
            let start = Instant::now();
            let sol = pmp::solve_bvp(p, &section.problem, &section.pmp).map_err(|e| e.to_string());
            (sol, start.elapsed().as_secs_f64())
        })
        .collect();

    let mut manifest = new_manifest(cfg);
    let mut table = Table::new(&[
        "ic",
        "u01",
        "u02",
        "u03",
        "j_star",
        "residual",
        "iterations",
    ]);
    for (ic, ((sol, wall), p)) in solved.iter().zip(&points).enumerate() {
        let u = p.coords();
        let sol = match sol {
            Ok(sol) => sol,
            Err(e) => {
                let mut r = SeedRecord::failed(0, e.clone(), *wall);
                r.label = Some(format!("ic{ic}"));
                manifest.runs.push(r);
                continue;
            }
        };
        table.push(row![
            ic,
            u[0],
            u[1],
            u[2],
            sol.j_star,
            sol.residual_norm,
            sol.iterations
        ]);
        let mut traj = Table::new(&[
            "t", "u1", "u2", "u3", "gamma", "lambda1", "lambda2", "lambda3",
        ]);
        for (((t, u), l), g) in sol
            .times
            .iter()
            .zip(&sol.u)
            .zip(&sol.lambda)
            .zip(&sol.gamma)
        {
            traj.push(row![*t, u[0], u[1], u[2], *g, l[0], l[1], l[2]]);
        }
        write_table(
            &traj,
            dir,
            &format!("trajectory_{ic}.csv"),
            &mut manifest.artifacts,
        )?;
        manifest.runs.push(SeedRecord {
            seed: 0,
            cell: None,
            label: Some(format!("ic{ic}")),
            status: Status::Ok,
            error: None,
            metrics: BTreeMap::from([
                ("j_star".to_string(), sol.j_star),
                ("residual".to_string(), sol.residual_norm),
                ("iterations".to_string(), sol.iterations as f64),
            ]),
            train: None,
            wall_s: *wall,
        });
    }
    write_table(&table, dir, "j_star.csv", &mut manifest.artifacts)?;
    manifest.aggregate = aggregate(&manifest.runs);
    Ok(manifest)
}

/// Bit string of a sine set, first coordinate first: `"01"` means `cos(n₁x₁) sin(n₂x₂)`.
pub fn sine_set_bits(basis: &BasisIndex) -> String {
    (0..basis.dim())
        .map(|j| if basis.is_sine(j) { '1' } else { '0' })
        .collect()
}

fn run_translate(cfg: &RunConfig, dir: &Path) -> Result<RunManifest> {
    let path = cfg.checkpoint.as_ref().expect("resolved");
    let start = Instant::now();
    let model = checkpoint::load(path)?;
    let m = model.dim();
    let blocks = model_to_separable(&model)?;

    let mut header = vec!["subnet".to_string()];
    header.extend((1..=m).map(|j| format!("n{j}")));
    header.extend(["k", "sine_set", "a_k"].map(String::from));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new(&header_refs);
    for (s, block) in blocks.iter().enumerate() {
        for (basis, a) in BasisIndex::all(m)?.zip(&block.coeffs) {
            let mut r = vec![s.to_string()];
            r.extend(block.freq.iter().map(|v| fmt_f64(*v)));
            r.extend([basis.k().to_string(), sine_set_bits(&basis), fmt_f64(*a)]);
            table.push(r);
        }
    }
    let mut manifest = new_manifest(cfg);
    write_table(&table, dir, "coeffs.csv", &mut manifest.artifacts)?;
    manifest.runs.push(SeedRecord {
        seed: 0,
        cell: None,
        label: Some(path.display().to_string()),
        status: Status::Ok,
        error: None,
        metrics: BTreeMap::from([("rows".to_string(), table.len() as f64)]),
        train: None,
        wall_s: start.elapsed().as_secs_f64(),
    });
    Ok(manifest)
}
