//! Run configuration files.
//!
//! A config is one JSON object. Only `experiment` is required; everything else
//! falls back to the tuned settings for the chosen problem. [`RunConfig::resolve`]
//! fills those defaults in, and the resolved config is what the manifest
//! echoes, so feeding an echoed config back in repeats the run exactly.

use std::path::{Path, PathBuf};

use flm_core::ocp::{IcMode, OcpConfig, OcpRun, PenaltyStage};
use flm_core::optim::AdamConfig;
use flm_core::pde::{CollocationCounts, PdeKind};
use flm_core::pmp::PmpConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Pde,
    Ocp,
    Bvp,
    Translate,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Input dimension; implied by the experiment when omitted.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(rename = "N")]
    pub n_sub: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub max_epochs: usize,
    pub loss_tol: f64,
    #[serde(default)]
    pub phase2: bool,
    #[serde(default = "default_phase2_epochs")]
    pub phase2_epochs: usize,
    #[serde(default = "default_phase2_tol")]
    pub phase2_tol: f64,
    #[serde(default)]
    pub reset_adam: bool,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
}

fn default_phase2_epochs() -> usize {
    30_000
}

fn default_phase2_tol() -> f64 {
    1e-8
}

fn default_log_every() -> usize {
    10
}

impl TrainSection {
    fn pde_standard() -> Self {
        Self {
            max_epochs: 10_000,
            loss_tol: 1e-4,
            phase2: true,
            phase2_epochs: default_phase2_epochs(),
            phase2_tol: default_phase2_tol(),
            reset_adam: false,
            log_every: default_log_every(),
        }
    }

    fn ocp_standard() -> Self {
        Self {
            max_epochs: 30_000,
            loss_tol: 1e-6,
            phase2: false,
            ..Self::pde_standard()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskSection {
    pub center: [f64; 3],
    pub radius: f64,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(default = "default_train_sample_seed")]
    pub train_seed: u64,
    #[serde(default = "default_test_sample_seed")]
    pub test_seed: u64,
    /// Also test on the two cyclically rotated disks.
    #[serde(default)]
    pub cycled: bool,
}

fn default_train_sample_seed() -> u64 {
    1
}

fn default_test_sample_seed() -> u64 {
    2
}

impl Default for DiskSection {
    fn default() -> Self {
        Self {
            center: [0.2, 0.2, 0.6],
            radius: 0.15,
            n_train: 250,
            n_test: 100,
            train_seed: default_train_sample_seed(),
            test_seed: default_test_sample_seed(),
            cycled: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcpSection {
    pub mode: IcMode,
    /// Initial conditions for fixed mode and for reference solves.
    #[serde(default = "default_ics")]
    pub ics: Vec<[f64; 3]>,
    #[serde(default)]
    pub disk: DiskSection,
    #[serde(default)]
    pub problem: OcpConfig,
    #[serde(default)]
    pub pmp: PmpConfig,
    /// Grid size for the trapezoid objective of network trajectories.
    #[serde(default = "default_eval_n")]
    pub eval_n: usize,
    /// Rows in each trajectory CSV.
    #[serde(default = "default_trajectory_n")]
    pub trajectory_n: usize,
    /// Penalty continuation; an empty list trains once with the penalties of
    /// `problem` for `train.max_epochs` epochs.
    #[serde(default)]
    pub stages: Option<Vec<PenaltyStage>>,
}

pub fn default_ics() -> Vec<[f64; 3]> {
    vec![[0.2, 0.2, 0.6], [0.5, 0.3, 0.2], [0.25, 0.6, 0.15]]
}

fn default_eval_n() -> usize {
    1001
}

fn default_trajectory_n() -> usize {
    201
}

impl OcpSection {
    pub fn new(mode: IcMode) -> Self {
        Self {
            mode,
            ics: default_ics(),
            disk: DiskSection::default(),
            problem: OcpConfig::default(),
            pmp: PmpConfig::default(),
            eval_n: default_eval_n(),
            trajectory_n: default_trajectory_n(),
            stages: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(rename = "N")]
    pub n_sub: Vec<usize>,
    pub lr: Vec<f64>,
    pub betas: Vec<[f64; 2]>,
}

impl SweepGrid {
    fn standard(n_sub: usize) -> Self {
        Self {
            n_sub: vec![n_sub],
            lr: vec![0.001, 0.005, 0.01],
            betas: vec![[0.9, 0.999], [0.95, 0.97], [0.97, 0.95]],
        }
    }

    pub fn cells(&self) -> Vec<(usize, AdamConfig)> {
        let mut out = Vec::new();
        for &n in &self.n_sub {
            for &lr in &self.lr {
                for &[b1, b2] in &self.betas {
                    out.push((n, AdamConfig::new(lr, b1, b2)));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adam: Option<AdamConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collocation: Option<CollocationCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ocp: Option<OcpSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepGrid>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// Best settings per PDE: sub-networks, learning rate, betas.
pub fn pde_defaults(kind: PdeKind) -> (usize, AdamConfig) {
    match kind {
        PdeKind::Heat => (16, AdamConfig::new(0.001, 0.95, 0.97)),
        PdeKind::Poisson => (4, AdamConfig::new(0.001, 0.95, 0.97)),
        PdeKind::Gbs => (25, AdamConfig::new(0.001, 0.97, 0.95)),
    }
}

fn ocp_defaults(mode: IcMode) -> OcpRun {
    match mode {
        IcMode::Fixed => OcpRun::fixed(0),
        IcMode::Varying => OcpRun::varying(0),
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            problem: None,
            model: None,
            adam: None,
            train: None,
            collocation: None,
            grid_n: None,
            ocp: None,
            checkpoint: None,
            sweep: None,
            seeds: default_seeds(),
            out_dir: None,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(format!("cannot parse config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| config_err(format!("cannot parse config: {e}")))?;
        // a run manifest stands in for the config it echoes
        let value = match value {
            serde_json::Value::Object(mut o)
                if o.contains_key("runs") && o.contains_key("config") =>
            {
                o.remove("config").unwrap()
            }
            v => v,
        };
        serde_json::from_value(value).map_err(|e| config_err(format!("cannot parse config: {e}")))
    }

    pub fn pde_kind(&self) -> Result<PdeKind> {
        let name = self
            .problem
            .as_deref()
            .ok_or_else(|| config_err("`problem` is required (valid: heat, poisson, gbs)"))?;
        name.parse()
            .map_err(|e: flm_core::FlmError| config_err(e.to_string()))
    }

    /// Fills every omitted setting with its default and validates the result.
    pub fn resolve(mut self) -> Result<Self> {
        if self.seeds.is_empty() {
            return Err(config_err("`seeds` must not be empty"));
        }
        match self.experiment {
            Experiment::Pde | Experiment::Sweep => {
                let kind = self.pde_kind()?;
                let (n, adam) = pde_defaults(kind);
                self.model.get_or_insert(ModelSection {
                    m: Some(2),
                    n_sub: n,
                });
                self.adam.get_or_insert(adam);
                self.train.get_or_insert_with(TrainSection::pde_standard);
                self.collocation
                    .get_or_insert_with(|| CollocationCounts::for_problem(kind));
                self.grid_n.get_or_insert(101);
                if self.experiment == Experiment::Sweep {
                    let grid = self.sweep.get_or_insert_with(|| SweepGrid::standard(n));
                    if grid.n_sub.is_empty() || grid.lr.is_empty() || grid.betas.is_empty() {
                        return Err(config_err("every sweep axis needs at least one value"));
                    }
                    for (n, adam) in grid.cells() {
                        check_n_sub(n)?;
                        adam.validate().map_err(|e| config_err(e.to_string()))?;
                    }
                }
                self.check_model(2)?;
                let c = self.collocation.expect("set above");
                if c.n_bc + c.n_pde == 0 {
                    return Err(config_err("collocation set is empty"));
                }
                if kind != PdeKind::Poisson && c.n_ic == 0 {
                    return Err(config_err(format!(
                        "{} needs initial-condition points",
                        kind.name()
                    )));
                }
                if self.grid_n.expect("set above") < 2 {
                    return Err(config_err("`grid_n` must be at least 2"));
                }
            }
            Experiment::Ocp | Experiment::Bvp => {
                let section = self
                    .ocp
                    .get_or_insert_with(|| OcpSection::new(IcMode::Fixed));
                let mode = section.mode;
                section
                    .problem
                    .validate()
                    .map_err(|e| config_err(e.to_string()))?;
                if section.eval_n < 2 || section.trajectory_n < 2 {
                    return Err(config_err("`eval_n` and `trajectory_n` must be at least 2"));
                }
                if self.experiment == Experiment::Bvp || mode == IcMode::Fixed {
                    if section.ics.is_empty() {
                        return Err(config_err("`ocp.ics` must not be empty"));
                    }
                    for u in &section.ics {
                        flm_core::ocp::SimplexPoint::new(*u)
                            .map_err(|e| config_err(e.to_string()))?;
                    }
                }
                if self.experiment == Experiment::Ocp {
                    if mode == IcMode::Varying {
                        let d = section.disk;
                        let center = flm_core::ocp::SimplexPoint::new(d.center)
                            .map_err(|e| config_err(e.to_string()))?;
                        if d.n_train == 0 || d.n_test == 0 {
                            return Err(config_err("disk sample counts must be positive"));
                        }
                        if !flm_core::ocp::disk_fits(&center, d.radius) {
                            return Err(config_err(format!(
                                "disk of radius {} leaves the simplex",
                                d.radius
                            )));
                        }
                    }
                    let run = ocp_defaults(mode);
                    let stages = section.stages.get_or_insert_with(|| run.stages.clone());
                    if stages.iter().any(|st| {
                        !(st.mu > 0.0 && st.mu.is_finite() && st.lr > 0.0) || st.epochs == 0
                    }) {
                        return Err(config_err("penalty stages need positive mu, lr and epochs"));
                    }
                    self.model.get_or_insert(ModelSection {
                        m: Some(mode.input_dim()),
                        n_sub: run.n_sub,
                    });
                    self.adam.get_or_insert(run.adam);
                    self.train.get_or_insert_with(TrainSection::ocp_standard);
                    self.check_model(mode.input_dim())?;
                }
            }
            Experiment::Translate => {
                if self.checkpoint.is_none() {
                    return Err(config_err("`checkpoint` is required for translate"));
                }
            }
        }
        if let Some(adam) = &self.adam {
            adam.validate().map_err(|e| config_err(e.to_string()))?;
        }
        if let Some(t) = &self.train {
            if t.max_epochs == 0
                || !(t.loss_tol >= 0.0)
                || (t.phase2 && (t.phase2_epochs == 0 || !(t.phase2_tol >= 0.0)))
            {
                return Err(config_err("invalid `train` section"));
            }
        }
        Ok(self)
    }

    fn check_model(&mut self, dim: usize) -> Result<()> {
        let model = self.model.as_mut().expect("model resolved before check");
        match model.m {
            Some(m) if m != dim => {
                return Err(config_err(format!(
                    "model input dimension must be {dim}, got {m}"
                )));
            }
            _ => model.m = Some(dim),
        }
        check_n_sub(model.n_sub)
    }

    pub fn n_sub(&self) -> usize {
        self.model.map_or(0, |m| m.n_sub)
    }
}

fn check_n_sub(n: usize) -> Result<()> {
    if n == 0 {
        return Err(config_err("the model needs at least one sub-network"));
    }
    Ok(())
}

/// Parses `0..9` (inclusive), `3`, or comma-separated mixtures like `0,2,5..7`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || config_err(format!("invalid seed list `{text}`"));
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim) {
        if let Some((lo, hi)) = part.split_once("..") {
            let hi = hi.strip_prefix('=').unwrap_or(hi);
            let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
            if hi < lo || hi - lo >= 1_000_000 {
                return Err(bad());
            }
            seeds.extend(lo..=hi);
        } else {
            seeds.push(part.parse().map_err(|_| bad())?);
        }
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..9").unwrap(), (0..10).collect::<Vec<_>>());
        assert_eq!(parse_seeds("4").unwrap(), vec![4]);
        assert_eq!(parse_seeds("0, 2,5..=6").unwrap(), vec![0, 2, 5, 6]);
        assert!(parse_seeds("3..1").is_err());
        assert!(parse_seeds("a").is_err());
        assert!(parse_seeds("").is_err());
    }

    #[test]
    fn heat_defaults() {
        let cfg = RunConfig::from_json_str(r#"{"experiment": "pde", "problem": "heat"}"#)
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(cfg.n_sub(), 16);
        assert_eq!(cfg.adam.unwrap(), AdamConfig::new(0.001, 0.95, 0.97));
        assert!(cfg.train.unwrap().phase2);
        assert_eq!(cfg.grid_n, Some(101));
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = RunConfig::from_json_str(r#"{"experiment": "ocp", "ocp": {"mode": "varying"}}"#)
            .unwrap()
            .resolve()
            .unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back = RunConfig::from_json_str(&text).unwrap().resolve().unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.n_sub(), 27);
    }

    #[test]
    fn unknown_problem_names_the_options() {
        let err = RunConfig::from_json_str(r#"{"experiment": "pde", "problem": "wave"}"#)
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(err.to_string().contains("heat, poisson, gbs"), "{err}");
    }

    #[test]
    fn rejects_bad_sections() {
        for text in [
            r#"{"experiment": "pde", "problem": "heat", "seeds": []}"#,
            r#"{"experiment": "sweep", "problem": "heat", "sweep": {"N": [], "lr": [0.001], "betas": [[0.9, 0.99]]}}"#,
            r#"{"experiment": "pde", "problem": "heat", "model": {"m": 3, "N": 4}}"#,
            r#"{"experiment": "pde", "problem": "heat", "adam": {"lr": -1, "beta1": 0.9, "beta2": 0.9}}"#,
            r#"{"experiment": "ocp", "ocp": {"mode": "fixed", "ics": [[0.5, 0.5, 0.5]]}}"#,
            r#"{"experiment": "ocp", "ocp": {"mode": "varying", "disk": {"center": [0.2, 0.2, 0.6], "radius": 0.3, "n_train": 5, "n_test": 5}}}"#,
            r#"{"experiment": "translate"}"#,
        ] {
            let parsed = RunConfig::from_json_str(text).and_then(RunConfig::resolve);
            assert!(parsed.is_err(), "{text}");
        }
        assert!(RunConfig::from_json_str(r#"{"experiment": "pde", "typo": 1}"#).is_err());
    }
}
