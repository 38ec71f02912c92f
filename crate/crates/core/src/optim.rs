//! Full-batch Adam and the epoch loop shared by every experiment.

use serde::{Deserialize, Serialize};

use crate::error::{FlmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_eps() -> f64 {
    1e-8
}

impl AdamConfig {
    pub fn new(lr: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps: default_eps(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if !ok {
            return Err(FlmError::Config(format!("invalid Adam settings {self:?}")));
        }
        Ok(())
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self::new(1e-3, 0.9, 0.999)
    }
}

/// First and second moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

/// One bias-corrected Adam update at step `t` (1-based).
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    cfg: &AdamConfig,
    t: u64,
) -> Result<()> {
    let n = params.len();
    if grads.len() != n || state.m.len() != n || state.v.len() != n {
        return Err(FlmError::DimensionMismatch {
            expected: n,
            got: grads.len(),
        });
    }
    if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
        return Err(FlmError::NonFiniteGradient { index });
    }
    let t = t.max(1) as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

/// Adam with its own step counter.
#[derive(Debug, Clone)]
pub struct Adam {
    pub cfg: AdamConfig,
    state: AdamState,
    t: u64,
}

impl Adam {
    pub fn new(cfg: AdamConfig, n: usize) -> Self {
        Self {
            cfg,
            state: AdamState::new(n),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn state(&self) -> &AdamState {
        &self.state
    }

    pub fn reset(&mut self) {
        let n = self.state.m.len();
        self.state = AdamState::new(n);
        self.t = 0;
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        adam_step(params, grads, &mut self.state, &self.cfg, self.t + 1)?;
        self.t += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub loss_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
}

fn default_log_every() -> usize {
    10
}

impl TrainConfig {
    pub fn new(max_epochs: usize, loss_tol: f64) -> Self {
        Self {
            max_epochs,
            loss_tol,
            seed: 0,
            log_every: default_log_every(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.loss_tol.is_nan() || self.loss_tol < 0.0 {
            return Err(FlmError::Config(format!(
                "invalid training settings {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Tol,
    EpochCap,
    Divergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Epochs begun, i.e. loss evaluations inside the loop.
    pub epochs_run: usize,
    /// Optimizer updates applied.
    pub steps: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub stop_reason: StopReason,
    pub loss_curve: Vec<(usize, f64)>,
    pub seed: u64,
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn finish(
    cfg: &TrainConfig,
    epochs_run: usize,
    steps: usize,
    initial_loss: f64,
    final_loss: f64,
    stop_reason: StopReason,
    mut loss_curve: Vec<(usize, f64)>,
) -> TrainReport {
    match loss_curve.last_mut() {
        Some(last) if last.0 == epochs_run => last.1 = final_loss,
        _ => loss_curve.push((epochs_run, final_loss)),
    }
    TrainReport {
        epochs_run,
        steps,
        initial_loss,
        final_loss,
        stop_reason,
        loss_curve,
        seed: cfg.seed,
    }
}

/// Runs full-batch epochs until the loss reaches `cfg.loss_tol` or the epoch
/// cap. `objective` receives the parameters and a zeroed gradient buffer and
/// returns the loss.
///
/// Each epoch evaluates the loss at the current parameters, stops if it is
/// within tolerance and otherwise applies one Adam step. When the cap is hit
/// the loss is evaluated once more so `final_loss` always describes the
/// returned parameters. A non-finite loss or gradient restores the last
/// parameters whose loss was finite.
pub fn train<F>(
    mut objective: F,
    params: &mut [f64],
    adam: &mut Adam,
    cfg: &TrainConfig,
) -> Result<TrainReport>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    cfg.validate()?;
    adam.cfg.validate()?;
    let n = params.len();
    let mut grad = vec![0.0; n];
    let mut last_good = params.to_vec();
    let mut last_good_loss = f64::NAN;
    let mut curve = Vec::new();
    let mut initial_loss = f64::NAN;
    let log_every = cfg.log_every.max(1);

    let mut steps = 0;
    for epoch in 1..=cfg.max_epochs {
        grad.fill(0.0);
        let loss = objective(params, &mut grad);
        if epoch == 1 {
            initial_loss = loss;
        }
        if !loss.is_finite() || !all_finite(&grad) {
            if epoch > 1 {
                params.copy_from_slice(&last_good);
            }
            let loss = if epoch > 1 { last_good_loss } else { loss };
            return Ok(finish(
                cfg,
                epoch - 1,
                steps,
                initial_loss,
                loss,
                StopReason::Divergence,
                curve,
            ));
        }
        if epoch == 1 || epoch % log_every == 0 {
            curve.push((epoch, loss));
        }
        if loss <= cfg.loss_tol {
            return Ok(finish(
                cfg,
                epoch,
                steps,
                initial_loss,
                loss,
                StopReason::Tol,
                curve,
            ));
        }
        last_good.copy_from_slice(params);
        last_good_loss = loss;
        adam.step(params, &grad)?;
        steps += 1;
    }

    grad.fill(0.0);
    let loss = objective(params, &mut grad);
    if !loss.is_finite() {
        params.copy_from_slice(&last_good);
        return Ok(finish(
            cfg,
            cfg.max_epochs,
            steps,
            initial_loss,
            last_good_loss,
            StopReason::Divergence,
            curve,
        ));
    }
    let reason = if loss <= cfg.loss_tol {
        StopReason::Tol
    } else {
        StopReason::EpochCap
    };
    Ok(finish(
        cfg,
        cfg.max_epochs,
        steps,
        initial_loss,
        loss,
        reason,
        curve,
    ))
}

/// A first phase with a loose tolerance followed by an optional longer
/// refinement phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub phase1: TrainConfig,
    pub phase2: Option<TrainConfig>,
    /// Clear the Adam moments between phases instead of continuing them.
    #[serde(default)]
    pub reset_adam: bool,
}

impl Protocol {
    /// 10,000 epochs to a loss of 1e-4, then 30,000 more to 1e-8.
    pub fn standard(seed: u64) -> Self {
        let mut phase1 = TrainConfig::new(10_000, 1e-4);
        phase1.seed = seed;
        let mut phase2 = TrainConfig::new(30_000, 1e-8);
        phase2.seed = seed;
        Self {
            phase1,
            phase2: Some(phase2),
            reset_adam: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub phase1: TrainReport,
    pub phase2: Option<TrainReport>,
}

impl ProtocolReport {
    pub fn last(&self) -> &TrainReport {
        self.phase2.as_ref().unwrap_or(&self.phase1)
    }

    pub fn total_epochs(&self) -> usize {
        self.phase1.epochs_run + self.phase2.as_ref().map_or(0, |r| r.epochs_run)
    }
}

/// Runs both phases on the same parameters. Phase 2 is skipped when phase 1
/// diverged.
pub fn run_protocol<F>(
    mut objective: F,
    params: &mut [f64],
    adam: &mut Adam,
    protocol: &Protocol,
) -> Result<ProtocolReport>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let phase1 = train(&mut objective, params, adam, &protocol.phase1)?;
    let phase2 = match protocol.phase2 {
        Some(cfg) if phase1.stop_reason != StopReason::Divergence => {
            if protocol.reset_adam {
                adam.reset();
            }
            Some(train(&mut objective, params, adam, &cfg)?)
        }
        _ => None,
    };
    Ok(ProtocolReport { phase1, phase2 })
}
