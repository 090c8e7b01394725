//! Adam training with best-model selection, then energy-unit fine-tuning.

use std::collections::BTreeMap;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Group, NetworkConfig, ParameterSet, INIT_SCHEME};
use crate::physics::{loss, LossBreakdown, LossOptions};
use crate::sampler::{sample_batch, SamplerConfig};

pub const FORMAT_VERSION: u32 = 1;

pub const TRAIN_LOG_HEADER: [&str; 6] = ["epoch", "phase", "loss_total", "loss_pde", "loss_bc", "is_best"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub lr_main: f64,
    pub epochs_main: usize,
    pub lr_finetune: f64,
    pub epochs_finetune: usize,
    pub betas: [f64; 2],
    pub epsilon: f64,
    pub seed: u64,
    /// Global gradient-norm clip; off unless set.
    pub grad_clip: Option<f64>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            lr_main: 8e-3,
            epochs_main: 5000,
            lr_finetune: 1e-4,
            epochs_finetune: 2000,
            betas: [0.9, 0.999],
            epsilon: 1e-8,
            seed: 0,
            grad_clip: None,
        }
    }
}

impl TrainingConfig {
    /// Scaled-down run that fits in a few minutes on one CPU core.
    pub fn desk() -> Self {
        Self {
            epochs_main: 3000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr_main > 0.0 && self.lr_finetune > 0.0) {
            return Err(Error::InvalidConfig("learning rates must be positive".into()));
        }
        if self.epochs_main == 0 {
            return Err(Error::InvalidConfig("epochs_main must be at least 1".into()));
        }
        let [b1, b2] = self.betas;
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return Err(Error::InvalidConfig("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// First and second moment accumulators.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update restricted to the `active` parameter ranges.
///
/// A non-finite gradient leaves parameters and state untouched.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    betas: [f64; 2],
    epsilon: f64,
    active: &[Range<usize>],
) -> Result<()> {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    for r in active {
        if let Some(i) = grads[r.clone()].iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { index: r.start + i });
        }
    }
    let [b1, b2] = betas;
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for r in active {
        for i in r.clone() {
            let g = grads[i];
            state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
            state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
            let m_hat = state.m[i] / c1;
            let v_hat = state.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Main,
    Finetune,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Main => "main",
            Phase::Finetune => "finetune",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointConfig {
    pub network: NetworkConfig,
    pub training: TrainingConfig,
    pub sampler: SamplerConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMetadata {
    pub epoch: usize,
    pub best_total_loss: f64,
    pub phase: Phase,
    pub seed: u64,
    pub init_scheme: String,
}

/// A saved network with the configuration that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: CheckpointConfig,
    pub params: ParameterSet,
    pub metadata: CheckpointMetadata,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    config: CheckpointConfig,
    params: BTreeMap<String, Vec<f64>>,
    metadata: CheckpointMetadata,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        let file = CheckpointFile {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            params: self.params.named().into_iter().map(|(k, v)| (k, v.to_vec())).collect(),
            metadata: self.metadata.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let found = raw.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found,
                expected: FORMAT_VERSION,
            });
        }
        let file: CheckpointFile = serde_json::from_value(raw)?;
        let params = ParameterSet::from_named(&file.config.network, |name| file.params.get(name).map(|v| v.as_slice()))?;
        Ok(Self {
            config: file.config,
            params,
            metadata: file.metadata,
        })
    }

    /// Writes to a temporary sibling and renames it into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(self.to_json()?.as_bytes())?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainLogRow {
    pub epoch: usize,
    pub phase: Phase,
    pub loss: LossBreakdown,
    pub is_best: bool,
}

pub fn write_log_csv<W: std::io::Write>(rows: &[TrainLogRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAIN_LOG_HEADER)?;
    for r in rows {
        w.write_record([
            r.epoch.to_string(),
            r.phase.as_str().to_string(),
            r.loss.total.to_string(),
            r.loss.pde.to_string(),
            r.loss.bc.to_string(),
            (r.is_best as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Best parameters seen, not the last ones.
    pub checkpoint: Checkpoint,
    pub log: Vec<TrainLogRow>,
}

fn clip(grad: &mut [f64], max_norm: Option<f64>) {
    if let Some(max) = max_norm {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > max {
            let s = max / norm;
            grad.iter_mut().for_each(|g| *g *= s);
        }
    }
}

struct Loop<'a> {
    sampler: &'a SamplerConfig,
    training: &'a TrainingConfig,
    phase: Phase,
    lr: f64,
    epochs: usize,
    epoch_key_offset: usize,
    frozen: Vec<Group>,
}

impl Loop<'_> {
    /// Returns the best post-step parameters, their epoch and loss, and the log.
    fn run(&self, mut params: ParameterSet, progress: &mut dyn FnMut(&TrainLogRow)) -> Result<(ParameterSet, usize, f64, Vec<TrainLogRow>)> {
        let active: Vec<Range<usize>> = Group::ALL
            .iter()
            .filter(|g| !self.frozen.contains(g))
            .map(|g| params.layout().group_range(*g))
            .collect();
        let mut opts = LossOptions::with_gradient();
        opts.frozen = self.frozen.clone();
        let mut state = AdamState::new(params.len());
        let mut best: Option<(ParameterSet, usize, f64)> = None;
        let mut log = Vec::with_capacity(self.epochs);
        for epoch in 1..=self.epochs {
            let batch = sample_batch(self.sampler, (self.epoch_key_offset + epoch) as u64);
            let eval = loss(&batch, &params, &opts)?;
            let l = eval.loss;
            let mut is_best = false;
            if !l.is_finite() {
                if epoch == 1 {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        phase: self.phase.as_str().into(),
                    });
                }
                log::warn!("{} epoch {epoch}: non-finite loss, step skipped", self.phase.as_str());
            } else {
                let mut grad = eval.gradient.expect("gradient requested");
                clip(&mut grad, self.training.grad_clip);
                match adam_step(params.values_mut(), &grad, &mut state, self.lr, self.training.betas, self.training.epsilon, &active) {
                    Ok(()) => {
                        if best.as_ref().is_none_or(|b| l.total < b.2) {
                            best = Some((params.clone(), epoch, l.total));
                            is_best = true;
                        }
                    }
                    Err(e) => log::warn!("{} epoch {epoch}: {e}; step skipped", self.phase.as_str()),
                }
            }
            let row = TrainLogRow {
                epoch,
                phase: self.phase,
                loss: l,
                is_best,
            };
            progress(&row);
            log.push(row);
        }
        let (p, e, total) = best.unwrap_or((params, 0, f64::NAN));
        Ok((p, e, total, log))
    }
}

/// Main training phase from a fresh initialization.
pub fn train(network: &NetworkConfig, sampler: &SamplerConfig, training: &TrainingConfig, mut progress: impl FnMut(&TrainLogRow)) -> Result<TrainOutcome> {
    network.validate()?;
    sampler.validate()?;
    training.validate()?;
    let init = ParameterSet::init(network, training.seed);
    let lp = Loop {
        sampler,
        training,
        phase: Phase::Main,
        lr: training.lr_main,
        epochs: training.epochs_main,
        epoch_key_offset: 0,
        frozen: Vec::new(),
    };
    let (params, epoch, best_total_loss, log) = lp.run(init, &mut progress)?;
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            config: CheckpointConfig {
                network: network.clone(),
                training: training.clone(),
                sampler: sampler.clone(),
            },
            params,
            metadata: CheckpointMetadata {
                epoch,
                best_total_loss,
                phase: Phase::Main,
                seed: training.seed,
                init_scheme: INIT_SCHEME.into(),
            },
        },
        log,
    })
}

/// Trains the energy unit alone, with the basis unit and gate frozen.
///
/// Fine-tuning batches use epoch keys after the main phase so they do not
/// repeat main-phase batches.
pub fn fine_tune(checkpoint: &Checkpoint, sampler: &SamplerConfig, training: &TrainingConfig, mut progress: impl FnMut(&TrainLogRow)) -> Result<TrainOutcome> {
    sampler.validate()?;
    training.validate()?;
    let lp = Loop {
        sampler,
        training,
        phase: Phase::Finetune,
        lr: training.lr_finetune,
        epochs: training.epochs_finetune,
        epoch_key_offset: training.epochs_main,
        frozen: vec![Group::Basis, Group::Gate],
    };
    let mut out = checkpoint.clone();
    out.config.training = training.clone();
    out.config.sampler = sampler.clone();
    out.metadata.phase = Phase::Finetune;
    out.metadata.epoch = 0;
    if training.epochs_finetune == 0 {
        return Ok(TrainOutcome { checkpoint: out, log: Vec::new() });
    }
    let (params, epoch, best_total_loss, log) = lp.run(checkpoint.params.clone(), &mut progress)?;
    out.params = params;
    out.metadata.epoch = epoch;
    out.metadata.best_total_loss = best_total_loss;
    Ok(TrainOutcome { checkpoint: out, log })
}
