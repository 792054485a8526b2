//! Optimization loop with exponential learning-rate and temperature
//! schedules, optional non-overlapping windowed training with detached state
//! carry, CSV logging, checkpointing and divergence/collapse detection.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use candle_core::Tensor;
use candle_nn::optim::{AdamW, Optimizer, ParamsAdamW};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::archive::FeatureArchive;
use crate::error::{Error, Result};
use crate::networks::{save_checkpoint, Carry, CheckpointMeta, GumbelSettings, Mode, Model, Noise, Variant};
use crate::objectives::{self, Likelihood, LossBreakdown};
use crate::windowing::{cluster_dataset, InferenceOptions};

/// Window length used for training.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "WindowRepr", into = "WindowRepr")]
pub enum TrainWindow {
    #[default]
    Full,
    Frames(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WindowRepr {
    Frames(usize),
    Name(String),
}

impl TryFrom<WindowRepr> for TrainWindow {
    type Error = String;
    fn try_from(r: WindowRepr) -> std::result::Result<Self, String> {
        match r {
            WindowRepr::Frames(0) => Err("window length must be positive".into()),
            WindowRepr::Frames(n) => Ok(TrainWindow::Frames(n)),
            WindowRepr::Name(s) if s == "full" => Ok(TrainWindow::Full),
            WindowRepr::Name(s) => Err(format!("window must be a frame count or \"full\", got {s:?}")),
        }
    }
}

impl From<TrainWindow> for WindowRepr {
    fn from(w: TrainWindow) -> Self {
        match w {
            TrainWindow::Full => WindowRepr::Name("full".into()),
            TrainWindow::Frames(n) => WindowRepr::Frames(n),
        }
    }
}

fn d_epochs() -> usize {
    500
}
fn d_lr_start() -> f64 {
    5e-4
}
fn d_lr_end() -> f64 {
    5e-5
}
fn d_batch() -> usize {
    64
}
fn d_tau_start() -> f64 {
    1.0
}
fn d_tau_end() -> f64 {
    0.1
}
fn d_lambda() -> f64 {
    0.5
}
fn d_one() -> usize {
    1
}
fn d_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "d_epochs")]
    pub epochs: usize,
    #[serde(default = "d_lr_start")]
    pub lr_start: f64,
    #[serde(default = "d_lr_end")]
    pub lr_end: f64,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_tau_start")]
    pub tau_start: f64,
    #[serde(default = "d_tau_end")]
    pub tau_end: f64,
    #[serde(default)]
    pub window_len_train: TrainWindow,
    /// Must match the model variant.
    pub objective: Variant,
    #[serde(default = "d_lambda")]
    pub lambda: f64,
    /// Monte Carlo draws per sample.
    #[serde(default = "d_one")]
    pub draws: usize,
    #[serde(default)]
    pub likelihood: Likelihood,
    /// Straight-through hard Gumbel-Softmax during training.
    #[serde(default)]
    pub hard_gumbel: bool,
    /// When false every frame counts as active.
    #[serde(default = "d_true")]
    pub use_mask: bool,
    /// Save a checkpoint every this many epochs (0: final only).
    #[serde(default)]
    pub checkpoint_every: usize,
}

impl TrainConfig {
    pub fn new(objective: Variant) -> Self {
        Self {
            epochs: d_epochs(),
            lr_start: d_lr_start(),
            lr_end: d_lr_end(),
            batch_size: d_batch(),
            seed: 0,
            tau_start: d_tau_start(),
            tau_end: d_tau_end(),
            window_len_train: TrainWindow::Full,
            objective,
            lambda: d_lambda(),
            draws: 1,
            likelihood: Likelihood::Bernoulli,
            hard_gumbel: false,
            use_mask: true,
            checkpoint_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.lr_end > 0.0 && self.lr_start >= self.lr_end) {
            return bad("learning rates need lr_start >= lr_end > 0");
        }
        if !(self.tau_end > 0.0 && self.tau_start >= self.tau_end) {
            return bad("temperatures need tau_start >= tau_end > 0");
        }
        if self.batch_size == 0 || self.draws == 0 {
            return bad("batch_size and draws must be positive");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be positive");
        }
        Ok(())
    }
}

fn exp_schedule(start: f64, end: f64, epochs: usize, epoch: usize) -> f64 {
    if epoch == 0 || epochs <= 1 {
        return start;
    }
    if epoch >= epochs - 1 {
        return end;
    }
    start * (end / start).powf(epoch as f64 / (epochs - 1) as f64)
}

/// `lr_start * (lr_end / lr_start)^(e / (epochs - 1))`, exact at both ends.
pub fn lr_schedule(cfg: &TrainConfig, epoch: usize) -> f64 {
    exp_schedule(cfg.lr_start, cfg.lr_end, cfg.epochs, epoch)
}

/// `tau_start * (tau_end / tau_start)^(e / (epochs - 1))`, exact at both ends.
pub fn tau_schedule(cfg: &TrainConfig, epoch: usize) -> f64 {
    exp_schedule(cfg.tau_start, cfg.tau_end, cfg.epochs, epoch)
}

/// True iff one cluster holds more than 99% of the assignments.
pub fn detect_collapse(assignments: &[usize]) -> bool {
    if assignments.is_empty() {
        return false;
    }
    let mut counts = std::collections::HashMap::new();
    for &a in assignments {
        *counts.entry(a).or_insert(0usize) += 1;
    }
    let top = counts.values().copied().max().unwrap_or(0);
    top * 100 > assignments.len() * 99
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub epoch: usize,
    pub step: usize,
    pub lr: f64,
    pub tau: f64,
    pub best_val_loss: Option<f64>,
    pub collapsed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub epoch: usize,
    pub step: usize,
    pub total: f64,
    pub recon: f64,
    pub kl_z: f64,
    pub kl_y: f64,
    pub tau: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub state: RunState,
    pub log: Vec<LogRow>,
    pub checkpoint: Option<PathBuf>,
}

/// Host batch of `(B, T, F)` values and `(B, T)` mask.
pub fn batch_tensors(model: &Model, archive: &FeatureArchive, idx: &[usize], use_mask: bool) -> Result<(Tensor, Tensor)> {
    let (t, f) = (archive.frames, archive.bins);
    let mut values = Vec::with_capacity(idx.len() * t * f);
    let mut mask = Vec::with_capacity(idx.len() * t);
    for &i in idx {
        let s = &archive.samples[i];
        values.extend_from_slice(&s.values);
        mask.extend(s.mask.iter().map(|&m| if use_mask { f32::from(m) } else { 1.0 }));
    }
    let x = model.tensor(&values, (idx.len(), t, f))?;
    let m = Tensor::from_vec(mask, (idx.len(), t), model.device())?.to_dtype(model.dtype())?;
    Ok((x, m))
}

/// Non-overlapping training windows `(start, len)`; a trailing remainder
/// shorter than the window is dropped.
pub fn training_windows(frames: usize, window: TrainWindow) -> Vec<(usize, usize)> {
    match window {
        TrainWindow::Full => vec![(0, frames)],
        TrainWindow::Frames(w) if w >= frames => vec![(0, frames)],
        TrainWindow::Frames(w) => (0..frames / w).map(|j| (j * w, w)).collect(),
    }
}

/// Objective for one batch. Windows run in order with recurrent states
/// carried and detached between them; the window losses are averaged.
pub fn batch_objective(
    model: &Model,
    x: &Tensor,
    mask: &Tensor,
    cfg: &TrainConfig,
    tau: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Tensor, Vec<LossBreakdown>)> {
    let (b, frames, _) = x.dims3()?;
    let gs = GumbelSettings {
        tau,
        hard: cfg.hard_gumbel,
    };
    let mut carry = Carry::default();
    let mut losses = Vec::new();
    let mut parts = Vec::new();
    for (start, len) in training_windows(frames, cfg.window_len_train) {
        let xw = x.narrow(1, start, len)?;
        let mw = mask.narrow(1, start, len)?;
        let noise = Noise::sample(rng, &model.cfg, b, cfg.draws, model.dtype(), model.device())?;
        let fwd = model.forward(&xw, &noise, gs, &carry.detach(), Mode::Train)?;
        let out = objectives::evaluate(model.cfg.variant, &xw, &mw, &fwd, model.prior(), cfg.lambda, cfg.likelihood)?;
        carry = fwd.carry;
        losses.push(out.loss);
        parts.push(out.breakdown);
    }
    let n = losses.len() as f64;
    let total = Tensor::stack(&losses, 0)?.sum_all()?.affine(1.0 / n, 0.0)?;
    Ok((total, parts))
}

fn merge(parts: &[LossBreakdown]) -> LossBreakdown {
    let n = parts.len() as f64;
    let avg = |f: fn(&LossBreakdown) -> f64| parts.iter().map(f).sum::<f64>() / n;
    LossBreakdown {
        total: avg(|p| p.total),
        recon: avg(|p| p.recon),
        kl_continuous: avg(|p| p.kl_continuous),
        kl_categorical: avg(|p| p.kl_categorical),
        per_sample: (0..parts[0].per_sample.len())
            .map(|i| parts.iter().map(|p| p.per_sample[i]).sum::<f64>() / n)
            .collect(),
    }
}

fn check_geometry(model: &Model, archive: &FeatureArchive, cfg: &TrainConfig) -> Result<()> {
    if archive.bins != model.cfg.bins {
        return Err(Error::Config(format!(
            "features have {} bins, model expects {}",
            archive.bins, model.cfg.bins
        )));
    }
    if cfg.objective != model.cfg.variant {
        return Err(Error::Config(format!(
            "objective {:?} does not match model variant {:?}",
            cfg.objective, model.cfg.variant
        )));
    }
    let need = match cfg.window_len_train {
        TrainWindow::Frames(w) if w < archive.frames => w,
        _ => archive.frames,
    };
    if need < model.cfg.min_frames() {
        return Err(Error::Config(format!(
            "training windows of {need} frames are too short for the encoder"
        )));
    }
    Ok(())
}

fn write_log(path: &Path, log: &[LogRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    for row in log {
        w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Trains `model` in place on `train`. `val`, when given, is only evaluated
/// (loss and collapse check), never used for updates.
pub fn train(model: &Model, train: &FeatureArchive, val: Option<&FeatureArchive>, cfg: &TrainConfig, out_dir: Option<&Path>) -> Result<TrainReport> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyInput("training archive has no samples".into()));
    }
    check_geometry(model, train, cfg)?;
    if let Some(v) = val {
        let ids: HashSet<&str> = train.samples.iter().map(|s| s.id.as_str()).collect();
        if let Some(s) = v.samples.iter().find(|s| ids.contains(s.id.as_str())) {
            return Err(Error::Config(format!("sample {} appears in both training and validation data", s.id)));
        }
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut opt = AdamW::new(
        model.params().vars(),
        ParamsAdamW {
            lr: cfg.lr_start,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        },
    )?;
    let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5DEE_CE66_D1CE_5EED);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut state = RunState {
        epoch: 0,
        step: 0,
        lr: cfg.lr_start,
        tau: cfg.tau_start,
        best_val_loss: None,
        collapsed: false,
    };
    let mut log = Vec::new();
    let mut checkpoint = None;
    for epoch in 0..cfg.epochs {
        let lr = lr_schedule(cfg, epoch);
        let tau = tau_schedule(cfg, epoch);
        opt.set_learning_rate(lr);
        state.epoch = epoch;
        state.lr = lr;
        state.tau = tau;
        order.shuffle(&mut order_rng);
        for idx in order.chunks(cfg.batch_size) {
            let (x, mask) = batch_tensors(model, train, idx, cfg.use_mask)?;
            let (loss, parts) = batch_objective(model, &x, &mask, cfg, tau, &mut noise_rng).map_err(|e| match e {
                Error::Numeric(detail) => Error::Diverged {
                    epoch,
                    step: state.step,
                    detail,
                },
                other => other,
            })?;
            let b = merge(&parts);
            if !b.total.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    step: state.step,
                    detail: format!("loss {}", b.total),
                });
            }
            opt.backward_step(&loss)?;
            log.push(LogRow {
                epoch,
                step: state.step,
                total: b.total,
                recon: b.recon,
                kl_z: b.kl_continuous,
                kl_y: b.kl_categorical,
                tau,
                lr,
            });
            state.step += 1;
        }
        if let Some(v) = val.filter(|v| !v.is_empty()) {
            let loss = evaluate_loss(model, v, cfg, tau)?;
            state.best_val_loss = Some(state.best_val_loss.map_or(loss, |b| b.min(loss)));
        }
        if let Some(dir) = out_dir {
            let last = epoch + 1 == cfg.epochs;
            if last || (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
                let name = if last { "checkpoint_final.vack".to_string() } else { format!("checkpoint_epoch{:04}.vack", epoch + 1) };
                let path = dir.join(name);
                let meta = CheckpointMeta {
                    epoch,
                    step: state.step,
                    tau,
                    lr,
                    seed: cfg.seed,
                    ..Default::default()
                };
                save_checkpoint(model, &meta, &path)?;
                if last {
                    checkpoint = Some(path);
                }
            }
        }
    }
    let probe = val.filter(|v| !v.is_empty()).unwrap_or(train);
    let opts = InferenceOptions {
        tau: state.tau,
        ..Default::default()
    };
    let report = cluster_dataset(model, probe, &opts)?;
    state.collapsed = detect_collapse(&report.assignments());
    if state.collapsed {
        log::warn!("latent collapse: more than 99% of samples share one cluster");
    }
    if let Some(dir) = out_dir {
        write_log(&dir.join("train_log.csv"), &log)?;
        let path = dir.join("run_state.json");
        fs::write(&path, serde_json::to_vec_pretty(&state)?).map_err(|e| Error::io(&path, e))?;
    }
    Ok(TrainReport { state, log, checkpoint })
}

/// Mean objective over an archive in evaluation mode, with noise from a
/// fixed stream.
pub fn evaluate_loss(model: &Model, archive: &FeatureArchive, cfg: &TrainConfig, tau: f64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE7A1);
    let idx: Vec<usize> = (0..archive.len()).collect();
    let gs = GumbelSettings { tau, hard: false };
    let mut total = 0.0;
    for chunk in idx.chunks(cfg.batch_size) {
        let (x, mask) = batch_tensors(model, archive, chunk, cfg.use_mask)?;
        let noise = Noise::sample(&mut rng, &model.cfg, chunk.len(), cfg.draws, model.dtype(), model.device())?;
        let fwd = model.forward(&x, &noise, gs, &Carry::default(), Mode::Eval)?;
        let out = objectives::evaluate(model.cfg.variant, &x, &mask, &fwd, model.prior(), cfg.lambda, cfg.likelihood)?;
        total += out.breakdown.per_sample.iter().sum::<f64>();
    }
    Ok(total / archive.len() as f64)
}
