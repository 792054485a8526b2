//! Sliding-window inference and cluster decisions.
//!
//! Categorical models average the encoder logits of overlapping windows and
//! decide with a hard Gumbel-Softmax; mixture models take the posterior mean
//! and the most responsible component.

use std::path::Path;

use candle_core::{DType, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::archive::FeatureArchive;
use crate::distributions::{self as dist, argmax, gumbel_noise, CategoricalLogits};
use crate::error::{Error, Result};
use crate::networks::{Mode, Model, Variant};
use crate::training::batch_tensors;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub window_len: usize,
    pub hop: usize,
    pub starts: Vec<usize>,
}

impl WindowPlan {
    pub fn n_windows(&self) -> usize {
        self.starts.len()
    }
}

/// Windows of `w` frames every `hop` frames; when `T - w` is not a multiple
/// of `hop`, a last window ending exactly at `T` is appended.
pub fn plan_windows(frames: usize, w: usize, hop: usize) -> Result<WindowPlan> {
    if w == 0 || w > frames {
        return Err(Error::Config(format!("window {w} must lie in [1, {frames}]")));
    }
    if hop == 0 || hop > w {
        return Err(Error::Config(format!("hop {hop} must lie in [1, {w}]")));
    }
    let mut starts: Vec<usize> = (0..=frames - w).step_by(hop).collect();
    if *starts.last().unwrap() != frames - w {
        starts.push(frames - w);
    }
    Ok(WindowPlan {
        window_len: w,
        hop,
        starts,
    })
}

/// Default hop: half the window, at least one frame.
pub fn default_hop(w: usize) -> usize {
    (w / 2).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateRule {
    /// Recurrent state flows from each window into the next.
    #[default]
    Carry,
    /// Every window starts from a zero state.
    Reset,
}

/// Mean of per-window categorical logits for a `(B, T, F)` batch. Returns the
/// averaged logits `(B, K)` and each window's logits.
pub fn averaged_logits(model: &Model, x: &Tensor, plan: &WindowPlan, rule: StateRule) -> Result<(Tensor, Vec<Tensor>)> {
    let (_, frames, _) = x.dims3()?;
    if plan.starts.iter().any(|&s| s + plan.window_len > frames) {
        return Err(Error::Dimension(format!(
            "window plan does not fit a sequence of {frames} frames"
        )));
    }
    let mut state: Option<Tensor> = None;
    let mut per_window = Vec::with_capacity(plan.n_windows());
    for &s in &plan.starts {
        let xw = x.narrow(1, s, plan.window_len)?;
        let carry = match rule {
            StateRule::Carry => state.as_ref(),
            StateRule::Reset => None,
        };
        let (logits, next) = model.encode_categorical(&xw, carry, Mode::Eval)?;
        state = next;
        per_window.push(logits);
    }
    let mean = Tensor::stack(&per_window, 0)?.mean(0)?;
    Ok((mean, per_window))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDecision {
    pub k: usize,
    /// Decision simplex: hard one-hot for categorical models,
    /// responsibilities for mixture models.
    pub y: Vec<f64>,
    pub averaged_logits: Vec<f64>,
    pub window_logits: Vec<Vec<f64>>,
    /// Point used for geometric metrics: the soft Gumbel-Softmax sample for
    /// categorical models, the posterior mean for mixture models.
    pub embedding: Vec<f64>,
}

/// Hard Gumbel-Softmax decision on averaged logits. `g = None` is the
/// deterministic noise-free mode.
pub fn decide_m2(avg_logits: &[f64], tau: f64, g: Option<&[f64]>) -> Result<ClusterDecision> {
    let c = CategoricalLogits::new(avg_logits.to_vec(), tau)?;
    let zeros = vec![0.0; avg_logits.len()];
    let g = g.unwrap_or(&zeros);
    let y = dist::gumbel_softmax(&c, g, true)?;
    let soft = dist::gumbel_softmax(&c, g, false)?;
    Ok(ClusterDecision {
        k: argmax(&y),
        y,
        averaged_logits: avg_logits.to_vec(),
        window_logits: Vec::new(),
        embedding: soft,
    })
}

/// Mixture decision at the posterior mean of each sample in a `(B, T, F)`
/// batch.
pub fn decide_gmm(model: &Model, x: &Tensor) -> Result<Vec<ClusterDecision>> {
    let prior = model
        .prior()
        .ok_or_else(|| Error::Config("model has no mixture prior".into()))?
        .to_prior()?;
    let (mu, _) = model.encoder_gmm(x, Mode::Eval)?;
    let mu: Vec<Vec<f64>> = mu.to_dtype(DType::F64)?.to_vec2()?;
    mu.into_iter()
        .map(|m| {
            let r = dist::gmm_responsibilities(&m, &prior)?;
            Ok(ClusterDecision {
                k: argmax(&r),
                y: r,
                averaged_logits: Vec::new(),
                window_logits: Vec::new(),
                embedding: m,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceOptions {
    /// Window length in frames; `None` runs on whole sequences.
    pub window: Option<usize>,
    /// Defaults to half the window.
    pub hop: Option<usize>,
    pub state_rule: StateRule,
    /// Gumbel-Softmax temperature for categorical decisions.
    pub tau: f64,
    /// Seed for Gumbel noise; `None` is noise-free.
    pub noise_seed: Option<u64>,
    pub batch_size: usize,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        Self {
            window: None,
            hop: None,
            state_rule: StateRule::Carry,
            tau: 0.1,
            noise_seed: None,
            batch_size: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub sample_id: String,
    pub k: usize,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u32>,
    #[serde(skip)]
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    /// Producing method, e.g. `m2-ac` or `kmeans`.
    pub method: String,
    pub n_clusters: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<WindowPlan>,
    pub rows: Vec<ReportRow>,
}

impl ClusterReport {
    pub fn assignments(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.k).collect()
    }

    pub fn labels(&self) -> Option<Vec<usize>> {
        self.rows.iter().map(|r| r.label.map(|l| l as usize)).collect()
    }

    pub fn embeddings(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.embedding.clone()).collect()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    /// CSV rows `sample_id, z0..zd, k, label`.
    pub fn write_embeddings_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
        let d = self.rows.first().map_or(0, |r| r.embedding.len());
        let mut header = vec!["sample_id".to_string()];
        header.extend((0..d).map(|i| format!("z{i}")));
        header.push("k".into());
        header.push("label".into());
        w.write_record(&header).map_err(|e| Error::Format(e.to_string()))?;
        for r in &self.rows {
            let mut rec = vec![r.sample_id.clone()];
            rec.extend(r.embedding.iter().map(|v| format!("{v:e}")));
            rec.push(r.k.to_string());
            rec.push(r.label.map(|l| l.to_string()).unwrap_or_default());
            w.write_record(&rec).map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Embedding rows read back from [`ClusterReport::write_embeddings_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRow {
    pub sample_id: String,
    pub embedding: Vec<f64>,
    pub k: usize,
    pub label: Option<u32>,
}

pub fn read_embeddings_csv(path: &Path) -> Result<Vec<EmbeddingRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    let bad = |m: String| Error::Format(format!("{}: {m}", path.display()));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let n = rec.len();
        if n < 3 {
            return Err(bad("embedding rows need id, k and label columns".into()));
        }
        let embedding = (1..n - 2)
            .map(|i| rec[i].parse::<f64>().map_err(|e| bad(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        out.push(EmbeddingRow {
            sample_id: rec[0].to_string(),
            embedding,
            k: rec[n - 2].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            label: if rec[n - 1].is_empty() {
                None
            } else {
                Some(rec[n - 1].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?)
            },
        });
    }
    Ok(out)
}

/// Clusters every sample of an archive.
pub fn cluster_dataset(model: &Model, features: &FeatureArchive, opts: &InferenceOptions) -> Result<ClusterReport> {
    let frames = features.frames;
    let plan = match (model.cfg.variant, opts.window) {
        (Variant::M2Ac, Some(w)) => Some(plan_windows(frames, w, opts.hop.unwrap_or_else(|| default_hop(w)))?),
        (Variant::M2Ac, None) => None,
        (_, Some(_)) => return Err(Error::Config("windowed inference applies to categorical models only".into())),
        (_, None) => None,
    };
    let mut rng = opts.noise_seed.map(ChaCha8Rng::seed_from_u64);
    let idx: Vec<usize> = (0..features.len()).collect();
    let mut rows = Vec::with_capacity(features.len());
    for chunk in idx.chunks(opts.batch_size.max(1)) {
        let (x, _) = batch_tensors(model, features, chunk, true)?;
        let decisions = if model.cfg.variant == Variant::M2Ac {
            let (avg, windows) = match &plan {
                Some(p) => averaged_logits(model, &x, p, opts.state_rule)?,
                None => {
                    let (l, _) = model.encode_categorical(&x, None, Mode::Eval)?;
                    (l.clone(), vec![l])
                }
            };
            let avg: Vec<Vec<f64>> = avg.to_dtype(DType::F64)?.to_vec2()?;
            let windows: Vec<Vec<Vec<f64>>> = windows
                .iter()
                .map(|w| w.to_dtype(DType::F64)?.to_vec2())
                .collect::<candle_core::Result<_>>()?;
            avg.iter()
                .enumerate()
                .map(|(i, a)| {
                    let g = match rng.as_mut() {
                        Some(r) => Some(gumbel_noise(&(0..a.len()).map(|_| r.random::<f64>()).collect::<Vec<_>>())?),
                        None => None,
                    };
                    let mut d = decide_m2(a, opts.tau, g.as_deref())?;
                    d.window_logits = windows.iter().map(|w| w[i].clone()).collect();
                    Ok(d)
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            decide_gmm(model, &x)?
        };
        for (&i, d) in chunk.iter().zip(decisions) {
            let s = &features.samples[i];
            rows.push(ReportRow {
                sample_id: s.id.clone(),
                k: d.k,
                y: d.y,
                label: s.label,
                embedding: d.embedding,
            });
        }
    }
    Ok(ClusterReport {
        method: model.cfg.variant.name().to_string(),
        n_clusters: model.cfg.n_clusters,
        plan,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::softmax;
    use crate::networks::{Ablation, ArchConfig};
    use candle_core::Device;

    #[test]
    fn window_plans() {
        let p = plan_windows(5, 3, 1).unwrap();
        assert_eq!((p.starts.clone(), p.n_windows()), (vec![0, 1, 2], 3));
        assert_eq!(plan_windows(7, 7, 3).unwrap().starts, vec![0]);
        let p = plan_windows(10, 4, 2).unwrap();
        assert_eq!(p.starts, vec![0, 2, 4, 6]);
        assert_eq!(p.starts.last().unwrap() + 4, 10);
        assert_eq!(plan_windows(10, 4, 3).unwrap().starts, vec![0, 3, 6]);
        assert_eq!(plan_windows(11, 4, 3).unwrap().starts, vec![0, 3, 6, 7]);
        assert!(plan_windows(4, 5, 1).is_err());
        assert!(plan_windows(5, 3, 4).is_err());
    }

    #[test]
    fn plans_cover_every_frame() {
        for t in 1..30 {
            for w in 1..=t {
                for hop in 1..=w {
                    let p = plan_windows(t, w, hop).unwrap();
                    // enumeration oracle
                    for f in 0..t {
                        assert!(p.starts.iter().any(|&s| s <= f && f < s + w), "{t} {w} {hop} {f}");
                    }
                    assert_eq!(*p.starts.last().unwrap(), t - w);
                }
            }
        }
    }

    #[test]
    fn decide_m2_rules() {
        let mut l = vec![0.0; 10];
        l[6] = 8.0;
        assert_eq!(decide_m2(&l, 0.01, None).unwrap().k, 6);
        assert_eq!(decide_m2(&[0.3; 4], 0.5, None).unwrap().k, 0);
        let d = decide_m2(&[0.1, 2.0, -1.0], 0.7, None).unwrap();
        assert_eq!(d.y, vec![0.0, 1.0, 0.0]);
        for tau in [0.01, 0.3, 1.0, 5.0, 100.0] {
            assert_eq!(decide_m2(&[0.1, 2.0, -1.0, 1.99], tau, None).unwrap().k, 1);
        }
    }

    #[test]
    fn noisy_decisions_follow_softmax() {
        let logits = [0.5, -0.2, 1.1, 0.0];
        let p = softmax(&logits);
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let g = gumbel_noise(&(0..4).map(|_| r.random::<f64>()).collect::<Vec<_>>()).unwrap();
            counts[decide_m2(&logits, 0.5, Some(&g)).unwrap().k] += 1;
        }
        for k in 0..4 {
            assert!((counts[k] as f64 / n as f64 - p[k]).abs() < 0.02);
        }
    }

    fn model(ablation: Ablation) -> Model {
        let cfg = ArchConfig {
            frames: 12,
            bins: 8,
            conv_channels: vec![2, 3],
            kernel: 8,
            stride: 2,
            padding: 3,
            recurrent_hidden: 6,
            latent_dim: 3,
            n_clusters: 4,
            variant: Variant::M2Ac,
            ablation,
        };
        Model::build(&cfg, 9, DType::F64, &Device::Cpu).unwrap()
    }

    fn input() -> Tensor {
        let v: Vec<f64> = (0..2 * 12 * 8).map(|i| ((i * 37) % 17) as f64 / 17.0).collect();
        Tensor::from_vec(v, (2, 12, 8), &Device::Cpu).unwrap()
    }

    #[test]
    fn full_window_equals_whole_sequence() {
        let m = model(Ablation::None);
        let x = input();
        let (whole, _) = m.encode_categorical(&x, None, Mode::Eval).unwrap();
        let plan = plan_windows(12, 12, 12).unwrap();
        let (avg, _) = averaged_logits(&m, &x, &plan, StateRule::Carry).unwrap();
        let a: Vec<Vec<f64>> = whole.to_vec2().unwrap();
        let b: Vec<Vec<f64>> = avg.to_vec2().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reset_rule_average_ignores_window_order() {
        let m = model(Ablation::None);
        let x = input();
        let plan = plan_windows(12, 6, 3).unwrap();
        let (avg, _) = averaged_logits(&m, &x, &plan, StateRule::Reset).unwrap();
        let mut rev = plan.clone();
        rev.starts.reverse();
        let (avg2, _) = averaged_logits(&m, &x, &rev, StateRule::Reset).unwrap();
        let d = avg.sub(&avg2).unwrap().abs().unwrap().max_all().unwrap().to_scalar::<f64>().unwrap();
        assert!(d < 1e-12);
    }

    #[test]
    fn report_round_trips() {
        let m = model(Ablation::Conv1d);
        let mut a = FeatureArchive::new(12, 8, crate::audio::AxisKind::Mel);
        for i in 0..3 {
            a.push(crate::archive::FeatureSample {
                id: format!("s{i}"),
                label: Some(i as u32 % 2),
                values: (0..96).map(|j| ((i * 31 + j * 7) % 11) as f32 / 11.0).collect(),
                mask: vec![1; 12],
            })
            .unwrap();
        }
        let opts = InferenceOptions {
            window: Some(6),
            ..Default::default()
        };
        let rep = cluster_dataset(&m, &a, &opts).unwrap();
        assert_eq!(rep.plan.as_ref().unwrap().starts, vec![0, 3, 6]);
        let dir = tempfile::tempdir().unwrap();
        rep.save_json(&dir.path().join("r.json")).unwrap();
        rep.write_embeddings_csv(&dir.path().join("e.csv")).unwrap();
        let back = ClusterReport::load_json(&dir.path().join("r.json")).unwrap();
        assert_eq!(back.assignments(), rep.assignments());
        let emb = read_embeddings_csv(&dir.path().join("e.csv")).unwrap();
        assert_eq!(emb.len(), 3);
        for (e, r) in emb.iter().zip(&rep.rows) {
            assert_eq!(e.embedding, r.embedding);
            assert_eq!(e.k, r.k);
        }
    }
}
