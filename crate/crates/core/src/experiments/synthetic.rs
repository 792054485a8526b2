//! Desk-scale stand-in data: one band-limited, time-modulated template per
//! class plus Gaussian noise, with a share of samples cut short and
//! zero-padded so masks are exercised.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::archive::{FeatureArchive, FeatureSample};
use crate::audio::AxisKind;
use crate::error::{Error, Result};

fn d_k() -> usize {
    3
}
fn d_n() -> usize {
    100
}
fn d_frames() -> usize {
    32
}
fn d_bins() -> usize {
    32
}
fn d_noise() -> f64 {
    0.05
}
fn d_truncated() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    #[serde(default = "d_k")]
    pub k: usize,
    #[serde(default = "d_n")]
    pub n_per_class: usize,
    #[serde(default = "d_frames")]
    pub frames: usize,
    #[serde(default = "d_bins")]
    pub bins: usize,
    /// Standard deviation of the additive noise.
    #[serde(default = "d_noise")]
    pub noise: f64,
    /// Share of samples shortened and zero-padded.
    #[serde(default = "d_truncated")]
    pub truncated_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            k: d_k(),
            n_per_class: d_n(),
            frames: d_frames(),
            bins: d_bins(),
            noise: d_noise(),
            truncated_fraction: d_truncated(),
            seed: 0,
        }
    }
}

/// Noise-free template value of class `c` at frame `t`, bin `f`. Classes own
/// disjoint frequency bands and differ in their temporal modulation rate.
pub fn template(spec: &SyntheticSpec, c: usize, t: usize, f: usize) -> f64 {
    let width = spec.bins / spec.k;
    let in_band = f / width == c || (c == spec.k - 1 && f >= c * width);
    if !in_band {
        return 0.05;
    }
    let phase = std::f64::consts::PI * (c + 1) as f64 * t as f64 / spec.frames as f64;
    0.55 + 0.4 * phase.sin().powi(2)
}

/// Class-major archive of `k * n_per_class` samples with ids `syn{c}_{i}`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<FeatureArchive> {
    if spec.k < 2 || spec.bins < spec.k {
        return Err(Error::Config(format!("need 2 <= k <= bins (k = {}, bins = {})", spec.k, spec.bins)));
    }
    if spec.frames < 2 || spec.n_per_class == 0 {
        return Err(Error::Config("need at least two frames and one sample per class".into()));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) || !(0.0..=1.0).contains(&spec.truncated_fraction) {
        return Err(Error::Config("noise must be >= 0 and truncated_fraction in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let (t_n, f_n) = (spec.frames, spec.bins);
    let mut out = FeatureArchive::new(t_n, f_n, AxisKind::Mel);
    for c in 0..spec.k {
        for i in 0..spec.n_per_class {
            let active = if rng.random::<f64>() < spec.truncated_fraction {
                rng.random_range((t_n * 3).div_ceil(5)..t_n)
            } else {
                t_n
            };
            let mut values = Vec::with_capacity(t_n * f_n);
            for t in 0..t_n {
                for f in 0..f_n {
                    let e: f64 = normal.sample(&mut rng);
                    let v = if t < active {
                        (template(spec, c, t, f) + spec.noise * e).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                    values.push(v as f32);
                }
            }
            let mask = (0..t_n).map(|t| u8::from(t < active)).collect();
            out.push(FeatureSample {
                id: format!("syn{c}_{i}"),
                label: Some(c as u32),
                values,
                mask,
            })?;
        }
    }
    Ok(out)
}
