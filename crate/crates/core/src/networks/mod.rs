//! Encoders `h` (categorical) and `f` (continuous), decoder `g`, and the
//! learnable mixture prior.
//!
//! Each encoder is a stack of strided convolutions (batch norm and ReLU after
//! each, tanh after the last) followed by a GRU over the remaining time axis;
//! the last hidden state feeds a linear head. The decoder broadcasts its
//! latent input over the downsampled time axis, runs a GRU, projects each
//! frame back to the convolutional feature map and mirrors the encoder with
//! transposed convolutions, ending in a sigmoid. Transposed outputs are
//! cropped to the exact encoder-side sizes.

mod checkpoint;
mod layers;
mod store;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use store::{ParamGroup, ParamStore};

use std::collections::BTreeMap;

use candle_core::{DType, Device, Tensor, D};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distributions::gumbel_noise;
use crate::distributions::ops::{self, GmmTensors};
use crate::error::{Error, Result};
use layers::{check_finite, conv_out, sigmoid, BatchNorm, Conv, ConvTranspose, Gru, Linear};
use store::Builder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    M2Ac,
    VibGmmAc,
    VadeAc,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::M2Ac => "m2-ac",
            Variant::VibGmmAc => "vib-gmm-ac",
            Variant::VadeAc => "vade-ac",
        }
    }

    pub fn uses_mixture_prior(self) -> bool {
        !matches!(self, Variant::M2Ac)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    #[default]
    None,
    /// Convolutions over frequency only, time folded into the batch.
    Conv1d,
    /// Time-averaged features replace the encoder GRU; the decoder becomes a
    /// single dense projection tied to `frames`.
    NoRecurrence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// batch statistics, running averages updated
    Train,
    /// running statistics
    Eval,
}

fn default_channels() -> Vec<usize> {
    vec![16, 32, 64]
}
fn default_kernel() -> usize {
    8
}
fn default_stride() -> usize {
    2
}
fn default_padding() -> usize {
    3
}
fn default_hidden() -> usize {
    288
}
fn default_ten() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchConfig {
    /// Input frames `T` the decoder reconstructs by default.
    pub frames: usize,
    /// Frequency bins `F`.
    pub bins: usize,
    #[serde(default = "default_channels")]
    pub conv_channels: Vec<usize>,
    #[serde(default = "default_kernel")]
    pub kernel: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_padding")]
    pub padding: usize,
    #[serde(default = "default_hidden")]
    pub recurrent_hidden: usize,
    #[serde(default = "default_ten")]
    pub latent_dim: usize,
    #[serde(default = "default_ten")]
    pub n_clusters: usize,
    pub variant: Variant,
    #[serde(default)]
    pub ablation: Ablation,
}

/// Per-layer feature-map sizes, index 0 being the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Geometry {
    pub time: Vec<usize>,
    pub freq: Vec<usize>,
}

impl Geometry {
    pub fn last(&self) -> (usize, usize) {
        (*self.time.last().unwrap(), *self.freq.last().unwrap())
    }
}

impl ArchConfig {
    pub fn new(frames: usize, bins: usize, variant: Variant) -> Self {
        Self {
            frames,
            bins,
            conv_channels: default_channels(),
            kernel: 8,
            stride: 2,
            padding: 3,
            recurrent_hidden: default_hidden(),
            latent_dim: 10,
            n_clusters: 10,
            variant,
            ablation: Ablation::None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv_channels.is_empty() || self.conv_channels.contains(&0) {
            return Err(Error::Config("conv_channels must be non-empty and positive".into()));
        }
        if self.kernel == 0 || self.stride == 0 || self.recurrent_hidden == 0 {
            return Err(Error::Config("kernel, stride and hidden size must be positive".into()));
        }
        if self.latent_dim == 0 || self.n_clusters == 0 {
            return Err(Error::Config("latent_dim and n_clusters must be positive".into()));
        }
        if self.padding >= self.kernel {
            return Err(Error::Config("padding must be smaller than the kernel".into()));
        }
        self.geometry(self.frames).map(|_| ())
    }

    pub fn last_channels(&self) -> usize {
        *self.conv_channels.last().unwrap()
    }

    /// Feature-map sizes for an input of `frames` frames.
    pub fn geometry(&self, frames: usize) -> Result<Geometry> {
        let mut time = vec![frames];
        let mut freq = vec![self.bins];
        for _ in &self.conv_channels {
            let (t, f) = (*time.last().unwrap(), *freq.last().unwrap());
            let f2 = conv_out(f, self.kernel, self.stride, self.padding);
            let t2 = match self.ablation {
                Ablation::Conv1d => Some(t),
                _ => conv_out(t, self.kernel, self.stride, self.padding),
            };
            match (t2, f2) {
                (Some(t2), Some(f2)) if t2 > 0 && f2 > 0 => {
                    time.push(t2);
                    freq.push(f2);
                }
                _ => {
                    return Err(Error::Dimension(format!(
                        "a {frames}x{} input is too small for {} convolution layers",
                        self.bins,
                        self.conv_channels.len()
                    )))
                }
            }
        }
        Ok(Geometry { time, freq })
    }

    /// Smallest frame count the encoder accepts.
    pub fn min_frames(&self) -> usize {
        (1..=self.frames.max(1) * 4 + 64)
            .find(|&t| self.geometry(t).is_ok())
            .unwrap_or(usize::MAX)
    }

    fn spatial(&self) -> usize {
        if self.ablation == Ablation::Conv1d {
            1
        } else {
            2
        }
    }

    fn frame_features(&self) -> Result<usize> {
        let (_, f) = self.geometry(self.frames)?.last();
        Ok(self.last_channels() * f)
    }
}

enum Recurrence {
    Gru(Gru),
    Pool(Linear),
}

struct Trunk {
    name: String,
    convs: Vec<Conv>,
    bns: Vec<BatchNorm>,
    rec: Recurrence,
    spatial: usize,
}

impl Trunk {
    fn new(b: &mut Builder, prefix: &str, cfg: &ArchConfig) -> Result<Self> {
        let spatial = cfg.spatial();
        let mut convs = Vec::new();
        let mut bns = Vec::new();
        let mut c_in = 1;
        for (i, &c) in cfg.conv_channels.iter().enumerate() {
            convs.push(Conv::new(b, &format!("{prefix}.conv{i}"), c_in, c, cfg.kernel, cfg.stride, cfg.padding, spatial)?);
            bns.push(BatchNorm::new(b, &format!("{prefix}.bn{i}"), c)?);
            c_in = c;
        }
        let d = cfg.frame_features()?;
        let rec = match cfg.ablation {
            Ablation::NoRecurrence => Recurrence::Pool(Linear::new(b, &format!("{prefix}.pool"), d, cfg.recurrent_hidden)?),
            _ => Recurrence::Gru(Gru::new(b, &format!("{prefix}.gru"), d, cfg.recurrent_hidden)?),
        };
        Ok(Self {
            name: prefix.to_string(),
            convs,
            bns,
            rec,
            spatial,
        })
    }

    /// `(B, T, F)` to per-frame features `(B, T', C * F')`.
    fn features(&self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        let (b, t, f) = x.dims3()?;
        let mut h = if self.spatial == 2 {
            x.unsqueeze(1)?
        } else {
            x.reshape((b * t, 1, f))?
        };
        let last = self.convs.len() - 1;
        for (i, (conv, bn)) in self.convs.iter().zip(&self.bns).enumerate() {
            h = bn.forward(&conv.forward(&h)?, mode)?;
            h = if i == last { h.tanh()? } else { h.relu()? };
        }
        check_finite(&h, &format!("{}.conv", self.name))?;
        Ok(if self.spatial == 2 {
            let (_, c, t2, f2) = h.dims4()?;
            h.permute((0, 2, 1, 3))?.reshape((b, t2, c * f2))?
        } else {
            let (_, c, f2) = h.dims3()?;
            h.reshape((b, t, c * f2))?
        })
    }

    fn forward(&self, x: &Tensor, h0: Option<&Tensor>, mode: Mode) -> Result<(Tensor, Option<Tensor>)> {
        let feats = self.features(x, mode)?;
        let (hidden, state) = match &self.rec {
            Recurrence::Gru(g) => {
                let (_, last) = g.forward(&feats, h0)?;
                (last.clone(), Some(last))
            }
            Recurrence::Pool(l) => (l.forward(&layers::time_mean(&feats)?)?.tanh()?, None),
        };
        check_finite(&hidden, &format!("{}.recurrent", self.name))?;
        Ok((hidden, state))
    }

    fn batchnorms(&self) -> impl Iterator<Item = &BatchNorm> {
        self.bns.iter()
    }
}

enum DecoderInput {
    Gru(Gru, Linear),
    Dense(Linear),
}

struct Decoder {
    input: DecoderInput,
    deconvs: Vec<ConvTranspose>,
    bns: Vec<BatchNorm>,
    cfg: ArchConfig,
}

impl Decoder {
    fn new(b: &mut Builder, cfg: &ArchConfig, d_in: usize) -> Result<Self> {
        let geo = cfg.geometry(cfg.frames)?;
        let (t_l, f_l) = geo.last();
        let c_l = cfg.last_channels();
        let input = match cfg.ablation {
            Ablation::NoRecurrence => DecoderInput::Dense(Linear::new(b, "g.proj", d_in, c_l * t_l * f_l)?),
            _ => DecoderInput::Gru(
                Gru::new(b, "g.gru", d_in, cfg.recurrent_hidden)?,
                Linear::new(b, "g.proj", cfg.recurrent_hidden, c_l * f_l)?,
            ),
        };
        let n = cfg.conv_channels.len();
        let mut deconvs = Vec::new();
        let mut bns = Vec::new();
        for i in (0..n).rev() {
            let c_in = cfg.conv_channels[i];
            let c_out = if i == 0 { 1 } else { cfg.conv_channels[i - 1] };
            let layer = n - 1 - i;
            deconvs.push(ConvTranspose::new(
                b,
                &format!("g.deconv{layer}"),
                c_in,
                c_out,
                cfg.kernel,
                cfg.stride,
                cfg.padding,
                cfg.spatial(),
            )?);
            if i > 0 {
                bns.push(BatchNorm::new(b, &format!("g.bn{layer}"), c_out)?);
            }
        }
        Ok(Self {
            input,
            deconvs,
            bns,
            cfg: cfg.clone(),
        })
    }

    fn forward(&self, latent: &Tensor, frames: usize, h0: Option<&Tensor>, mode: Mode) -> Result<(Tensor, Option<Tensor>)> {
        let cfg = &self.cfg;
        let geo = cfg.geometry(frames)?;
        let (t_l, f_l) = geo.last();
        let c_l = cfg.last_channels();
        let (b, d_in) = latent.dims2()?;
        let (proj, state) = match &self.input {
            DecoderInput::Gru(gru, lin) => {
                let seq = latent.unsqueeze(1)?.broadcast_as((b, t_l, d_in))?.contiguous()?;
                let (outs, last) = gru.forward(&seq, h0)?;
                (lin.forward(&outs)?, Some(last))
            }
            DecoderInput::Dense(lin) => {
                if frames != cfg.frames {
                    return Err(Error::Config(format!(
                        "dense decoder is tied to {} frames, asked for {frames}",
                        cfg.frames
                    )));
                }
                (lin.forward(latent)?.reshape((b, t_l, c_l * f_l))?, None)
            }
        };
        check_finite(&proj, "g.recurrent")?;
        let n = self.deconvs.len();
        let spatial = cfg.spatial();
        let mut h = if spatial == 2 {
            proj.reshape((b, t_l, c_l, f_l))?.permute((0, 2, 1, 3))?.contiguous()?
        } else {
            proj.reshape((b * t_l, c_l, f_l))?
        };
        for (layer, deconv) in self.deconvs.iter().enumerate() {
            let target = n - 1 - layer;
            let (tt, tf) = (geo.time[target], geo.freq[target]);
            let rank = h.rank();
            let need = |len: usize, want: usize| want.saturating_sub(deconv.out_len(len, 0));
            let mut op = need(h.dim(rank - 1)?, tf);
            if spatial == 2 {
                op = op.max(need(h.dim(rank - 2)?, tt));
            }
            if op >= cfg.stride {
                return Err(Error::Dimension("transposed convolution cannot reach target size".into()));
            }
            h = deconv.forward(&h, op)?;
            h = h.narrow(rank - 1, 0, tf)?;
            if spatial == 2 {
                h = h.narrow(rank - 2, 0, tt)?;
            }
            h = if layer + 1 < n {
                self.bns[layer].forward(&h, mode)?.relu()?
            } else {
                sigmoid(&h)?
            };
        }
        check_finite(&h, "g.deconv")?;
        let out = if spatial == 2 {
            h.squeeze(1)?
        } else {
            h.reshape((b, frames, cfg.bins))?
        };
        Ok((out, state))
    }
}

/// Recurrent states carried between consecutive windows of a sample.
#[derive(Debug, Clone, Default)]
pub struct Carry {
    pub h: Option<Tensor>,
    pub f: Option<Tensor>,
    pub g: Option<Tensor>,
}

impl Carry {
    pub fn detach(&self) -> Carry {
        Carry {
            h: self.h.as_ref().map(Tensor::detach),
            f: self.f.as_ref().map(Tensor::detach),
            g: self.g.as_ref().map(Tensor::detach),
        }
    }
}

/// Externally drawn noise: `M` standard-normal draws `(B, d_z)` and, for the
/// categorical path, Gumbel noise `(B, K)`.
#[derive(Debug, Clone)]
pub struct Noise {
    pub eps: Vec<Tensor>,
    pub gumbel: Option<Tensor>,
}

impl Noise {
    pub fn sample<R: Rng>(rng: &mut R, cfg: &ArchConfig, batch: usize, draws: usize, dtype: DType, device: &Device) -> Result<Self> {
        let d = cfg.latent_dim;
        let eps = (0..draws.max(1))
            .map(|_| {
                let v: Vec<f64> = (0..batch * d).map(|_| rng.sample(StandardNormal)).collect();
                Ok(Tensor::from_vec(v, (batch, d), device)?.to_dtype(dtype)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let gumbel = if cfg.variant == Variant::M2Ac {
            let u: Vec<f64> = (0..batch * cfg.n_clusters).map(|_| rng.random::<f64>()).collect();
            let g = gumbel_noise(&u)?;
            Some(Tensor::from_vec(g, (batch, cfg.n_clusters), device)?.to_dtype(dtype)?)
        } else {
            None
        };
        Ok(Self { eps, gumbel })
    }

    /// All-zero noise: `z = mu`, and Gumbel-Softmax reduces to softmax.
    pub fn zeros(cfg: &ArchConfig, batch: usize, dtype: DType, device: &Device) -> Result<Self> {
        Ok(Self {
            eps: vec![Tensor::zeros((batch, cfg.latent_dim), dtype, device)?],
            gumbel: (cfg.variant == Variant::M2Ac)
                .then(|| Tensor::zeros((batch, cfg.n_clusters), dtype, device))
                .transpose()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelSettings {
    pub tau: f64,
    pub hard: bool,
}

/// Everything one forward pass produces.
#[derive(Debug, Clone)]
pub struct Forward {
    pub logits: Option<Tensor>,
    pub y: Option<Tensor>,
    pub mu: Tensor,
    pub log_var: Tensor,
    pub z: Vec<Tensor>,
    pub x_hat: Vec<Tensor>,
    pub carry: Carry,
}

pub struct Model {
    pub cfg: ArchConfig,
    store: ParamStore,
    h: Option<(Trunk, Linear)>,
    f: (Trunk, Linear),
    g: Decoder,
    prior: Option<GmmTensors>,
    dtype: DType,
    device: Device,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("cfg", &self.cfg)
            .field("parameters", &self.store.count())
            .finish()
    }
}

/// Builds and initializes a model: Kaiming-uniform weights, zero biases,
/// Xavier-uniform mixture means, `U(0, 1)` mixture logits and unit mixture
/// variances.
pub fn build_model(cfg: &ArchConfig, seed: u64) -> Result<Model> {
    Model::build(cfg, seed, DType::F32, &Device::Cpu)
}

impl Model {
    pub fn build(cfg: &ArchConfig, seed: u64, dtype: DType, device: &Device) -> Result<Self> {
        cfg.validate()?;
        let mut store = ParamStore::default();
        let mut b = Builder::new(&mut store, seed, dtype, device.clone());
        let (k, dz, hd) = (cfg.n_clusters, cfg.latent_dim, cfg.recurrent_hidden);
        let h = if cfg.variant == Variant::M2Ac {
            Some((Trunk::new(&mut b, "h", cfg)?, Linear::new(&mut b, "h.head", hd, k)?))
        } else {
            None
        };
        let f_in = if cfg.variant == Variant::M2Ac { hd + k } else { hd };
        let f = (Trunk::new(&mut b, "f", cfg)?, Linear::new(&mut b, "f.head", f_in, 2 * dz)?);
        let g_in = if cfg.variant == Variant::M2Ac { k + dz } else { dz };
        let g = Decoder::new(&mut b, cfg, g_in)?;
        let prior = if cfg.variant.uses_mixture_prior() {
            Some(GmmTensors {
                weight_logits: b.uniform("prior.weight_logits", &[k], 0.0, 1.0)?,
                means: b.xavier("prior.means", &[k, dz], dz, k)?,
                log_vars: b.zeros("prior.log_vars", &[k, dz])?,
            })
        } else {
            None
        };
        Ok(Self {
            cfg: cfg.clone(),
            store,
            h,
            f,
            g,
            prior,
            dtype,
            device: device.clone(),
        })
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn params(&self) -> &ParamStore {
        &self.store
    }

    pub fn param_count(&self) -> usize {
        self.store.count()
    }

    pub fn prior(&self) -> Option<&GmmTensors> {
        self.prior.as_ref()
    }

    /// Converts a `(B, T, F)` host batch to a model tensor.
    pub fn tensor(&self, data: &[f32], shape: (usize, usize, usize)) -> Result<Tensor> {
        Ok(Tensor::from_slice(data, shape, &self.device)?.to_dtype(self.dtype)?)
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        let (_, _, f) = x.dims3()?;
        if f != self.cfg.bins {
            return Err(Error::Dimension(format!("input has {f} bins, model expects {}", self.cfg.bins)));
        }
        Ok(())
    }

    /// Categorical encoder: logits `(B, K)` and the next recurrent state.
    pub fn encode_categorical(&self, x: &Tensor, carry: Option<&Tensor>, mode: Mode) -> Result<(Tensor, Option<Tensor>)> {
        self.check_input(x)?;
        let (trunk, head) = self
            .h
            .as_ref()
            .ok_or_else(|| Error::Config("model has no categorical encoder".into()))?;
        let (hidden, state) = trunk.forward(x, carry, mode)?;
        let logits = head.forward(&hidden)?;
        check_finite(&logits, "h.head")?;
        Ok((logits, state))
    }

    /// Continuous encoder: `(mu, log_var)` each `(B, d_z)`; `y` is
    /// concatenated to the hidden state when the variant is categorical.
    pub fn encode_continuous(&self, x: &Tensor, y: Option<&Tensor>, carry: Option<&Tensor>, mode: Mode) -> Result<(Tensor, Tensor, Option<Tensor>)> {
        self.check_input(x)?;
        let (trunk, head) = &self.f;
        let (hidden, state) = trunk.forward(x, carry, mode)?;
        let input = match (self.cfg.variant, y) {
            (Variant::M2Ac, Some(y)) => Tensor::cat(&[&hidden, y], D::Minus1)?,
            (Variant::M2Ac, None) => return Err(Error::Config("categorical variant needs y".into())),
            (_, Some(_)) => return Err(Error::Config("mixture variants take no y".into())),
            (_, None) => hidden,
        };
        let out = head.forward(&input)?;
        check_finite(&out, "f.head")?;
        let dz = self.cfg.latent_dim;
        Ok((out.narrow(1, 0, dz)?, out.narrow(1, dz, dz)?, state))
    }

    pub fn encoder_gmm(&self, x: &Tensor, mode: Mode) -> Result<(Tensor, Tensor)> {
        let (mu, lv, _) = self.encode_continuous(x, None, None, mode)?;
        Ok((mu, lv))
    }

    /// Decoder: reconstruction `(B, frames, F)` in `(0, 1)`.
    pub fn decode(&self, y: Option<&Tensor>, z: &Tensor, frames: usize, carry: Option<&Tensor>, mode: Mode) -> Result<(Tensor, Option<Tensor>)> {
        let latent = match (self.cfg.variant, y) {
            (Variant::M2Ac, Some(y)) => Tensor::cat(&[y, z], D::Minus1)?,
            (Variant::M2Ac, None) => return Err(Error::Config("categorical variant needs y".into())),
            (_, Some(_)) => return Err(Error::Config("mixture decoders consume z only".into())),
            (_, None) => z.clone(),
        };
        self.g.forward(&latent, frames, carry, mode)
    }

    pub fn forward(&self, x: &Tensor, noise: &Noise, gs: GumbelSettings, carry: &Carry, mode: Mode) -> Result<Forward> {
        let (b, frames, _) = x.dims3()?;
        let (logits, y, h_state) = if self.cfg.variant == Variant::M2Ac {
            let (logits, st) = self.encode_categorical(x, carry.h.as_ref(), mode)?;
            let g = match &noise.gumbel {
                Some(g) => g.clone(),
                None => Tensor::zeros((b, self.cfg.n_clusters), self.dtype, &self.device)?,
            };
            let y = ops::gumbel_softmax(&logits, &g, gs.tau, gs.hard)?;
            (Some(logits), Some(y), st)
        } else {
            (None, None, None)
        };
        let (mu, log_var, f_state) = self.encode_continuous(x, y.as_ref(), carry.f.as_ref(), mode)?;
        let mut z = Vec::with_capacity(noise.eps.len());
        let mut x_hat = Vec::with_capacity(noise.eps.len());
        let mut g_state = None;
        for (m, eps) in noise.eps.iter().enumerate() {
            let zm = ops::reparam(&mu, &log_var, eps)?;
            let (xm, st) = self.decode(y.as_ref(), &zm, frames, carry.g.as_ref(), mode)?;
            if m == 0 {
                g_state = st;
            }
            z.push(zm);
            x_hat.push(xm);
        }
        Ok(Forward {
            logits,
            y,
            mu,
            log_var,
            z,
            x_hat,
            carry: Carry {
                h: h_state,
                f: f_state,
                g: g_state,
            },
        })
    }

    fn batchnorms(&self) -> Vec<&BatchNorm> {
        let mut v: Vec<&BatchNorm> = Vec::new();
        if let Some((t, _)) = &self.h {
            v.extend(t.batchnorms());
        }
        v.extend(self.f.0.batchnorms());
        v.extend(self.g.bns.iter());
        v
    }

    /// Running batch-norm statistics by name.
    pub fn buffers(&self) -> BTreeMap<String, Tensor> {
        let mut out = BTreeMap::new();
        for bn in self.batchnorms() {
            bn.export(&mut out);
        }
        out
    }

    pub fn load_buffers(&self, buffers: &BTreeMap<String, Tensor>) -> Result<()> {
        for bn in self.batchnorms() {
            bn.import(buffers)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
