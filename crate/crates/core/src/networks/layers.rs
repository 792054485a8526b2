use std::collections::BTreeMap;
use std::sync::Mutex;

use candle_core::{Tensor, D};

use super::store::Builder;
use super::Mode;
use crate::error::{Error, Result};

pub(crate) fn sigmoid(x: &Tensor) -> Result<Tensor> {
    // tanh form keeps the backward pass finite for large |x|
    Ok(x.affine(0.5, 0.0)?.tanh()?.affine(0.5, 0.5)?)
}

pub(crate) fn check_finite(t: &Tensor, layer: &str) -> Result<()> {
    let s = t.sum_all()?.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?;
    if s.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite activations after {layer}")))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Linear {
    w: Tensor,
    b: Tensor,
}

impl Linear {
    pub fn new(b: &mut Builder, name: &str, d_in: usize, d_out: usize) -> Result<Self> {
        Ok(Self {
            w: b.kaiming(&format!("{name}.weight"), &[d_out, d_in], d_in)?,
            b: b.zeros(&format!("{name}.bias"), &[d_out])?,
        })
    }

    /// Applies to the last axis of a 2-D or 3-D input.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let wt = self.w.t()?;
        let y = match x.dims() {
            [_, _] => x.matmul(&wt)?,
            [b, t, d] => x.reshape((b * t, *d))?.matmul(&wt)?.reshape((*b, *t, ()))?,
            other => return Err(Error::Dimension(format!("linear input of shape {other:?}"))),
        };
        Ok(y.broadcast_add(&self.b)?)
    }
}

/// Batch normalization with running statistics kept beside the parameters.
#[derive(Debug)]
pub(crate) struct BatchNorm {
    gamma: Tensor,
    beta: Tensor,
    name: String,
    channels: usize,
    running: Mutex<(Tensor, Tensor)>,
}

pub(crate) const BN_EPS: f64 = 1e-5;
pub(crate) const BN_MOMENTUM: f64 = 0.1;

impl BatchNorm {
    pub fn new(b: &mut Builder, name: &str, channels: usize) -> Result<Self> {
        Ok(Self {
            gamma: b.ones(&format!("{name}.weight"), &[channels])?,
            beta: b.zeros(&format!("{name}.bias"), &[channels])?,
            name: name.to_string(),
            channels,
            running: Mutex::new((
                Tensor::zeros(channels, b.dtype, &b.device)?,
                Tensor::ones(channels, b.dtype, &b.device)?,
            )),
        })
    }

    /// Normalizes axis 1 of an `(N, C, ...)` tensor.
    pub fn forward(&self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        let rank = x.rank();
        let mut bshape = vec![1usize; rank];
        bshape[1] = self.channels;
        let (mean, var) = match mode {
            Mode::Train => {
                let mut mean = x.mean_keepdim(0)?;
                for d in 2..rank {
                    mean = mean.mean_keepdim(d)?;
                }
                let centered = x.broadcast_sub(&mean)?;
                let mut var = centered.sqr()?.mean_keepdim(0)?;
                for d in 2..rank {
                    var = var.mean_keepdim(d)?;
                }
                let n = x.elem_count() / self.channels;
                let unbias = if n > 1 { n as f64 / (n - 1) as f64 } else { 1.0 };
                let mut run = self.running.lock().expect("batch-norm statistics lock");
                let m = BN_MOMENTUM;
                let rm = run.0.affine(1.0 - m, 0.0)?.add(&mean.detach().flatten_all()?.affine(m, 0.0)?)?;
                let rv = run.1.affine(1.0 - m, 0.0)?.add(&var.detach().flatten_all()?.affine(m * unbias, 0.0)?)?;
                *run = (rm, rv);
                (mean, var)
            }
            Mode::Eval => {
                let run = self.running.lock().expect("batch-norm statistics lock");
                (run.0.reshape(bshape.as_slice())?, run.1.reshape(bshape.as_slice())?)
            }
        };
        let xn = x.broadcast_sub(&mean)?.broadcast_div(&var.affine(1.0, BN_EPS)?.sqrt()?)?;
        Ok(xn
            .broadcast_mul(&self.gamma.reshape(bshape.as_slice())?)?
            .broadcast_add(&self.beta.reshape(bshape.as_slice())?)?)
    }

    pub fn export(&self, out: &mut BTreeMap<String, Tensor>) {
        let run = self.running.lock().expect("batch-norm statistics lock");
        out.insert(format!("{}.running_mean", self.name), run.0.clone());
        out.insert(format!("{}.running_var", self.name), run.1.clone());
    }

    pub fn import(&self, buffers: &BTreeMap<String, Tensor>) -> Result<()> {
        let get = |suffix: &str| {
            let key = format!("{}.{suffix}", self.name);
            buffers
                .get(&key)
                .cloned()
                .ok_or_else(|| Error::Format(format!("checkpoint lacks buffer {key}")))
        };
        *self.running.lock().expect("batch-norm statistics lock") = (get("running_mean")?, get("running_var")?);
        Ok(())
    }
}

/// Gated recurrent unit with the gate layout `[reset, update, new]`.
#[derive(Debug, Clone)]
pub(crate) struct Gru {
    w_ih: Tensor,
    w_hh: Tensor,
    b_ih: Tensor,
    b_hh: Tensor,
    pub hidden: usize,
}

impl Gru {
    pub fn new(b: &mut Builder, name: &str, d_in: usize, hidden: usize) -> Result<Self> {
        Ok(Self {
            w_ih: b.kaiming(&format!("{name}.w_ih"), &[3 * hidden, d_in], d_in)?,
            w_hh: b.kaiming(&format!("{name}.w_hh"), &[3 * hidden, hidden], hidden)?,
            b_ih: b.zeros(&format!("{name}.b_ih"), &[3 * hidden])?,
            b_hh: b.zeros(&format!("{name}.b_hh"), &[3 * hidden])?,
            hidden,
        })
    }

    /// Runs over `(B, T, D)` from `h0` (zeros when absent). Returns all
    /// hidden states `(B, T, H)` and the last one.
    pub fn forward(&self, xs: &Tensor, h0: Option<&Tensor>) -> Result<(Tensor, Tensor)> {
        let (b, t, d) = xs.dims3()?;
        let hd = self.hidden;
        let gi = xs
            .reshape((b * t, d))?
            .matmul(&self.w_ih.t()?)?
            .broadcast_add(&self.b_ih)?
            .reshape((b, t, 3 * hd))?;
        let mut h = match h0 {
            Some(h) => {
                if h.dims() != [b, hd] {
                    return Err(Error::Dimension(format!(
                        "carried state {:?} does not match ({b}, {hd})",
                        h.dims()
                    )));
                }
                h.clone()
            }
            None => Tensor::zeros((b, hd), xs.dtype(), xs.device())?,
        };
        let w_hh_t = self.w_hh.t()?;
        let mut outs = Vec::with_capacity(t);
        for step in 0..t {
            let gi_t = gi.narrow(1, step, 1)?.squeeze(1)?;
            let gh = h.matmul(&w_hh_t)?.broadcast_add(&self.b_hh)?;
            let r = sigmoid(&gi_t.narrow(1, 0, hd)?.add(&gh.narrow(1, 0, hd)?)?)?;
            let z = sigmoid(&gi_t.narrow(1, hd, hd)?.add(&gh.narrow(1, hd, hd)?)?)?;
            let n = gi_t
                .narrow(1, 2 * hd, hd)?
                .add(&r.mul(&gh.narrow(1, 2 * hd, hd)?)?)?
                .tanh()?;
            h = n.add(&z.mul(&h.sub(&n)?)?)?;
            outs.push(h.clone());
        }
        Ok((Tensor::stack(&outs, 1)?, h))
    }
}

/// Output length of a strided convolution.
pub(crate) fn conv_out(len: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    (len + 2 * padding).checked_sub(kernel).map(|v| v / stride + 1)
}

/// Strided convolution over the trailing one or two axes. Input is padded
/// explicitly and trimmed to the extent the kernel actually visits, so the
/// backward pass sees an exact fit on every axis.
#[derive(Debug, Clone)]
pub(crate) struct Conv {
    w: Tensor,
    b: Tensor,
    kernel: usize,
    stride: usize,
    padding: usize,
    spatial: usize,
}

impl Conv {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        bld: &mut Builder,
        name: &str,
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        spatial: usize,
    ) -> Result<Self> {
        let fan_in = c_in * kernel.pow(spatial as u32);
        let shape: Vec<usize> = [c_out, c_in].into_iter().chain(std::iter::repeat_n(kernel, spatial)).collect();
        Ok(Self {
            w: bld.kaiming(&format!("{name}.weight"), &shape, fan_in)?,
            b: bld.zeros(&format!("{name}.bias"), &[c_out])?,
            kernel,
            stride,
            padding,
            spatial,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let rank = x.rank();
        let mut x = x.clone();
        for axis in rank - self.spatial..rank {
            let len = x.dim(axis)?;
            let out = conv_out(len, self.kernel, self.stride, self.padding).ok_or_else(|| {
                Error::Dimension(format!("axis of length {len} is shorter than the kernel"))
            })?;
            let used = (out - 1) * self.stride + self.kernel;
            x = x.pad_with_zeros(axis, self.padding, self.padding)?.narrow(axis, 0, used)?;
        }
        let (y, bshape) = if self.spatial == 2 {
            (x.conv2d(&self.w, 0, self.stride, 1, 1)?, vec![1, self.b.dim(0)?, 1, 1])
        } else {
            (x.conv1d(&self.w, 0, self.stride, 1, 1)?, vec![1, self.b.dim(0)?, 1])
        };
        Ok(y.broadcast_add(&self.b.reshape(bshape)?)?)
    }
}

/// Transposed strided convolution producing `stride * len + output_padding`
/// samples per axis for the `(8, 2, 3)` geometry. The 2-D case uses the
/// native operator; the 1-D case is zero insertion followed by an ordinary
/// convolution with the flipped kernel.
#[derive(Debug, Clone)]
pub(crate) struct ConvTranspose {
    w: Tensor,
    b: Tensor,
    kernel: usize,
    stride: usize,
    padding: usize,
    spatial: usize,
}

impl ConvTranspose {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        bld: &mut Builder,
        name: &str,
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        spatial: usize,
    ) -> Result<Self> {
        let fan_in = c_out * kernel.pow(spatial as u32);
        let shape: Vec<usize> = [c_in, c_out].into_iter().chain(std::iter::repeat_n(kernel, spatial)).collect();
        Ok(Self {
            w: bld.kaiming(&format!("{name}.weight"), &shape, fan_in)?,
            b: bld.zeros(&format!("{name}.bias"), &[c_out])?,
            kernel,
            stride,
            padding,
            spatial,
        })
    }

    pub fn out_len(&self, len: usize, output_padding: usize) -> usize {
        ((len - 1) * self.stride + self.kernel + output_padding).saturating_sub(2 * self.padding)
    }

    pub fn forward(&self, x: &Tensor, output_padding: usize) -> Result<Tensor> {
        if self.spatial == 2 {
            let y = x.conv_transpose2d(&self.w, self.padding, output_padding, self.stride, 1)?;
            return Ok(y.broadcast_add(&self.b.reshape((1, (), 1, 1))?)?);
        }
        let (n, c, l) = x.dims3()?;
        let s = self.stride;
        let up = if s > 1 {
            let zeros = Tensor::zeros((n, c, l, s - 1), x.dtype(), x.device())?;
            Tensor::cat(&[&x.unsqueeze(3)?, &zeros], 3)?
                .reshape((n, c, l * s))?
                .narrow(2, 0, (l - 1) * s + 1)?
        } else {
            x.clone()
        };
        let edge = self.kernel - 1 - self.padding;
        let up = up.pad_with_zeros(2, edge, edge + output_padding)?;
        let w = self.w.transpose(0, 1)?.contiguous()?.flip(&[2])?;
        let y = up.conv1d(&w, 0, 1, 1, 1)?;
        Ok(y.broadcast_add(&self.b.reshape((1, (), 1))?)?)
    }
}

/// Mean over the time axis of `(B, T, D)`.
pub(crate) fn time_mean(x: &Tensor) -> Result<Tensor> {
    Ok(x.mean(D::Minus2)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::{DType, Device};

    fn builder() -> (super::super::store::ParamStore, u64) {
        (super::super::store::ParamStore::default(), 3)
    }

    #[test]
    fn conv_out_lengths() {
        assert_eq!(conv_out(32, 8, 2, 3), Some(16));
        assert_eq!(conv_out(99, 8, 2, 3), Some(49));
        assert_eq!(conv_out(2, 8, 2, 3), Some(1));
        assert_eq!(conv_out(1, 8, 2, 3), None);
    }

    #[test]
    fn trimmed_conv_matches_native_padding() {
        let (mut store, seed) = builder();
        let mut b = Builder::new(&mut store, seed, DType::F64, Device::Cpu);
        let conv = Conv::new(&mut b, "c", 2, 3, 8, 2, 3, 2).unwrap();
        let x = Tensor::randn(0f64, 1.0, (2, 2, 11, 14), &Device::Cpu).unwrap();
        let ours = conv.forward(&x).unwrap();
        let native = x
            .conv2d(&conv.w, 3, 2, 1, 1)
            .unwrap()
            .broadcast_add(&conv.b.reshape((1, 3, 1, 1)).unwrap())
            .unwrap();
        assert_eq!(ours.dims(), native.dims());
        let diff = ours.sub(&native).unwrap().abs().unwrap().max_all().unwrap().to_scalar::<f64>().unwrap();
        assert!(diff < 1e-12);
    }

    #[test]
    fn transposed_conv1d_matches_direct_definition() {
        let (mut store, seed) = builder();
        let mut b = Builder::new(&mut store, seed, DType::F64, Device::Cpu);
        let ct = ConvTranspose::new(&mut b, "t", 2, 3, 8, 2, 3, 1).unwrap();
        let x = Tensor::randn(0f64, 1.0, (1, 2, 5), &Device::Cpu).unwrap();
        let y: Vec<Vec<f64>> = ct.forward(&x, 1).unwrap().squeeze(0).unwrap().to_vec2().unwrap();
        assert_eq!(y[0].len(), 11);
        // out[o, p] = sum_{i, j, k : j * s + k - pad = p} x[i, j] w[i, o, k]
        let xv: Vec<Vec<f64>> = x.squeeze(0).unwrap().to_vec2().unwrap();
        let wv: Vec<Vec<Vec<f64>>> = ct.w.to_vec3().unwrap();
        for o in 0..3 {
            for p in 0..11 {
                let mut acc = 0.0;
                for i in 0..2 {
                    for j in 0..5 {
                        for k in 0..8 {
                            if (j * 2 + k) as isize - 3 == p as isize {
                                acc += xv[i][j] * wv[i][o][k];
                            }
                        }
                    }
                }
                assert!((acc - y[o][p]).abs() < 1e-12, "{o} {p}");
            }
        }
    }

    #[test]
    fn transposed_conv2d_lengths() {
        let (mut store, seed) = builder();
        let mut b = Builder::new(&mut store, seed, DType::F32, Device::Cpu);
        let ct = ConvTranspose::new(&mut b, "t", 2, 1, 8, 2, 3, 2).unwrap();
        let x = Tensor::zeros((1, 2, 24, 16), DType::F32, &Device::Cpu).unwrap();
        assert_eq!(ct.forward(&x, 1).unwrap().dims(), &[1, 1, 49, 33]);
        assert_eq!(ct.out_len(24, 1), 49);
    }

    #[test]
    fn gru_matches_scalar_recurrence() {
        let (mut store, seed) = builder();
        let mut b = Builder::new(&mut store, seed, DType::F64, Device::Cpu);
        let gru = Gru::new(&mut b, "g", 2, 3).unwrap();
        let xs = Tensor::randn(0f64, 1.0, (1, 4, 2), &Device::Cpu).unwrap();
        let (_, last) = gru.forward(&xs, None).unwrap();
        let wi: Vec<Vec<f64>> = gru.w_ih.to_vec2().unwrap();
        let wh: Vec<Vec<f64>> = gru.w_hh.to_vec2().unwrap();
        let xv: Vec<Vec<f64>> = xs.squeeze(0).unwrap().to_vec2().unwrap();
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut h = vec![0.0; 3];
        for x in &xv {
            let dot = |w: &Vec<Vec<f64>>, row: usize, v: &[f64]| -> f64 { w[row].iter().zip(v).map(|(a, b)| a * b).sum() };
            let mut next = vec![0.0; 3];
            for u in 0..3 {
                let r = sig(dot(&wi, u, x) + dot(&wh, u, &h));
                let z = sig(dot(&wi, 3 + u, x) + dot(&wh, 3 + u, &h));
                let n = (dot(&wi, 6 + u, x) + r * dot(&wh, 6 + u, &h)).tanh();
                next[u] = (1.0 - z) * n + z * h[u];
            }
            h = next;
        }
        let got: Vec<f64> = last.squeeze(0).unwrap().to_vec1().unwrap();
        for (a, b) in got.iter().zip(&h) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn batchnorm_train_and_eval() {
        let (mut store, seed) = builder();
        let mut b = Builder::new(&mut store, seed, DType::F64, Device::Cpu);
        let bn = BatchNorm::new(&mut b, "bn", 2).unwrap();
        let x = Tensor::randn(3f64, 2.0, (4, 2, 3, 3), &Device::Cpu).unwrap();
        let y = bn.forward(&x, Mode::Train).unwrap();
        let m: Vec<f64> = y.mean_keepdim(0).unwrap().mean_keepdim(2).unwrap().mean_keepdim(3).unwrap().flatten_all().unwrap().to_vec1().unwrap();
        assert!(m.iter().all(|v| v.abs() < 1e-10));
        let (rm, _) = bn.running.lock().unwrap().clone();
        let xm: Vec<f64> = x.mean_keepdim(0).unwrap().mean_keepdim(2).unwrap().mean_keepdim(3).unwrap().flatten_all().unwrap().to_vec1().unwrap();
        let rm: Vec<f64> = rm.to_vec1().unwrap();
        for (a, b) in rm.iter().zip(&xm) {
            assert!((a - 0.1 * b).abs() < 1e-12);
        }
        let e = bn.forward(&x, Mode::Eval).unwrap();
        assert_eq!(e.dims(), x.dims());
    }
}
