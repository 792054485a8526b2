//! Batched, differentiable counterparts of the scalar routines. Rows are
//! samples; the last axis is the latent or class axis.

use candle_core::{DType, Device, Tensor, D};

use super::{argmax, GmmPrior, LN_2PI};
use crate::error::{Error, Result};

/// Mixture prior parameters as tensors: logits `(K)`, means and log-variances
/// `(K, d)`.
#[derive(Debug, Clone)]
pub struct GmmTensors {
    pub weight_logits: Tensor,
    pub means: Tensor,
    pub log_vars: Tensor,
}

impl GmmTensors {
    pub fn from_prior(p: &GmmPrior, dtype: DType, device: &Device) -> Result<Self> {
        let (k, d) = (p.n_components(), p.dim());
        let flat = |rows: &[Vec<f64>]| rows.iter().flatten().copied().collect::<Vec<f64>>();
        Ok(Self {
            weight_logits: Tensor::new(p.weight_logits.as_slice(), device)?.to_dtype(dtype)?,
            means: Tensor::from_vec(flat(&p.means), (k, d), device)?.to_dtype(dtype)?,
            log_vars: Tensor::from_vec(flat(&p.log_vars), (k, d), device)?.to_dtype(dtype)?,
        })
    }

    pub fn to_prior(&self) -> Result<GmmPrior> {
        let f64s = |t: &Tensor| t.to_dtype(DType::F64);
        GmmPrior::new(
            f64s(&self.weight_logits)?.to_vec1()?,
            f64s(&self.means)?.to_vec2()?,
            f64s(&self.log_vars)?.to_vec2()?,
        )
    }

    pub fn log_weights(&self) -> Result<Tensor> {
        log_softmax(&self.weight_logits)
    }
}

/// `log sum exp` over the last axis, keeping it as size 1.
pub fn log_sum_exp(x: &Tensor) -> Result<Tensor> {
    let m = x.max_keepdim(D::Minus1)?.detach();
    Ok(x.broadcast_sub(&m)?.exp()?.sum_keepdim(D::Minus1)?.log()?.add(&m)?)
}

pub fn log_softmax(x: &Tensor) -> Result<Tensor> {
    Ok(x.broadcast_sub(&log_sum_exp(x)?)?)
}

pub fn softmax(x: &Tensor) -> Result<Tensor> {
    Ok(log_softmax(x)?.exp()?)
}

/// Row-wise argmax with lowest-index tie breaking.
pub fn argmax_rows(x: &Tensor) -> Result<Vec<usize>> {
    let rows: Vec<Vec<f64>> = x.to_dtype(DType::F64)?.to_vec2()?;
    Ok(rows.iter().map(|r| argmax(r)).collect())
}

pub fn one_hot(idx: &[usize], k: usize, dtype: DType, device: &Device) -> Result<Tensor> {
    let mut v = vec![0f64; idx.len() * k];
    for (i, &j) in idx.iter().enumerate() {
        v[i * k + j] = 1.0;
    }
    Ok(Tensor::from_vec(v, (idx.len(), k), device)?.to_dtype(dtype)?)
}

/// `z = mu + exp(lv / 2) * eps`.
pub fn reparam(mu: &Tensor, log_var: &Tensor, eps: &Tensor) -> Result<Tensor> {
    Ok(mu.add(&log_var.affine(0.5, 0.0)?.exp()?.mul(eps)?)?)
}

/// Gumbel-Softmax over rows of `logits` `(B, K)` with noise `g`. The hard
/// variant is straight-through: forward one-hot, backward through the soft
/// sample.
pub fn gumbel_softmax(logits: &Tensor, g: &Tensor, tau: f64, hard: bool) -> Result<Tensor> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::Config(format!("temperature must be positive, got {tau}")));
    }
    let soft = softmax(&logits.add(g)?.affine(1.0 / tau, 0.0)?)?;
    if !hard {
        return Ok(soft);
    }
    let k = soft.dim(D::Minus1)?;
    let hot = one_hot(&argmax_rows(&soft)?, k, soft.dtype(), soft.device())?;
    Ok(hot.sub(&soft.detach())?.add(&soft)?)
}

/// Per-row `KL(N(mu, exp lv) || N(0, I))`, shape `(B)`.
pub fn kl_std_normal(mu: &Tensor, log_var: &Tensor) -> Result<Tensor> {
    let t = log_var.exp()?.add(&mu.sqr()?)?.sub(log_var)?.affine(1.0, -1.0)?;
    Ok(t.sum(D::Minus1)?.affine(0.5, 0.0)?)
}

/// Per-row `KL(softmax(logits) || Uniform(K))`, shape `(B)`.
pub fn kl_categorical_uniform(logits: &Tensor) -> Result<Tensor> {
    let k = logits.dim(D::Minus1)? as f64;
    let lp = log_softmax(logits)?;
    Ok(lp.exp()?.mul(&lp)?.sum(D::Minus1)?.affine(1.0, k.ln())?)
}

/// Twice the Gaussian-vs-component KL for every (row, component): `(B, K)`.
fn component_divergence(mu: &Tensor, log_var: &Tensor, p: &GmmTensors) -> Result<Tensor> {
    let mu = mu.unsqueeze(1)?;
    let lv = log_var.unsqueeze(1)?;
    let pm = p.means.unsqueeze(0)?;
    let plv = p.log_vars.unsqueeze(0)?;
    let inv_vp = plv.neg()?.exp()?;
    let quad = mu.broadcast_sub(&pm)?.sqr()?.broadcast_mul(&inv_vp)?;
    let log_ratio = plv.broadcast_sub(&lv)?;
    let var_ratio = lv.broadcast_sub(&plv)?.exp()?;
    let t = quad.add(&log_ratio)?.add(&var_ratio)?.affine(1.0, -1.0)?;
    Ok(t.sum(D::Minus1)?)
}

/// Per-row mixture KL approximation
/// `-log sum_k pi_k exp(-KL(q || N_k))`, shape `(B)`.
pub fn kl_gaussian_vs_gmm(mu: &Tensor, log_var: &Tensor, p: &GmmTensors) -> Result<Tensor> {
    let div = component_divergence(mu, log_var, p)?;
    let terms = div.affine(-0.5, 0.0)?.broadcast_add(&p.log_weights()?.unsqueeze(0)?)?;
    Ok(log_sum_exp(&terms)?.squeeze(D::Minus1)?.neg()?)
}

/// `log pi_k + log N(z; mu_k, Sigma_k)` for every row and component, `(B, K)`.
pub fn log_gmm_joint(z: &Tensor, p: &GmmTensors) -> Result<Tensor> {
    let d = z.dim(D::Minus1)? as f64;
    let z = z.unsqueeze(1)?;
    let pm = p.means.unsqueeze(0)?;
    let plv = p.log_vars.unsqueeze(0)?;
    let quad = z.broadcast_sub(&pm)?.sqr()?.broadcast_mul(&plv.neg()?.exp()?)?;
    let ll = quad.broadcast_add(&plv)?.sum(D::Minus1)?.affine(-0.5, -0.5 * d * LN_2PI)?;
    Ok(ll.broadcast_add(&p.log_weights()?.unsqueeze(0)?)?)
}

pub fn responsibilities(z: &Tensor, p: &GmmTensors) -> Result<Tensor> {
    softmax(&log_gmm_joint(z, p)?)
}

/// Mixture-posterior KL `sum_c gamma_c KL(q || N_c) + KL(gamma || pi)` with
/// memberships `gamma` computed from the sampled `z`, shape `(B)`.
pub fn kl_vade(mu: &Tensor, log_var: &Tensor, z: &Tensor, p: &GmmTensors) -> Result<Tensor> {
    let log_gamma = log_softmax(&log_gmm_joint(z, p)?)?;
    let gamma = log_gamma.exp()?;
    let div = component_divergence(mu, log_var, p)?.affine(0.5, 0.0)?;
    let cat = log_gamma.broadcast_sub(&p.log_weights()?.unsqueeze(0)?)?;
    Ok(gamma.mul(&div.add(&cat)?)?.sum(D::Minus1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions as s;
    use candle_core::Var;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn rows(r: &mut ChaCha8Rng, b: usize, d: usize) -> Vec<Vec<f64>> {
        (0..b)
            .map(|_| (0..d).map(|_| r.sample(StandardNormal)).collect())
            .collect()
    }

    fn t(rows: &[Vec<f64>]) -> Tensor {
        let (b, d) = (rows.len(), rows[0].len());
        Tensor::from_vec(rows.concat(), (b, d), &Device::Cpu).unwrap()
    }

    fn prior(r: &mut ChaCha8Rng, k: usize, d: usize) -> s::GmmPrior {
        let w: Vec<f64> = (0..k).map(|_| r.sample(StandardNormal)).collect();
        s::GmmPrior::new(w, rows(r, k, d), rows(r, k, d)).unwrap()
    }

    #[test]
    fn tensor_terms_agree_with_scalar_route() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let (b, d, k) = (6, 4, 3);
        let mu = rows(&mut r, b, d);
        let lv = rows(&mut r, b, d);
        let z = rows(&mut r, b, d);
        let logits = rows(&mut r, b, k);
        let g = rows(&mut r, b, k);
        let p = prior(&mut r, k, d);
        let pt = GmmTensors::from_prior(&p, DType::F64, &Device::Cpu).unwrap();

        let kl_n: Vec<f64> = kl_std_normal(&t(&mu), &t(&lv)).unwrap().to_vec1().unwrap();
        let kl_c: Vec<f64> = kl_categorical_uniform(&t(&logits)).unwrap().to_vec1().unwrap();
        let kl_g: Vec<f64> = kl_gaussian_vs_gmm(&t(&mu), &t(&lv), &pt).unwrap().to_vec1().unwrap();
        let gam: Vec<Vec<f64>> = responsibilities(&t(&z), &pt).unwrap().to_vec2().unwrap();
        let kl_v: Vec<f64> = kl_vade(&t(&mu), &t(&lv), &t(&z), &pt).unwrap().to_vec1().unwrap();
        let gs: Vec<Vec<f64>> = gumbel_softmax(&t(&logits), &t(&g), 0.7, false).unwrap().to_vec2().unwrap();
        let zs: Vec<Vec<f64>> = reparam(&t(&mu), &t(&lv), &t(&z)).unwrap().to_vec2().unwrap();

        for i in 0..b {
            let q = s::DiagGaussian::new(mu[i].clone(), lv[i].clone()).unwrap();
            let c = s::CategoricalLogits::new(logits[i].clone(), 0.7).unwrap();
            let close = |a: f64, b: f64| assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
            close(kl_n[i], s::kl_diag_gaussian_std_normal(&q));
            close(kl_c[i], s::kl_categorical_uniform(&c));
            close(kl_g[i], s::kl_gaussian_vs_gmm(&q, &p).unwrap());
            let rs = s::gmm_responsibilities(&z[i], &p).unwrap();
            for j in 0..k {
                close(gam[i][j], rs[j]);
            }
            close(kl_v[i], s::kl_vade(&q, &p, &rs).unwrap());
            let y = s::gumbel_softmax(&c, &g[i], false).unwrap();
            for j in 0..k {
                close(gs[i][j], y[j]);
            }
            let zz = s::reparam_sample(&q, &z[i]).unwrap();
            for j in 0..d {
                close(zs[i][j], zz[j]);
            }
        }
    }

    #[test]
    fn tensor_gradients_agree_with_closed_forms() {
        let mut r = ChaCha8Rng::seed_from_u64(2);
        let (b, d, k) = (4, 3, 3);
        let mu = rows(&mut r, b, d);
        let lv = rows(&mut r, b, d);
        let logits = rows(&mut r, b, k);
        let p = prior(&mut r, k, d);
        let pt = GmmTensors::from_prior(&p, DType::F64, &Device::Cpu).unwrap();
        let vm = Var::from_tensor(&t(&mu)).unwrap();
        let vl = Var::from_tensor(&t(&lv)).unwrap();
        let vc = Var::from_tensor(&t(&logits)).unwrap();
        let loss = kl_std_normal(vm.as_tensor(), vl.as_tensor())
            .unwrap()
            .add(&kl_gaussian_vs_gmm(vm.as_tensor(), vl.as_tensor(), &pt).unwrap())
            .unwrap()
            .add(&kl_categorical_uniform(vc.as_tensor()).unwrap())
            .unwrap()
            .sum_all()
            .unwrap();
        let grads = loss.backward().unwrap();
        let gm: Vec<Vec<f64>> = grads.get(vm.as_tensor()).unwrap().to_vec2().unwrap();
        let gl: Vec<Vec<f64>> = grads.get(vl.as_tensor()).unwrap().to_vec2().unwrap();
        let gc: Vec<Vec<f64>> = grads.get(vc.as_tensor()).unwrap().to_vec2().unwrap();
        for i in 0..b {
            let q = s::DiagGaussian::new(mu[i].clone(), lv[i].clone()).unwrap();
            let (am, al) = s::kl_diag_gaussian_std_normal_grad(&q);
            let (bm, bl) = s::kl_gaussian_vs_gmm_grad(&q, &p).unwrap();
            let cc = s::kl_categorical_uniform_grad(&s::CategoricalLogits::new(logits[i].clone(), 1.0).unwrap());
            for j in 0..d {
                assert!((gm[i][j] - am[j] - bm[j]).abs() < 1e-10);
                assert!((gl[i][j] - al[j] - bl[j]).abs() < 1e-10);
            }
            for j in 0..k {
                assert!((gc[i][j] - cc[j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn hard_gumbel_is_straight_through() {
        let logits = Var::from_tensor(&Tensor::new(&[[0.2f64, 1.5, -0.3]], &Device::Cpu).unwrap()).unwrap();
        let g = Tensor::zeros((1, 3), DType::F64, &Device::Cpu).unwrap();
        let w = Tensor::new(&[[1.0f64, 2.0, 3.0]], &Device::Cpu).unwrap();
        let hard = gumbel_softmax(logits.as_tensor(), &g, 0.5, true).unwrap();
        assert_eq!(hard.to_vec2::<f64>().unwrap(), vec![vec![0.0, 1.0, 0.0]]);
        let soft = gumbel_softmax(logits.as_tensor(), &g, 0.5, false).unwrap();
        let gh = hard.mul(&w).unwrap().sum_all().unwrap().backward().unwrap();
        let gs = soft.mul(&w).unwrap().sum_all().unwrap().backward().unwrap();
        let a: Vec<Vec<f64>> = gh.get(logits.as_tensor()).unwrap().to_vec2().unwrap();
        let b: Vec<Vec<f64>> = gs.get(logits.as_tensor()).unwrap().to_vec2().unwrap();
        for (x, y) in a[0].iter().zip(&b[0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_rows_ties_lowest() {
        let x = Tensor::new(&[[1.0f32, 1.0, 0.0], [0.0, 2.0, 2.0]], &Device::Cpu).unwrap();
        assert_eq!(argmax_rows(&x).unwrap(), vec![0, 1]);
    }
}
