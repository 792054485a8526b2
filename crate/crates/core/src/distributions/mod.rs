//! Probability machinery over plain `f64` vectors: diagonal Gaussians, the
//! Gaussian mixture prior, Gumbel sampling and the KL terms used by the
//! training objectives. Everything is evaluated in log space.
//!
//! [`ops`] holds the same quantities as differentiable tensor expressions for
//! batched training.

pub mod ops;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Lower clamp applied to uniform draws before the Gumbel transform.
pub const GUMBEL_U_MIN: f64 = 1e-20;
/// Upper clamp applied to uniform draws before the Gumbel transform.
pub const GUMBEL_U_MAX: f64 = 1.0 - 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagGaussian {
    pub mean: Vec<f64>,
    pub log_var: Vec<f64>,
}

impl DiagGaussian {
    pub fn new(mean: Vec<f64>, log_var: Vec<f64>) -> Result<Self> {
        if mean.len() != log_var.len() {
            return Err(Error::Dimension(format!(
                "mean has {} entries, log_var {}",
                mean.len(),
                log_var.len()
            )));
        }
        if mean.iter().chain(&log_var).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite Gaussian parameter".into()));
        }
        Ok(Self { mean, log_var })
    }

    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            log_var: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn variance(&self) -> Vec<f64> {
        self.log_var.iter().map(|lv| lv.exp()).collect()
    }

    pub fn log_density(&self, z: &[f64]) -> f64 {
        -0.5 * z
            .iter()
            .zip(&self.mean)
            .zip(&self.log_var)
            .map(|((z, m), lv)| LN_2PI + lv + (z - m).powi(2) / lv.exp())
            .sum::<f64>()
    }
}

/// Mixture of `K` diagonal Gaussians with softmax-parameterized weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmPrior {
    pub weight_logits: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub log_vars: Vec<Vec<f64>>,
}

impl GmmPrior {
    pub fn new(weight_logits: Vec<f64>, means: Vec<Vec<f64>>, log_vars: Vec<Vec<f64>>) -> Result<Self> {
        let k = weight_logits.len();
        if k == 0 || means.len() != k || log_vars.len() != k {
            return Err(Error::Dimension("mixture needs K >= 1 matching rows".into()));
        }
        let d = means[0].len();
        if means.iter().chain(&log_vars).any(|row| row.len() != d) {
            return Err(Error::Dimension("ragged mixture parameters".into()));
        }
        let all = weight_logits
            .iter()
            .chain(means.iter().flatten())
            .chain(log_vars.iter().flatten());
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite mixture parameter".into()));
        }
        Ok(Self {
            weight_logits,
            means,
            log_vars,
        })
    }

    pub fn from_components(weights: &[f64], comps: &[DiagGaussian]) -> Result<Self> {
        Self::new(
            weights.iter().map(|w| w.ln()).collect(),
            comps.iter().map(|c| c.mean.clone()).collect(),
            comps.iter().map(|c| c.log_var.clone()).collect(),
        )
    }

    pub fn n_components(&self) -> usize {
        self.weight_logits.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn log_weights(&self) -> Vec<f64> {
        log_softmax(&self.weight_logits)
    }

    pub fn weights(&self) -> Vec<f64> {
        softmax(&self.weight_logits)
    }

    pub fn component(&self, k: usize) -> DiagGaussian {
        DiagGaussian {
            mean: self.means[k].clone(),
            log_var: self.log_vars[k].clone(),
        }
    }

    pub fn log_density(&self, z: &[f64]) -> f64 {
        let joint: Vec<f64> = self
            .log_weights()
            .iter()
            .enumerate()
            .map(|(k, lw)| lw + self.component(k).log_density(z))
            .collect();
        log_sum_exp(&joint)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalLogits {
    pub logits: Vec<f64>,
    pub temperature: f64,
}

impl CategoricalLogits {
    pub fn new(logits: Vec<f64>, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::Config(format!("temperature must be positive, got {temperature}")));
        }
        if logits.is_empty() || logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("logits must be non-empty and finite".into()));
        }
        Ok(Self { logits, temperature })
    }

    pub fn probabilities(&self) -> Vec<f64> {
        softmax(&self.logits)
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn log_softmax(xs: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(xs);
    xs.iter().map(|x| x - lse).collect()
}

pub fn softmax(xs: &[f64]) -> Vec<f64> {
    log_softmax(xs).into_iter().map(f64::exp).collect()
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// `z = mean + exp(log_var / 2) * noise`.
pub fn reparam_sample(g: &DiagGaussian, noise: &[f64]) -> Result<Vec<f64>> {
    if noise.len() != g.dim() {
        return Err(Error::Dimension(format!(
            "noise has {} entries, Gaussian {}",
            noise.len(),
            g.dim()
        )));
    }
    Ok(g.mean
        .iter()
        .zip(&g.log_var)
        .zip(noise)
        .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
        .collect())
}

/// Gumbel(0, 1) draws `-ln(-ln u)` from uniforms, clamped into
/// `[GUMBEL_U_MIN, GUMBEL_U_MAX]`.
pub fn gumbel_noise(u: &[f64]) -> Result<Vec<f64>> {
    u.iter()
        .map(|&u| {
            if !(0.0..=1.0).contains(&u) {
                return Err(Error::Numeric(format!("uniform draw {u} outside [0, 1]")));
            }
            let u = u.clamp(GUMBEL_U_MIN, GUMBEL_U_MAX);
            Ok(-(-u.ln()).ln())
        })
        .collect()
}

/// Gumbel-Softmax sample. With `hard` the one-hot argmax is returned; the
/// straight-through gradient lives in [`ops::gumbel_softmax`].
pub fn gumbel_softmax(c: &CategoricalLogits, g: &[f64], hard: bool) -> Result<Vec<f64>> {
    if g.len() != c.logits.len() {
        return Err(Error::Dimension(format!(
            "noise has {} entries, logits {}",
            g.len(),
            c.logits.len()
        )));
    }
    let scaled: Vec<f64> = c
        .logits
        .iter()
        .zip(g)
        .map(|(l, g)| (l + g) / c.temperature)
        .collect();
    let y = softmax(&scaled);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("Gumbel-Softmax produced NaN".into()));
    }
    if hard {
        let k = argmax(&y);
        return Ok((0..y.len()).map(|i| f64::from(u8::from(i == k))).collect());
    }
    Ok(y)
}

/// Jacobian `d y_i / d logit_j = y_i (delta_ij - y_j) / tau` of the soft path.
pub fn gumbel_softmax_jacobian(c: &CategoricalLogits, g: &[f64]) -> Result<Vec<Vec<f64>>> {
    let y = gumbel_softmax(c, g, false)?;
    let k = y.len();
    Ok((0..k)
        .map(|i| {
            (0..k)
                .map(|j| y[i] * (f64::from(u8::from(i == j)) - y[j]) / c.temperature)
                .collect()
        })
        .collect())
}

/// Gumbel-Max class choice `argmax(logit + g)`.
pub fn gumbel_max_assign(logits: &[f64], g: &[f64]) -> Result<usize> {
    if logits.len() != g.len() || logits.is_empty() {
        return Err(Error::Dimension("logits and noise must match and be non-empty".into()));
    }
    let noisy: Vec<f64> = logits.iter().zip(g).map(|(l, g)| l + g).collect();
    Ok(argmax(&noisy))
}

/// `KL(q || N(0, I)) = 1/2 sum(exp(lv) + mu^2 - 1 - lv)`.
pub fn kl_diag_gaussian_std_normal(q: &DiagGaussian) -> f64 {
    0.5 * q
        .mean
        .iter()
        .zip(&q.log_var)
        .map(|(m, lv)| lv.exp() + m * m - 1.0 - lv)
        .sum::<f64>()
}

/// Gradient of [`kl_diag_gaussian_std_normal`] w.r.t. `(mean, log_var)`.
pub fn kl_diag_gaussian_std_normal_grad(q: &DiagGaussian) -> (Vec<f64>, Vec<f64>) {
    (
        q.mean.clone(),
        q.log_var.iter().map(|lv| 0.5 * (lv.exp() - 1.0)).collect(),
    )
}

/// Closed-form KL between diagonal Gaussians.
pub fn kl_diag_gaussians(q: &DiagGaussian, p: &DiagGaussian) -> f64 {
    0.5 * component_divergence(&q.mean, &q.log_var, &p.mean, &p.log_var)
}

// sum_j [(mq - mp)^2 / vp + ln(vp / vq) - 1 + vq / vp]
fn component_divergence(mq: &[f64], lvq: &[f64], mp: &[f64], lvp: &[f64]) -> f64 {
    (0..mq.len())
        .map(|j| {
            let vp = lvp[j].exp();
            (mq[j] - mp[j]).powi(2) / vp + (lvp[j] - lvq[j]) - 1.0 + (lvq[j] - lvp[j]).exp()
        })
        .sum()
}

/// Approximate `KL(q || GMM)`:
/// `-ln sum_k pi_k exp(-KL(q || N_k))`, evaluated with log-sum-exp.
pub fn kl_gaussian_vs_gmm(q: &DiagGaussian, p: &GmmPrior) -> Result<f64> {
    if q.dim() != p.dim() {
        return Err(Error::Dimension(format!(
            "q has dimension {}, prior {}",
            q.dim(),
            p.dim()
        )));
    }
    let terms: Vec<f64> = p
        .log_weights()
        .iter()
        .enumerate()
        .map(|(k, lw)| lw - 0.5 * component_divergence(&q.mean, &q.log_var, &p.means[k], &p.log_vars[k]))
        .collect();
    Ok(-log_sum_exp(&terms))
}

/// Gradient of [`kl_gaussian_vs_gmm`] w.r.t. `(q.mean, q.log_var)`.
pub fn kl_gaussian_vs_gmm_grad(q: &DiagGaussian, p: &GmmPrior) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = q.dim();
    if d != p.dim() {
        return Err(Error::Dimension("q and prior dimension differ".into()));
    }
    let terms: Vec<f64> = p
        .log_weights()
        .iter()
        .enumerate()
        .map(|(k, lw)| lw - 0.5 * component_divergence(&q.mean, &q.log_var, &p.means[k], &p.log_vars[k]))
        .collect();
    let w = softmax(&terms);
    let mut gm = vec![0.0; d];
    let mut glv = vec![0.0; d];
    for (k, wk) in w.iter().enumerate() {
        for j in 0..d {
            let vp = p.log_vars[k][j].exp();
            gm[j] += wk * (q.mean[j] - p.means[k][j]) / vp;
            glv[j] += wk * 0.5 * (q.log_var[j].exp() / vp - 1.0);
        }
    }
    Ok((gm, glv))
}

/// `KL(softmax(logits) || Uniform(K)) = ln K - H`.
pub fn kl_categorical_uniform(c: &CategoricalLogits) -> f64 {
    let p = c.probabilities();
    ((p.len() as f64).ln() - entropy(&p)).max(0.0)
}

/// Gradient of [`kl_categorical_uniform`] w.r.t. the logits.
pub fn kl_categorical_uniform_grad(c: &CategoricalLogits) -> Vec<f64> {
    let lp = log_softmax(&c.logits);
    let p: Vec<f64> = lp.iter().map(|v| v.exp()).collect();
    let neg_h: f64 = p.iter().zip(&lp).map(|(p, lp)| p * lp).sum();
    p.iter().zip(&lp).map(|(p, lp)| p * (lp - neg_h)).collect()
}

/// Posterior component memberships of `z` under the mixture.
pub fn gmm_responsibilities(z: &[f64], p: &GmmPrior) -> Result<Vec<f64>> {
    if z.len() != p.dim() {
        return Err(Error::Dimension(format!(
            "z has dimension {}, prior {}",
            z.len(),
            p.dim()
        )));
    }
    let joint: Vec<f64> = p
        .log_weights()
        .iter()
        .enumerate()
        .map(|(k, lw)| lw + p.component(k).log_density(z))
        .collect();
    Ok(softmax(&joint))
}

/// Most probable component of `z`.
pub fn assign_gmm(z: &[f64], p: &GmmPrior) -> Result<usize> {
    Ok(argmax(&gmm_responsibilities(z, p)?))
}

/// Closed-form mixture-posterior KL
/// `sum_c gamma_c KL(q || N_c) + KL(gamma || pi)` for fixed memberships.
pub fn kl_vade(q: &DiagGaussian, p: &GmmPrior, gamma: &[f64]) -> Result<f64> {
    if gamma.len() != p.n_components() || q.dim() != p.dim() {
        return Err(Error::Dimension("memberships or dimension do not match prior".into()));
    }
    let lw = p.log_weights();
    let mut kl = 0.0;
    for (k, &g) in gamma.iter().enumerate() {
        if g > 0.0 {
            kl += g * (kl_diag_gaussians(q, &p.component(k)) + g.ln() - lw[k]);
        }
    }
    Ok(kl)
}
