//! Training objectives, each returned as a minimized negative ELBO.
//!
//! Reconstruction terms only count active frames and are divided by the
//! number of active frames of the sample. In every [`LossBreakdown`] the
//! `recon` field is the masked negative log-likelihood, so
//! `total = recon + weight * (kl_continuous + kl_categorical)`.

use candle_core::{DType, Tensor, D};
use serde::{Deserialize, Serialize};

use crate::distributions::ops::{self, GmmTensors};
use crate::error::{Error, Result};
use crate::networks::{Forward, Variant};

/// Decoder outputs are clamped into `[XHAT_CLAMP, 1 - XHAT_CLAMP]` before
/// taking logarithms.
pub const XHAT_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Likelihood {
    /// `x ln x_hat + (1 - x) ln(1 - x_hat)` per bin
    #[default]
    Bernoulli,
    /// `-(x - x_hat)^2` per bin
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub recon: f64,
    pub kl_continuous: f64,
    pub kl_categorical: f64,
    pub per_sample: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ObjectiveOutput {
    /// Scalar batch cost to differentiate.
    pub loss: Tensor,
    pub breakdown: LossBreakdown,
}

/// Scalar masked log-likelihood of one `T x F` sample, with a flag telling
/// whether any output had to be clamped.
pub fn masked_recon_loglik(x: &[f64], x_hat: &[f64], mask: &[u8], lik: Likelihood) -> Result<(f64, bool)> {
    let t = mask.len();
    if t == 0 || x.len() != x_hat.len() || !x.len().is_multiple_of(t) {
        return Err(Error::Dimension(format!(
            "x has {} values, x_hat {}, mask {t} frames",
            x.len(),
            x_hat.len()
        )));
    }
    let f = x.len() / t;
    let mut clamped = false;
    let mut sum = 0.0;
    for (frame, &m) in mask.iter().enumerate() {
        if m == 0 {
            continue;
        }
        for i in frame * f..(frame + 1) * f {
            let xh = x_hat[i];
            let c = xh.clamp(XHAT_CLAMP, 1.0 - XHAT_CLAMP);
            clamped |= c != xh;
            sum += match lik {
                Likelihood::Bernoulli => x[i] * c.ln() + (1.0 - x[i]) * (1.0 - c).ln(),
                Likelihood::Gaussian => -(x[i] - xh).powi(2),
            };
        }
    }
    let active = mask.iter().filter(|&&m| m != 0).count().max(1);
    Ok((sum / active as f64, clamped))
}

/// Per-sample masked log-likelihood, `(B)`, for `x`, `x_hat` of shape
/// `(B, T, F)` and `mask` of shape `(B, T)`.
pub fn masked_recon_loglik_tensor(x: &Tensor, x_hat: &Tensor, mask: &Tensor, lik: Likelihood) -> Result<Tensor> {
    if x.dims() != x_hat.dims() || mask.dims() != &x.dims()[..2] {
        return Err(Error::Dimension(format!(
            "x {:?}, x_hat {:?}, mask {:?}",
            x.dims(),
            x_hat.dims(),
            mask.dims()
        )));
    }
    let ll = match lik {
        Likelihood::Bernoulli => {
            let c = x_hat.clamp(XHAT_CLAMP, 1.0 - XHAT_CLAMP)?;
            let one_minus = c.affine(-1.0, 1.0)?;
            x.mul(&c.log()?)?.add(&x.affine(-1.0, 1.0)?.mul(&one_minus.log()?)?)?
        }
        Likelihood::Gaussian => x.sub(x_hat)?.sqr()?.neg()?,
    };
    let per_frame = ll.sum(D::Minus1)?;
    let active = mask.sum(D::Minus1)?.maximum(1.0)?;
    Ok(per_frame.mul(mask)?.sum(D::Minus1)?.div(&active)?)
}

/// Arithmetic mean of per-sample costs.
pub fn batch_cost(per_sample: &[f64]) -> Result<f64> {
    if per_sample.is_empty() {
        return Err(Error::EmptyInput("batch of zero samples".into()));
    }
    Ok(per_sample.iter().sum::<f64>() / per_sample.len() as f64)
}

fn mean_recon(x: &Tensor, mask: &Tensor, x_hat: &[Tensor], lik: Likelihood) -> Result<Tensor> {
    if x_hat.is_empty() {
        return Err(Error::Config("at least one decoder draw is required".into()));
    }
    let mut acc = masked_recon_loglik_tensor(x, &x_hat[0], mask, lik)?;
    for xh in &x_hat[1..] {
        acc = acc.add(&masked_recon_loglik_tensor(x, xh, mask, lik)?)?;
    }
    Ok(acc.affine(1.0 / x_hat.len() as f64, 0.0)?)
}

fn scalar(t: &Tensor) -> Result<f64> {
    Ok(t.mean_all()?.to_dtype(DType::F64)?.to_scalar::<f64>()?)
}

fn finish(recon_ll: Tensor, kl_c: Tensor, kl_y: Option<Tensor>, weight: f64) -> Result<ObjectiveOutput> {
    let kl = match &kl_y {
        Some(k) => kl_c.add(k)?,
        None => kl_c.clone(),
    };
    let per = recon_ll.neg()?.add(&kl.affine(weight, 0.0)?)?;
    let per_sample: Vec<f64> = per.to_dtype(DType::F64)?.to_vec1()?;
    let breakdown = LossBreakdown {
        total: batch_cost(&per_sample)?,
        recon: -scalar(&recon_ll)?,
        kl_continuous: scalar(&kl_c)?,
        kl_categorical: kl_y.as_ref().map(scalar).transpose()?.unwrap_or(0.0),
        per_sample,
    };
    if !breakdown.total.is_finite() {
        return Err(Error::Numeric(format!("non-finite objective {}", breakdown.total)));
    }
    Ok(ObjectiveOutput {
        loss: per.mean_all()?,
        breakdown,
    })
}

/// Gaussian-mixture bottleneck: masked reconstruction averaged over the `M`
/// draws plus the mixture KL approximation.
pub fn elbo_vib_gmm(
    x: &Tensor,
    mask: &Tensor,
    mu: &Tensor,
    log_var: &Tensor,
    x_hat: &[Tensor],
    prior: &GmmTensors,
    lik: Likelihood,
) -> Result<ObjectiveOutput> {
    let recon = mean_recon(x, mask, x_hat, lik)?;
    let kl = ops::kl_gaussian_vs_gmm(mu, log_var, prior)?;
    finish(recon, kl, None, 1.0)
}

/// Categorical model: masked reconstruction from the drawn Gumbel-Softmax
/// sample plus `lambda` times both KL terms against `N(0, I)` and the uniform
/// categorical prior.
#[allow(clippy::too_many_arguments)]
pub fn elbo_m2(
    x: &Tensor,
    mask: &Tensor,
    mu: &Tensor,
    log_var: &Tensor,
    x_hat: &[Tensor],
    logits: &Tensor,
    lambda: f64,
    lik: Likelihood,
) -> Result<ObjectiveOutput> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!("lambda must be non-negative, got {lambda}")));
    }
    let recon = mean_recon(x, mask, x_hat, lik)?;
    let kl_z = ops::kl_std_normal(mu, log_var)?;
    let kl_y = ops::kl_categorical_uniform(logits)?;
    finish(recon, kl_z, Some(kl_y), lambda)
}

/// Mixture-posterior objective with memberships computed from each drawn `z`.
#[allow(clippy::too_many_arguments)]
pub fn elbo_vade(
    x: &Tensor,
    mask: &Tensor,
    mu: &Tensor,
    log_var: &Tensor,
    z: &[Tensor],
    x_hat: &[Tensor],
    prior: &GmmTensors,
    lik: Likelihood,
) -> Result<ObjectiveOutput> {
    if z.len() != x_hat.len() || z.is_empty() {
        return Err(Error::Config("one reconstruction per latent draw is required".into()));
    }
    let recon = mean_recon(x, mask, x_hat, lik)?;
    let mut kl = ops::kl_vade(mu, log_var, &z[0], prior)?;
    for zm in &z[1..] {
        kl = kl.add(&ops::kl_vade(mu, log_var, zm, prior)?)?;
    }
    let kl = kl.affine(1.0 / z.len() as f64, 0.0)?;
    finish(recon, kl, None, 1.0)
}

/// Dispatches on the model variant.
pub fn evaluate(
    variant: Variant,
    x: &Tensor,
    mask: &Tensor,
    fwd: &Forward,
    prior: Option<&GmmTensors>,
    lambda: f64,
    lik: Likelihood,
) -> Result<ObjectiveOutput> {
    let need_prior = || prior.ok_or_else(|| Error::Config("mixture objective without a prior".into()));
    match variant {
        Variant::M2Ac => {
            let logits = fwd
                .logits
                .as_ref()
                .ok_or_else(|| Error::Config("categorical objective without logits".into()))?;
            elbo_m2(x, mask, &fwd.mu, &fwd.log_var, &fwd.x_hat, logits, lambda, lik)
        }
        Variant::VibGmmAc => elbo_vib_gmm(x, mask, &fwd.mu, &fwd.log_var, &fwd.x_hat, need_prior()?, lik),
        Variant::VadeAc => elbo_vade(x, mask, &fwd.mu, &fwd.log_var, &fwd.z, &fwd.x_hat, need_prior()?, lik),
    }
}
