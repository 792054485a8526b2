//! Classical comparators on flattened features: K-means (Lloyd) and a
//! diagonal-covariance GMM fitted by EM, both seeded by k-means++.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::log_sum_exp;
use crate::error::{Error, Result};

pub const VARIANCE_FLOOR: f64 = 1e-6;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after every assignment step.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmEmModel {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    /// Total log-likelihood before every M-step.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMethod {
    Kmeans,
    GmmEm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaselineModel {
    Kmeans(KMeansModel),
    GmmEm(GmmEmModel),
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check(features: &[Vec<f64>], k: usize) -> Result<usize> {
    if features.is_empty() {
        return Err(Error::EmptyInput("no feature rows".into()));
    }
    if k == 0 {
        return Err(Error::Config("K must be at least 1".into()));
    }
    let d = features[0].len();
    if d == 0 || features.iter().any(|r| r.len() != d) {
        return Err(Error::Dimension("feature rows must share a positive width".into()));
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite feature".into()));
    }
    Ok(d)
}

/// k-means++ seeding: first centroid uniform, then proportional to the
/// squared distance to the nearest chosen centroid. When every remaining
/// point coincides with a centroid the farthest (index-first) point is used.
pub fn kmeans_pp(features: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = features.len();
    let mut centroids = vec![features[rng.random_range(0..n)].clone()];
    let mut best: Vec<f64> = features.iter().map(|x| sq_dist(x, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = best.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &b) in best.iter().enumerate() {
                if u < b {
                    pick = i;
                    break;
                }
                u -= b;
            }
            pick
        } else {
            0
        };
        let c = features[pick].clone();
        for (b, x) in best.iter_mut().zip(features) {
            *b = b.min(sq_dist(x, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Lloyd iterations from k-means++. An empty cluster is re-seeded at the
/// point farthest from its current centroid. Stops when the relative
/// inertia decrease falls below `tol` or after `max_iter` rounds.
pub fn kmeans_fit(features: &[Vec<f64>], k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<KMeansModel> {
    let d = check(features, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp(features, k, &mut rng);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut assign: Vec<(usize, f64)> = features.iter().map(|x| nearest(x, &centroids)).collect();
    trace.push(assign.iter().map(|a| a.1).sum::<f64>());
    for _ in 0..max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (x, &(j, _)) in features.iter().zip(&assign) {
            counts[j] += 1;
            for (s, v) in sums[j].iter_mut().zip(x) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                let far = (0..features.len())
                    .max_by(|&a, &b| assign[a].1.total_cmp(&assign[b].1).then(b.cmp(&a)))
                    .unwrap();
                centroids[j] = features[far].clone();
                assign[far] = (j, 0.0);
            }
        }
        assign = features.iter().map(|x| nearest(x, &centroids)).collect();
        let inertia: f64 = assign.iter().map(|a| a.1).sum();
        let prev = *trace.last().unwrap();
        trace.push(inertia);
        if prev - inertia <= tol * prev.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    Ok(KMeansModel {
        centroids,
        inertia: *trace.last().unwrap(),
        inertia_trace: trace,
        iterations,
        converged,
    })
}

fn log_joint(x: &[f64], w: &[f64], means: &[Vec<f64>], vars: &[Vec<f64>]) -> Vec<f64> {
    (0..w.len())
        .map(|k| {
            let mut s = w[k].ln();
            for ((xi, m), v) in x.iter().zip(&means[k]).zip(&vars[k]) {
                s -= 0.5 * (LN_2PI + v.ln() + (xi - m) * (xi - m) / v);
            }
            s
        })
        .collect()
}

/// EM with diagonal covariances, means from k-means++, variances started at
/// the global per-dimension variance, uniform weights. Variances are floored
/// at [`VARIANCE_FLOOR`]. `converged` means the relative log-likelihood
/// change dropped below `tol`; otherwise the fit is returned as is.
pub fn gmm_em_fit(features: &[Vec<f64>], k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<GmmEmModel> {
    let d = check(features, k)?;
    let n = features.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = kmeans_pp(features, k, &mut rng);
    let mut global = vec![0.0; d];
    let mut mean = vec![0.0; d];
    for x in features {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / n as f64;
        }
    }
    for x in features {
        for ((g, v), m) in global.iter_mut().zip(x).zip(&mean) {
            *g += (v - m) * (v - m) / n as f64;
        }
    }
    let global: Vec<f64> = global.into_iter().map(|v| v.max(VARIANCE_FLOOR)).collect();
    let mut vars = vec![global; k];
    let mut weights = vec![1.0 / k as f64; k];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut resp = vec![vec![0.0; k]; n];
    for _ in 0..max_iter {
        iterations += 1;
        let mut ll = 0.0;
        for (x, r) in features.iter().zip(resp.iter_mut()) {
            let lj = log_joint(x, &weights, &means, &vars);
            let lse = log_sum_exp(&lj);
            ll += lse;
            for (rk, l) in r.iter_mut().zip(&lj) {
                *rk = (l - lse).exp();
            }
        }
        if !ll.is_finite() {
            return Err(Error::Numeric("EM log-likelihood is not finite".into()));
        }
        if let Some(&prev) = trace.last() {
            let prev: f64 = prev;
            trace.push(ll);
            if (ll - prev).abs() <= tol * prev.abs().max(1.0) {
                converged = true;
                break;
            }
        } else {
            trace.push(ll);
        }
        for j in 0..k {
            let nk: f64 = resp.iter().map(|r| r[j]).sum();
            if nk <= f64::MIN_POSITIVE {
                // keep a starved component where it is, with no mass
                weights[j] = f64::MIN_POSITIVE;
                continue;
            }
            weights[j] = nk / n as f64;
            let mut m = vec![0.0; d];
            for (x, r) in features.iter().zip(&resp) {
                for (mi, v) in m.iter_mut().zip(x) {
                    *mi += r[j] * v / nk;
                }
            }
            let mut v = vec![0.0; d];
            for (x, r) in features.iter().zip(&resp) {
                for ((vi, xi), mi) in v.iter_mut().zip(x).zip(&m) {
                    *vi += r[j] * (xi - mi) * (xi - mi) / nk;
                }
            }
            means[j] = m;
            vars[j] = v.into_iter().map(|v| v.max(VARIANCE_FLOOR)).collect();
        }
        let s: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= s);
    }
    Ok(GmmEmModel {
        weights,
        means,
        variances: vars,
        log_likelihood: trace,
        iterations,
        converged,
    })
}

impl GmmEmModel {
    pub fn responsibilities(&self, x: &[f64]) -> Vec<f64> {
        let lj = log_joint(x, &self.weights, &self.means, &self.variances);
        let lse = log_sum_exp(&lj);
        lj.iter().map(|l| (l - lse).exp()).collect()
    }
}

/// Nearest centroid or most responsible component (ties to the lowest index).
pub fn baseline_assign(model: &BaselineModel, features: &[Vec<f64>]) -> Vec<usize> {
    match model {
        BaselineModel::Kmeans(m) => features.iter().map(|x| nearest(x, &m.centroids).0).collect(),
        BaselineModel::GmmEm(m) => features
            .iter()
            .map(|x| crate::distributions::argmax(&log_joint(x, &m.weights, &m.means, &m.variances)))
            .collect(),
    }
}

pub fn baseline_fit(method: BaselineMethod, features: &[Vec<f64>], k: usize, seed: u64) -> Result<BaselineModel> {
    Ok(match method {
        BaselineMethod::Kmeans => BaselineModel::Kmeans(kmeans_fit(features, k, seed, 300, 1e-6)?),
        BaselineMethod::GmmEm => BaselineModel::GmmEm(gmm_em_fit(features, k, seed, 200, 1e-6)?),
    })
}

/// Principal-component projection fitted by power iteration with deflation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
}

impl Pca {
    pub fn fit(features: &[Vec<f64>], n_components: usize, seed: u64) -> Result<Self> {
        let d = check(features, 1)?;
        if n_components == 0 || n_components > d {
            return Err(Error::Config(format!("PCA components must lie in [1, {d}]")));
        }
        let n = features.len() as f64;
        let mut mean = vec![0.0; d];
        for x in features {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v / n;
            }
        }
        let centered: Vec<Vec<f64>> = features.iter().map(|x| x.iter().zip(&mean).map(|(a, b)| a - b).collect()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut components: Vec<Vec<f64>> = Vec::new();
        for _ in 0..n_components {
            let mut v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
            for _ in 0..500 {
                // covariance-vector product through the data
                let mut w = vec![0.0; d];
                for x in &centered {
                    let p: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
                    for (wi, xi) in w.iter_mut().zip(x) {
                        *wi += p * xi;
                    }
                }
                for c in &components {
                    let p: f64 = w.iter().zip(c).map(|(a, b)| a * b).sum();
                    for (wi, ci) in w.iter_mut().zip(c) {
                        *wi -= p * ci;
                    }
                }
                let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    break;
                }
                w.iter_mut().for_each(|x| *x /= norm);
                let delta: f64 = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
                v = w;
                if delta < 1e-12 {
                    break;
                }
            }
            components.push(v);
        }
        Ok(Self { mean, components })
    }

    pub fn transform(&self, features: &[Vec<f64>]) -> Vec<Vec<f64>> {
        features
            .iter()
            .map(|x| {
                self.components
                    .iter()
                    .map(|c| x.iter().zip(&self.mean).zip(c).map(|((a, m), ci)| (a - m) * ci).sum())
                    .collect()
            })
            .collect()
    }
}
