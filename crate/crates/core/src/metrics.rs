//! Clustering quality: Hungarian-matched accuracy, NMI, silhouette,
//! Davies-Bouldin and Calinski-Harabasz. Distances are Euclidean.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Evaluation inputs: features `N x d`, cluster ids and optional truth ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledAssignment {
    pub features: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub labels: Option<Vec<usize>>,
}

impl LabeledAssignment {
    pub fn new(features: Vec<Vec<f64>>, assignments: Vec<usize>, labels: Option<Vec<usize>>) -> Result<Self> {
        let n = assignments.len();
        if !features.is_empty() {
            if features.len() != n {
                return Err(Error::Dimension(format!("{} feature rows for {n} assignments", features.len())));
            }
            let d = features[0].len();
            if features.iter().any(|r| r.len() != d) {
                return Err(Error::Dimension("ragged feature rows".into()));
            }
            if features.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Numeric("non-finite feature".into()));
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::Dimension(format!("{} labels for {n} assignments", l.len())));
            }
        }
        Ok(Self {
            features,
            assignments,
            labels,
        })
    }

    fn labels(&self) -> Result<&[usize]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::Config("metric needs ground-truth labels".into()))
    }
}

/// Count matrix `rows = clusters`, `cols = labels`.
pub fn confusion(assignments: &[usize], labels: &[usize]) -> Vec<Vec<u64>> {
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let c = labels.iter().max().map_or(0, |m| m + 1);
    let mut m = vec![vec![0u64; c]; k];
    for (&a, &l) in assignments.iter().zip(labels) {
        m[a][l] += 1;
    }
    m
}

/// Cluster-to-label map maximizing the matched count. Entry `i` is the label
/// for cluster `i`, or `None` when there are more clusters than labels and
/// cluster `i` is left unmatched.
pub fn hungarian_match(confusion: &[Vec<u64>]) -> Vec<Option<usize>> {
    let rows = confusion.len();
    let cols = confusion.iter().map(Vec::len).max().unwrap_or(0);
    let n = rows.max(cols);
    if n == 0 {
        return Vec::new();
    }
    let w = Matrix::from_fn(n, n, |(i, j)| {
        confusion.get(i).and_then(|r| r.get(j)).map_or(0i64, |&c| c as i64)
    });
    let (_, map) = kuhn_munkres(&w);
    map.into_iter().take(rows).map(|j| (j < cols).then_some(j)).collect()
}

fn matched_count(confusion: &[Vec<u64>], map: &[Option<usize>]) -> u64 {
    map.iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| confusion[i].get(j).copied().unwrap_or(0)))
        .sum()
}

/// Matched accuracy in percent.
pub fn unsupervised_accuracy(a: &LabeledAssignment) -> Result<f64> {
    let labels = a.labels()?;
    let n = labels.len();
    if n == 0 {
        return Err(Error::EmptyInput("no samples".into()));
    }
    let c = confusion(&a.assignments, labels);
    Ok(matched_count(&c, &hungarian_match(&c)) as f64 / n as f64 * 100.0)
}

fn entropy_of_counts(counts: impl Iterator<Item = u64>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information over the arithmetic mean of the two entropies. When
/// both partitions are single blocks the score is 1 if they coincide.
pub fn nmi(a: &LabeledAssignment) -> Result<f64> {
    let labels = a.labels()?;
    nmi_between(&a.assignments, labels)
}

pub fn nmi_between(u: &[usize], v: &[usize]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Dimension("partitions differ in length".into()));
    }
    if u.is_empty() {
        return Err(Error::EmptyInput("no samples".into()));
    }
    let n = u.len() as f64;
    let c = confusion(u, v);
    let rows: Vec<u64> = c.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<u64> = (0..c.first().map_or(0, Vec::len)).map(|j| c.iter().map(|r| r[j]).sum()).collect();
    let hu = entropy_of_counts(rows.iter().copied(), n);
    let hv = entropy_of_counts(cols.iter().copied(), n);
    let mut mi = 0.0;
    for (i, r) in c.iter().enumerate() {
        for (j, &nij) in r.iter().enumerate() {
            if nij > 0 {
                let p = nij as f64 / n;
                mi += p * (p * n * n / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    let norm = 0.5 * (hu + hv);
    if norm == 0.0 {
        return Ok(1.0);
    }
    Ok((mi / norm).clamp(0.0, 1.0))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check_geometric(a: &LabeledAssignment) -> Result<usize> {
    let n = a.assignments.len();
    if n < 2 {
        return Err(Error::EmptyInput("geometric metrics need at least two points".into()));
    }
    if a.features.len() != n {
        return Err(Error::Dimension("geometric metrics need one feature row per point".into()));
    }
    Ok(a.assignments.iter().max().unwrap() + 1)
}

/// Mean silhouette; points in singleton clusters score 0, and so does every
/// point when only one cluster is occupied.
pub fn silhouette(a: &LabeledAssignment) -> Result<f64> {
    let k = check_geometric(a)?;
    let n = a.assignments.len();
    let mut sizes = vec![0usize; k];
    for &c in &a.assignments {
        sizes[c] += 1;
    }
    let occupied = sizes.iter().filter(|&&s| s > 0).count();
    let mut total = 0.0;
    for i in 0..n {
        let ci = a.assignments[i];
        if sizes[ci] <= 1 || occupied < 2 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if j != i {
                sums[a.assignments[j]] += dist(&a.features[i], &a.features[j]);
            }
        }
        let ai = sums[ci] / (sizes[ci] - 1) as f64;
        let bi = (0..k)
            .filter(|&c| c != ci && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = ai.max(bi);
        if m > 0.0 {
            total += (bi - ai) / m;
        }
    }
    Ok(total / n as f64)
}

struct Clusters {
    centroids: Vec<Vec<f64>>,
    members: Vec<Vec<usize>>,
}

fn clusters(a: &LabeledAssignment, k: usize) -> Clusters {
    let d = a.features[0].len();
    let mut members = vec![Vec::new(); k];
    for (i, &c) in a.assignments.iter().enumerate() {
        members[c].push(i);
    }
    members.retain(|m| !m.is_empty());
    let centroids = members
        .iter()
        .map(|m| {
            let mut c = vec![0.0; d];
            for &i in m {
                for (cj, x) in c.iter_mut().zip(&a.features[i]) {
                    *cj += x;
                }
            }
            c.iter_mut().for_each(|v| *v /= m.len() as f64);
            c
        })
        .collect();
    Clusters { centroids, members }
}

/// Mean over clusters of the worst `(s_i + s_j) / d(c_i, c_j)`. Coincident
/// centroids give `+inf`. Empty cluster ids are ignored.
pub fn davies_bouldin(a: &LabeledAssignment) -> Result<f64> {
    let k = check_geometric(a)?;
    let cl = clusters(a, k);
    let k = cl.members.len();
    if k < 2 {
        return Err(Error::Config("Davies-Bouldin needs at least two occupied clusters".into()));
    }
    let s: Vec<f64> = cl
        .members
        .iter()
        .zip(&cl.centroids)
        .map(|(m, c)| m.iter().map(|&i| dist(&a.features[i], c)).sum::<f64>() / m.len() as f64)
        .collect();
    let mut total = 0.0;
    for i in 0..k {
        let worst = (0..k)
            .filter(|&j| j != i)
            .map(|j| {
                let d = dist(&cl.centroids[i], &cl.centroids[j]);
                if d == 0.0 {
                    f64::INFINITY
                } else {
                    (s[i] + s[j]) / d
                }
            })
            .fold(f64::NEG_INFINITY, f64::max);
        total += worst;
    }
    Ok(total / k as f64)
}

/// `[tr(B) / (K - 1)] / [tr(W) / (N - K)]` over occupied clusters; requires
/// `2 <= K < N`. Zero within-cluster scatter gives `+inf`.
pub fn calinski_harabasz(a: &LabeledAssignment) -> Result<f64> {
    let k = check_geometric(a)?;
    let cl = clusters(a, k);
    let k = cl.members.len();
    let n = a.assignments.len();
    if k < 2 || n <= k {
        return Err(Error::Config(format!("Calinski-Harabasz needs 2 <= K < N (K = {k}, N = {n})")));
    }
    let d = a.features[0].len();
    let mut mean = vec![0.0; d];
    for r in &a.features {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x / n as f64;
        }
    }
    let mut between = 0.0;
    let mut within = 0.0;
    for (m, c) in cl.members.iter().zip(&cl.centroids) {
        between += m.len() as f64 * dist(c, &mean).powi(2);
        within += m.iter().map(|&i| dist(&a.features[i], c).powi(2)).sum::<f64>();
    }
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

/// Every metric that applies; geometric ones are `None` when undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: Option<f64>,
    pub nmi: Option<f64>,
    pub silhouette: Option<f64>,
    pub davies_bouldin: Option<f64>,
    pub calinski_harabasz: Option<f64>,
}

impl MetricSet {
    pub fn compute(a: &LabeledAssignment) -> Self {
        let geometric = !a.features.is_empty();
        Self {
            accuracy: unsupervised_accuracy(a).ok(),
            nmi: nmi(a).ok(),
            silhouette: geometric.then(|| silhouette(a).ok()).flatten(),
            davies_bouldin: geometric.then(|| davies_bouldin(a).ok()).flatten(),
            calinski_harabasz: geometric.then(|| calinski_harabasz(a).ok()).flatten(),
        }
    }

    /// Named values in table column order.
    pub fn named(&self) -> [(&'static str, Option<f64>); 5] {
        [
            ("accuracy", self.accuracy),
            ("nmi", self.nmi),
            ("silhouette", self.silhouette),
            ("dbi", self.davies_bouldin),
            ("chi", self.calinski_harabasz),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn la(f: Vec<Vec<f64>>, a: Vec<usize>, l: Option<Vec<usize>>) -> LabeledAssignment {
        LabeledAssignment::new(f, a, l).unwrap()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    fn brute_force(c: &[Vec<u64>]) -> u64 {
        let n = c.len().max(c[0].len());
        permutations(n)
            .iter()
            .map(|p| (0..c.len()).map(|i| c[i].get(p[i]).copied().unwrap_or(0)).sum())
            .max()
            .unwrap()
    }

    #[test]
    fn hungarian_basic_maps() {
        let id = vec![vec![5, 0, 0], vec![0, 4, 0], vec![0, 0, 3]];
        assert_eq!(hungarian_match(&id), vec![Some(0), Some(1), Some(2)]);
        // cluster i holds label perm[i]
        let perm = [2usize, 0, 3, 1];
        let c: Vec<Vec<u64>> = (0..4).map(|i| (0..4).map(|j| if j == perm[i] { 7 } else { 0 }).collect()).collect();
        assert_eq!(hungarian_match(&c), perm.iter().map(|&p| Some(p)).collect::<Vec<_>>());
    }

    #[test]
    fn hungarian_equals_exhaustive_search() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let k = r.random_range(1..=6);
            let kt = r.random_range(1..=6);
            let c: Vec<Vec<u64>> = (0..k).map(|_| (0..kt).map(|_| r.random_range(0..20)).collect()).collect();
            assert_eq!(matched_count(&c, &hungarian_match(&c)), brute_force(&c));
        }
    }

    #[test]
    fn accuracy_cases() {
        let l = vec![0, 0, 0, 1, 1, 1, 2, 2, 2];
        assert_eq!(unsupervised_accuracy(&la(vec![], l.clone(), Some(l.clone()))).unwrap(), 100.0);
        let p: Vec<usize> = l.iter().map(|&x| (x + 1) % 3).collect();
        assert_eq!(unsupervised_accuracy(&la(vec![], p, Some(l.clone()))).unwrap(), 100.0);
        let a = vec![0, 0, 1, 1, 1, 2, 2, 0, 2];
        let c = confusion(&a, &l);
        let oracle = brute_force(&c) as f64 / 9.0 * 100.0;
        let acc = unsupervised_accuracy(&la(vec![], a.clone(), Some(l.clone()))).unwrap();
        assert!((acc - oracle).abs() < 1e-12);
        assert!((acc - 600.0 / 9.0).abs() < 1e-9);
        // any fixed map does no better
        for p in permutations(3) {
            let m: u64 = (0..3).map(|i| c[i][p[i]]).sum();
            assert!(m as f64 / 9.0 * 100.0 <= acc + 1e-12);
        }
    }

    #[test]
    fn nmi_cases() {
        let l = vec![0, 0, 1, 1, 2, 2];
        assert!((nmi_between(&l, &l).unwrap() - 1.0).abs() < 1e-12);
        // product contingency: every cell holds one sample
        let u = vec![0, 0, 1, 1];
        let v = vec![0, 1, 0, 1];
        assert!(nmi_between(&u, &v).unwrap().abs() < 1e-12);
        // direct-sum oracle on a 2 x 3 table
        let u = vec![0, 0, 0, 0, 1, 1, 1];
        let v = vec![0, 0, 1, 2, 1, 2, 2];
        let n = 7.0f64;
        let joint = [[2.0, 1.0, 1.0], [0.0, 1.0, 2.0]];
        let pu = [4.0 / n, 3.0 / n];
        let pv = [2.0 / n, 2.0 / n, 3.0 / n];
        let mut mi = 0.0;
        for i in 0..2 {
            for j in 0..3 {
                let p: f64 = joint[i][j] / n;
                if p > 0.0 {
                    mi += p * (p / (pu[i] * pv[j])).ln();
                }
            }
        }
        let h = |p: &[f64]| -p.iter().map(|x| x * x.ln()).sum::<f64>();
        let oracle = mi / (0.5 * (h(&pu) + h(&pv)));
        assert!((nmi_between(&u, &v).unwrap() - oracle).abs() < 1e-9);
        assert!((nmi_between(&v, &u).unwrap() - oracle).abs() < 1e-12);
    }

    fn pts(v: &[[f64; 2]]) -> Vec<Vec<f64>> {
        v.iter().map(|p| p.to_vec()).collect()
    }

    #[test]
    fn silhouette_cases() {
        let f = pts(&[[0.0, 0.0], [0.0, 0.01], [100.0, 0.0], [100.0, 0.01]]);
        assert!(silhouette(&la(f, vec![0, 0, 1, 1], None)).unwrap() >= 0.99);
        // identical points, one occupied cluster of a possible two
        let f = pts(&[[1.0, 1.0]; 4]);
        assert_eq!(silhouette(&la(f.clone(), vec![1, 1, 1, 1], None)).unwrap(), 0.0);
        // identical points split across two clusters: a = b = 0
        assert_eq!(silhouette(&la(f, vec![0, 0, 1, 1], None)).unwrap(), 0.0);

        // N = 6 handmade case, evaluated point by point
        let f = pts(&[[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [5.0, 5.0], [6.0, 5.0], [9.0, 9.0]]);
        let a = vec![0, 0, 0, 1, 1, 2];
        let d = |i: usize, j: usize| ((f[i][0] - f[j][0]).powi(2) + (f[i][1] - f[j][1]).powi(2)).sqrt();
        let s = |ai: f64, bi: f64| (bi - ai) / ai.max(bi);
        let s0 = s((d(0, 1) + d(0, 2)) / 2.0, ((d(0, 3) + d(0, 4)) / 2.0).min(d(0, 5)));
        let s1 = s((d(1, 0) + d(1, 2)) / 2.0, ((d(1, 3) + d(1, 4)) / 2.0).min(d(1, 5)));
        let s2 = s((d(2, 0) + d(2, 1)) / 2.0, ((d(2, 3) + d(2, 4)) / 2.0).min(d(2, 5)));
        let s3 = s(d(3, 4), ((d(3, 0) + d(3, 1) + d(3, 2)) / 3.0).min(d(3, 5)));
        let s4 = s(d(4, 3), ((d(4, 0) + d(4, 1) + d(4, 2)) / 3.0).min(d(4, 5)));
        let oracle = (s0 + s1 + s2 + s3 + s4 + 0.0) / 6.0;
        assert!((silhouette(&la(f, a, None)).unwrap() - oracle).abs() < 1e-9);
    }

    #[test]
    fn davies_bouldin_cases() {
        let f = pts(&[[0.0, 0.0], [1e6, 0.0]]);
        assert!(davies_bouldin(&la(f, vec![0, 1], None)).unwrap() < 1e-12);
        let f = pts(&[[0.0, 1.0], [0.0, -1.0], [1.0, 0.0], [-1.0, 0.0]]);
        assert_eq!(davies_bouldin(&la(f, vec![0, 0, 1, 1], None)).unwrap(), f64::INFINITY);

        // three clusters: centroids (0.5, 0), (10, 1), (0, 10.5)
        let f = pts(&[[0.0, 0.0], [1.0, 0.0], [10.0, 0.0], [10.0, 2.0], [0.0, 10.0], [0.0, 11.0]]);
        let a = vec![0, 0, 1, 1, 2, 2];
        let c: [[f64; 2]; 3] = [[0.5, 0.0], [10.0, 1.0], [0.0, 10.5]];
        let s: [f64; 3] = [0.5, 1.0, 0.5];
        let dc = |i: usize, j: usize| ((c[i][0] - c[j][0]).powi(2) + (c[i][1] - c[j][1]).powi(2)).sqrt();
        let r = |i: usize, j: usize| (s[i] + s[j]) / dc(i, j);
        let oracle = (r(0, 1).max(r(0, 2)) + r(1, 0).max(r(1, 2)) + r(2, 0).max(r(2, 1))) / 3.0;
        assert!((davies_bouldin(&la(f, a, None)).unwrap() - oracle).abs() < 1e-9);
    }

    #[test]
    fn calinski_harabasz_cases() {
        let f = pts(&[[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]]);
        assert!(calinski_harabasz(&la(f, vec![0, 1, 2], None)).is_err());

        // scatter matrices by hand: overall mean (2, 1)
        let f = pts(&[[0.0, 0.0], [0.0, 2.0], [4.0, 0.0], [4.0, 2.0], [2.0, 1.0]]);
        let a = vec![0, 0, 1, 1, 1];
        // centroids (0, 1) and (10/3, 1)
        let tr_b = 2.0 * 4.0 + 3.0 * (4.0f64 / 3.0).powi(2);
        let c1 = [10.0 / 3.0, 1.0];
        let w1: f64 = [[4.0, 0.0], [4.0, 2.0], [2.0, 1.0]]
            .iter()
            .map(|p: &[f64; 2]| (p[0] - c1[0]).powi(2) + (p[1] - c1[1]).powi(2))
            .sum();
        let tr_w = 2.0 + w1;
        let oracle = (tr_b / 1.0) / (tr_w / 3.0);
        assert!((calinski_harabasz(&la(f, a, None)).unwrap() - oracle).abs() < 1e-9);

        // widening the gap between two blobs raises the score
        let mut last = 0.0;
        for gap in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let f = pts(&[[0.0, 0.0], [0.0, 0.5], [gap, 0.0], [gap, 0.5]]);
            let v = calinski_harabasz(&la(f, vec![0, 0, 1, 1], None)).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    fn scene() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>, Vec<usize>)> {
        (6usize..14).prop_flat_map(|n| {
            (
                prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), n),
                prop::collection::vec(0usize..3, n),
                prop::collection::vec(0usize..3, n),
            )
        })
    }

    fn occupied(a: &[usize]) -> usize {
        let mut s = a.to_vec();
        s.sort();
        s.dedup();
        s.len()
    }

    proptest! {
        #[test]
        fn metrics_ignore_cluster_relabeling((f, a, l) in scene(), shift in 1usize..3) {
            let b: Vec<usize> = a.iter().map(|&x| (x + shift) % 3).collect();
            let m1 = MetricSet::compute(&la(f.clone(), a, Some(l.clone())));
            let m2 = MetricSet::compute(&la(f, b, Some(l)));
            for ((_, x), (_, y)) in m1.named().iter().zip(m2.named().iter()) {
                match (x, y) {
                    (Some(x), Some(y)) if x.is_finite() => prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0)),
                    _ => prop_assert_eq!(x.map(f64::is_finite), y.map(f64::is_finite)),
                }
            }
        }

        #[test]
        fn geometric_metrics_survive_rigid_motion((f, a, _) in scene(), theta in 0.0f64..std::f64::consts::TAU, tx in -10.0f64..10.0, scale in 0.1f64..10.0) {
            prop_assume!(occupied(&a) >= 2);
            let (c, s) = (theta.cos(), theta.sin());
            let moved: Vec<Vec<f64>> = f.iter().map(|p| vec![c * p[0] - s * p[1] + tx, s * p[0] + c * p[1] - tx]).collect();
            let scaled: Vec<Vec<f64>> = f.iter().map(|p| p.iter().map(|v| v * scale).collect()).collect();
            let base = la(f, a.clone(), None);
            let moved = la(moved, a.clone(), None);
            let scaled = la(scaled, a, None);
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-7 * x.abs().max(1.0);
            prop_assert!(close(silhouette(&base).unwrap(), silhouette(&moved).unwrap()));
            prop_assert!(close(davies_bouldin(&base).unwrap(), davies_bouldin(&moved).unwrap()));
            // both ratios are homogeneous of degree zero in the scale
            prop_assert!(close(davies_bouldin(&base).unwrap(), davies_bouldin(&scaled).unwrap()));
            prop_assert!(close(silhouette(&base).unwrap(), silhouette(&scaled).unwrap()));
            if let (Ok(x), Ok(y), Ok(z)) = (calinski_harabasz(&base), calinski_harabasz(&moved), calinski_harabasz(&scaled)) {
                prop_assert!(close(x, y));
                prop_assert!(close(x, z));
            }
        }

        #[test]
        fn nmi_is_symmetric_and_bounded((_, a, l) in scene()) {
            let x = nmi_between(&a, &l).unwrap();
            let y = nmi_between(&l, &a).unwrap();
            prop_assert!((x - y).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&x));
        }

        #[test]
        fn silhouette_is_bounded((f, a, _) in scene()) {
            let s = silhouette(&la(f, a, None)).unwrap();
            prop_assert!((-1.0..=1.0).contains(&s));
        }
    }
}
