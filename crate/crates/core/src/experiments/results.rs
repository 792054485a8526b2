//! Per-run outcomes, mean and standard deviation aggregation, and table
//! emission as JSON and aligned text.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricSet;

/// Mean and population standard deviation of the finite values; non-finite
/// values are counted separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    #[serde(default)]
    pub non_finite: usize,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let non_finite = values.len() - finite.len();
    if finite.is_empty() {
        return None;
    }
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n;
    let var = finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some(Summary {
        mean,
        std: var.sqrt(),
        n: finite.len(),
        non_finite,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Geometric metrics in the method's own representation.
    pub latent: MetricSet,
    /// Geometric metrics on the flattened input features.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<MetricSet>,
}

impl RunMetrics {
    /// Flat `name -> value` view; raw-space entries carry a `_raw` suffix.
    pub fn flat(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = self
            .latent
            .named()
            .iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect();
        if let Some(raw) = &self.raw {
            for (k, v) in raw.named().iter().skip(2) {
                if let Some(v) = v {
                    out.push((format!("{k}_raw"), *v));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub run: usize,
    pub seed: u64,
    /// `Some(reason)` when the run is left out of the aggregates.
    pub excluded: Option<String>,
    pub metrics: Option<RunMetrics>,
    #[serde(default)]
    pub diverged: bool,
    #[serde(default)]
    pub collapsed: bool,
    /// Baselines only: whether the fit met its tolerance.
    #[serde(default)]
    pub converged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub run: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    /// Configuration label for ablation rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    pub runs: usize,
    pub completed: usize,
    pub excluded: Vec<Exclusion>,
    pub diverged: usize,
    pub collapsed: usize,
    pub not_converged: usize,
    pub metrics: BTreeMap<String, Summary>,
    pub params_total: Option<usize>,
    pub params_encoder: Option<usize>,
    pub outcomes: Vec<RunOutcome>,
}

/// Folds run outcomes (sorted by run id) into one table row.
pub fn aggregate(method: &str, config: Option<&str>, mut outcomes: Vec<RunOutcome>, params: Option<(usize, usize)>) -> MethodRow {
    outcomes.sort_by_key(|o| o.run);
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut excluded = Vec::new();
    for o in &outcomes {
        match (&o.excluded, &o.metrics) {
            (None, Some(m)) => {
                for (k, v) in m.flat() {
                    values.entry(k).or_default().push(v);
                }
            }
            (Some(reason), _) => excluded.push(Exclusion {
                run: o.run,
                seed: o.seed,
                reason: reason.clone(),
            }),
            (None, None) => excluded.push(Exclusion {
                run: o.run,
                seed: o.seed,
                reason: "no metrics".into(),
            }),
        }
    }
    MethodRow {
        method: method.to_string(),
        config: config.map(str::to_string),
        runs: outcomes.len(),
        completed: outcomes.len() - excluded.len(),
        excluded,
        diverged: outcomes.iter().filter(|o| o.diverged).count(),
        collapsed: outcomes.iter().filter(|o| o.collapsed).count(),
        not_converged: outcomes.iter().filter(|o| o.converged == Some(false)).count(),
        metrics: values.iter().filter_map(|(k, v)| summarize(v).map(|s| (k.clone(), s))).collect(),
        params_total: params.map(|p| p.0),
        params_encoder: params.map(|p| p.1),
        outcomes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub dataset: String,
    pub k: usize,
    pub rows: Vec<MethodRow>,
}

/// Text columns: key, header, display scale.
const COLUMNS: [(&str, &str, f64); 8] = [
    ("accuracy", "Acc (%)", 1.0),
    ("nmi", "NMI", 1.0),
    ("silhouette", "Sil", 1.0),
    ("dbi", "DBI", 1.0),
    ("chi", "CHI x1e3", 1e-3),
    ("silhouette_raw", "Sil raw", 1.0),
    ("dbi_raw", "DBI raw", 1.0),
    ("chi_raw", "CHI raw x1e3", 1e-3),
];

impl ResultsTable {
    pub fn to_text(&self) -> String {
        let mut header = vec!["Method".to_string(), "Runs".to_string()];
        header.extend(COLUMNS.iter().map(|c| c.1.to_string()));
        header.push("Total (M)".into());
        header.push("Enc (M)".into());
        let mut lines = vec![header];
        for r in &self.rows {
            let name = match &r.config {
                Some(c) => format!("{} [{c}]", r.method),
                None => r.method.clone(),
            };
            let mut line = vec![name, format!("{}/{}", r.completed, r.runs)];
            for (key, _, scale) in COLUMNS {
                line.push(match r.metrics.get(key) {
                    Some(s) => format!("{:.2} ± {:.2}", s.mean * scale, s.std * scale),
                    None => "NA".into(),
                });
            }
            let m = |p: Option<usize>| p.map_or("NA".into(), |p| format!("{:.2}", p as f64 / 1e6));
            line.push(m(r.params_total));
            line.push(m(r.params_encoder));
            lines.push(line);
        }
        let widths: Vec<usize> = (0..lines[0].len())
            .map(|j| lines.iter().map(|l| l[j].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = format!("dataset: {}  clusters: {}\n", self.dataset, self.k);
        for l in &lines {
            let cells: Vec<String> = l
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        let notes: Vec<String> = self
            .rows
            .iter()
            .flat_map(|r| r.excluded.iter().map(move |e| (r, e)))
            .map(|(r, e)| format!("excluded: {} run {} (seed {}): {}", r.method, e.run, e.seed, e.reason))
            .collect();
        for n in notes {
            let _ = writeln!(out, "{n}");
        }
        out
    }

    /// Writes `results.json` and `results.txt` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let j = dir.join("results.json");
        fs::write(&j, serde_json::to_vec_pretty(self)?).map_err(|e| Error::io(&j, e))?;
        let t = dir.join("results.txt");
        fs::write(&t, self.to_text()).map_err(|e| Error::io(&t, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake(run: usize, acc: f64, sil: f64, excluded: Option<&str>) -> RunOutcome {
        RunOutcome {
            run,
            seed: run as u64 + 10,
            excluded: excluded.map(str::to_string),
            metrics: Some(RunMetrics {
                latent: MetricSet {
                    accuracy: Some(acc),
                    nmi: Some(0.5),
                    silhouette: Some(sil),
                    davies_bouldin: None,
                    calinski_harabasz: Some(f64::INFINITY),
                },
                raw: None,
            }),
            diverged: false,
            collapsed: excluded.is_some(),
            converged: None,
        }
    }

    #[test]
    fn aggregation_matches_hand_values() {
        let rows = vec![
            fake(2, 80.0, 0.9, None),
            fake(0, 60.0, 0.5, None),
            fake(1, 10.0, 0.0, Some("latent collapse")),
            fake(3, 70.0, 0.7, None),
        ];
        let r = aggregate("m2-ac", None, rows, Some((3, 1)));
        assert_eq!((r.runs, r.completed, r.collapsed), (4, 3, 1));
        assert_eq!(r.excluded, vec![Exclusion { run: 1, seed: 11, reason: "latent collapse".into() }]);
        let acc = r.metrics["accuracy"];
        assert!((acc.mean - 70.0).abs() < 1e-12);
        // population std of {60, 70, 80}
        assert!((acc.std - (200.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let sil = r.metrics["silhouette"];
        assert!((sil.mean - 0.7).abs() < 1e-12);
        assert!((sil.std - (0.08f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(!r.metrics.contains_key("dbi"));
        assert!(!r.metrics.contains_key("chi"));
        assert_eq!(r.outcomes.iter().map(|o| o.run).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn summaries_skip_non_finite_values() {
        let s = summarize(&[1.0, f64::INFINITY, 3.0]).unwrap();
        assert_eq!((s.mean, s.std, s.n, s.non_finite), (2.0, 1.0, 2, 1));
        assert!(summarize(&[f64::NAN]).is_none());
    }

    #[test]
    fn table_round_trips_and_renders() {
        let mut run = fake(0, 50.0, 0.1, None);
        run.metrics.as_mut().unwrap().latent.calinski_harabasz = Some(1234.0);
        let t = ResultsTable {
            dataset: "synthetic".into(),
            k: 3,
            rows: vec![aggregate("kmeans", None, vec![run], None)],
        };
        let dir = tempfile::tempdir().unwrap();
        t.save(dir.path()).unwrap();
        let back: ResultsTable = serde_json::from_slice(&fs::read(dir.path().join("results.json")).unwrap()).unwrap();
        assert_eq!(back, t);
        let text = t.to_text();
        assert!(text.contains("kmeans"));
        assert!(text.contains("50.00 ± 0.00"));
        assert!(text.contains("1.23 ± 0.00"));
    }
}
