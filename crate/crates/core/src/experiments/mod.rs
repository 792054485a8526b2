//! Experiment orchestration: configuration files, the multi-run protocol,
//! the ablation grid and embedding export.

pub mod manifest;
pub mod results;
pub mod synthetic;

use std::fs;
use std::path::{Path, PathBuf};

use candle_core::{DType, Device};
use serde::{Deserialize, Serialize};

use crate::archive::{split_path, FeatureArchive};
use crate::audio::AudioConfig;
use crate::baselines::{baseline_assign, baseline_fit, BaselineMethod, BaselineModel, Pca};
use crate::error::{Error, Result};
use crate::metrics::{LabeledAssignment, MetricSet};
use crate::networks::{Ablation, ArchConfig, Model, ParamGroup, Variant};
use crate::training::{detect_collapse, train, TrainConfig, TrainWindow};
use crate::windowing::{cluster_dataset, default_hop, ClusterReport, InferenceOptions, ReportRow, StateRule};

pub use manifest::{parse_manifest, preprocess, read_manifest, ManifestRecord, PreprocessMeta};
pub use results::{aggregate, summarize, MethodRow, ResultsTable, RunMetrics, RunOutcome, Summary};
pub use synthetic::{generate_synthetic, SyntheticSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Audiomnist,
    Tau2019,
    Us8k,
    Synthetic,
}

impl Dataset {
    pub fn name(self) -> &'static str {
        match self {
            Dataset::Audiomnist => "audiomnist",
            Dataset::Tau2019 => "tau2019",
            Dataset::Us8k => "us8k",
            Dataset::Synthetic => "synthetic",
        }
    }

    /// Feature settings for the real corpora.
    pub fn audio(self) -> Option<AudioConfig> {
        AudioConfig::preset(self.name())
    }

    /// Default cluster count.
    pub fn default_k(self) -> usize {
        match self {
            Dataset::Synthetic => 3,
            _ => 10,
        }
    }

    /// Default KL weight of the categorical objective.
    pub fn default_lambda(self) -> f64 {
        match self {
            Dataset::Tau2019 | Dataset::Us8k => 2.0,
            _ => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Ground-truth labels used as clusters, a reference row.
    Labels,
    Kmeans,
    GmmEm,
    VadeAc,
    VibGmmAc,
    M2Ac,
    M2AcW,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Labels => "labels",
            Method::Kmeans => "kmeans",
            Method::GmmEm => "gmm-em",
            Method::VadeAc => "vade-ac",
            Method::VibGmmAc => "vib-gmm-ac",
            Method::M2Ac => "m2-ac",
            Method::M2AcW => "m2-ac-w",
        }
    }

    pub fn variant(self) -> Option<Variant> {
        match self {
            Method::VadeAc => Some(Variant::VadeAc),
            Method::VibGmmAc => Some(Variant::VibGmmAc),
            Method::M2Ac | Method::M2AcW => Some(Variant::M2Ac),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationFlags {
    #[serde(default)]
    pub conv1d: bool,
    #[serde(default)]
    pub no_recurrence: bool,
    #[serde(default)]
    pub no_mask: bool,
}

impl AblationFlags {
    pub fn any(self) -> bool {
        self.conv1d || self.no_recurrence || self.no_mask
    }

    fn network(self) -> Result<Ablation> {
        match (self.conv1d, self.no_recurrence) {
            (true, true) => Err(Error::Config("conv1d and no_recurrence cannot be combined".into())),
            (true, false) => Ok(Ablation::Conv1d),
            (false, true) => Ok(Ablation::NoRecurrence),
            (false, false) => Ok(Ablation::None),
        }
    }

    /// Row label in the style `2D+GRU+mask`.
    pub fn label(self) -> String {
        format!(
            "{}+{}+{}",
            if self.conv1d { "1D" } else { "2D" },
            if self.no_recurrence { "noGRU" } else { "GRU" },
            if self.no_mask { "nomask" } else { "mask" }
        )
    }
}

fn d_runs() -> usize {
    10
}
fn d_window_s() -> f64 {
    1.0
}
fn d_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub dataset: Dataset,
    pub methods: Vec<Method>,
    /// Defaults per dataset.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "d_runs")]
    pub runs: usize,
    /// Run `r` uses seed `seed + r`.
    #[serde(default)]
    pub seed: u64,
    /// Preprocessed feature directory for the real corpora; `test` is
    /// evaluated when present, `train` otherwise.
    #[serde(default)]
    pub features: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Window of the windowed variant, in seconds of audio.
    #[serde(default = "d_window_s")]
    pub window_s: f64,
    /// Explicit window in frames; synthetic data defaults to half the frames.
    #[serde(default)]
    pub window_frames: Option<usize>,
    #[serde(default)]
    pub hop_frames: Option<usize>,
    #[serde(default)]
    pub state_rule: StateRule,
    #[serde(default)]
    pub ablation: AblationFlags,
    #[serde(default)]
    pub synthetic: SyntheticSpec,
    /// Overrides of architecture fields.
    #[serde(default)]
    pub arch: toml::Table,
    /// Overrides of training fields; `objective` is set from the method.
    #[serde(default)]
    pub train: toml::Table,
    /// Optional PCA before the classical baselines.
    #[serde(default)]
    pub pca_components: Option<usize>,
    /// Also score geometric metrics on the flattened input features.
    #[serde(default = "d_true")]
    pub raw_metrics: bool,
    /// Keep per-run checkpoints, logs, reports and embeddings under `out`.
    #[serde(default)]
    pub save_runs: bool,
}

impl ExperimentSpec {
    pub fn new(dataset: Dataset, methods: Vec<Method>) -> Self {
        Self {
            dataset,
            methods,
            k: None,
            runs: d_runs(),
            seed: 0,
            features: None,
            out: None,
            window_s: d_window_s(),
            window_frames: None,
            hop_frames: None,
            state_rule: StateRule::Carry,
            ablation: AblationFlags::default(),
            synthetic: SyntheticSpec::default(),
            arch: toml::Table::new(),
            train: toml::Table::new(),
            pca_components: None,
            raw_metrics: true,
            save_runs: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut s = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut s.features, &mut s.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(s)
    }

    pub fn k(&self) -> usize {
        self.k.unwrap_or(if self.dataset == Dataset::Synthetic {
            self.synthetic.k
        } else {
            self.dataset.default_k()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no methods listed".into()));
        }
        if self.k() < 2 {
            return Err(Error::Config("K must be at least 2".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.ablation.any() {
            if let Some(m) = self.methods.iter().find(|m| m.variant().is_none()) {
                return Err(Error::Config(format!("ablation flags do not apply to {}", m.name())));
            }
            self.ablation.network()?;
        }
        if self.dataset != Dataset::Synthetic && self.features.is_none() {
            return Err(Error::Config(format!(
                "dataset {} needs a preprocessed features directory",
                self.dataset.name()
            )));
        }
        if self.train.contains_key("objective") {
            return Err(Error::Config("objective is derived from the method".into()));
        }
        Ok(())
    }
}

/// Training splits and the split that is clustered and scored.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: FeatureArchive,
    pub eval: FeatureArchive,
}

/// Synthetic training data plus a held-out draw from a shifted seed, with
/// ids prefixed `test_`.
pub fn synthetic_splits(spec: &SyntheticSpec) -> Result<Splits> {
    let train = generate_synthetic(spec)?;
    let held_out = SyntheticSpec {
        seed: spec.seed.wrapping_add(0x7E57),
        ..spec.clone()
    };
    let mut eval = generate_synthetic(&held_out)?;
    for s in &mut eval.samples {
        s.id = format!("test_{}", s.id);
    }
    Ok(Splits { train, eval })
}

pub fn load_splits(spec: &ExperimentSpec) -> Result<Splits> {
    match (spec.dataset, &spec.features) {
        (Dataset::Synthetic, _) => synthetic_splits(&spec.synthetic),
        (_, Some(dir)) => {
            let train = FeatureArchive::load(&split_path(dir, "train"))?;
            let test = split_path(dir, "test");
            let eval = if test.exists() { FeatureArchive::load(&test)? } else { train.clone() };
            Ok(Splits { train, eval })
        }
        (d, None) => Err(Error::Config(format!("dataset {} needs a features directory", d.name()))),
    }
}

/// `base` with the fields of `overrides` replaced.
pub fn overlay<T: Serialize + for<'de> Deserialize<'de>>(base: &T, overrides: &toml::Table) -> Result<T> {
    let mut v = toml::Value::try_from(base).map_err(|e| Error::Config(e.to_string()))?;
    let t = v.as_table_mut().expect("struct serializes to a table");
    for (k, x) in overrides {
        t.insert(k.clone(), x.clone());
    }
    v.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
}

pub fn arch_config(frames: usize, bins: usize, variant: Variant, overrides: &toml::Table) -> Result<ArchConfig> {
    let cfg: ArchConfig = overlay(&ArchConfig::new(frames, bins, variant), overrides)?;
    if cfg.frames != frames || cfg.bins != bins || cfg.variant != variant {
        return Err(Error::Config("frames, bins and variant come from the data and the method".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn train_config(variant: Variant, overrides: &toml::Table) -> Result<TrainConfig> {
    let cfg: TrainConfig = overlay(&TrainConfig::new(variant), overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

/// `vaclust train` configuration: `[train]` holds the training fields
/// including `objective`, `[arch]` overrides architecture fields; frames and
/// bins come from the features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    #[serde(default)]
    pub arch: toml::Table,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text)?;
        c.train.validate()?;
        Ok(c)
    }

    pub fn arch(&self, frames: usize, bins: usize) -> Result<ArchConfig> {
        arch_config(frames, bins, self.train.objective, &self.arch)
    }
}

/// Fits a classical baseline on `train` (flattened, optionally PCA-reduced)
/// and clusters `eval`; the report's embeddings are the features it saw.
pub fn baseline_report(
    method: BaselineMethod,
    k: usize,
    seed: u64,
    pca: Option<usize>,
    train: &FeatureArchive,
    eval: &FeatureArchive,
) -> Result<(ClusterReport, BaselineModel)> {
    let (mut train_x, mut eval_x) = (train.flattened(), eval.flattened());
    if let Some(c) = pca {
        let p = Pca::fit(&train_x, c, seed)?;
        train_x = p.transform(&train_x);
        eval_x = p.transform(&eval_x);
    }
    let model = baseline_fit(method, &train_x, k, seed)?;
    let assignments = baseline_assign(&model, &eval_x);
    let rows = eval
        .samples
        .iter()
        .zip(assignments)
        .zip(eval_x)
        .map(|((s, a), x)| ReportRow {
            sample_id: s.id.clone(),
            k: a,
            y: (0..k).map(|j| f64::from(u8::from(j == a))).collect(),
            label: s.label,
            embedding: x,
        })
        .collect();
    let name = match method {
        BaselineMethod::Kmeans => "kmeans",
        BaselineMethod::GmmEm => "gmm-em",
    };
    let report = ClusterReport {
        method: name.into(),
        n_clusters: k,
        plan: None,
        rows,
    };
    Ok((report, model))
}

/// Encoder parameters: the categorical encoder for M2 models, the
/// continuous encoder otherwise.
pub fn encoder_params(model: &Model) -> usize {
    let g = if model.cfg.variant == Variant::M2Ac { ParamGroup::Upsilon } else { ParamGroup::Phi };
    model.params().count_group(g)
}

/// Every metric for one set of assignments. `latent` may be empty when only
/// label metrics apply.
pub fn score(latent: Vec<Vec<f64>>, assignments: &[usize], eval: &FeatureArchive, raw: bool) -> Result<RunMetrics> {
    let labels = eval.labels();
    let latent = MetricSet::compute(&LabeledAssignment::new(latent, assignments.to_vec(), labels.clone())?);
    let raw = if raw {
        Some(MetricSet::compute(&LabeledAssignment::new(eval.flattened(), assignments.to_vec(), labels)?))
    } else {
        None
    };
    Ok(RunMetrics { latent, raw })
}

/// Scores a cluster report and applies the collapse rule: a run that puts
/// more than 99% of samples into one cluster is excluded.
pub fn finish_run(run: usize, seed: u64, report: &ClusterReport, eval: &FeatureArchive, raw: bool) -> Result<RunOutcome> {
    let assignments = report.assignments();
    let collapsed = detect_collapse(&assignments);
    let metrics = score(report.embeddings(), &assignments, eval, raw)?;
    Ok(RunOutcome {
        run,
        seed,
        excluded: collapsed.then(|| "latent collapse: more than 99% of samples in one cluster".to_string()),
        metrics: Some(metrics),
        diverged: false,
        collapsed,
        converged: None,
    })
}

fn failed(run: usize, seed: u64, e: &Error) -> RunOutcome {
    RunOutcome {
        run,
        seed,
        excluded: Some(e.to_string()),
        metrics: None,
        diverged: matches!(e, Error::Diverged { .. }),
        collapsed: false,
        converged: None,
    }
}

/// Window length of the windowed variant.
pub fn window_frames(spec: &ExperimentSpec, frames: usize) -> Result<usize> {
    if let Some(w) = spec.window_frames {
        return Ok(w);
    }
    match spec.dataset.audio() {
        Some(a) => Ok(a.frames_for(spec.window_s).min(frames)),
        None => Ok((frames / 2).max(1)),
    }
}

struct Neural<'a> {
    spec: &'a ExperimentSpec,
    method: Method,
    flags: AblationFlags,
    splits: &'a Splits,
}

impl Neural<'_> {
    fn configs(&self, seed: u64) -> Result<(ArchConfig, TrainConfig, InferenceOptions)> {
        let variant = self.method.variant().expect("neural method");
        let (t, f) = (self.splits.train.frames, self.splits.train.bins);
        let mut arch = arch_config(t, f, variant, &self.spec.arch)?;
        arch.n_clusters = self.spec.k();
        arch.ablation = self.flags.network()?;
        arch.validate()?;
        let mut overrides = self.spec.train.clone();
        if !overrides.contains_key("lambda") {
            overrides.insert("lambda".into(), toml::Value::Float(self.spec.dataset.default_lambda()));
        }
        let mut tc = train_config(variant, &overrides)?;
        tc.seed = seed;
        tc.use_mask = tc.use_mask && !self.flags.no_mask;
        let mut opts = InferenceOptions {
            tau: tc.tau_end,
            state_rule: self.spec.state_rule,
            ..Default::default()
        };
        if self.method == Method::M2AcW {
            let w = window_frames(self.spec, t)?;
            tc.window_len_train = TrainWindow::Frames(w);
            opts.window = Some(w);
            opts.hop = Some(self.spec.hop_frames.unwrap_or_else(|| default_hop(w)));
        }
        Ok((arch, tc, opts))
    }

    fn run(&self, run: usize, seed: u64, run_dir: Option<&Path>) -> Result<(RunOutcome, (usize, usize))> {
        let (arch, tc, opts) = self.configs(seed)?;
        let model = Model::build(&arch, seed, DType::F32, &Device::Cpu)?;
        let params = (model.param_count(), encoder_params(&model));
        if let Some(dir) = run_dir {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let snap = RunConfig {
                train: tc.clone(),
                arch: toml::Value::try_from(&arch)
                    .map_err(|e| Error::Config(e.to_string()))?
                    .as_table()
                    .cloned()
                    .unwrap_or_default(),
            };
            let p = dir.join("config.toml");
            fs::write(&p, toml::to_string(&snap).map_err(|e| Error::Config(e.to_string()))?).map_err(|e| Error::io(&p, e))?;
        }
        let out = match train(&model, &self.splits.train, None, &tc, run_dir) {
            Ok(_) => {
                let report = cluster_dataset(&model, &self.splits.eval, &opts)?;
                if let Some(dir) = run_dir {
                    report.save_json(&dir.join("report.json"))?;
                    report.write_embeddings_csv(&dir.join("embeddings.csv"))?;
                }
                finish_run(run, seed, &report, &self.splits.eval, self.spec.raw_metrics)?
            }
            Err(e @ Error::Diverged { .. }) => failed(run, seed, &e),
            Err(e) => return Err(e),
        };
        Ok((out, params))
    }
}

fn classical(spec: &ExperimentSpec, method: Method, splits: &Splits, run: usize, seed: u64) -> Result<RunOutcome> {
    let eval = &splits.eval;
    if method == Method::Labels {
        let labels = eval.labels().ok_or_else(|| Error::Config("labels row needs labeled data".into()))?;
        let feats = eval.flattened();
        return Ok(RunOutcome {
            run,
            seed,
            excluded: None,
            metrics: Some(score(feats, &labels, eval, false)?),
            diverged: false,
            collapsed: false,
            converged: None,
        });
    }
    let m = match method {
        Method::Kmeans => BaselineMethod::Kmeans,
        _ => BaselineMethod::GmmEm,
    };
    let (report, model) = baseline_report(m, spec.k(), seed, spec.pca_components, &splits.train, eval)?;
    let converged = match &model {
        BaselineModel::Kmeans(k) => k.converged,
        BaselineModel::GmmEm(g) => g.converged,
    };
    let assignments = report.assignments();
    let eval_x = report.embeddings();
    let collapsed = detect_collapse(&assignments);
    Ok(RunOutcome {
        run,
        seed,
        excluded: collapsed.then(|| "more than 99% of samples in one cluster".to_string()),
        metrics: Some(score(eval_x, &assignments, eval, false)?),
        diverged: false,
        collapsed,
        converged: Some(converged),
    })
}

fn method_row(spec: &ExperimentSpec, method: Method, flags: AblationFlags, splits: &Splits, label: Option<&str>) -> Result<MethodRow> {
    let mut outcomes = Vec::with_capacity(spec.runs);
    let mut params = None;
    let runs = if method == Method::Labels { 1 } else { spec.runs };
    for run in 0..runs {
        let seed = spec.seed.wrapping_add(run as u64);
        let run_dir = match (&spec.out, spec.save_runs) {
            (Some(out), true) => Some(out.join(label.unwrap_or(method.name())).join(format!("run{run:02}"))),
            _ => None,
        };
        let outcome = if method.variant().is_some() {
            let n = Neural { spec, method, flags, splits };
            let (o, p) = n.run(run, seed, run_dir.as_deref())?;
            params = Some(p);
            o
        } else {
            classical(spec, method, splits, run, seed)?
        };
        log::info!(
            "{} run {run}: {}",
            label.unwrap_or(method.name()),
            outcome.excluded.as_deref().unwrap_or("completed")
        );
        outcomes.push(outcome);
    }
    Ok(aggregate(method.name(), label, outcomes, params))
}

/// Runs every listed method `runs` times with seeds `seed + r` and
/// aggregates over the completed runs.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultsTable> {
    spec.validate()?;
    let splits = load_splits(spec)?;
    let mut rows = Vec::new();
    for &m in &spec.methods {
        rows.push(method_row(spec, m, spec.ablation, &splits, None)?);
    }
    let table = ResultsTable {
        dataset: spec.dataset.name().to_string(),
        k: spec.k(),
        rows,
    };
    if let Some(out) = &spec.out {
        table.save(out)?;
    }
    Ok(table)
}

/// The four configurations of the practical-design grid.
pub fn ablation_configs() -> [AblationFlags; 4] {
    let base = AblationFlags::default();
    [
        base,
        AblationFlags { conv1d: true, ..base },
        AblationFlags { no_recurrence: true, ..base },
        AblationFlags { no_mask: true, ..base },
    ]
}

/// Runs the first listed method under every grid configuration.
pub fn ablation_grid(spec: &ExperimentSpec) -> Result<ResultsTable> {
    spec.validate()?;
    let method = spec.methods[0];
    if method.variant().is_none() {
        return Err(Error::Config(format!("ablation grid needs a neural method, got {}", method.name())));
    }
    let splits = load_splits(spec)?;
    let mut rows = Vec::new();
    for flags in ablation_configs() {
        let label = flags.label();
        rows.push(method_row(spec, method, flags, &splits, Some(&label))?);
    }
    let table = ResultsTable {
        dataset: spec.dataset.name().to_string(),
        k: spec.k(),
        rows,
    };
    if let Some(out) = &spec.out {
        table.save(out)?;
    }
    Ok(table)
}

/// CSV of `sample_id, z0..zd, k, label` rows for external projection.
pub fn export_embeddings(report: &ClusterReport, path: &Path) -> Result<()> {
    report.write_embeddings_csv(path)
}
