use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use candle_core::{DType, Device};
use clap::{Args, Parser, Subcommand, ValueEnum};
use vaclust_core::archive::{split_path, FeatureArchive};
use vaclust_core::audio::AudioConfig;
use vaclust_core::baselines::BaselineMethod;
use vaclust_core::experiments::{
    ablation_grid, baseline_report, encoder_params, overlay, preprocess, read_manifest, run_experiment, synthetic_splits, Dataset, ExperimentSpec,
    RunConfig, Splits, SyntheticSpec,
};
use vaclust_core::metrics::{LabeledAssignment, MetricSet};
use vaclust_core::networks::{load_checkpoint, Model};
use vaclust_core::training::train;
use vaclust_core::windowing::{cluster_dataset, read_embeddings_csv, ClusterReport, InferenceOptions, StateRule};

#[derive(Parser)]
#[command(name = "vaclust", version, about = "Variational clustering of audio spectrograms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Turn a manifest of audio files into feature archives, or generate synthetic data.
    Preprocess(PreprocessArgs),
    /// Train one model from a run configuration.
    Train(TrainArgs),
    /// Cluster a feature split with a trained checkpoint.
    Infer(InferArgs),
    /// Score a cluster report.
    Evaluate(EvaluateArgs),
    /// Fit a classical baseline and cluster a split.
    Baseline(BaselineArgs),
    /// Run the multi-run protocol for every method of an experiment file.
    Experiment(SpecArgs),
    /// Run the four-configuration ablation grid for the first method of an experiment file.
    Ablation(SpecArgs),
}

#[derive(Args)]
struct PreprocessArgs {
    #[arg(long, value_enum)]
    dataset: DatasetArg,
    /// TOML overrides of the audio preset, or a synthetic data description.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV rows `path,label,split[,fold]`; not used for synthetic data.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Audiomnist,
    Tau2019,
    Us8k,
    Synthetic,
}

impl From<DatasetArg> for Dataset {
    fn from(d: DatasetArg) -> Self {
        match d {
            DatasetArg::Audiomnist => Dataset::Audiomnist,
            DatasetArg::Tau2019 => Dataset::Tau2019,
            DatasetArg::Us8k => Dataset::Us8k,
            DatasetArg::Synthetic => Dataset::Synthetic,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    /// Directory holding `train.vacf` and optionally `val.vacf`.
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value = "test")]
    split: String,
    /// Window length in frames; whole sequences when omitted.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    hop: Option<usize>,
    /// Start every window from a zero recurrent state.
    #[arg(long)]
    reset_state: bool,
    /// Decision temperature; defaults to the checkpoint's final temperature.
    #[arg(long)]
    tau: Option<f64>,
    /// Seed for Gumbel noise in the decision; noise-free when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the latent embeddings as CSV.
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    report: PathBuf,
    /// Embedding CSV for the geometric metrics.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Adds parameter counts to the output.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    method: BaselineArg,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "test")]
    split: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reduce the flattened features to this many principal components first.
    #[arg(long)]
    pca: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Kmeans,
    GmmEm,
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Overrides `out` of the experiment file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().cmd {
        Cmd::Preprocess(a) => cmd_preprocess(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::Infer(a) => cmd_infer(a),
        Cmd::Evaluate(a) => cmd_evaluate(a),
        Cmd::Baseline(a) => cmd_baseline(a),
        Cmd::Experiment(a) => cmd_spec(a, false),
        Cmd::Ablation(a) => cmd_spec(a, true),
    }
}

fn read_table(path: &Path) -> Result<toml::Table> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.parse::<toml::Table>()?)
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_vec_pretty(v)?).with_context(|| format!("writing {}", path.display()))
}

fn cmd_preprocess(a: PreprocessArgs) -> Result<()> {
    let dataset = Dataset::from(a.dataset);
    fs::create_dir_all(&a.out)?;
    if dataset == Dataset::Synthetic {
        let spec: SyntheticSpec = match &a.config {
            Some(p) => overlay(&SyntheticSpec::default(), &read_table(p)?)?,
            None => SyntheticSpec::default(),
        };
        let Splits { train, eval: test } = synthetic_splits(&spec)?;
        train.save(&split_path(&a.out, "train"))?;
        test.save(&split_path(&a.out, "test"))?;
        write_json(&a.out.join("meta.json"), &spec)?;
        log::info!("wrote {} train and {} test samples to {}", train.len(), test.len(), a.out.display());
        return Ok(());
    }
    let manifest = a.manifest.context("--manifest is required for audio datasets")?;
    let preset = dataset.audio().expect("audio dataset has a preset");
    let cfg: AudioConfig = match &a.config {
        Some(p) => overlay(&preset, &read_table(p)?)?,
        None => preset,
    };
    let records = read_manifest(&manifest)?;
    let meta = preprocess(&records, dataset.name(), &cfg, &a.out)?;
    for s in &meta.skipped {
        log::warn!("skipped {}: {}", s.path.display(), s.reason);
    }
    log::info!("split counts {:?}, {} skipped", meta.counts, meta.skipped.len());
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut rc = RunConfig::from_toml(&text)?;
    if let Some(s) = a.seed {
        rc.train.seed = s;
    }
    let train_set = FeatureArchive::load(&split_path(&a.features, "train"))?;
    let val_path = split_path(&a.features, "val");
    let val = if val_path.exists() { Some(FeatureArchive::load(&val_path)?) } else { None };
    let arch = rc.arch(train_set.frames, train_set.bins)?;
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("config.toml"), toml::to_string(&rc)?)?;
    let model = Model::build(&arch, rc.train.seed, DType::F32, &Device::Cpu)?;
    log::info!("{} parameters, {} in the encoder", model.param_count(), encoder_params(&model));
    let report = train(&model, &train_set, val.as_ref(), &rc.train, Some(&a.out))?;
    if let Some(last) = report.log.last() {
        log::info!("final epoch {} loss {:.4}", last.epoch, last.total);
    }
    if report.state.collapsed {
        log::warn!("the trained model collapsed onto one cluster");
    }
    Ok(())
}

fn cmd_infer(a: InferArgs) -> Result<()> {
    let (model, meta) = load_checkpoint(&a.checkpoint, &Device::Cpu)?;
    let data = FeatureArchive::load(&split_path(&a.features, &a.split))?;
    let opts = InferenceOptions {
        window: a.window,
        hop: a.hop,
        state_rule: if a.reset_state { StateRule::Reset } else { StateRule::Carry },
        tau: a.tau.unwrap_or(meta.tau),
        noise_seed: a.seed,
        ..Default::default()
    };
    let report = cluster_dataset(&model, &data, &opts)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    report.save_json(&a.out)?;
    if let Some(p) = &a.embeddings {
        report.write_embeddings_csv(p)?;
    }
    log::info!("clustered {} samples into {} clusters", report.rows.len(), report.n_clusters);
    Ok(())
}

/// Metrics of a report as a JSON object; the Calinski-Harabasz index is
/// reported in thousands.
fn metrics_json(m: &MetricSet) -> serde_json::Map<String, serde_json::Value> {
    let mut out = serde_json::Map::new();
    for (name, v) in m.named() {
        let (key, v) = if name == "chi" { ("chi_x1e3".to_string(), v.map(|x| x * 1e-3)) } else { (name.to_string(), v) };
        out.insert(key, v.map_or(serde_json::Value::Null, serde_json::Value::from));
    }
    out
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let report = ClusterReport::load_json(&a.report)?;
    let features = match &a.embeddings {
        Some(p) => {
            let rows = read_embeddings_csv(p)?;
            let by_id: BTreeMap<&str, &Vec<f64>> = rows.iter().map(|r| (r.sample_id.as_str(), &r.embedding)).collect();
            report
                .rows
                .iter()
                .map(|r| by_id.get(r.sample_id.as_str()).map(|e| (*e).clone()).with_context(|| format!("no embedding for {}", r.sample_id)))
                .collect::<Result<Vec<_>>>()?
        }
        None => Vec::new(),
    };
    let labels = report.labels();
    if labels.is_none() {
        log::warn!("report has unlabeled samples, accuracy and NMI are skipped");
    }
    let m = MetricSet::compute(&LabeledAssignment::new(features, report.assignments(), labels)?);
    let mut out = metrics_json(&m);
    out.insert("method".into(), report.method.clone().into());
    out.insert("n".into(), report.rows.len().into());
    if let Some(p) = &a.checkpoint {
        let (model, _) = load_checkpoint(p, &Device::Cpu)?;
        out.insert("params_total".into(), model.param_count().into());
        out.insert("params_encoder".into(), encoder_params(&model).into());
    }
    let text = serde_json::to_string_pretty(&out)?;
    match &a.out {
        Some(p) => write_json(p, &out)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_baseline(a: BaselineArgs) -> Result<()> {
    let train_set = FeatureArchive::load(&split_path(&a.features, "train"))?;
    let eval_path = split_path(&a.features, &a.split);
    let eval = if eval_path.exists() { FeatureArchive::load(&eval_path)? } else { train_set.clone() };
    let method = match a.method {
        BaselineArg::Kmeans => BaselineMethod::Kmeans,
        BaselineArg::GmmEm => BaselineMethod::GmmEm,
    };
    if a.k < 1 {
        bail!("--k must be at least 1");
    }
    let (report, _) = baseline_report(method, a.k, a.seed, a.pca, &train_set, &eval)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    report.save_json(&a.out)?;
    if let Some(p) = &a.embeddings {
        report.write_embeddings_csv(p)?;
    }
    Ok(())
}

fn cmd_spec(a: SpecArgs, ablation: bool) -> Result<()> {
    let mut spec = ExperimentSpec::load(&a.spec)?;
    if a.out.is_some() {
        spec.out = a.out;
    }
    let table = if ablation { ablation_grid(&spec)? } else { run_experiment(&spec)? };
    print!("{}", table.to_text());
    if let Some(dir) = &spec.out {
        log::info!("results written to {}", dir.display());
    }
    Ok(())
}
