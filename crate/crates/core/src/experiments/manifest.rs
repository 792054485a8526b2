//! Dataset manifests and feature preprocessing.
//!
//! A manifest is CSV with one record per clip: `path,label,split[,fold]`.
//! Relative paths resolve against the manifest's directory, an empty label
//! means unlabeled, and a header row starting with `path` is skipped. The
//! split is `train`, `val`, `test`, or `auto`, which needs a fold and sends
//! fold [`TEST_FOLD`] to `test` and every other fold to `train`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::archive::{split_path, FeatureArchive, FeatureSample};
use crate::audio::{extract_features, load_clip, AudioConfig};
use crate::error::{Error, Result};

/// Fold held out by `auto` splits.
pub const TEST_FOLD: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub path: PathBuf,
    pub label: Option<u32>,
    pub split: String,
    pub fold: Option<u32>,
}

pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("manifest: {e}")))?;
        let bad = |m: &str| Error::Format(format!("manifest record {}: {m}", line + 1));
        if line == 0 && rec.get(0) == Some("path") {
            continue;
        }
        if !(3..=4).contains(&rec.len()) {
            return Err(bad("expected path,label,split[,fold]"));
        }
        let label = match &rec[1] {
            "" => None,
            s => Some(s.parse().map_err(|_| bad("label must be a non-negative integer"))?),
        };
        let fold = match rec.get(3) {
            None | Some("") => None,
            Some(s) => Some(s.parse().map_err(|_| bad("fold must be a non-negative integer"))?),
        };
        let split = match (&rec[2], fold) {
            ("auto", Some(f)) if f == TEST_FOLD => "test".to_string(),
            ("auto", Some(_)) => "train".to_string(),
            ("auto", None) => return Err(bad("split auto needs a fold")),
            (s @ ("train" | "val" | "test"), _) => s.to_string(),
            (s, _) => return Err(bad(&format!("unknown split {s:?}"))),
        };
        let p = PathBuf::from(&rec[0]);
        out.push(ManifestRecord {
            path: if p.is_absolute() { p } else { base.join(p) },
            label,
            split,
            fold,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyInput("manifest has no records".into()));
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

/// Written as `meta.json` next to the split archives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessMeta {
    pub dataset: String,
    pub audio: AudioConfig,
    pub frames: usize,
    pub bins: usize,
    pub counts: BTreeMap<String, usize>,
    pub skipped: Vec<SkippedFile>,
}

/// Sample id: the file stem, prefixed by the fold when there is one.
fn sample_id(rec: &ManifestRecord) -> String {
    let stem = rec.path.file_stem().map_or_else(|| rec.path.display().to_string(), |s| s.to_string_lossy().into_owned());
    match rec.fold {
        Some(f) => format!("fold{f}/{stem}"),
        None => stem,
    }
}

/// Extracts features for every record and writes one archive per split plus
/// `meta.json`. Unreadable or unusable files are skipped and listed.
pub fn preprocess(records: &[ManifestRecord], dataset: &str, cfg: &AudioConfig, out_dir: &Path) -> Result<PreprocessMeta> {
    let mut splits: BTreeMap<String, FeatureArchive> = BTreeMap::new();
    let mut skipped = Vec::new();
    let (frames, bins) = (cfg.frames(), cfg.bins());
    for rec in records {
        let result = load_clip(&rec.path, cfg.sample_rate)
            .and_then(|clip| extract_features(&clip, cfg))
            .and_then(|(spec, mask)| FeatureSample::from_spectrogram(sample_id(rec), rec.label, &spec, &mask));
        match result {
            Ok(s) => splits
                .entry(rec.split.clone())
                .or_insert_with(|| FeatureArchive::new(frames, bins, cfg.axis()))
                .push(s)?,
            Err(e) => {
                log::warn!("skipping {}: {e}", rec.path.display());
                skipped.push(SkippedFile {
                    path: rec.path.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    if splits.is_empty() {
        return Err(Error::EmptyInput("no file in the manifest could be processed".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for (name, a) in &splits {
        a.save(&split_path(out_dir, name))?;
    }
    let meta = PreprocessMeta {
        dataset: dataset.to_string(),
        audio: cfg.clone(),
        frames,
        bins,
        counts: splits.iter().map(|(k, v)| (k.clone(), v.len())).collect(),
        skipped,
    };
    let path = out_dir.join("meta.json");
    fs::write(&path, serde_json::to_vec_pretty(&meta)?).map_err(|e| Error::io(&path, e))?;
    Ok(meta)
}
