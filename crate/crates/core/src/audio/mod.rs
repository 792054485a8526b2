//! Raw audio to normalized time-frequency features.
//!
//! The pipeline is `load_clip -> pad_to_duration -> stft_magnitude ->
//! trim_frequency | mel_project -> normalize`, with the activity mask derived
//! from the number of real (unpadded) samples.
//!
//! Framing is left-aligned without reflection padding: a clip of `L` samples
//! analysed with an `n`-sample window and hop `h` yields
//! `T = floor((L - n) / h) + 1` frames, frame `t` covering samples
//! `[t*h, t*h + n)`. A trailing partial frame is never emitted. One second at
//! 48 kHz with 960/480 framing gives exactly 99 frames.

mod mel;
mod stft;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use mel::mel_filterbank;
pub use stft::{hann_window, stft_magnitude, Window};

/// A mono recording at a known sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub source_id: String,
    pub label: Option<u32>,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32, source_id: impl Into<String>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Numeric("clip contains non-finite samples".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
            source_id: source_id.into(),
            label: None,
        })
    }

    pub fn with_label(mut self, label: u32) -> Self {
        self.label = Some(label);
        self
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisKind {
    LinearFrequency,
    Mel,
}

/// Where the standardization statistics came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatsSource {
    PerSample,
    Provided,
}

/// Statistics used by [`normalize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: f64,
    pub variance: f64,
    pub source: StatsSource,
}

/// A `frames x bins` feature matrix stored row-major (one row per frame).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub values: Vec<f64>,
    pub frames: usize,
    pub bins: usize,
    pub frame_rate: f64,
    pub axis: AxisKind,
    pub normalized: bool,
    /// Sample rate and FFT length of the analysis, and the index of the first
    /// retained FFT bin. Needed to map linear bins to Hz.
    pub sample_rate: u32,
    pub fft_len: usize,
    pub first_bin: usize,
    pub stats: Option<NormStats>,
    /// Set when normalization met a constant matrix.
    pub degenerate: bool,
}

impl Spectrogram {
    pub fn get(&self, t: usize, f: usize) -> f64 {
        self.values[t * self.bins + f]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.bins..(t + 1) * self.bins]
    }

    /// Frequency in Hz of linear bin `f`.
    pub fn bin_hz(&self, f: usize) -> f64 {
        (self.first_bin + f) as f64 * self.sample_rate as f64 / self.fft_len as f64
    }
}

/// Per-frame sound activity indicator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityMask {
    pub frames: Vec<u8>,
}

impl ActivityMask {
    pub fn ones(len: usize) -> Self {
        Self {
            frames: vec![1; len],
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn active_count(&self) -> usize {
        self.frames.iter().filter(|&&m| m != 0).count()
    }
}

/// Reads a WAV file, down-mixes to mono by channel mean and resamples to
/// `expected_rate`.
pub fn load_clip(path: &Path, expected_rate: u32) -> Result<AudioClip> {
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.len() == 0 {
        return Err(Error::EmptyInput(format!("{} is empty", path.display())));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = hound::WavReader::new(BufReader::new(file))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        hound::SampleFormat::Int => {
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()?
        }
    };
    if interleaved.is_empty() {
        return Err(Error::EmptyInput(format!(
            "{} contains no samples",
            path.display()
        )));
    }
    let mono = downmix(&interleaved, channels);
    let samples = resample(&mono, spec.sample_rate, expected_rate)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    AudioClip::new(samples, expected_rate, id)
}

/// Channel mean of interleaved audio.
pub fn downmix(interleaved: &[f64], channels: usize) -> Vec<f64> {
    if channels <= 1 {
        return interleaved.to_vec();
    }
    interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect()
}

/// Band-limited resampling of a mono signal. The output has
/// `ceil(len * to / from)` samples.
pub fn resample(samples: &[f64], from: u32, to: u32) -> Result<Vec<f64>> {
    use audioadapter_buffers::direct::SequentialSliceOfVecs;
    use rubato::{Fft, FixedSync, Resampler};

    if from == to {
        return Ok(samples.to_vec());
    }
    let buf = vec![samples.to_vec()];
    let input = SequentialSliceOfVecs::new(&buf, 1, samples.len())
        .map_err(|e| Error::Resample(e.to_string()))?;
    let mut resampler = Fft::<f64>::new(from as usize, to as usize, 1024, 1, FixedSync::Input)
        .map_err(|e| Error::Resample(e.to_string()))?;
    let out = resampler
        .process_all(&input, samples.len(), None)
        .map_err(|e| Error::Resample(e.to_string()))?;
    Ok(out.take_data())
}

/// Zero-pads a clip to exactly `target_s` seconds. Returns the padded clip and
/// the number of original samples.
pub fn pad_to_duration(clip: &AudioClip, target_s: f64) -> Result<(AudioClip, usize)> {
    let target = (target_s * clip.sample_rate as f64).round() as usize;
    let len = clip.samples.len();
    if len > target {
        return Err(Error::Overlength { len, target });
    }
    let mut samples = Vec::with_capacity(target);
    samples.extend_from_slice(&clip.samples);
    samples.resize(target, 0.0);
    Ok((
        AudioClip {
            samples,
            ..clip.clone()
        },
        len,
    ))
}

/// Keeps `keep_bins` frequency bins, optionally dropping the DC bin first.
pub fn trim_frequency(spec: &Spectrogram, keep_bins: usize, drop_dc: bool) -> Result<Spectrogram> {
    let offset = usize::from(drop_dc);
    if spec.bins < keep_bins + offset {
        return Err(Error::Dimension(format!(
            "cannot keep {keep_bins} bins (drop_dc = {drop_dc}) from {} bins",
            spec.bins
        )));
    }
    let mut values = Vec::with_capacity(spec.frames * keep_bins);
    for t in 0..spec.frames {
        values.extend_from_slice(&spec.row(t)[offset..offset + keep_bins]);
    }
    Ok(Spectrogram {
        values,
        bins: keep_bins,
        first_bin: spec.first_bin + offset,
        ..spec.clone()
    })
}

/// Projects a linear-frequency magnitude spectrogram onto `n_mels`
/// area-normalized triangular filters spanning `0..f_max` Hz.
pub fn mel_project(spec: &Spectrogram, n_mels: usize, f_max: f64) -> Result<Spectrogram> {
    if spec.axis == AxisKind::Mel {
        return Err(Error::State("spectrogram is already mel-scaled".into()));
    }
    if spec.normalized {
        return Err(Error::State("mel projection expects unnormalized magnitudes".into()));
    }
    let freqs: Vec<f64> = (0..spec.bins).map(|f| spec.bin_hz(f)).collect();
    let bank = mel_filterbank(n_mels, &freqs, 0.0, f_max);
    let mut values = vec![0.0; spec.frames * n_mels];
    for t in 0..spec.frames {
        let row = spec.row(t);
        for (m, filter) in bank.iter().enumerate() {
            values[t * n_mels + m] = filter.iter().zip(row).map(|(w, v)| w * v).sum();
        }
    }
    Ok(Spectrogram {
        values,
        bins: n_mels,
        axis: AxisKind::Mel,
        ..spec.clone()
    })
}

/// Standardizes by mean and variance, then min-max scales into `[0, 1]`.
///
/// A constant matrix maps to all `0.5` with `degenerate` set.
pub fn normalize(spec: &Spectrogram, stats: Option<NormStats>) -> Result<Spectrogram> {
    if spec.normalized {
        return Err(Error::State("spectrogram is already normalized".into()));
    }
    let n = spec.values.len();
    if n == 0 {
        return Err(Error::EmptyInput("spectrogram has no entries".into()));
    }
    let stats = stats.unwrap_or_else(|| {
        let mean = spec.values.iter().sum::<f64>() / n as f64;
        let variance = spec.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        NormStats {
            mean,
            variance,
            source: StatsSource::PerSample,
        }
    });
    let (lo, hi) = spec
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let mut out = spec.clone();
    out.normalized = true;
    out.stats = Some(stats);
    if hi - lo <= 0.0 || stats.variance <= 0.0 {
        log::warn!("normalizing a constant spectrogram; emitting 0.5 everywhere");
        out.values.iter_mut().for_each(|v| *v = 0.5);
        out.degenerate = true;
        return Ok(out);
    }
    let std = stats.variance.sqrt();
    let standardized: Vec<f64> = spec.values.iter().map(|v| (v - stats.mean) / std).collect();
    let zlo = (lo - stats.mean) / std;
    let zhi = (hi - stats.mean) / std;
    let span = zhi - zlo;
    for (o, z) in out.values.iter_mut().zip(&standardized) {
        *o = ((z - zlo) / span).clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Marks frame `t` active iff its sample span `[t*hop, t*hop + fft_len)`
/// contains at least one of the first `raw_valid_count` samples. Signals
/// that give `frames` frames are shorter than `covered + hop`; the tail past
/// the last frame belongs to no frame.
pub fn activity_mask_from_padding(
    raw_valid_count: usize,
    fft_len: usize,
    hop: usize,
    frames: usize,
) -> Result<ActivityMask> {
    if frames == 0 || hop == 0 || fft_len == 0 {
        return Err(Error::Dimension(
            "mask needs positive frame count, hop and window".into(),
        ));
    }
    let covered = (frames - 1) * hop + fft_len;
    if raw_valid_count >= covered + hop {
        return Err(Error::Dimension(format!(
            "{raw_valid_count} valid samples cannot come from a {frames}-frame signal"
        )));
    }
    let frames = (0..frames)
        .map(|t| u8::from(t * hop < raw_valid_count))
        .collect();
    Ok(ActivityMask { frames })
}

/// Feature extraction settings for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AudioConfig {
    pub sample_rate: u32,
    pub duration_s: f64,
    pub fft_len: usize,
    pub hop: usize,
    #[serde(default)]
    pub window: Window,
    /// Linear-frequency trimming; ignored when `n_mels` is set.
    #[serde(default)]
    pub keep_bins: Option<usize>,
    #[serde(default)]
    pub drop_dc: bool,
    #[serde(default)]
    pub n_mels: Option<usize>,
    #[serde(default = "default_mel_fmax")]
    pub mel_fmax: f64,
    /// When false the activity mask is all ones.
    #[serde(default = "default_true")]
    pub use_mask: bool,
    /// Clips longer than `duration_s` are truncated instead of rejected.
    #[serde(default = "default_true")]
    pub truncate_overlength: bool,
}

fn default_mel_fmax() -> f64 {
    8000.0
}

fn default_true() -> bool {
    true
}

impl AudioConfig {
    /// Spoken digits: 1 s at the corpus' native 48 kHz, 960/480 Hann, bins
    /// 1..=128 (about 6.4 kHz). Gives 99 x 128 features.
    pub fn audiomnist() -> Self {
        Self {
            sample_rate: 48_000,
            duration_s: 1.0,
            fft_len: 960,
            hop: 480,
            window: Window::Hann,
            keep_bins: Some(128),
            drop_dc: true,
            n_mels: None,
            mel_fmax: default_mel_fmax(),
            use_mask: true,
            truncate_overlength: true,
        }
    }

    /// Acoustic scenes, 10 s files at 16 kHz with 128 mel bands.
    pub fn tau2019() -> Self {
        Self {
            sample_rate: 16_000,
            duration_s: 10.0,
            fft_len: 960,
            hop: 480,
            window: Window::Hann,
            keep_bins: None,
            drop_dc: false,
            n_mels: Some(128),
            mel_fmax: default_mel_fmax(),
            use_mask: true,
            truncate_overlength: true,
        }
    }

    /// Urban sound excerpts padded to 4 s, 16 kHz, 128 mel bands.
    pub fn us8k() -> Self {
        Self {
            duration_s: 4.0,
            ..Self::tau2019()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "audiomnist" => Some(Self::audiomnist()),
            "tau2019" => Some(Self::tau2019()),
            "us8k" => Some(Self::us8k()),
            _ => None,
        }
    }

    pub fn target_samples(&self) -> usize {
        (self.duration_s * self.sample_rate as f64).round() as usize
    }

    /// Number of STFT frames of a padded clip.
    pub fn frames(&self) -> usize {
        frame_count(self.target_samples(), self.fft_len, self.hop)
    }

    /// Number of frames spanning `seconds` of audio.
    pub fn frames_for(&self, seconds: f64) -> usize {
        let n = (seconds * self.sample_rate as f64).round() as usize;
        frame_count(n, self.fft_len, self.hop)
    }

    pub fn bins(&self) -> usize {
        match (self.n_mels, self.keep_bins) {
            (Some(m), _) => m,
            (None, Some(k)) => k,
            (None, None) => self.fft_len / 2 + 1 - usize::from(self.drop_dc),
        }
    }

    pub fn axis(&self) -> AxisKind {
        if self.n_mels.is_some() {
            AxisKind::Mel
        } else {
            AxisKind::LinearFrequency
        }
    }
}

/// Left-aligned frame count, zero when the signal is shorter than a window.
pub fn frame_count(len: usize, fft_len: usize, hop: usize) -> usize {
    if len < fft_len || hop == 0 {
        0
    } else {
        (len - fft_len) / hop + 1
    }
}

/// Runs the whole pipeline on one clip.
pub fn extract_features(clip: &AudioClip, cfg: &AudioConfig) -> Result<(Spectrogram, ActivityMask)> {
    if clip.sample_rate != cfg.sample_rate {
        return Err(Error::Config(format!(
            "clip is at {} Hz, pipeline expects {} Hz",
            clip.sample_rate, cfg.sample_rate
        )));
    }
    let target = cfg.target_samples();
    let clip = if clip.samples.len() > target && cfg.truncate_overlength {
        log::warn!(
            "{}: truncating {} samples to {}",
            clip.source_id,
            clip.samples.len(),
            target
        );
        AudioClip {
            samples: clip.samples[..target].to_vec(),
            ..clip.clone()
        }
    } else {
        clip.clone()
    };
    let (padded, valid) = pad_to_duration(&clip, cfg.duration_s)?;
    let spec = stft_magnitude(&padded, cfg.fft_len, cfg.hop, cfg.window)?;
    let spec = match (cfg.n_mels, cfg.keep_bins) {
        (Some(m), _) => mel_project(&spec, m, cfg.mel_fmax)?,
        (None, Some(k)) => trim_frequency(&spec, k, cfg.drop_dc)?,
        (None, None) if cfg.drop_dc => trim_frequency(&spec, spec.bins - 1, true)?,
        (None, None) => spec,
    };
    let spec = normalize(&spec, None)?;
    let mask = if cfg.use_mask {
        activity_mask_from_padding(valid, cfg.fft_len, cfg.hop, spec.frames)?
    } else {
        ActivityMask::ones(spec.frames)
    };
    Ok((spec, mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clip(len: usize, rate: u32) -> AudioClip {
        AudioClip::new(vec![0.25; len], rate, "c").unwrap()
    }

    #[test]
    fn pad_arithmetic() {
        let (p, n) = pad_to_duration(&clip(9600, 16_000), 1.0).unwrap();
        assert_eq!(p.samples.len(), 16_000);
        assert_eq!(n, 9600);
        assert!(p.samples[..9600].iter().all(|&s| s == 0.25));
        assert!(p.samples[9600..].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn pad_identity() {
        let c = clip(16_000, 16_000);
        let (p, n) = pad_to_duration(&c, 1.0).unwrap();
        assert_eq!(p, c);
        assert_eq!(n, 16_000);
    }

    #[test]
    fn pad_overlength() {
        let err = pad_to_duration(&clip(70_000, 16_000), 4.0).unwrap_err();
        assert!(matches!(err, Error::Overlength { len: 70_000, target: 64_000 }));
    }

    #[test]
    fn stereo_downmix_is_channel_mean() {
        let inter: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let mono = downmix(&inter, 2);
        assert_eq!(mono.len(), 10);
        for (i, m) in mono.iter().enumerate() {
            let oracle = (inter[2 * i] + inter[2 * i + 1]) / 2.0;
            assert!((m - oracle).abs() < 1e-15);
        }
    }

    #[test]
    fn resample_preserves_duration() {
        let sig: Vec<f64> = (0..48_000)
            .map(|i| (2.0 * std::f64::consts::PI * 440.0 * i as f64 / 48_000.0).sin())
            .collect();
        let out = resample(&sig, 48_000, 16_000).unwrap();
        assert_eq!(out.len(), 16_000);
    }

    #[test]
    fn frame_counts() {
        assert_eq!(AudioConfig::audiomnist().frames(), 99);
        assert_eq!(AudioConfig::audiomnist().bins(), 128);
        assert_eq!(frame_count(16_000, 960, 480), 32);
        assert_eq!(AudioConfig::us8k().frames(), 132);
        assert_eq!(AudioConfig::tau2019().frames(), 332);
        assert_eq!(AudioConfig::tau2019().frames_for(1.0), 32);
    }

    #[test]
    fn mask_all_and_none() {
        let m = activity_mask_from_padding(48_000, 960, 480, 99).unwrap();
        assert_eq!(m.active_count(), 99);
        let m = activity_mask_from_padding(0, 960, 480, 99).unwrap();
        assert_eq!(m.active_count(), 0);
    }

    #[test]
    fn mask_boundary_matches_span_enumeration() {
        let (valid, n, hop, frames) = (9600, 960, 480, 99);
        let m = activity_mask_from_padding(valid, n, hop, frames).unwrap();
        for t in 0..frames {
            let span = t * hop..t * hop + n;
            let oracle = span.clone().any(|s| s < valid);
            assert_eq!(m.frames[t] == 1, oracle, "frame {t}");
        }
        // frames 0..=19 touch a real sample; frame 19 spans [9120, 10080).
        assert_eq!(m.active_count(), 20);
        assert!(m.frames[..20].iter().all(|&v| v == 1));
    }

    #[test]
    fn mask_inconsistent_frames() {
        assert!(activity_mask_from_padding(20_000, 960, 480, 10).is_err());
        // 1 s at 16 kHz: 32 frames cover 15840 samples, the last 160 fall in none
        assert_eq!(activity_mask_from_padding(16_000, 960, 480, 32).unwrap().active_count(), 32);
        assert!(activity_mask_from_padding(15_840 + 480, 960, 480, 32).is_err());
        assert!(activity_mask_from_padding(10, 960, 480, 0).is_err());
    }

    fn spec_from(values: Vec<f64>, frames: usize, bins: usize) -> Spectrogram {
        Spectrogram {
            values,
            frames,
            bins,
            frame_rate: 100.0,
            axis: AxisKind::LinearFrequency,
            normalized: false,
            sample_rate: 16_000,
            fft_len: 960,
            first_bin: 0,
            stats: None,
            degenerate: false,
        }
    }

    #[test]
    fn trim_keeps_bins_after_dc() {
        let s = spec_from((0..2 * 481).map(|v| v as f64).collect(), 2, 481);
        let t = trim_frequency(&s, 128, true).unwrap();
        assert_eq!(t.bins, 128);
        assert_eq!(t.get(0, 0), 1.0);
        assert_eq!(t.get(1, 127), 481.0 + 128.0);
        assert_eq!(t.first_bin, 1);
        // bin 128 of a 960-point FFT at 48 kHz sits at 6.4 kHz
        let mut s48 = t.clone();
        s48.sample_rate = 48_000;
        assert!((s48.bin_hz(127) - 6400.0).abs() < 1e-9);
    }

    #[test]
    fn trim_identity_and_error() {
        let s = spec_from(vec![1.0; 3 * 129], 3, 129);
        assert_eq!(trim_frequency(&s, 129, false).unwrap().values, s.values);
        assert!(matches!(trim_frequency(&s, 200, true), Err(Error::Dimension(_))));
    }

    #[test]
    fn normalize_range_and_degenerate() {
        let s = spec_from(vec![0.0, 1.0, 4.0, 9.0, 2.0, 3.0], 2, 3);
        let n = normalize(&s, None).unwrap();
        let lo = n.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = n.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((lo, hi), (0.0, 1.0));
        assert!(n.normalized && !n.degenerate);
        assert_eq!(n.stats.unwrap().source, StatsSource::PerSample);

        let c = normalize(&spec_from(vec![3.0; 6], 2, 3), None).unwrap();
        assert!(c.degenerate);
        assert!(c.values.iter().all(|&v| v == 0.5));

        assert!(matches!(normalize(&n, None), Err(Error::State(_))));
    }

    #[test]
    fn mel_twice_is_state_error() {
        let s = spec_from(vec![0.0; 4 * 481], 4, 481);
        let m = mel_project(&s, 128, 8000.0).unwrap();
        assert_eq!(m.bins, 128);
        assert!(m.values.iter().all(|&v| v == 0.0));
        assert!(matches!(mel_project(&m, 128, 8000.0), Err(Error::State(_))));
    }

    #[test]
    fn empty_file_is_empty_input() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.wav");
        std::fs::write(&p, b"").unwrap();
        assert!(matches!(load_clip(&p, 16_000), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn extract_audiomnist_geometry() {
        let c = AudioClip::new(
            (0..30_000).map(|i| (i as f64 * 0.05).sin()).collect(),
            48_000,
            "d",
        )
        .unwrap();
        let (spec, mask) = extract_features(&c, &AudioConfig::audiomnist()).unwrap();
        assert_eq!((spec.frames, spec.bins), (99, 128));
        assert_eq!(mask.len(), 99);
        // masked-out frames come from pure padding and normalize to zero
        for t in (0..99).filter(|&t| mask.frames[t] == 0) {
            assert!(spec.row(t).iter().all(|&v| v == 0.0));
        }
    }
}
