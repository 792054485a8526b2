use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{frame_count, AudioClip, AxisKind, Spectrogram};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

fn taper(kind: Window, n: usize) -> Vec<f64> {
    match kind {
        Window::Hann => hann_window(n),
        Window::Rectangular => vec![1.0; n],
    }
}

/// Magnitude short-time Fourier transform with left-aligned frames. Returns
/// `fft_len / 2 + 1` bins per frame.
pub fn stft_magnitude(
    clip: &AudioClip,
    fft_len: usize,
    hop: usize,
    window: Window,
) -> Result<Spectrogram> {
    let len = clip.samples.len();
    if fft_len == 0 || hop == 0 {
        return Err(Error::Config("fft length and hop must be positive".into()));
    }
    if len < fft_len {
        return Err(Error::InsufficientLength {
            len,
            window: fft_len,
        });
    }
    let frames = frame_count(len, fft_len, hop);
    let bins = fft_len / 2 + 1;
    let win = taper(window, fft_len);
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(fft_len);
    let mut buf = vec![Complex::new(0.0, 0.0); fft_len];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut values = Vec::with_capacity(frames * bins);
    for t in 0..frames {
        let start = t * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex::new(clip.samples[start + i] * win[i], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        values.extend(buf[..bins].iter().map(|c| c.norm()));
    }
    Ok(Spectrogram {
        values,
        frames,
        bins,
        frame_rate: clip.sample_rate as f64 / hop as f64,
        axis: AxisKind::LinearFrequency,
        normalized: false,
        sample_rate: clip.sample_rate,
        fft_len,
        first_bin: 0,
        stats: None,
        degenerate: false,
    })
}
