fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filters evaluated at the given bin frequencies.
///
/// Edges are equally spaced on the HTK mel scale between `f_min` and `f_max`;
/// each triangle is scaled by `2 / (upper - lower)` so that filters have
/// equal area in Hz. Returns `n_mels` rows of `bin_hz.len()` weights.
pub fn mel_filterbank(n_mels: usize, bin_hz: &[f64], f_min: f64, f_max: f64) -> Vec<Vec<f64>> {
    let (lo, hi) = (hz_to_mel(f_min), hz_to_mel(f_max));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    (0..n_mels)
        .map(|m| {
            let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
            let norm = 2.0 / (right - left);
            bin_hz
                .iter()
                .map(|&f| {
                    let w = if f > left && f <= center {
                        (f - left) / (center - left)
                    } else if f > center && f < right {
                        (right - f) / (right - center)
                    } else {
                        0.0
                    };
                    w * norm
                })
                .collect()
        })
        .collect()
}
