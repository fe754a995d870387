use serde::{Deserialize, Serialize};

use super::SynthError;

/// Upper bound on preview bucket counts.
pub const MAX_PREVIEW_BUCKETS: usize = 10_000;

/// Intensity proxies over normalized samples (not physical acceleration).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformMetrics {
    pub peak: f64,
    pub rms: f64,
    pub mean_rectified: f64,
}

pub fn waveform_metrics(samples: &[f64]) -> Result<WaveformMetrics, SynthError> {
    if samples.is_empty() {
        return Err(SynthError::EmptyBuffer);
    }
    let (peak, sum_sq, sum_abs) = samples
        .iter()
        .fold((0.0f64, 0.0f64, 0.0f64), |(peak, sq, abs), &s| {
            (peak.max(s.abs()), sq + s * s, abs + s.abs())
        });
    let n = samples.len() as f64;
    Ok(WaveformMetrics {
        peak,
        rms: (sum_sq / n).sqrt(),
        mean_rectified: sum_abs / n,
    })
}

/// Min/max pair per bucket, for drawing a waveform without shipping every
/// sample. Uses `min(buckets, len)` buckets of near-equal width.
pub fn decimate_min_max(samples: &[f64], buckets: usize) -> Vec<(f64, f64)> {
    let buckets = buckets.min(samples.len()).min(MAX_PREVIEW_BUCKETS);
    let len = samples.len();
    (0..buckets)
        .map(|b| {
            let start = b * len / buckets;
            let end = (b + 1) * len / buckets;
            samples[start..end]
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
                    (lo.min(s), hi.max(s))
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_unit_metrics() {
        let samples: Vec<f64> = (0..1000).map(|i| if i % 10 < 5 { 1.0 } else { -1.0 }).collect();
        let m = waveform_metrics(&samples).unwrap();
        assert_eq!(m, WaveformMetrics { peak: 1.0, rms: 1.0, mean_rectified: 1.0 });
    }

    #[test]
    fn silence_metrics() {
        let m = waveform_metrics(&[0.0; 64]).unwrap();
        assert_eq!(m, WaveformMetrics { peak: 0.0, rms: 0.0, mean_rectified: 0.0 });
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(waveform_metrics(&[]), Err(SynthError::EmptyBuffer));
    }

    #[test]
    fn decimation_covers_every_sample() {
        let samples: Vec<f64> = (0..1003).map(|i| ((i as f64) * 0.37).sin()).collect();
        let pairs = decimate_min_max(&samples, 10);
        assert_eq!(pairs.len(), 10);
        let lo = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = pairs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(lo, samples.iter().cloned().fold(f64::INFINITY, f64::min));
        assert_eq!(hi, samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        assert_eq!(decimate_min_max(&samples[..3], 1000).len(), 3);
        assert_eq!(decimate_min_max(&vec![0.0; 100_000], 50_000).len(), MAX_PREVIEW_BUCKETS);
    }
}
