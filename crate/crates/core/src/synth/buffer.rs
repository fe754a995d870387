use std::ops::Deref;
use std::sync::Arc;

use super::SynthError;

/// Immutable mono signal with every sample in `[-1, 1]`.
///
/// Cloning is cheap: the samples live behind an `Arc` and are shared.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    samples: Arc<[f64]>,
    sample_rate: u32,
}

impl SampleBuffer {
    /// Fails if `samples` is empty, `sample_rate` is zero, or any sample is
    /// non-finite or has magnitude above 1.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, SynthError> {
        if samples.is_empty() {
            return Err(SynthError::EmptyBuffer);
        }
        if sample_rate == 0 {
            return Err(SynthError::invalid("sample_rate", "must be positive"));
        }
        if let Some((index, &value)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| s.is_nan() || s.abs() > 1.0)
        {
            return Err(SynthError::SampleOutOfRange { index, value });
        }
        Ok(SampleBuffer {
            samples: samples.into(),
            sample_rate,
        })
    }

    /// Caller guarantees the invariants.
    pub(crate) fn from_trusted(samples: Vec<f64>, sample_rate: u32) -> Self {
        debug_assert!(!samples.is_empty());
        debug_assert!(samples.iter().all(|s| s.abs() <= 1.0));
        SampleBuffer {
            samples: samples.into(),
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Shared handle to the sample storage.
    pub fn shared(&self) -> Arc<[f64]> {
        Arc::clone(&self.samples)
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

impl Deref for SampleBuffer {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.samples
    }
}
