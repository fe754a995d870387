use serde::{Deserialize, Serialize};

use super::SynthError;

/// Exponent used when a decay or rise envelope is requested without one.
/// exp(-5) ~= 0.0067 at the far end of the stimulus.
pub const DEFAULT_EXPONENT: f64 = 5.0;

/// Exponential amplitude envelope, normalized to the waveform duration.
///
/// `Decay { k }` has gain `exp(-k t / T)` and `Rise { k }` has gain
/// `exp(k (t / T - 1))`. Both reach 1.0 at one end, and the curve shape
/// depends only on `k`, not on `T`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "EnvelopeRepr", into = "EnvelopeRepr")]
pub enum Envelope {
    #[default]
    None,
    Decay { k: f64 },
    Rise { k: f64 },
}

impl Envelope {
    pub fn decay(k: f64) -> Result<Self, SynthError> {
        check_exponent(k)?;
        Ok(Envelope::Decay { k })
    }

    pub fn rise(k: f64) -> Result<Self, SynthError> {
        check_exponent(k)?;
        Ok(Envelope::Rise { k })
    }

    pub fn kind(&self) -> EnvelopeKind {
        match self {
            Envelope::None => EnvelopeKind::None,
            Envelope::Decay { .. } => EnvelopeKind::Decay,
            Envelope::Rise { .. } => EnvelopeKind::Rise,
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        match *self {
            Envelope::None => None,
            Envelope::Decay { k } | Envelope::Rise { k } => Some(k),
        }
    }

    pub fn from_parts(kind: EnvelopeKind, k: Option<f64>) -> Result<Self, SynthError> {
        match kind {
            EnvelopeKind::None => Ok(Envelope::None),
            EnvelopeKind::Decay => Envelope::decay(k.unwrap_or(DEFAULT_EXPONENT)),
            EnvelopeKind::Rise => Envelope::rise(k.unwrap_or(DEFAULT_EXPONENT)),
        }
    }

    pub(crate) fn validate(&self) -> Result<(), SynthError> {
        match self.exponent() {
            Some(k) => check_exponent(k),
            None => Ok(()),
        }
    }

    /// Gain at normalized position `x = t / T` in `[0, 1]`, unchecked.
    #[inline]
    pub(crate) fn gain_at(&self, x: f64) -> f64 {
        match *self {
            Envelope::None => 1.0,
            Envelope::Decay { k } => (-k * x).exp(),
            Envelope::Rise { k } => (k * (x - 1.0)).exp(),
        }
    }
}

fn check_exponent(k: f64) -> Result<(), SynthError> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(SynthError::invalid(
            "envelope.k",
            format!("exponent must be a positive finite number, got {k}"),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeKind {
    None,
    Decay,
    Rise,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvelopeRepr {
    kind: EnvelopeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<f64>,
}

impl TryFrom<EnvelopeRepr> for Envelope {
    type Error = SynthError;

    fn try_from(repr: EnvelopeRepr) -> Result<Self, Self::Error> {
        Envelope::from_parts(repr.kind, repr.k)
    }
}

impl From<Envelope> for EnvelopeRepr {
    fn from(env: Envelope) -> Self {
        EnvelopeRepr {
            kind: env.kind(),
            k: env.exponent(),
        }
    }
}

/// Envelope gain at time `t` of a stimulus lasting `duration` seconds.
pub fn envelope_gain(envelope: &Envelope, t: f64, duration: f64) -> Result<f64, SynthError> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(SynthError::invalid(
            "duration",
            format!("duration must be positive, got {duration}"),
        ));
    }
    if !(0.0..=duration).contains(&t) {
        return Err(SynthError::TimeOutOfRange { t, duration });
    }
    envelope.validate()?;
    Ok(envelope.gain_at(t / duration))
}
