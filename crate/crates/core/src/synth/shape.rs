use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SynthError;

/// Oscillator shape of a vibrotactile carrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WaveShape {
    #[default]
    Sine,
    Square,
    Triangle,
    Sawtooth,
}

impl WaveShape {
    pub const ALL: [WaveShape; 4] = [
        WaveShape::Sine,
        WaveShape::Square,
        WaveShape::Triangle,
        WaveShape::Sawtooth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WaveShape::Sine => "sine",
            WaveShape::Square => "square",
            WaveShape::Triangle => "triangle",
            WaveShape::Sawtooth => "sawtooth",
        }
    }
}

impl fmt::Display for WaveShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WaveShape {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sine" => Ok(WaveShape::Sine),
            "square" => Ok(WaveShape::Square),
            "triangle" => Ok(WaveShape::Triangle),
            "sawtooth" => Ok(WaveShape::Sawtooth),
            other => Err(SynthError::invalid(
                "shape",
                format!("unknown shape `{other}` (expected sine, square, triangle or sawtooth)"),
            )),
        }
    }
}

/// Unit-amplitude value of `shape` at normalized phase `phase` in `[0, 1)`.
///
/// The triangle is sine-phase-aligned (0 at phase 0, +1 at 0.25, -1 at 0.75);
/// the sawtooth is a rising ramp starting at -1.
pub fn oscillator_sample(shape: WaveShape, phase: f64) -> Result<f64, SynthError> {
    if !(0.0..1.0).contains(&phase) {
        return Err(SynthError::PhaseOutOfRange(phase));
    }
    Ok(unit_sample(shape, phase))
}

#[inline]
pub(crate) fn unit_sample(shape: WaveShape, phase: f64) -> f64 {
    match shape {
        WaveShape::Sine => (TAU * phase).sin(),
        WaveShape::Square => {
            if phase < 0.5 {
                1.0
            } else {
                -1.0
            }
        }
        WaveShape::Triangle => {
            if phase < 0.25 {
                4.0 * phase
            } else if phase < 0.75 {
                2.0 - 4.0 * phase
            } else {
                4.0 * phase - 4.0
            }
        }
        WaveShape::Sawtooth => 2.0 * phase - 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_values() {
        assert_eq!(oscillator_sample(WaveShape::Sine, 0.0).unwrap(), 0.0);
        assert_eq!(oscillator_sample(WaveShape::Sine, 0.25).unwrap(), 1.0);
        assert_eq!(oscillator_sample(WaveShape::Square, 0.1).unwrap(), 1.0);
        assert_eq!(oscillator_sample(WaveShape::Square, 0.6).unwrap(), -1.0);
        assert_eq!(oscillator_sample(WaveShape::Triangle, 0.25).unwrap(), 1.0);
        assert_eq!(oscillator_sample(WaveShape::Sawtooth, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn square_boundary_is_negative() {
        assert_eq!(oscillator_sample(WaveShape::Square, 0.5).unwrap(), -1.0);
        assert_eq!(oscillator_sample(WaveShape::Square, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn triangle_segments() {
        assert_eq!(oscillator_sample(WaveShape::Triangle, 0.0).unwrap(), 0.0);
        assert_eq!(oscillator_sample(WaveShape::Triangle, 0.5).unwrap(), 0.0);
        assert_eq!(oscillator_sample(WaveShape::Triangle, 0.75).unwrap(), -1.0);
        assert_eq!(oscillator_sample(WaveShape::Sawtooth, 0.0).unwrap(), -1.0);
    }

    #[test]
    fn phase_out_of_range() {
        for bad in [1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                oscillator_sample(WaveShape::Sine, bad),
                Err(SynthError::PhaseOutOfRange(_))
            ));
        }
    }

    #[test]
    fn parse_rejects_unknown_tag() {
        assert_eq!("triangle".parse::<WaveShape>().unwrap(), WaveShape::Triangle);
        assert!("pulse".parse::<WaveShape>().is_err());
        assert!(serde_json::from_str::<WaveShape>("\"noise\"").is_err());
    }

    #[test]
    fn values_stay_in_unit_range() {
        for shape in WaveShape::ALL {
            for i in 0..1000 {
                let v = oscillator_sample(shape, i as f64 / 1000.0).unwrap();
                assert!((-1.0..=1.0).contains(&v), "{shape} at {i}: {v}");
            }
        }
    }
}
