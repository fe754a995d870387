use std::f64::consts::{PI, TAU};

use super::shape::unit_sample;
use super::{SampleBuffer, StimulusProgram, SynthError, WaveShape, WaveformSpec};

/// Normalized phase `frac(frequency * n / sample_rate)` for sample index `n`.
///
/// Every finite `f64` frequency is a dyadic rational `m / 2^s`, so for all
/// practical frequencies the phase is reduced with exact integer arithmetic
/// and only the final division rounds. This keeps the signal exactly periodic
/// whenever `sample_rate / frequency` is an integer.
#[derive(Debug, Clone, Copy)]
enum PhaseClock {
    Exact { numerator: u128, denominator: u128 },
    Float { cycles_per_sample: f64 },
}

const MAX_DYADIC_SHIFT: u32 = 64;

impl PhaseClock {
    fn new(frequency: f64, sample_rate: u32) -> Self {
        match dyadic(frequency) {
            Some((mantissa, shift)) => PhaseClock::Exact {
                numerator: u128::from(mantissa),
                denominator: u128::from(sample_rate) << shift,
            },
            None => PhaseClock::Float {
                cycles_per_sample: frequency / sample_rate as f64,
            },
        }
    }

    #[inline]
    fn phase(&self, n: u64) -> f64 {
        let phase = match *self {
            PhaseClock::Exact {
                numerator,
                denominator,
            } => {
                let r = (numerator * u128::from(n)) % denominator;
                r as f64 / denominator as f64
            }
            PhaseClock::Float { cycles_per_sample } => {
                let x = cycles_per_sample * n as f64;
                x - x.floor()
            }
        };
        // r < denominator, but both are rounded to f64 before dividing.
        if phase >= 1.0 {
            1.0 - f64::EPSILON / 2.0
        } else {
            phase
        }
    }
}

/// Splits a positive finite `x` into `(m, s)` with `x = m / 2^s` and `m` odd
/// (or `s = 0`). Returns `None` when `s` would exceed [`MAX_DYADIC_SHIFT`].
fn dyadic(x: f64) -> Option<(u64, u32)> {
    let bits = x.to_bits();
    let exponent = ((bits >> 52) & 0x7ff) as i32;
    let fraction = bits & ((1u64 << 52) - 1);
    let (mut mantissa, mut exp) = if exponent == 0 {
        (fraction, -1074)
    } else {
        (fraction | (1u64 << 52), exponent - 1075)
    };
    if mantissa == 0 {
        return None;
    }
    let tz = mantissa.trailing_zeros() as i32;
    mantissa >>= tz;
    exp += tz;
    if exp >= 0 {
        // Integers below 2^64 only; anything larger is far beyond Nyquist.
        let shifted = mantissa.checked_shl(exp as u32)?;
        if shifted >> exp != mantissa {
            return None;
        }
        Some((shifted, 0))
    } else {
        let shift = (-exp) as u32;
        (shift <= MAX_DYADIC_SHIFT).then_some((mantissa, shift))
    }
}

/// Renders `spec` by direct per-sample evaluation (no band-limiting).
///
/// Sample `n` is `amplitude * gain(n / fs) * oscillator(frac(f n / fs))`
/// for `n` in `0..round(duration * fs)`.
pub fn render_wave(spec: &WaveformSpec) -> Result<SampleBuffer, SynthError> {
    spec.validate()?;
    let count = spec.sample_count();
    let clock = PhaseClock::new(spec.frequency, spec.sample_rate);
    let fs = spec.sample_rate as f64;
    let samples = (0..count)
        .map(|n| {
            let t = n as f64 / fs;
            let gain = spec.amplitude * spec.envelope.gain_at(t / spec.duration);
            gain * unit_sample(spec.shape, clock.phase(n))
        })
        .collect();
    Ok(SampleBuffer::from_trusted(samples, spec.sample_rate))
}

/// Renders `spec` as a sum of harmonic partials strictly below Nyquist.
///
/// Gibbs overshoot is removed by rescaling so the peak never exceeds
/// `amplitude`. Not bit-compatible with [`render_wave`].
pub fn render_band_limited(spec: &WaveformSpec) -> Result<SampleBuffer, SynthError> {
    spec.validate()?;
    let count = spec.sample_count();
    let clock = PhaseClock::new(spec.frequency, spec.sample_rate);
    let fs = spec.sample_rate as f64;
    let nyquist = fs / 2.0;
    let harmonics = ((nyquist / spec.frequency).ceil() as u64).saturating_sub(1).max(1);

    let partial_sum = |phase: f64| -> f64 {
        match spec.shape {
            WaveShape::Sine => (TAU * phase).sin(),
            WaveShape::Square => {
                let s: f64 = (1..=harmonics)
                    .step_by(2)
                    .map(|h| (TAU * h as f64 * phase).sin() / h as f64)
                    .sum();
                4.0 / PI * s
            }
            WaveShape::Triangle => {
                let s: f64 = (1..=harmonics)
                    .step_by(2)
                    .map(|h| {
                        let sign = if (h / 2) % 2 == 0 { 1.0 } else { -1.0 };
                        sign * (TAU * h as f64 * phase).sin() / (h * h) as f64
                    })
                    .sum();
                8.0 / (PI * PI) * s
            }
            WaveShape::Sawtooth => {
                let s: f64 = (1..=harmonics)
                    .map(|h| (TAU * h as f64 * phase).sin() / h as f64)
                    .sum();
                -2.0 / PI * s
            }
        }
    };

    let mut samples: Vec<f64> = (0..count)
        .map(|n| {
            let t = n as f64 / fs;
            let gain = spec.amplitude * spec.envelope.gain_at(t / spec.duration);
            gain * partial_sum(clock.phase(n))
        })
        .collect();

    let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > spec.amplitude && peak > 0.0 {
        let scale = spec.amplitude / peak;
        for s in &mut samples {
            *s = (*s * scale).clamp(-spec.amplitude, spec.amplitude);
        }
    }
    Ok(SampleBuffer::from_trusted(samples, spec.sample_rate))
}

/// Concatenates `repeats` renderings separated by `round(gap * fs)` zeros.
pub fn assemble_program(program: &StimulusProgram) -> Result<SampleBuffer, SynthError> {
    program.validate()?;
    let wave = render_wave(&program.waveform)?;
    let gap = program.gap_samples() as usize;
    let mut out = Vec::with_capacity(program.total_samples() as usize);
    for rep in 0..program.repeats {
        if rep > 0 {
            out.resize(out.len() + gap, 0.0);
        }
        out.extend_from_slice(wave.samples());
    }
    Ok(SampleBuffer::from_trusted(out, program.waveform.sample_rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::Envelope;

    #[test]
    fn dyadic_decomposition() {
        assert_eq!(dyadic(200.0), Some((200, 0)));
        assert_eq!(dyadic(0.5), Some((1, 1)));
        assert_eq!(dyadic(200.25), Some((801, 2)));
        let (m, s) = dyadic(200.3).unwrap();
        assert_eq!(m as f64 / 2f64.powi(s as i32), 200.3);
        assert_eq!(dyadic(1e-30), None);
    }

    #[test]
    fn phase_matches_float_definition() {
        for &f in &[200.0, 100.0, 200.3, 441.0, 37.125, 1234.567] {
            let exact = PhaseClock::new(f, 44_100);
            let float = PhaseClock::Float {
                cycles_per_sample: f / 44_100.0,
            };
            for n in [0u64, 1, 17, 220, 221, 22_049, 44_100, 1_000_003] {
                let a = exact.phase(n);
                let b = float.phase(n);
                let d = (a - b).abs().min(1.0 - (a - b).abs());
                assert!(d < 1e-9, "f={f} n={n}: {a} vs {b}");
                assert!((0.0..1.0).contains(&a));
            }
        }
    }

    #[test]
    fn sine_default_battery_waveform() {
        let spec = WaveformSpec::default().with_duration(0.5);
        let buf = render_wave(&spec).unwrap();
        assert_eq!(buf.len(), 22_050);
        assert_eq!(buf[0], 0.0);
        let peak = buf.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        assert!((0.9999..=1.0).contains(&peak));
    }

    #[test]
    fn zero_amplitude_is_silent() {
        for shape in WaveShape::ALL {
            let buf = render_wave(&WaveformSpec::new(shape).with_amplitude(0.0)).unwrap();
            assert!(buf.iter().all(|&s| s == 0.0));
        }
    }

    #[test]
    fn decayed_square_endpoints() {
        let spec = WaveformSpec::new(WaveShape::Square)
            .with_duration(0.5)
            .with_envelope(Envelope::decay(5.0).unwrap());
        let buf = render_wave(&spec).unwrap();
        assert_eq!(buf[0], 1.0);
        // The last sample sits one sample period before T.
        let eps = (-5.0f64).exp() * ((5.0f64 / 22_050.0).exp() - 1.0);
        assert!(buf[buf.len() - 1].abs() <= (-5.0f64).exp() + eps + 1e-15);
        assert!(buf[buf.len() - 1].abs() > (-5.0f64).exp());
    }

    #[test]
    fn render_errors() {
        let nyq = WaveformSpec::default().with_frequency(30_000.0);
        assert!(matches!(render_wave(&nyq), Err(SynthError::Nyquist { .. })));
        let tiny = WaveformSpec::default().with_duration(1e-7);
        assert!(matches!(
            render_wave(&tiny),
            Err(SynthError::DegenerateDuration { .. })
        ));
    }

    #[test]
    fn single_repeat_program_equals_wave() {
        let wave = WaveformSpec::new(WaveShape::Triangle).with_duration(0.05);
        let program = StimulusProgram::new("t", wave).with_gap(0.3);
        assert_eq!(
            assemble_program(&program).unwrap(),
            render_wave(&wave).unwrap()
        );
    }

    #[test]
    fn gaps_are_exact_silence() {
        let wave = WaveformSpec::new(WaveShape::Square).with_duration(0.5);
        let program = StimulusProgram::new("sq", wave).with_repeats(5).with_gap(0.1);
        let buf = assemble_program(&program).unwrap();
        assert_eq!(buf.len(), 127_890);
        for rep in 0..4 {
            let start = 22_050 + rep * (22_050 + 4_410);
            assert!(buf[start..start + 4_410].iter().all(|&s| s == 0.0));
            assert_eq!(buf[start + 4_410], 1.0);
        }
    }

    #[test]
    fn band_limited_stays_within_amplitude() {
        for shape in WaveShape::ALL {
            let spec = WaveformSpec::new(shape).with_amplitude(0.8).with_duration(0.02);
            let buf = render_band_limited(&spec).unwrap();
            assert_eq!(buf.len(), 882);
            assert!(buf.iter().all(|s| s.abs() <= 0.8));
        }
    }
}
