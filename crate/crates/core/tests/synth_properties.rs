use proptest::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use vibrobench_core::synth::{
    assemble_program, envelope_gain, oscillator_sample, render_wave, waveform_metrics, Envelope,
    StimulusProgram, WaveShape, WaveformSpec,
};

fn shape() -> impl Strategy<Value = WaveShape> {
    prop::sample::select(WaveShape::ALL.to_vec())
}

fn envelope() -> impl Strategy<Value = Envelope> {
    prop_oneof![
        Just(Envelope::None),
        (0.1f64..20.0).prop_map(|k| Envelope::Decay { k }),
        (0.1f64..20.0).prop_map(|k| Envelope::Rise { k }),
    ]
}

fn spec() -> impl Strategy<Value = WaveformSpec> {
    (
        shape(),
        1.0f64..2000.0,
        0.0f64..=1.0,
        0.001f64..0.5,
        envelope(),
        prop::sample::select(vec![8_000u32, 22_050, 44_100, 48_000]),
    )
        .prop_map(|(shape, f, a, d, env, fs)| {
            WaveformSpec::new(shape)
                .with_frequency(f.min(fs as f64 / 2.0))
                .with_amplitude(a)
                .with_duration(d)
                .with_envelope(env)
                .with_sample_rate(fs)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn samples_bounded_by_amplitude(spec in spec()) {
        let buf = render_wave(&spec).unwrap();
        prop_assert_eq!(buf.len() as u64, spec.sample_count());
        for &s in buf.iter() {
            prop_assert!(s.abs() <= spec.amplitude);
        }
    }

    #[test]
    fn rendering_is_deterministic(spec in spec()) {
        prop_assert_eq!(render_wave(&spec).unwrap(), render_wave(&spec).unwrap());
    }

    #[test]
    fn program_length_arithmetic(spec in spec(), repeats in 1u32..6, gap in 0.0f64..0.2) {
        let program = StimulusProgram::new("p", spec).with_repeats(repeats).with_gap(gap);
        let buf = assemble_program(&program).unwrap();
        let n = spec.sample_count();
        let g = (gap * spec.sample_rate as f64).round() as u64;
        prop_assert_eq!(buf.len() as u64, repeats as u64 * n + (repeats as u64 - 1) * g);
    }

    #[test]
    fn integer_period_signals_repeat_exactly(
        shape in shape(),
        divisor in prop::sample::select(vec![2u32, 3, 5, 7, 9, 10, 21, 45, 98, 147, 441]),
    ) {
        let fs = 44_100;
        let period = (fs / divisor) as usize;
        let spec = WaveformSpec::new(shape)
            .with_frequency(divisor as f64)
            .with_duration(0.25)
            .with_sample_rate(fs);
        let buf = render_wave(&spec).unwrap();
        for i in period..buf.len() {
            prop_assert_eq!(buf[i].to_bits(), buf[i - period].to_bits(), "i = {}", i);
        }
    }
}

#[test]
fn oscillator_point_identities() {
    let at = |s, p| oscillator_sample(s, p).unwrap();
    assert_eq!(at(WaveShape::Sine, 0.0), 0.0);
    assert_eq!(at(WaveShape::Sine, 0.25), 1.0);
    assert_eq!(at(WaveShape::Square, 0.0), 1.0);
    assert_eq!(at(WaveShape::Square, 0.4999), 1.0);
    assert_eq!(at(WaveShape::Square, 0.5), -1.0);
    assert_eq!(at(WaveShape::Square, 0.9999), -1.0);
    assert_eq!(at(WaveShape::Triangle, 0.25), 1.0);
    assert_eq!(at(WaveShape::Sawtooth, 0.5), 0.0);
}

/// Deterministic (k, T) draws so failures reproduce.
fn draws(count: usize) -> Vec<(f64, f64)> {
    let mut rng = vibrobench_core::experiment::SplitMix64::new(0x5eed);
    let unit = |r: &mut vibrobench_core::experiment::SplitMix64| {
        (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..count)
        .map(|_| (0.05 + 19.95 * unit(&mut rng), 0.01 + 0.99 * unit(&mut rng)))
        .collect()
}

#[test]
fn envelope_endpoints_and_strict_monotonicity() {
    let fs = 44_100u32;
    for (k, t) in draws(100) {
        let decay = Envelope::Decay { k };
        assert!((envelope_gain(&decay, 0.0, t).unwrap() - 1.0).abs() < 1e-9);
        assert!((envelope_gain(&decay, t, t).unwrap() - (-k).exp()).abs() < 1e-9);

        for env in [decay, Envelope::Rise { k }] {
            let spec = WaveformSpec::new(WaveShape::Sine)
                .with_duration(t)
                .with_envelope(env)
                .with_sample_rate(fs);
            let n = spec.sample_count() as usize;
            let gains: Vec<f64> = (0..n)
                .map(|i| envelope_gain(&env, i as f64 / fs as f64, t).unwrap())
                .collect();
            for w in gains.windows(2) {
                match env {
                    Envelope::Decay { .. } => assert!(w[1] < w[0], "decay k={k} T={t}"),
                    _ => assert!(w[1] > w[0], "rise k={k} T={t}"),
                }
            }
        }
    }
}

/// Compensated (Neumaier) summation, used as an independent reference.
fn neumaier(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        c += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + c
}

#[test]
fn metrics_match_brute_force_on_integer_period_sine() {
    // 10 Hz at 44.1 kHz: 4410 samples per period, 10 periods.
    let spec = WaveformSpec::new(WaveShape::Sine).with_frequency(10.0).with_duration(1.0);
    let buf = render_wave(&spec).unwrap();
    let m = waveform_metrics(&buf).unwrap();
    let n = buf.len() as f64;
    let rms = (neumaier(buf.iter().map(|s| s * s)) / n).sqrt();
    let mean_abs = neumaier(buf.iter().map(|s| s.abs())) / n;

    assert!((m.rms - rms).abs() < 1e-12);
    assert!((m.mean_rectified - mean_abs).abs() < 1e-12);
    assert!((rms - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6, "rms {rms}");
    assert!((mean_abs - 2.0 / std::f64::consts::PI).abs() < 1e-6, "mean {mean_abs}");
    assert!((m.peak - 1.0).abs() < 1e-6);
}

fn hann_spectrum(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let mut data: Vec<Complex<f64>> = samples
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
            Complex::new(s * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut data);
    data[..n / 2].iter().map(|c| c.norm()).collect()
}

fn db(ratio: f64) -> f64 {
    20.0 * ratio.log10()
}

#[test]
fn sine_spectrum_is_a_single_line() {
    let spec = WaveformSpec::new(WaveShape::Sine).with_duration(0.5);
    let buf = render_wave(&spec).unwrap();
    let mags = hann_spectrum(&buf);
    let bin_hz = 44_100.0 / buf.len() as f64;
    let peak = (0..mags.len()).max_by(|&a, &b| mags[a].total_cmp(&mags[b])).unwrap();
    assert_eq!(peak, (200.0 / bin_hz).round() as usize);
    // Hann spreads an on-bin tone over its +-1 neighbours; everything
    // beyond that main lobe must be at least 40 dB down.
    let side = mags
        .iter()
        .enumerate()
        .filter(|(i, _)| i.abs_diff(peak) > 1)
        .map(|(_, &m)| m)
        .fold(0.0, f64::max);
    assert!(db(side / mags[peak]) <= -40.0, "{} dB", db(side / mags[peak]));
}

#[test]
fn square_has_odd_harmonics_on_the_one_over_n_law() {
    let spec = WaveformSpec::new(WaveShape::Square).with_duration(0.5);
    let buf = render_wave(&spec).unwrap();
    let mags = hann_spectrum(&buf);
    let bin = |hz: f64| mags[(hz * buf.len() as f64 / 44_100.0).round() as usize];
    let fundamental = bin(200.0);
    for n in [3.0, 5.0] {
        let dev = db(bin(200.0 * n) / fundamental * n);
        assert!(dev.abs() <= 3.0, "harmonic {n}: {dev} dB from 1/n");
    }
}
