use std::sync::Arc;

use vibrobench_core::playback::{HandleState, NullBackend, NullDeviceConfig, PlaybackMode, Player};
use vibrobench_core::synth::{
    assemble_program, render_wave, Envelope, StimulusProgram, WaveShape, WaveformSpec,
};

fn rig(period: usize) -> (NullBackend, Player) {
    let backend = NullBackend::from_configs(period, vec![NullDeviceConfig::new("null")]);
    let player = Player::new(Arc::new(backend.clone()));
    (backend, player)
}

#[test]
fn gapped_loop_truncated_to_k_iterations_equals_program() {
    let specs = [
        WaveformSpec::new(WaveShape::Sine).with_duration(0.05),
        WaveformSpec::new(WaveShape::Square).with_envelope(Envelope::Decay { k: 5.0 }).with_duration(0.0731),
        WaveformSpec::new(WaveShape::Sawtooth).with_frequency(333.3).with_duration(0.02),
        WaveformSpec::new(WaveShape::Triangle).with_sample_rate(8_000).with_duration(0.1),
    ];
    for (i, spec) in specs.into_iter().enumerate() {
        for (k, gap, period) in [(1u32, 0.1, 512), (2, 0.1, 64), (5, 0.013, 1000), (3, 0.5, 37)] {
            let (backend, player) = rig(period);
            let wave = render_wave(&spec).unwrap();
            let handle = player.play(&wave, PlaybackMode::Gapped { gap }, 0).unwrap();
            while handle.completed_iterations() < u64::from(k) {
                backend.pump(1);
            }
            player.stop(&handle);

            let program = StimulusProgram::new("p", spec).with_repeats(k).with_gap(gap);
            let expected = assemble_program(&program).unwrap();
            let mut stream = backend.capture(0);
            assert!(stream.len() >= expected.len());
            stream.truncate(expected.len());
            let same = stream.iter().zip(expected.iter()).all(|(a, b)| a.to_bits() == b.to_bits());
            assert!(same, "spec {i}, k {k}, gap {gap}, period {period}");
        }
    }
}

#[test]
fn continuous_loop_has_no_inserted_samples() {
    let (backend, player) = rig(100);
    let wave = render_wave(&WaveformSpec::new(WaveShape::Sine).with_duration(0.01)).unwrap();
    let handle = player.play(&wave, PlaybackMode::Continuous, 0).unwrap();
    backend.pump(20);
    player.stop(&handle);
    let stream = backend.capture(0);
    for (j, s) in stream.iter().enumerate() {
        assert_eq!(s.to_bits(), wave[j % wave.len()].to_bits());
    }
}

#[test]
fn stop_halts_within_one_period_at_any_point() {
    let period = 256;
    let wave = render_wave(&WaveformSpec::new(WaveShape::Square).with_duration(0.05)).unwrap();
    for pumps in 0..40 {
        let (backend, player) = rig(period);
        let handle = player.play(&wave, PlaybackMode::Gapped { gap: 0.02 }, 0).unwrap();
        backend.pump(pumps);
        let at_stop = backend.captured_len(0);
        player.stop(&handle);
        player.stop(&handle);
        assert_eq!(handle.state(), HandleState::Stopped);
        backend.pump(10);
        assert!(backend.captured_len(0) - at_stop <= period);
        assert!(backend.is_idle());
    }
}

#[test]
fn stop_in_gap_starts_no_further_repetition() {
    let (backend, player) = rig(64);
    let wave = render_wave(&WaveformSpec::new(WaveShape::Sine).with_duration(0.01)).unwrap();
    let handle = player.play(&wave, PlaybackMode::Gapped { gap: 0.1 }, 0).unwrap();
    while handle.completed_iterations() < 1 {
        backend.pump(1);
    }
    backend.pump(2);
    player.stop(&handle);
    backend.pump(200);
    let stream = backend.capture(0);
    assert!(stream[wave.len()..].iter().all(|&s| s == 0.0));
}

#[test]
fn once_consumes_exactly_the_buffer() {
    let (backend, player) = rig(512);
    let wave = render_wave(&WaveformSpec::new(WaveShape::Sine).with_duration(0.5)).unwrap();
    let handle = player.play(&wave, PlaybackMode::Once, 0).unwrap();
    assert!(backend.run_until_idle(1000));
    assert_eq!(handle.state(), HandleState::Stopped);
    assert_eq!(handle.emitted_samples(), 22_050);
    assert_eq!(backend.capture(0), wave.samples());
}
