use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use vibrobench_core::experiment::store::read_record;
use vibrobench_core::synth::{assemble_program, render_wave, WaveformSpec};
use vibrobench_core::wav::export_file_name;
use vibrobench_core::{decode_wav, encode_wav, paper_battery};

fn vibrobench(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vibrobench"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run vibrobench")
}

fn vibrobench_with_input(dir: &Path, args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_vibrobench"))
        .current_dir(dir)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn vibrobench");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().expect("wait for vibrobench")
}

/// The structured `{code, path, message}` line printed on domain errors.
fn error_body(output: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr
        .lines()
        .find_map(|l| l.strip_prefix("error: "))
        .unwrap_or_else(|| panic!("no error line in {stderr:?}"));
    serde_json::from_str(line).expect("error line is JSON")
}

#[test]
fn render_defaults_to_a_300ms_sine() {
    let dir = tempfile::tempdir().unwrap();
    let out = vibrobench(dir.path(), &["render"]);
    assert!(out.status.success(), "{out:?}");
    let bytes = std::fs::read(dir.path().join("stimulus.wav")).unwrap();
    let decoded = decode_wav(&bytes).unwrap();
    assert_eq!(decoded.len(), 13_230);
    assert_eq!(decoded.sample_rate(), 44_100);
    let expected = encode_wav(&render_wave(&WaveformSpec::default()).unwrap()).unwrap();
    assert_eq!(bytes, expected);
}

#[test]
fn render_program_with_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let out = vibrobench(
        dir.path(),
        &[
            "render", "--shape", "square", "--dur", "0.5", "--envelope", "decay", "--repeats", "5",
            "--gap", "0.1", "--out", "p.wav",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let decoded = decode_wav(&std::fs::read(dir.path().join("p.wav")).unwrap()).unwrap();
    assert_eq!(decoded.len(), 5 * 22_050 + 4 * 4_410);
}

#[test]
fn battery_export_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = vibrobench(dir.path(), &["battery", "export", "--preset", "paper", "--dir", "wavs"]);
    assert!(out.status.success(), "{out:?}");
    let battery = paper_battery();
    let mut names: Vec<String> = std::fs::read_dir(dir.path().join("wavs"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let mut expected_names: Vec<String> = battery.programs.iter().map(export_file_name).collect();
    expected_names.sort();
    assert_eq!(names, expected_names);
    for program in &battery.programs {
        let bytes = std::fs::read(dir.path().join("wavs").join(export_file_name(program))).unwrap();
        let expected = encode_wav(&assemble_program(program).unwrap()).unwrap();
        assert_eq!(bytes, expected, "{}", program.id);
        assert_eq!(decode_wav(&bytes).unwrap().len(), 127_890);
    }
}

#[test]
fn usage_errors_exit_2_and_domain_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let usage = vibrobench(dir.path(), &["render", "--shape", "noise"]);
    assert_eq!(usage.status.code(), Some(2));
    let usage = vibrobench(dir.path(), &["render", "--bogus"]);
    assert_eq!(usage.status.code(), Some(2));

    let domain = vibrobench(dir.path(), &["render", "--freq", "-3"]);
    assert_eq!(domain.status.code(), Some(1));
    let body = error_body(&domain);
    assert_eq!(body["code"], "validation");
    assert_eq!(body["path"], "frequency");

    let domain = vibrobench(dir.path(), &["render", "--amp", "1.5"]);
    assert_eq!(domain.status.code(), Some(1));
    assert_eq!(error_body(&domain)["path"], "amplitude");

    let domain = vibrobench(dir.path(), &["battery", "export", "--preset", "nope"]);
    assert_eq!(domain.status.code(), Some(1));
    assert_eq!(error_body(&domain)["path"], "preset");
}

#[test]
fn aggregate_without_records_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("empty")).unwrap();
    for args in [&["aggregate"][..], &["aggregate", "empty"][..]] {
        let out = vibrobench(dir.path(), args);
        assert_eq!(out.status.code(), Some(1));
        let body = error_body(&out);
        assert_eq!(body["code"], "domain");
        assert_eq!(body["message"], "no records");
    }
}

#[test]
fn devices_and_play_on_the_null_backend() {
    let dir = tempfile::tempdir().unwrap();
    let out = vibrobench(dir.path(), &["devices"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("0\tnull"));

    vibrobench(dir.path(), &["battery", "export", "--dir", "."]);
    let out = vibrobench(dir.path(), &["play", "sine_200Hz_0.5s.wav", "--clock-speed", "200"]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "stopped\t127890 samples\t1 iterations"
    );

    let out = vibrobench(dir.path(), &["play", "sine_200Hz_0.5s.wav", "--device", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_body(&out)["code"], "device");
}

#[test]
fn scripted_experiment_produces_an_aggregatable_record() {
    let dir = tempfile::tempdir().unwrap();
    // Seed 42 presents battery indices [1, 2, 0, 4, 3] as A..E. The script
    // types a bad ranking, ranks, answers nonsense, revises, then confirms.
    let script = "CAB\ncabed\nx\nr\nA B C D E\nc\n";
    let args = [
        "experiment", "run", "--participant", "p1", "--seed", "42", "--records", "recs",
        "--clock-speed", "2000",
    ];
    let out = vibrobench_with_input(dir.path(), &args, script);
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("name all 5 stimuli"));
    assert!(stdout.contains("answer c or r"));
    assert!(stdout.contains("finalized: A > B > C > D > E"));

    let recs: Vec<_> = std::fs::read_dir(dir.path().join("recs")).unwrap().collect();
    assert_eq!(recs.len(), 1);
    let record = read_record(&recs[0].as_ref().unwrap().path()).unwrap().expect("finalized");
    assert_eq!(record.seed, 42);
    assert_eq!(record.presentation_order, vec![1, 2, 0, 4, 3]);
    assert_eq!(record.ranking, vec![1, 2, 0, 4, 3]);
    assert_eq!(record.amendments.len(), 1);
    assert_eq!(record.amendments[0].previous, vec![0, 1, 2, 3, 4]);

    let out = vibrobench(dir.path(), &["aggregate", "recs", "--format", "json"]);
    assert!(out.status.success(), "{out:?}");
    let aggregate: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(aggregate["sessions"], 1);
    let medians: Vec<f64> = aggregate["stimuli"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["median"].as_f64().unwrap())
        .collect();
    assert_eq!(medians, vec![3.0, 1.0, 2.0, 5.0, 4.0]);
}

#[test]
fn closed_input_keeps_progress() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "experiment", "run", "--participant", "p2", "--seed", "7", "--records", "recs",
        "--clock-speed", "2000",
    ];
    let out = vibrobench_with_input(dir.path(), &args, "");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("progress saved"));
    assert_eq!(error_body(&out)["code"], "interrupted");

    // The journal holds a session awaiting its ranking, and no record.
    let recs: Vec<_> = std::fs::read_dir(dir.path().join("recs")).unwrap().collect();
    let journal = vibrobench_core::experiment::store::read_journal(&recs[0].as_ref().unwrap().path()).unwrap();
    assert!(journal.record.is_none());
    assert_eq!(journal.session.unwrap().phase().name(), "awaiting_rank");

    let out = vibrobench(dir.path(), &["aggregate", "recs"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_body(&out)["message"], "no records");
}
