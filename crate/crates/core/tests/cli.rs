use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sepmark::corpus::{parse_olner, write_olner};
use sepmark::synth;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn sepmark(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sepmark"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_synthetic(dir: &Path) -> (String, String) {
    let (train, dev, _) = synth::generate_splits(40, 20, 0, 5);
    let t = dir.join("train.olner");
    let d = dir.join("dev.olner");
    fs::write(&t, write_olner(&train)).unwrap();
    fs::write(&d, write_olner(&dev)).unwrap();
    (t.to_str().unwrap().into(), d.to_str().unwrap().into())
}

#[test]
fn stats_matches_golden() {
    let o = sepmark(&["stats", "--input", fixture("sample.olner").to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), fs::read_to_string(fixture("sample.stats")).unwrap());
}

#[test]
fn demos_report_known_values() {
    let o = sepmark(&["demo-spurious"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("Z' (dynamic program) = 9.000000"), "{text}");
    assert!(text.contains("Z  (hyperpaths)      = 3.000000"), "{text}");
    let o = sepmark(&["demo-uniqueness", "--n", "3"]);
    let text = stdout(&o);
    assert!(text.contains("span_sets=64\nimage=40\nvalid_sequences=40\n"), "{text}");
    assert!(text.contains("bijective=false\n"));
    let o = sepmark(&["demo-uniqueness", "--n", "2"]);
    assert!(stdout(&o).contains("bijective=true\n"));
}

#[test]
fn exit_codes() {
    assert_eq!(sepmark(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(sepmark(&["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(sepmark(&["stats", "--input", "/nonexistent/x.olner"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.olner");
    fs::write(&bad, "a\tb\nNN\n\n").unwrap();
    let o = sepmark(&["stats", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"));

    let out = dir.path().join("m.json");
    let o = sepmark(&[
        "train", "--scheme", "lcrf-single", "--strict", "--max-iters", "1",
        "--train", fixture("sample.olner").to_str().unwrap(),
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("capacity error"));
}

#[test]
fn train_predict_evaluate_tune() {
    let dir = tempfile::tempdir().unwrap();
    let (train, dev) = write_synthetic(dir.path());
    let model = dir.path().join("m.json");
    let m = model.to_str().unwrap();
    let o = sepmark(&["train", "--scheme", "edge", "--features", "conll", "--max-iters", "15", "--train", &train, "--dev", &dev, "--out", m]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("[dev]\n"));
    let log = fs::read_to_string(dir.path().join("m.json.objective.tsv")).unwrap();
    assert!(log.starts_with("iteration\tobjective\tgrad_norm\tseconds\n"));
    assert!(log.lines().count() >= 3);
    assert!(dir.path().join("m.json.manifest.json").exists());

    let o = sepmark(&["predict", "--model", m, "--input", &dev]);
    assert!(o.status.success());
    let tagged = parse_olner(&o.stdout).unwrap();
    let gold = parse_olner(&fs::read(&dev).unwrap()).unwrap();
    assert_eq!(tagged.len(), gold.len());
    for (a, b) in tagged.sentences.iter().zip(&gold.sentences) {
        assert_eq!(a.tokens, b.tokens);
    }

    let o = sepmark(&["evaluate", "--model", m, "--test", &dev, "--split-overlap"]);
    let text = stdout(&o);
    for block in ["[all]", "[overlapping]", "[non-overlapping]"] {
        assert!(text.contains(block), "{text}");
    }

    let tuned = dir.path().join("t.json");
    let o = sepmark(&["tune-penalty", "--model", m, "--dev", &dev, "--penalty-grid", "-1:1:0.5", "--out", tuned.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("monotone=true"));
    assert!(dir.path().join("t.json.manifest.json").exists());

    let o = sepmark(&["evaluate", "--model", m, "--test", &dev, "--baseline", tuned.to_str().unwrap()]);
    assert!(stdout(&o).contains("[significance]"));
    let o = sepmark(&["bench", "--model", m, "--sentences", "20"]);
    assert!(stdout(&o).contains("[throughput]"));
}

#[test]
fn manifest_rerun_and_thread_count_reproduce_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _) = write_synthetic(dir.path());
    let first = dir.path().join("a.json");
    let o = sepmark(&["--threads", "1", "train", "--scheme", "hypergraph", "--features", "ace", "--max-iters", "8", "--train", &train, "--out", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = dir.path().join("a.json.manifest.json");
    let second = dir.path().join("b.json");
    let o = sepmark(&["--threads", "3", "train", "--from-manifest", manifest.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}
