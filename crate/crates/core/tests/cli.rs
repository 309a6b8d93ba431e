mod common;

use std::fs;

use common::{ok, pipeline, run, s};

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline(a.path());
    let second = pipeline(b.path());
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    for expected in [
        "model/model.bin",
        "lr/model.bin",
        "report/report.csv",
        "preds.jsonl",
        "ablate/ablate_sentences.csv",
    ] {
        assert!(names.contains(&expected), "missing {expected} in {names:?}");
    }
    assert_eq!(first.len(), second.len());
    for ((na, ba), (nb, bb)) in first.iter().zip(&second) {
        assert_eq!(na, nb);
        assert!(ba == bb, "{na} differs between runs");
    }
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["train", "--data"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let missing = dir.path().join("missing");
    let out = run(&["ingest", "--data", s(&missing), "--out", s(&dir.path().join("x.json"))]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error[runtime]:"), "{stderr}");

    let data = dir.path().join("data");
    ok(&[
        "gen-synth",
        "--relations",
        "2",
        "--facts-per-relation",
        "10",
        "--out",
        s(&data),
    ]);
    fs::write(data.join("catalog.json"), "{ not json").unwrap();
    let out = run(&["ingest", "--data", s(&data), "--out", s(&dir.path().join("x.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[data]:"));
}

#[test]
fn every_subcommand_documents_its_flags() {
    for (cmd, flags) in [
        ("ingest", &["--data", "--out", "--dump-flags"][..]),
        ("sample-negatives", &["--fractions", "--seed"]),
        ("train", &["--model", "--depth", "--lr", "--config", "--sentences"]),
        ("eval", &["--model-file", "--split"]),
        ("predict", &["--facts", "--model-file"]),
        ("tune", &["--metric", "--max-cycles"]),
        ("ablate", &["--ks", "--depths", "--runs"]),
        ("experiment", &["--models", "--tune"]),
        (
            "gen-synth",
            &["--relations", "--facts-per-relation", "--signal-strength"],
        ),
    ] {
        let out = ok(&[cmd, "--help"]);
        let help = String::from_utf8_lossy(&out.stdout);
        for f in flags {
            assert!(help.contains(f), "{cmd} --help lacks {f}");
        }
    }
}
