use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_persona-probe"));
    c.env("RUST_LOG", "error");
    c
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn synth(dir: &Path) {
    let o = run(
        &[
            "synth", "--out", "corpus", "--examples", "48", "--layers", "6", "--dim", "10", "--tokens-min", "30",
            "--tokens-max", "40", "--plant-layer", "3", "--strength", "3",
        ],
        dir,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

const RUN: [&str; 10] = ["--corpus", "corpus", "--layers", "1,3,5", "--reference-layer", "3", "--permutations", "3", "--k-folds", "3"];

#[test]
fn stages_one_by_one_match_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);
    for stage in ["sweep", "controls", "extract", "annotate", "stats", "report"] {
        let mut args = vec![stage, "--out", "staged"];
        args.extend(RUN);
        let o = run(&args, d);
        assert_eq!(code(&o), 0, "{stage}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let mut args = vec!["pipeline", "--out", "whole"];
    args.extend(RUN);
    let o = bin().args(&args).current_dir(d).env("PERSONA_PROBE_THREADS", "2").output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let run_id = String::from_utf8(o.stdout).unwrap();
    assert!(run_id.trim().starts_with("run-"));
    assert_eq!(
        fs::read(d.join("staged/report.json")).unwrap(),
        fs::read(d.join("whole/report.json")).unwrap()
    );
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);
    fs::write(
        d.join("run.json"),
        r#"{"corpus_dir": "corpus", "out_dir": "from_config", "seed": 7, "probe": {"k_folds": 3}}"#,
    )
    .unwrap();
    let o = run(&["sweep", "--config", "run.json", "--out", "from_flag", "--seed", "8"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!d.join("from_config").exists());
    let split: serde_json::Value = serde_json::from_slice(&fs::read(d.join("from_flag/split.json")).unwrap()).unwrap();
    assert_eq!(split["seed"], 8);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);
    // config errors
    assert_eq!(code(&run(&["sweep", "--corpus", "corpus", "--out", "o", "--target", "bogus"], d)), 2);
    assert_eq!(code(&run(&["sweep", "--corpus", "corpus"], d)), 2);
    fs::write(d.join("bad.json"), r#"{"seedz": 1}"#).unwrap();
    assert_eq!(code(&run(&["sweep", "--config", "bad.json", "--corpus", "corpus", "--out", "o"], d)), 2);
    assert_eq!(code(&run(&["stats", "--corpus", "corpus", "--out", "fresh"], d)), 2);
    // data errors
    assert_eq!(code(&run(&["sweep", "--corpus", "missing", "--out", "o"], d)), 3);
    fs::write(d.join("corpus/broken.jsonl"), "{not json\n").unwrap();
    assert_eq!(
        code(&run(&["annotate", "--corpus", "corpus", "--tokens", "corpus/broken.jsonl", "--out", "o"], d)),
        3
    );
    // stage failure: duplicate token positions
    let line = r#"{"example_id":"ex-0000","sent_index":0,"token_index":0,"surface":"a","lemma":"a","upos":"DET","head":-1,"deprel":"root"}"#;
    fs::write(d.join("corpus/dup.jsonl"), format!("{line}\n{line}\n")).unwrap();
    let o = run(&["annotate", "--corpus", "corpus", "--tokens", "corpus/dup.jsonl", "--out", "o"], d);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("annotate"));
}
