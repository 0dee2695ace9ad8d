use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sideinfo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sideinfo"))
        .args(args)
        .env_remove("SIDEINFO_OUT_DIR")
        .output()
        .expect("binary runs")
}

/// Run with arguments split on whitespace.
fn cmd(line: &str) -> Output {
    sideinfo(&line.split_whitespace().collect::<Vec<_>>())
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn validate_names_the_bad_row() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"x_alphabet":2,"y_alphabet":2,"order":1,"kernel":[[0.25,0.25,0.25,0.25],[0.3,0.2,0.25,0.26],[0.25,0.25,0.25,0.25],[0.25,0.25,0.25,0.25]]}"#)
        .unwrap();
    let o = cmd(&format!("model validate {}", p(&bad)));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 1"), "{}", stderr(&o));

    let unknown = dir.path().join("unknown.json");
    fs::write(
        &unknown,
        r#"{"x_alphabet":1,"y_alphabet":1,"order":0,"kernel":[[1.0]],"extra":1}"#,
    )
    .unwrap();
    assert_eq!(cmd(&format!("model validate {}", p(&unknown))).status.code(), Some(2));

    let good = dir.path().join("good.json");
    let o = cmd("model preset feedback");
    fs::write(&good, o.stdout).unwrap();
    let o = cmd(&format!("model validate {}", p(&good)));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("valid"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(cmd("bogus").status.code(), Some(2));
    assert_eq!(cmd("density --model preset:nope --x 0 --y 0").status.code(), Some(2));
    assert_eq!(cmd("density --model preset:dsc --x 012 --y 000").status.code(), Some(2));
    assert_eq!(cmd("--help").status.code(), Some(0));
}

#[test]
fn lzsi_encode_decode_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.lzsi");
    let o = cmd(&format!(
        "lzsi encode --model preset:feedback --n 4 --m 2048 --blocks 16 --seed 9 --out {}",
        p(&file)
    ));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bytes = fs::read(&file).unwrap();
    assert_eq!(&bytes[..4], b"LZSI");

    let o = cmd(&format!("lzsi decode --model preset:feedback --input {}", p(&file)));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim().len(), 64);

    let o = cmd("sample --model preset:feedback --n 64 --m 2048 --seed 9");
    let rep: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(
        rep["stats"]["present_x"],
        Value::from(
            stdout(&cmd(&format!(
                "lzsi decode --model preset:feedback --input {}",
                p(&file)
            )))
            .trim()
        )
    );

    // a different model cannot decode the stream
    let o = cmd(&format!("lzsi decode --model preset:dsc --input {}", p(&file)));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupted_stream_does_not_match() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.lzsi");
    cmd(&format!(
        "lzsi encode --model preset:dsc --n 2 --m 512 --seed 4 --out {}",
        p(&file)
    ));
    let mut bytes = fs::read(&file).unwrap();
    // point the header at another seed
    bytes[25] ^= 1;
    fs::write(&file, &bytes).unwrap();
    let o = cmd(&format!("lzsi decode --model preset:dsc --input {}", p(&file)));
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let o = cmd(&format!("verify clt-density --model preset:feedback --n 64 --samples 400 --seed 7 --ref-paths 8 --ref-path-len 4096 --out {}", p(&report)));
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let o = cmd(&format!("replay {} --check", p(&report)));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    // a bare config replays to the same report
    let rep: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, serde_json::to_string(&rep["config"]).unwrap()).unwrap();
    let again = dir.path().join("again.json");
    cmd(&format!("replay {} --out {}", p(&cfg), p(&again)));
    assert_eq!(fs::read(&report).unwrap(), fs::read(&again).unwrap());

    // unknown keys in the config are rejected
    let mut bad = rep["config"].clone();
    bad["samples"] = Value::from(3);
    fs::write(&cfg, bad.to_string()).unwrap();
    assert_eq!(cmd(&format!("replay {}", p(&cfg))).status.code(), Some(2));
}

#[test]
fn results_do_not_depend_on_jobs() {
    let run = |jobs: &str| {
        stdout(&cmd(&format!(
            "--jobs {jobs} verify kac --model preset:dsc --x 01 --y 01 --replicas 2000 --seed 11"
        )))
    };
    let one = run("1");
    assert!(one.contains("\"kind\": \"kac\""));
    assert_eq!(one, run("4"));
}

#[test]
fn missing_seed_is_drawn_and_printed() {
    let o = cmd("sample --model preset:dsc --n 4");
    assert_eq!(o.status.code(), Some(0));
    let err = stderr(&o);
    let seed: u64 = err.split_whitespace().nth(1).unwrap().parse().unwrap();
    let rep: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["seed"], Value::from(seed));
}

#[test]
fn failing_verdict_exits_one_and_echoes_config() {
    // a relative tolerance of zero cannot be met by a sampled dispersion
    let o = cmd("verify dispersion --model preset:dsc --n 8 --mode sampled --samples 200 --rel-tol 0 --seed 2");
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("\"dispersion\""));
}

#[test]
fn degenerate_varentropy_points_to_zero_fluctuation() {
    let o = cmd("verify clt-density --model preset:uniform-conditional --n 8 --seed 1");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("zero-fluctuation"));
    let o = cmd("verify zero-fluctuation --model preset:uniform-conditional --n 64 --seed 1");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn code_roundtrip_and_empty_codeword() {
    let o = cmd("code opt-encode --model preset:dsc --x 0101 --y 0101");
    assert!(stderr(&o).contains("∅"));
    let rep: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["stats"]["codeword"], "");

    let o = cmd("code opt-encode --model preset:dsc --x 1101 --y 0101");
    let rep: Value = serde_json::from_slice(&o.stdout).unwrap();
    let cw = rep["stats"]["codeword"].as_str().unwrap().to_string();
    assert!(!cw.is_empty());
    let o = cmd(&format!("code opt-decode --model preset:dsc --codeword {cw} --y 0101"));
    let rep: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["stats"]["x"], "1101");

    let dir = tempfile::tempdir().unwrap();
    cmd(&format!(
        "code lengths --model preset:dsc --y 00 --csv {}",
        p(dir.path())
    ));
    let csv = fs::read_to_string(dir.path().join("code_lengths-codebook.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), ",0,0.7921,1,00");
}

#[test]
fn out_dir_from_environment_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_sideinfo"))
        .args([
            "sample",
            "--model",
            "preset:dsc",
            "--n",
            "3",
            "--m",
            "2",
            "--seed",
            "6",
            "--csv",
        ])
        .arg(dir.path())
        .env("SIDEINFO_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(dir.path().join("sample-6.json").exists());
    let csv = fs::read_to_string(dir.path().join("sample-sample.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,x,y");
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.lines().nth(1).unwrap().starts_with("-1,"));
}

#[test]
fn stats_report_estimates_table() {
    let o = cmd("stats entropy --model preset:dsc --n 4 --seed 1");
    let rep: Value = serde_json::from_slice(&o.stdout).unwrap();
    let row = &rep["tables"]["estimates"][0];
    assert_eq!(row["method"], "exact_enum");
    let v = rep["stats"]["per_symbol_bits"].as_f64().unwrap();
    assert!((v - 0.499915958164).abs() < 1e-9);

    let o = cmd("stats varentropy --model preset:dsc --n 32 --samples 4000 --seed 1");
    let rep: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["tables"]["estimates"].as_array().unwrap().len(), 2);
    let v = rep["stats"]["value_bits"].as_f64().unwrap();
    let se = rep["stats"]["stderr"].as_f64().unwrap();
    assert!((v - 0.8907).abs() < 4.0 * se, "{v} {se}");
}
