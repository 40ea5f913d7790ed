use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn loopcast(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loopcast"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn assert_error_line(o: &Output, code: i32, kind: &str) {
    assert_eq!(o.status.code(), Some(code), "stderr: {}", stderr(o));
    let err = stderr(o);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "{err}");
    assert!(lines[0].starts_with(&format!("error[{kind}]: ")), "{err}");
}

const SQUARE: &str = r#"{
  "punctures": [[1.35, 1.35], [-1.35, 1.35], [-1.35, -1.35], [1.35, -1.35]],
  "referenceLoopPath": "ref.json",
  "n": 59,
  "R": 20.0,
  "seed": 11,
  "iterations": 1000,
  "thin": 100,
  "outputDir": "out"
}"#;

fn square_dir() -> TempDir {
    let dir = TempDir::new().unwrap();
    let circle: Vec<[f64; 2]> = (0..200)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / 200.0;
            [2.5 * t.cos(), 2.5 * t.sin()]
        })
        .collect();
    fs::write(
        dir.path().join("ref.json"),
        serde_json::to_string(&circle).unwrap(),
    )
    .unwrap();
    fs::write(dir.path().join("square.json"), SQUARE).unwrap();
    dir
}

#[test]
fn shortest_square_from_config() {
    let dir = square_dir();
    let o = loopcast(&["shortest", "--config", "square.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("lStar=10.8\n"), "{}", stdout(&o));
    let sl: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/shortest.json")).unwrap())
            .unwrap();
    assert_eq!(sl.as_array().unwrap().len(), 4);
    let detail: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("out/shortest_detail.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(detail["length"].as_f64(), Some(10.8));
}

#[test]
fn shortest_bowtie_preset() {
    let dir = TempDir::new().unwrap();
    let o = loopcast(&["shortest", "--preset", "bowtie"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("lStar=8.12712842"), "{}", stdout(&o));
}

#[test]
fn shortest_trivial_class() {
    let dir = square_dir();
    let tiny: Vec<[f64; 2]> = vec![[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]];
    fs::write(
        dir.path().join("ref.json"),
        serde_json::to_string(&tiny).unwrap(),
    )
    .unwrap();
    let o = loopcast(&["shortest", "--config", "square.json"], dir.path());
    assert_error_line(&o, 1, "trivial-class");
    assert!(stderr(&o).contains("class is trivial"));
}

#[test]
fn sample_saves_and_is_deterministic() {
    let dir = square_dir();
    let o = loopcast(&["sample", "--config", "square.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("saves=10 "), "{}", stdout(&o));
    let first = fs::read(dir.path().join("out/trace.jsonl")).unwrap();
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count(), 10);
    let o = loopcast(
        &["sample", "--config", "square.json", "--out", "again"],
        dir.path(),
    );
    assert!(o.status.success());
    assert_eq!(
        first,
        fs::read(dir.path().join("again/trace.jsonl")).unwrap()
    );
    let o = loopcast(
        &[
            "sample",
            "--config",
            "square.json",
            "--seed",
            "12",
            "--out",
            "other",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    assert_ne!(
        first,
        fs::read(dir.path().join("other/trace.jsonl")).unwrap()
    );
}

#[test]
fn sample_several_chains() {
    let dir = square_dir();
    let o = loopcast(
        &[
            "sample",
            "--config",
            "square.json",
            "--chains",
            "3",
            "--iterations",
            "200",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for i in 0..3 {
        assert!(dir.path().join(format!("out/trace-{i}.jsonl")).exists());
    }
}

#[test]
fn sample_rejects_small_n() {
    let dir = square_dir();
    let o = loopcast(
        &["sample", "--config", "square.json", "--n", "10"],
        dir.path(),
    );
    assert_error_line(&o, 1, "invalid-input");
    assert!(stderr(&o).contains("reach"));
}

#[test]
fn config_errors_name_the_line() {
    let dir = square_dir();
    fs::write(
        dir.path().join("bad.json"),
        SQUARE.replace("\"thin\": 100", "\"thin\": 0"),
    )
    .unwrap();
    let o = loopcast(&["sample", "--config", "bad.json"], dir.path());
    assert_error_line(&o, 1, "invalid-input");
    assert!(stderr(&o).contains("line 8"), "{}", stderr(&o));
}

#[test]
fn analyze_writes_three_files() {
    let dir = square_dir();
    assert!(loopcast(&["sample", "--config", "square.json"], dir.path())
        .status
        .success());
    let o = loopcast(
        &[
            "analyze",
            "--config",
            "square.json",
            "--trace",
            "out/trace.jsonl",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["mean_loop.json", "density.csv", "concentration.json"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    let rep: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("out/concentration.json")).unwrap(),
    )
    .unwrap();
    let fr: Vec<f64> = rep["fractions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(fr.windows(2).all(|w| w[0] <= w[1]));
    assert!(rep["excessOverLStar"]["min"].as_f64().unwrap() >= 0.0);
    let csv = fs::read_to_string(dir.path().join("out/density.csv")).unwrap();
    assert!(csv.starts_with("xmin="));
    assert_eq!(csv.lines().count(), 101);
}

#[test]
fn analyze_empty_and_mixed_traces() {
    let dir = square_dir();
    fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    let o = loopcast(
        &[
            "analyze",
            "--config",
            "square.json",
            "--trace",
            "empty.jsonl",
        ],
        dir.path(),
    );
    assert_error_line(&o, 1, "invalid-input");

    let rec = |m: usize| {
        let v: Vec<[f64; 2]> = (0..m)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / m as f64;
                [2.5 * t.cos(), 2.5 * t.sin()]
            })
            .collect();
        serde_json::json!({ "step": 1, "length": 15.0, "rate": 0.0, "vertices": v }).to_string()
    };
    fs::write(
        dir.path().join("mixed.jsonl"),
        format!("{}\n{}\n", rec(60), rec(61)),
    )
    .unwrap();
    let o = loopcast(
        &[
            "analyze",
            "--config",
            "square.json",
            "--trace",
            "mixed.jsonl",
        ],
        dir.path(),
    );
    assert_error_line(&o, 1, "invalid-input");
}

#[test]
fn word_outputs() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    fs::write(p.join("z.json"), "[[0, 0]]").unwrap();
    fs::write(
        p.join("around.json"),
        "[[1, 0.1], [0, 1], [-1, 0.1], [0, -1]]",
    )
    .unwrap();
    fs::write(p.join("away.json"), "[[3, -0.5], [4, -0.5], [3.5, 0.5]]").unwrap();
    fs::write(p.join("through.json"), "[[0, 0], [1, 0.2], [0.2, 1]]").unwrap();

    let o = loopcast(&["word", "--punctures", "z.json", "--loop", "away.json"], p);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "ε / ε");

    let o = loopcast(
        &["word", "--punctures", "z.json", "--loop", "around.json"],
        p,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let (reduced, cyclic) = out.trim().split_once(" / ").unwrap();
    assert_eq!(reduced.split(' ').count(), 4);
    assert_eq!(cyclic.split(' ').count(), 4);

    let o = loopcast(
        &["word", "--punctures", "z.json", "--loop", "through.json"],
        p,
    );
    assert_error_line(&o, 2, "degenerate-crossing");
    assert!(stderr(&o).contains("vertex 0"));
}

#[test]
fn validate_reports_each_criterion() {
    let dir = square_dir();
    let o = loopcast(
        &["sample", "--config", "square.json", "--iterations", "100"],
        dir.path(),
    );
    assert!(o.status.success());
    let line = fs::read_to_string(dir.path().join("out/trace.jsonl")).unwrap();
    let rec: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    fs::write(dir.path().join("state.json"), rec["vertices"].to_string()).unwrap();
    let o = loopcast(
        &[
            "validate",
            "--config",
            "square.json",
            "--loop",
            "state.json",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("valid: true"), "{}", stdout(&o));

    let mut v: Vec<[f64; 2]> = serde_json::from_value(rec["vertices"].clone()).unwrap();
    v[5][0] += 2.0;
    fs::write(
        dir.path().join("long.json"),
        serde_json::to_string(&v).unwrap(),
    )
    .unwrap();
    let o = loopcast(
        &["validate", "--config", "square.json", "--loop", "long.json"],
        dir.path(),
    );
    let out = stdout(&o);
    assert!(
        out.contains("edges: fail") && out.contains("at edge 4"),
        "{out}"
    );

    let away: Vec<[f64; 2]> = (0..60)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / 60.0;
            [10.0 + 0.5 * t.cos(), 0.5 * t.sin()]
        })
        .collect();
    fs::write(
        dir.path().join("away.json"),
        serde_json::to_string(&away).unwrap(),
    )
    .unwrap();
    let o = loopcast(
        &["validate", "--config", "square.json", "--loop", "away.json"],
        dir.path(),
    );
    assert!(
        stdout(&o).contains("class: fail class mismatch"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn ratefn_values() {
    let dir = TempDir::new().unwrap();
    let o = loopcast(
        &["ratefn", "--R", "20", "--s", "0", "--r", "0", "--r", "25"],
        dir.path(),
    );
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("lmgf s=0 value=0\n"), "{out}");
    assert!(out.contains("rate r=0 value=0 "), "{out}");
    assert!(out.contains("rate r=25 value=inf"), "{out}");
}

#[test]
fn usage_errors() {
    let dir = TempDir::new().unwrap();
    let o = loopcast(&["frobnicate"], dir.path());
    assert_error_line(&o, 1, "usage");
    let o = loopcast(&["harness", "run", "--preset", "triangle"], dir.path());
    assert_error_line(&o, 1, "invalid-input");
    let o = loopcast(&["shortest"], dir.path());
    assert_error_line(&o, 1, "invalid-input");
    let o = loopcast(&["shortest", "--config", "missing.json"], dir.path());
    assert_error_line(&o, 1, "invalid-input");
}
