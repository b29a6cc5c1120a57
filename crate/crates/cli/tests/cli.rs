use std::path::Path;
use std::process::{Command, Output};

const SPEC: &str = r#"
grid_start = 2018-01-01
grid_end = 2018-12-31
reference = "m"

[[indicator]]
id = "w"
frequency = "weekly"
kind = "flow"

[[indicator]]
id = "m"
frequency = "monthly"
kind = "flow"
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nowcast")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_extract_replay_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    std::fs::write(&spec, SPEC).unwrap();
    let sim = dir.path().join("sim");
    let out = run(&["simulate", "--spec", s(&spec), "--seed", "1", "--out", s(&sim)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["factor.csv", "data/w.csv", "data/m.csv", "releases.csv", "params.toml"] {
        assert!(sim.join(f).exists(), "{f}");
    }

    let path = dir.path().join("path.csv");
    let out = run(&[
        "extract", "--spec", s(&spec), "--params", s(&sim.join("params.toml")), "--data", s(&sim.join("data")),
        "--out", s(&path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let extracted = nowcast::io::read_path_csv(&path).unwrap();
    assert_eq!(extracted.first().unwrap().0, "2018-01-01".parse().unwrap());

    let replayed = dir.path().join("replay");
    let out = run(&[
        "replay", "--spec", s(&spec), "--params", s(&sim.join("params.toml")), "--releases",
        s(&sim.join("releases.csv")), "--out", s(&replayed),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dots = nowcast::io::read_dots_csv(&replayed.join("dots.csv")).unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.trim(), format!("vintages={}", dots.dots.len()));
    // The last vintage holds every observation, so its path is the extracted one.
    let last = std::fs::read_dir(replayed.join("paths")).unwrap().map(|e| e.unwrap().path()).max().unwrap();
    let tail = nowcast::io::read_path_csv(&last).unwrap();
    assert_eq!(tail, extracted);
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let spec = dir.path().join("spec.toml");
    std::fs::write(&spec, "grid_start = 2018-01-01\nbogus = 1\n").unwrap();
    let out = run(&["simulate", "--spec", s(&spec), "--out", s(&dir.path().join("x"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
    let out = run(&["chronology", "--path", s(&dir.path().join("missing.csv"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.csv");
    let mut text = String::from("date,ads,std\n");
    let deaths = dir.path().join("deaths.csv");
    let mut flat = String::from("date,value\n");
    for i in 0..60u64 {
        let day = chrono::NaiveDate::from_ymd_opt(2020, 3, 1).unwrap() + chrono::Days::new(i);
        text.push_str(&format!("{day},{},0.1\n", (i as f64 / 9.0).sin()));
        flat.push_str(&format!("{day},5\n"));
    }
    std::fs::write(&path, text).unwrap();
    std::fs::write(&deaths, flat).unwrap();
    let out = run(&["correlate", "--deaths", s(&deaths), "--path", s(&path), "--lead", "3"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}
