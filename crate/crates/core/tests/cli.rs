use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fairalloc"));
    cmd.env_remove("ALLOC_EPS");
    cmd
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn solve_f1_example1() {
    let out = run(&["solve", data("example1.csv").to_str().unwrap(), "f1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("  0.16,0.8\n"), "{text}");
    assert!(text.contains("exhausted: r2"), "{text}");
}

#[test]
fn solve_drf_json() {
    let out = run(&["solve", data("example1.csv").to_str().unwrap(), "drf", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for s in v["shares"].as_array().unwrap() {
        assert!((s.as_f64().unwrap() - 5.0 / 11.0).abs() < 1e-12);
    }
    assert!((v["social_welfare"].as_f64().unwrap() - 15.0 / 11.0).abs() < 1e-12);
}

#[test]
fn malformed_csv_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "r1,r2\n1,0.5\n1,abc\n").unwrap();
    let out = run(&["solve", path.to_str().unwrap(), "drf"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn two_resource_mechanism_on_three_resources() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m3.csv");
    std::fs::write(&path, "r1,r2,r3\n1,0.5,0.2\n0.3,1,0.4\n").unwrap();
    assert_eq!(run(&["solve", path.to_str().unwrap(), "f1"]).status.code(), Some(3));
    assert_eq!(run(&["solve", path.to_str().unwrap(), "gf1"]).status.code(), Some(0));
}

#[test]
fn unknown_mechanism_is_input_error() {
    assert_eq!(run(&["solve", data("example1.csv").to_str().unwrap(), "nope"]).status.code(), Some(2));
}

#[test]
fn verify_finds_f2_manipulation() {
    let out = run(&["verify", data("example2.csv").to_str().unwrap(), "f2", "--sp-grid", "100"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("sp: FAIL agent 1 reports (0.5,1)"), "{text}");
    assert!(text.contains("gain 0.02380952381"), "{text}");
}

#[test]
fn verify_f2star_and_drf_pass() {
    let out = run(&["verify", data("example2.csv").to_str().unwrap(), "f2star", "--sp-grid", "100"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert_eq!(run(&["verify", data("example1.csv").to_str().unwrap(), "drf"]).status.code(), Some(0));
}

#[test]
fn bad_eps_env_is_input_error() {
    let out = bin().args(["solve", data("example1.csv").to_str().unwrap(), "drf"]).env("ALLOC_EPS", "x").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_adv_drf() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("adv.csv");
    let out = run(&["gen", "--kind", "adv-drf", "--n", "2000", "--alpha", "0.25", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2001);
    assert_eq!(lines.iter().filter(|l| **l == "1,0.0005").count(), 1500);
    assert!(lines.contains(&"0.00025,1"));
}

#[test]
fn gen_alpha_two_rows() {
    let out = run(&["gen", "--kind", "alpha", "--n", "2", "--alpha", "0.5", "--seed", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 3);
}

#[test]
fn gen_trace_rows_are_normalized() {
    let trace = data("trace_sample.csv");
    let out = run(&["gen", "--kind", "trace", "--path", trace.to_str().unwrap(), "--n", "100", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.iter().copied().fold(0.0, f64::max) == 1.0));
}

#[test]
fn gen_bad_alpha() {
    assert_eq!(run(&["gen", "--kind", "alpha", "--n", "10", "--alpha", "0.9"]).status.code(), Some(2));
}

#[test]
fn sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.cfg");
    std::fs::write(
        &config,
        "generator = alpha\nn = 12\nalpha = 0.25, 0.5\ntrials = 3\nseed = 11\nmechanisms = drf, f1, hybrid-sw\n",
    )
    .unwrap();
    let a = run(&["sweep", config.to_str().unwrap()]);
    let b = run(&["sweep", config.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let (trials, aggregate) = text.split_once("\n\n# aggregate\n").unwrap();
    assert_eq!(trials.lines().count(), 1 + 6);
    assert_eq!(aggregate.lines().count(), 1 + 6);
    assert!(trials.starts_with("point,trial,generator,n,m,"));
}

#[test]
fn sweep_rows_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.cfg");
    let out_path = dir.path().join("out.csv");
    std::fs::write(
        &config,
        "generator = alpha\nn = 20\nalpha = 0.1, 0.3\ntrials = 5\nseed = 2\nmechanisms = drf, f2star, hybrid-util\n",
    )
    .unwrap();
    let out = run(&["sweep", config.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let block = text.split("\n\n").next().unwrap();
    let mut reader = csv::Reader::from_reader(block.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    for record in reader.records() {
        let record = record.unwrap();
        let get = |name: &str| record[col(name)].parse::<f64>().unwrap();
        for tag in ["drf", "f2star", "hybrid-util"] {
            let (sw, ratio) = (get(&format!("{tag}.sw")), get(&format!("{tag}.sw_ratio")));
            assert!(get("sw_opt") >= sw - 1e-6);
            assert!(ratio >= 1.0 - 1e-6);
            assert!((ratio - get("sw_opt") / sw).abs() <= 1e-9 * ratio);
            let (util, uratio) = (get(&format!("{tag}.util")), get(&format!("{tag}.util_ratio")));
            assert!(get("util_opt") >= util - 1e-6);
            assert!((uratio - get("util_opt") / util).abs() <= 1e-9 * uratio);
        }
        let branch = &record[col("hybrid-util.branch")];
        assert!(branch == "f1" || branch == "f2star", "{branch}");
    }
}

#[test]
fn sweep_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.cfg");
    std::fs::write(&config, "generator = alpha\nn = ten\n").unwrap();
    let out = run(&["sweep", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}
