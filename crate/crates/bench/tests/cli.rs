use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sketchbench::report::read_reports_csv;

fn sketchbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sketchbench"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fails_with(out: &Output, needle: &str) {
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(needle), "stderr {err:?} lacks {needle:?}");
}

const SMALL: &str = "random-noisy:n=200,d=20,m=5,zeta=10";

#[test]
fn run_writes_one_record_per_cell() {
    let text = ok(&sketchbench(&[
        "run", "--dataset", SMALL, "--algo", "fd", "--algo", "hash", "--ell", "4,8", "--trials", "3",
    ]));
    let records = read_reports_csv(text.as_bytes()).unwrap();
    assert_eq!(records.len(), 2 * 2 * 3);
    let keys: Vec<_> = records.iter().map(|r| (r.algo.as_str(), r.ell, r.trial)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    for r in &records {
        assert!(r.cov_err.unwrap() >= 0.0);
        assert!(r.proj_err.unwrap() >= 1.0 - 1e-9);
        assert_eq!(r.wall_ns, None);
    }
    // FD is deterministic: every trial agrees.
    let fd: Vec<_> = records.iter().filter(|r| r.algo == "fd" && r.ell == 8).map(|r| r.cov_err).collect();
    assert!(fd.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn time_metric_fills_wall_ns_only() {
    let text = ok(&sketchbench(&[
        "run", "--dataset", SMALL, "--algo", "ssd", "--ell", "6", "--trials", "2", "--metrics", "time",
    ]));
    for r in read_reports_csv(text.as_bytes()).unwrap() {
        assert!(r.wall_ns.is_some());
        assert_eq!((r.cov_err, r.proj_err), (None, None));
    }
}

#[test]
fn config_file_with_flag_override_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let out = dir.path().join("out.csv");
    let summary = dir.path().join("summary.csv");
    fs::write(
        &cfg,
        format!(
            "dataset = \"{SMALL}\"\nalgorithms = [\"pfd:alpha=0.5\", \"varopt\"]\nells = [5, 10]\ntrials = 5\nseed = 3\nout = {:?}\nsummary = {:?}\n",
            out.display().to_string(),
            summary.display().to_string()
        ),
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    ok(&sketchbench(&["run", "--config", cfg, "--trials", "2"]));
    let records = read_reports_csv(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(records.len(), 2 * 2 * 2);
    let text = fs::read_to_string(&summary).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("algo,ell,cov_err_med,proj_err_med,wall_ns_med"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn json_output_carries_metadata() {
    let text = ok(&sketchbench(&[
        "run", "--dataset", SMALL, "--algo", "leverage", "--algo", "fd", "--ell", "12", "--trials", "2", "--format",
        "json",
    ]));
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["metadata"]["generator"], "chacha8");
    assert_eq!(doc["metadata"]["n"], 200);
    assert_eq!(doc["records"].as_array().unwrap().len(), 4);
    let algos = doc["metadata"]["algorithms"].as_array().unwrap();
    let lev = algos.iter().find(|a| a["name"] == "leverage:k=10").unwrap();
    assert_eq!(lev["pass_model"], "two-pass");
    assert_eq!(lev["randomized"], true);
    assert_eq!(doc["summary"].as_array().unwrap().len(), 2);
}

#[test]
fn adding_an_algorithm_leaves_others_unchanged() {
    let base = ok(&sketchbench(&["run", "--dataset", SMALL, "--algo", "norm", "--ell", "6", "--seed", "5"]));
    let more = ok(&sketchbench(&[
        "run", "--dataset", SMALL, "--algo", "norm", "--algo", "sign", "--ell", "6", "--seed", "5",
    ]));
    let norm_lines: Vec<&str> = more.lines().filter(|l| l.starts_with("norm,")).collect();
    assert_eq!(base.lines().skip(1).collect::<Vec<_>>(), norm_lines);
}

#[test]
fn bad_input_exits_nonzero_with_a_diagnostic() {
    fails_with(&sketchbench(&["run", "--dataset", SMALL, "--algo", "svd", "--ell", "4"]), "svd");
    fails_with(&sketchbench(&["run", "--dataset", SMALL, "--algo", "fd", "--ell", "1"]), ">= 2");
    fails_with(
        &sketchbench(&["run", "--dataset", SMALL, "--algo", "fd", "--ell", "4", "--budget", "100"]),
        "budget",
    );
    fails_with(
        &sketchbench(&["run", "--dataset", "random-noisy:n=20,d=10,m=3", "--algo", "fjlt", "--ell", "30"]),
        "l <= n",
    );
    fails_with(&sketchbench(&["run", "--dataset", "csv:/no/such/file.csv", "--algo", "fd", "--ell", "4"]), "file.csv");
    fails_with(&sketchbench(&["run", "--algo", "fd", "--ell", "4"]), "dataset");
}

#[test]
fn exact_low_rank_input_leaves_proj_err_empty() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("low.csv");
    fs::write(&path, "1,0,0\n2,0,0\n0,3,0\n0,1,0\n").unwrap();
    let ds = format!("csv:{}", path.display());
    let out = sketchbench(&["run", "--dataset", &ds, "--algo", "fd", "--ell", "2", "--k", "2", "--trials", "1"]);
    let text = ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let r = &read_reports_csv(text.as_bytes()).unwrap()[0];
    assert!(r.cov_err.is_some());
    assert_eq!(r.proj_err, None);
}

#[test]
fn generate_then_stats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.mtx", "a.csv"] {
        let path = dir.path().join(name);
        let p = path.to_str().unwrap();
        ok(&sketchbench(&["generate", "--dataset", "adversarial:n=80,d=20,m1=10,m2=3", "--out", p]));
        assert!(Path::new(p).exists());
        let prefix = if name.ends_with("mtx") { "mtx" } else { "csv" };
        let from_file: serde_json::Value =
            serde_json::from_str(&ok(&sketchbench(&["stats", "--dataset", &format!("{prefix}:{p}")]))).unwrap();
        let direct: serde_json::Value = serde_json::from_str(&ok(&sketchbench(&[
            "stats",
            "--dataset",
            "adversarial:n=80,d=20,m1=10,m2=3",
        ])))
        .unwrap();
        assert_eq!(from_file["n"], 80);
        assert_eq!(from_file["rank"], direct["rank"]);
        let (x, y) = (from_file["numeric_rank"].as_f64().unwrap(), direct["numeric_rank"].as_f64().unwrap());
        assert!((x - y).abs() < 1e-9);
    }
}
