use std::fs;
use std::path::Path;
use std::process::Command;

fn sdmom(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_sdmom")).args(args).output().unwrap();
    assert!(out.status.success(), "sdmom {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn fails(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_sdmom")).args(args).output().unwrap();
    assert!(!out.status.success(), "sdmom {args:?} unexpectedly succeeded");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn simulate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let data = p(dir.path(), "data.csv");
    sdmom(&["simulate", "--model", "gaussian", "--n", "400", "--d", "3", "--attack", "relocate-far", "--outliers", "10", "--magnitude", "1e6", "--seed", "7", "--out", &data]);
    let meta = fs::read_to_string(format!("{data}.meta")).unwrap();
    assert!(meta.contains("mu=0,0,0\n"));
    assert_eq!(meta.lines().find(|l| l.starts_with("outliers=")).unwrap().split(',').count(), 10);

    let out = p(dir.path(), "mean.json");
    sdmom(&["estimate-mean", "--input", &data, "--meta", &format!("{data}.meta"), "--k", "80", "--estimator", "sdo-mom", "--seed", "1", "--out", &out]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["command"], "estimate-mean");
    assert_eq!(v["config"]["k"], "80");
    assert_eq!(v["result"]["mu_hat"].as_array().unwrap().len(), 3);
    let e = v["error"]["mahalanobis"].as_f64().unwrap();
    assert!(e < 1.0, "{e}");
    assert!(v["result"].get("timings").is_none());

    let mean_out = p(dir.path(), "naive.json");
    sdmom(&["estimate-mean", "--input", &data, "--meta", &format!("{data}.meta"), "--k", "n", "--estimator", "mean", "--seed", "1", "--out", &mean_out]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&mean_out).unwrap()).unwrap();
    assert!(v["error"]["euclidean"].as_f64().unwrap() > 1e4);

    let timed = p(dir.path(), "timed.json");
    sdmom(&["estimate-mean", "--input", &data, "--k", "40", "--estimator", "mom-sde", "--seed", "1", "--out", &timed, "--timings"]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&timed).unwrap()).unwrap();
    assert_eq!(v["result"]["timings"].as_array().unwrap().len(), 2);
}

#[test]
fn estimate_cov_writes_header() {
    let dir = tempfile::tempdir().unwrap();
    let data = p(dir.path(), "data.csv");
    sdmom(&["simulate", "--model", "student-t", "--n", "600", "--d", "2", "--seed", "2", "--out", &data]);
    let out = p(dir.path(), "cov.csv");
    sdmom(&["estimate-cov", "--input", &data, "--k", "60", "--psd-project", "--out", &out]);
    let (m, phi0, projected) = sdmom::output::parse_scatter_csv(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(m.shape(), (2, 2));
    assert_eq!(phi0, sdmom_core::math::PHI0_GAUSSIAN);
    assert!(projected);
}

#[test]
fn bench_and_check_accept_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = p(dir.path(), "bench.cfg");
    fs::write(&cfg, "# tiny grid\nmodel=gaussian\nd=2\nestimator=mean\nn_values=50,100\ntrials=3\n").unwrap();
    let out = p(dir.path(), "bench.jsonl");
    sdmom(&["bench", "--config", &cfg, "--out", &out, "trials=2"]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().last().unwrap().contains("\"kind\":\"summary\""));

    let ccfg = p(dir.path(), "check.cfg");
    fs::write(&ccfg, "model=gaussian\nd=3\nn=2000\nk=200\nn_directions=20\n").unwrap();
    for which in ["isometry", "assumption-h0", "phis"] {
        let o = p(dir.path(), &format!("{which}.json"));
        sdmom(&["check", "--which", which, "--config", &ccfg, "--out", &o, "seed=4"]);
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&o).unwrap()).unwrap();
        assert!(v.is_object());
    }
}

#[test]
fn bad_arguments_fail() {
    let dir = tempfile::tempdir().unwrap();
    let data = p(dir.path(), "d.csv");
    sdmom(&["simulate", "--model", "gaussian", "--n", "30", "--d", "2", "--seed", "0", "--out", &data]);
    let out = p(dir.path(), "o.json");
    assert!(fails(&["estimate-mean", "--input", &data, "--k", "0", "--estimator", "sdo-mom", "--seed", "0", "--out", &out]).contains("k"));
    fails(&["estimate-mean", "--input", &data, "--k", "5", "--estimator", "nope", "--seed", "0", "--out", &out]);
    fails(&["simulate", "--model", "gaussian", "--n", "30", "--d", "2", "--seed", "0", "--attack", "relocate-far", "--out", &data]);
    fails(&["estimate-mean", "--input", "/nonexistent.csv", "--k", "5", "--estimator", "mean", "--seed", "0", "--out", &out]);
}
