use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use microlocal::io::read_coeffs_csv;

fn microlocal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_microlocal")).args(args).current_dir(dir).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn verdicts(report: &Value) -> Vec<String> {
    report["result"]["scans"][0]["report"]["directions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["verdict"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn synth_delta_alternates() {
    let dir = tempfile::tempdir().unwrap();
    let out = microlocal(dir.path(), &["synth", "delta", "--x0", "0.5", "--nmax", "64", "-o", "delta.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let c = read_coeffs_csv(&dir.path().join("delta.csv")).unwrap();
    assert_eq!((c.dim(), c.n_max()), (1, 64));
    for (n, v) in c.iter() {
        let sign = if n[0] % 2 == 0 { 1.0 } else { -1.0 };
        assert_eq!((v.re, v.im), (sign, 0.0), "n = {}", n[0]);
    }
}

#[test]
fn smooth_gaussian_field_has_no_singular_directions() {
    let dir = tempfile::tempdir().unwrap();
    let out = microlocal(
        dir.path(),
        &["synth", "gaussian", "--x0", "0.5", "--width", "0.05", "--grid", "4096", "-o", "g.json"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = microlocal(dir.path(), &["analyze", "wf", "--input", "g.json", "--x0", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json(&out);
    let scan = &r["result"]["scans"][0]["report"];
    assert_eq!(scan["singular_directions"].as_array().unwrap().len(), 0);
    assert_eq!(scan["meta"]["m"], 4096);
}

#[test]
fn square_wave_is_singular_above_half() {
    let dir = tempfile::tempdir().unwrap();
    let out = microlocal(
        dir.path(),
        &["analyze", "sobolev", "--input", "oracle:square_wave@0.5", "--x0", "0.5", "--order", "0.6"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(verdicts(&json(&out)), ["singular", "singular"]);

    let out = microlocal(
        dir.path(),
        &["analyze", "sobolev", "--input", "oracle:square_wave@0.5", "--x0", "0.5", "--order", "0.4"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(verdicts(&json(&out)), ["regular", "regular"]);
}

#[test]
fn order_at_the_critical_value_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = microlocal(
        dir.path(),
        &["analyze", "sobolev", "--input", "oracle:square_wave@0.5", "--x0", "0.5", "--order", "0.5"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(verdicts(&json(&out)), ["inconclusive", "inconclusive"]);
}

#[test]
fn batch_scan_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = microlocal(
        dir.path(),
        &[
            "analyze", "wf", "--input", "oracle:kink@0.5", "--x0", "0.5", "--x0", "0.2", "--nmax", "256", "--csv", "d.csv",
            "--out", "r.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_slice(&std::fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    let scans = r["result"]["scans"].as_array().unwrap();
    assert_eq!(scans.len(), 2);
    // singular at the kink, smooth at 0.2 (away from the kink and its image at 0)
    assert_eq!(scans[0]["report"]["singular_directions"].as_array().unwrap().len(), 2);
    assert_eq!(scans[1]["report"]["singular_directions"].as_array().unwrap().len(), 0);
    // one CSV per point in a batch
    for i in 0..2 {
        let csv = std::fs::read_to_string(dir.path().join(format!("d_{i}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 3);
    }
}

#[test]
fn replay_reproduces_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = microlocal(
        dir.path(),
        &["analyze", "wf", "--input", "oracle:square_wave@0.5", "--x0", "0.5", "--out", "first.json"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = microlocal(dir.path(), &["replay", "first.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    // the replayed config still names first.json, so it is overwritten in place
    let first = std::fs::read(dir.path().join("first.json")).unwrap();
    let out = microlocal(dir.path(), &["replay", "first.json", "--out", "second.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(first, std::fs::read(dir.path().join("second.json")).unwrap());
}

#[test]
fn norm_membership_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let verdict = |weight: &str| {
        let out = microlocal(dir.path(), &["norm", "--input", "oracle:delta@0.5", "--weight", weight, "--q", "2"]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        json(&out)["result"]["membership"]["verdict"].as_str().unwrap().to_string()
    };
    // sum <n>^{2s} over Z diverges for s = 1 and converges for s = -1
    assert_eq!(verdict("poly:1"), "divergent");
    assert_eq!(verdict("poly:-1"), "convergent");
}

#[test]
fn moderate_check_flags_exponential_weights() {
    let dir = tempfile::tempdir().unwrap();
    let out = microlocal(dir.path(), &["moderate-check", "--omega", "poly:-2", "--nu", "poly:2", "--radius", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["result"]["verdict"], "moderate_up_to_r");
    assert!(r["result"]["constant"].as_f64().unwrap() <= 2.0);
    let out = microlocal(dir.path(), &["moderate-check", "--omega", "exp:1", "--nu", "one", "--radius", "20"]);
    assert_eq!(json(&out)["result"]["verdict"], "growing");
}

#[test]
fn product_writes_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let out = microlocal(
        dir.path(),
        &[
            "product", "--a", "oracle:gaussian@0.5;width=0.05", "--b", "oracle:gaussian@0.5;width=0.05", "--x0", "0.5",
            "--nmax", "32", "--coeffs-out", "p.csv", "--omega", "poly:-1", "--nu", "poly:1", "--q1", "1", "--q2", "2",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json(&out);
    assert!(r["result"]["young"].is_object(), "{r}");
    let c = read_coeffs_csv(&dir.path().join("p.csv")).unwrap();
    assert_eq!(c.n_max(), 32);
    assert!(c.hermitian_defect() < 1e-12);
}

#[test]
fn errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 5] = [
        (&["analyze", "wf", "--input", "missing.json", "--x0", "0.5"], "missing.json"),
        (&["analyze", "wf", "--input", "oracle:no_such_kind", "--x0", "0.5"], "no_such_kind"),
        (&["analyze", "wf", "--input", "oracle:kink@0.5", "--x0", "0.5", "--window-in", "0.3"], "window"),
        (&["analyze", "wf", "--input", "oracle:kink@0.5", "--x0", "0.5", "--nmax", "4"], "shell"),
        (&["norm", "--input", "oracle:delta@0.5", "--q", "0.5"], "q = 0.5"),
    ];
    for (args, needle) in cases {
        let out = microlocal(dir.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let msg = stderr(&out);
        assert!(msg.contains(needle), "{args:?}: {msg}");
    }
    let out = microlocal(dir.path(), &["analyze", "wf"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_override_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_microlocal"))
            .args(["analyze", "wf", "--input", "oracle:kink@0.5", "--x0", "0.5"])
            .env("MICROLOCAL_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap()
    };
    let one = run("1");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, run("2").stdout);
    let bad = run("many");
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("MICROLOCAL_THREADS"));
}
