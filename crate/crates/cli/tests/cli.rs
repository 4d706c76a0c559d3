// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use potts_core::{
    add_noise, generate, mr_select, NoiseFamily, NoiseSpec, SelectionConfig, SignalFamily,
    SignalSpec,
};
use serde_json::Value;
use tempfile::TempDir;

fn potts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_potts"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

#[test]
fn fit_fixed_gamma() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "y.csv", "0\n0\n1\n1\n");
    let fitted = dir.path().join("fitted.csv");
    let v = json(&potts(&[
        "fit",
        input.to_str().unwrap(),
        "--gamma",
        "0.1",
        "--fitted",
        fitted.to_str().unwrap(),
    ]));
    assert_eq!(v["jumps"], serde_json::json!([2]));
    assert_eq!(v["levels"], serde_json::json!([0.0, 1.0]));
    assert_eq!(fs::read_to_string(fitted).unwrap(), "0\n0\n1\n1\n");

    let v = json(&potts(&["fit", input.to_str().unwrap(), "--gamma", "0.3"]));
    assert_eq!(v["jumps"], serde_json::json!([]));
    assert_eq!(v["levels"], serde_json::json!([0.5]));
    assert_eq!(v["h_value"], serde_json::json!(0.25));
}

#[test]
fn fit_accepts_xy_input_and_writes_out_file() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "y.csv", "x,y\n0.25,3\n0.5,3\n0.75,3\n1,3\n");
    let out = dir.path().join("fit.json");
    let o = potts(&[
        "fit",
        input.to_str().unwrap(),
        "--gamma",
        "1e-3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(stdout(&o), "");
    let v: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["levels"], serde_json::json!([3.0]));
    assert_eq!(v["rss"], serde_json::json!(0.0));
}

#[test]
fn select_mr_matches_library() {
    let clean = generate(&SignalSpec::new(SignalFamily::three_jump_step(), 512)).unwrap();
    let y = add_noise(
        &clean,
        &NoiseSpec::new(NoiseFamily::Gaussian, 0.5, 11).unwrap(),
    );
    let expected = mr_select(&y, &SelectionConfig::default()).unwrap();

    let dir = TempDir::new().unwrap();
    let input = write(
        dir.path(),
        "y.csv",
        &potts_core::io::values_to_csv(y.values()),
    );
    let v = json(&potts(&[
        "select",
        input.to_str().unwrap(),
        "--select",
        "mr",
    ]));
    assert_eq!(v["rule"], "mr");
    assert_eq!(v["gamma"].as_f64().unwrap(), expected.gamma_hat);
    assert_eq!(v["threshold"].as_f64().unwrap(), expected.threshold);
    let jumps: Vec<usize> = serde_json::from_value(v["fit"]["jumps"].clone()).unwrap();
    assert_eq!(jumps, expected.fit.jumps());
}

#[test]
fn path_reports_knot() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "y.csv", "0\n0\n1\n1\n");
    let v = json(&potts(&["path", input.to_str().unwrap()]));
    assert_eq!(v["rss"], serde_json::json!([1.0, 0.0, 0.0]));
    assert_eq!(v["knots"][0]["gamma"], serde_json::json!(0.25));
    assert_eq!(v["knots"][0]["k"], serde_json::json!(0));

    let csv = stdout(&potts(&[
        "path",
        input.to_str().unwrap(),
        "--format",
        "csv",
    ]));
    assert_eq!(
        csv.lines().next().unwrap(),
        "k,rss,on_hull,gamma_lo,gamma_hi"
    );
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "y.csv", "0\n0\n1\n1\n");
    let p = input.to_str().unwrap();
    for args in [
        vec!["path", p, "--k-max", "0"],
        vec!["path", p, "--k-max", "9"],
        vec!["fit", p, "--sigma", "loud"],
        vec!["fit", p, "--gamma", "-1"],
        vec!["signal", "--n", "8", "--snr", "4"],
        vec!["signal", "--n", "8", "--family", "blocks", "--jumps", "0.5"],
        vec!["bench-cn", "--ns", "64"],
        vec!["figure1", "--out", p],
        vec!["frobnicate"],
    ] {
        let o = potts(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn data_errors_exit_3_with_line() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.csv", "value\n1\n2\nabc\n");
    let o = potts(&["fit", bad.to_str().unwrap(), "--gamma", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));

    let missing = dir.path().join("missing.csv");
    let o = potts(&["fit", missing.to_str().unwrap(), "--gamma", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn signal_clean_step() {
    let out = stdout(&potts(&[
        "signal", "--family", "step", "--jumps", "0.5", "--levels", "0,1", "--n", "4", "--clean",
    ]));
    assert_eq!(out, "0\n0\n1\n1\n");
    let out = stdout(&potts(&[
        "signal", "--family", "step", "--jumps", "0.5", "--levels", "-1,1", "--n", "2", "--clean",
    ]));
    assert_eq!(out, "-1\n1\n");
}

#[test]
fn noisy_signal_is_seeded() {
    let args = [
        "signal", "--family", "blocks", "--n", "64", "--snr", "4", "--seed", "3",
    ];
    let a = stdout(&potts(&args));
    assert_eq!(a, stdout(&potts(&args)));
    assert_eq!(a.lines().count(), 64);
    let mut other = args;
    other[8] = "4";
    assert_ne!(a, stdout(&potts(&other)));
}

#[test]
fn metrics_on_files() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", "[0.2, 0.8]");
    let b = write(dir.path(), "b.json", "[0.25]");
    let pa = a.to_str().unwrap();
    let v = json(&potts(&["metrics", pa, pa, "--hausdorff"]));
    assert_eq!(v, serde_json::json!({"hausdorff": 0.0}));
    let v = json(&potts(&["metrics", pa, b.to_str().unwrap()]));
    assert!((v["hausdorff"].as_f64().unwrap() - 0.55).abs() < 1e-15);
    assert!(v.get("skorokhod").is_none());

    // Jump sets carry no levels.
    let o = potts(&["metrics", pa, pa, "--skorokhod"]);
    assert_eq!(o.status.code(), Some(2));

    let f = write(
        dir.path(),
        "f.json",
        r#"{"breakpoints": [0.5], "levels": [0.0, 1.0]}"#,
    );
    let g = write(dir.path(), "g.csv", "0\n0\n0\n0\n0\n0\n1\n1\n1\n1\n");
    let v = json(&potts(&[
        "metrics",
        f.to_str().unwrap(),
        g.to_str().unwrap(),
        "--skorokhod",
    ]));
    assert!((v["skorokhod"].as_f64().unwrap() - 1.25f64.ln()).abs() < 1e-12);
}

#[test]
fn bench_rates_is_deterministic_across_thread_counts() {
    let run = |threads: &str| {
        stdout(&potts(&[
            "--threads",
            threads,
            "bench-rates",
            "--ns",
            "64,128",
            "--reps",
            "4",
            "--snr",
            "7",
            "--seed",
            "5",
            "--metric",
            "l2,hausdorff",
        ]))
    };
    let a = run("1");
    assert_eq!(a, run("2"));
    assert_eq!(
        a.lines().next().unwrap(),
        "n,replicate,seed,metric,value,jumps,gamma"
    );
    assert_eq!(a.lines().count(), 1 + 2 * 4 * 2);
}

#[test]
fn bench_recovery_and_cn() {
    let v = json(&potts(&[
        "bench-recovery",
        "--ns",
        "512",
        "--reps",
        "3",
        "--sigma",
        "0.1",
        "--seed",
        "1",
        "--format",
        "json",
    ]));
    assert_eq!(v["rows"][0]["match_fraction"], serde_json::json!(1.0));

    let csv = stdout(&potts(&[
        "bench-cn", "--ns", "32,64", "--reps", "2", "--seed", "9",
    ]));
    assert_eq!(csv.lines().count(), 1 + 4);
}

#[test]
fn figure1_writes_bundle() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("fig");
    let o = potts(&["figure1", "--seed", "0", "--out", out.to_str().unwrap()]);
    stdout(&o);
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 13);
    assert!(names.contains(&"blocks_snr7.csv".to_string()));
    assert!(names.contains(&"summary.json".to_string()));
    let cell = fs::read_to_string(out.join("doppler_snr1.csv")).unwrap();
    assert_eq!(cell.lines().next().unwrap(), "x,clean,noisy,fit");
    assert_eq!(cell.lines().count(), 2049);
}
