use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn osup(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osup"))
        .args(args)
        .current_dir(dir)
        .env_remove("OSUP_THREADS")
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty());
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

const EXP1: &str = r#"{"family":"Exp","alpha":1}"#;

#[test]
fn gen_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "gen", "--kind", "brownian", "--n", "1024", "--k", "100", "--seed", "7", "--out",
    ];
    let mut a: Vec<&str> = args.to_vec();
    a.push("a.csv");
    let mut b: Vec<&str> = args.to_vec();
    b.push("b.csv");
    let ra = json(&osup(&a, d));
    json(&osup(&b, d));
    assert_eq!(
        fs::read(d.join("a.csv")).unwrap(),
        fs::read(d.join("b.csv")).unwrap()
    );
    assert_eq!(ra["master_seed"], 7);
    assert_eq!(ra["tool"], "osup");
    assert!(ra["fingerprints"]["ensemble"].as_str().unwrap().len() == 16);
    assert!(d.join("a.manifest.json").exists());
}

#[test]
fn classify_example() {
    let dir = tempfile::tempdir().unwrap();
    let r = json(&osup(
        &[
            "classify",
            "--psi",
            r#"{"family":"Power","p":2}"#,
            "--phi",
            EXP1,
        ],
        dir.path(),
    ));
    assert_eq!(r["result"]["weaker_than"], true);
    assert_eq!(r["result"]["phi_delta2"], false);
    assert_eq!(r["result"]["psi_delta2"], true);
    assert_eq!(r["config"]["psi"]["p"], 2.0);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["frobnicate"],
        vec!["classify", "--psi", EXP1],
        vec!["classify", "--psi", EXP1, "--phi", EXP1, "--bogus"],
        vec![
            "classify",
            "--psi",
            r#"{"family":"Exp","alpha":1,"p":2}"#,
            "--phi",
            EXP1,
        ],
        vec![],
    ] {
        let out = osup(&args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(osup(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn unreachable_schedule_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    json(&osup(
        &[
            "gen",
            "--kind",
            "gaussian",
            "--covariance",
            r#"{"kind":"white_noise","variance":100}"#,
            "--n",
            "64",
            "--k",
            "50",
            "--out",
            "w.csv",
        ],
        d,
    ));
    let out = osup(&["build-support", "--ensemble", "w.csv", "--psi", EXP1], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unreachable"));
}

#[test]
fn pipeline_round_trip_and_inputs_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    json(&osup(
        &[
            "gen", "--kind", "brownian", "--n", "512", "--k", "200", "--seed", "1", "--out",
            "e.bin",
        ],
        d,
    ));
    json(&osup(
        &[
            "gen", "--kind", "brownian", "--n", "512", "--k", "200", "--seed", "2", "--out",
            "h.csv",
        ],
        d,
    ));
    let before = fs::read(d.join("e.bin")).unwrap();
    ok(&osup(
        &[
            "build-support",
            "--ensemble",
            "e.bin",
            "--psi",
            EXP1,
            "--n-max",
            "4",
            "--out",
            "b.json",
            "--schedule-out",
            "s.json",
        ],
        d,
    ));
    let report: Value = serde_json::from_slice(&fs::read(d.join("b.json")).unwrap()).unwrap();
    assert_eq!(report["result"]["advisory"]["weaker_than"], true);
    assert_eq!(report["result"]["advisory"]["phi_source"], "manifest");

    // both the bare schedule and the wrapping report are accepted
    for s in ["s.json", "b.json"] {
        let v = json(&osup(
            &[
                "verify-bound",
                "--ensemble",
                "e.bin",
                "--schedule",
                s,
                "--holdout",
                "h.csv",
            ],
            d,
        ));
        assert_eq!(v["result"]["training"]["bound_satisfied"], true);
        assert_eq!(
            v["result"]["holdout"]["warnings"].as_array().unwrap().len(),
            1
        );
    }
    let wrong = osup(
        &[
            "verify-bound",
            "--ensemble",
            "h.csv",
            "--schedule",
            "s.json",
        ],
        d,
    );
    assert_eq!(wrong.status.code(), Some(1));

    let en = json(&osup(
        &[
            "enhanced-norm",
            "--ensemble",
            "e.bin",
            "--schedule",
            "s.json",
        ],
        d,
    ));
    assert_eq!(en["result"]["paths"].as_array().unwrap().len(), 200);

    let over = osup(
        &[
            "mcurve",
            "--ensemble",
            "e.bin",
            "--psi",
            EXP1,
            "--out",
            "e.bin",
        ],
        d,
    );
    assert_eq!(over.status.code(), Some(1));
    assert_eq!(fs::read(d.join("e.bin")).unwrap(), before);
}

#[test]
fn m_oracle_and_family() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (seed, f) in [("1", "a.csv"), ("2", "b.csv")] {
        json(&osup(
            &[
                "gen", "--kind", "brownian", "--n", "256", "--k", "100", "--seed", seed, "--out", f,
            ],
            d,
        ));
    }
    ok(&osup(
        &[
            "mcurve",
            "--ensemble",
            "a.csv",
            "--psi",
            EXP1,
            "--full",
            "--out",
            "m.json",
        ],
        d,
    ));
    let direct = json(&osup(
        &["build-support", "--ensemble", "a.csv", "--psi", EXP1],
        d,
    ));
    let tabulated = json(&osup(
        &[
            "build-support",
            "--ensemble",
            "a.csv",
            "--psi",
            EXP1,
            "--m-oracle",
            "m.json",
        ],
        d,
    ));
    assert_eq!(
        direct["result"]["schedule"],
        tabulated["result"]["schedule"]
    );

    let fam = json(&osup(
        &[
            "build-support",
            "--ensemble",
            "a.csv",
            "--ensemble",
            "b.csv",
            "--psi",
            EXP1,
        ],
        d,
    ));
    assert_eq!(fam["master_seed"], serde_json::json!([1, 2]));
    let fam_deltas = fam["result"]["schedule"]["deltas"]
        .as_array()
        .unwrap()
        .clone();
    let a_deltas = direct["result"]["schedule"]["deltas"]
        .as_array()
        .unwrap()
        .clone();
    for (f, a) in fam_deltas.iter().zip(&a_deltas) {
        assert!(f.as_f64().unwrap() <= a.as_f64().unwrap());
    }
    let bad = osup(
        &[
            "build-support",
            "--ensemble",
            "a.csv",
            "--ensemble",
            "b.csv",
            "--psi",
            EXP1,
            "--m-oracle",
            "m.json",
        ],
        d,
    );
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn experiments_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let c = json(&osup(&["counterexample", "--tau", "2,-1,0"], d));
    let rows = c["result"]["rows"].as_array().unwrap();
    assert!((rows[0]["sup_closed_form"].as_f64().unwrap() - 8.0 / 3.0).abs() < 1e-12);
    assert_eq!(rows[2]["sup_closed_form"], 0.0);
    assert!(c["result"]["max_relative_error"].as_f64().unwrap() < 1e-3);

    fs::write(d.join("s.txt"), "# header\n1.0\n2.0\n").unwrap();
    assert_eq!(
        osup(&["tail", "--samples", "s.txt"], d).status.code(),
        Some(1)
    );
    let t = json(&osup(&["tail", "--statistic", "abs-tau", "--k", "5000"], d));
    assert_eq!(t["result"]["reference_exponent"], 2.0);
    assert_eq!(t["result"]["sample_count"], 5000);

    let p = json(&osup(
        &[
            "dh-probe",
            "--psi",
            r#"{"family":"Exp","alpha":2}"#,
            "--L",
            "1,2,4,8",
            "--k",
            "300",
            "--n",
            "128",
        ],
        d,
    ));
    assert_eq!(p["result"]["label"], "EXPLORATORY");
    let est: Vec<f64> = p["result"]["estimates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(est.windows(2).all(|w| w[0] <= w[1]));

    json(&osup(
        &[
            "gen", "--kind", "brownian", "--n", "256", "--k", "50", "--out", "e.csv",
        ],
        d,
    ));
    ok(&osup(
        &[
            "build-support",
            "--ensemble",
            "e.csv",
            "--psi",
            EXP1,
            "--schedule-out",
            "s.json",
            "--out",
            "b.json",
        ],
        d,
    ));
    let k = json(&osup(
        &[
            "compactness",
            "--schedule",
            "s.json",
            "--epsilon",
            "4",
            "--count",
            "30",
        ],
        d,
    ));
    assert_eq!(k["result"]["covering"]["empirical_net_size"], 1);
    assert_eq!(k["result"]["unit_ball"]["equicontinuity_violations"], 0);
    let fine = osup(
        &["compactness", "--schedule", "s.json", "--epsilon", "0.001"],
        d,
    );
    assert_eq!(fine.status.code(), Some(2));
}

#[test]
fn threads_flag_does_not_change_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |t: &str, out: &str| {
        osup(
            &[
                "--threads",
                t,
                "gen",
                "--kind",
                "theta",
                "--p",
                "1.5",
                "--L",
                "4",
                "--n",
                "256",
                "--k",
                "64",
                "--out",
                out,
            ],
            d,
        )
    };
    let a = run("1", "a.csv");
    let b = run("3", "b.csv");
    assert_eq!(
        fs::read(d.join("a.csv")).unwrap(),
        fs::read(d.join("b.csv")).unwrap()
    );
    let strip = |o: &Output| {
        let mut v = json(o);
        v["config"]["out"] = Value::Null;
        v["result"]["path"] = Value::Null;
        v["result"]["manifest_path"] = Value::Null;
        v
    };
    assert_eq!(strip(&a), strip(&b));
}
