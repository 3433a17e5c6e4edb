use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ipsdual::duality::{classical_d, orthogonal_d};
use ipsdual::rational::{format_rational, int, parse_rational};
use ipsdual::systems::ParticleSystem;
use serde_json::Value;

fn ipsdual(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipsdual")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut v = vec!["--out", dir.to_str().unwrap()];
    v.extend_from_slice(args);
    ipsdual(&v)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let out = ipsdual(&[]);
    assert_eq!(out.status.code(), Some(2));
    let text = format!("{}{}", String::from_utf8_lossy(&out.stderr), String::from_utf8_lossy(&out.stdout));
    assert!(text.contains("Usage"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(ipsdual(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn tables_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        run_in(dir.path(), &["tables", "--system", "sip", "--alpha", "1", "--kmax", "4", "--nmax", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("duality_discrete.csv"));
    assert_eq!(header, ["family", "k", "n", "value", "lo", "hi", "provenance"]);
    let sip = ParticleSystem::sip(int(1)).unwrap();
    let mut seen = [0usize; 3];
    for r in &rows {
        let (k, n): (usize, usize) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        let expected = match r[0].as_str() {
            "classical" => {
                seen[0] += 1;
                Some(classical_d(&sip, k, n).unwrap())
            }
            f if f.starts_with("orthogonal") => {
                seen[1] += 1;
                Some(orthogonal_d(&sip, &int(1), &int(1), k, n).unwrap())
            }
            _ => {
                seen[2] += 1;
                None
            }
        };
        if let Some(e) = expected {
            assert_eq!(r[3], format_rational(&e));
            assert_eq!(r[6], "exact");
        }
    }
    assert_eq!(seen, [25, 25, 25]);
    // the cheap family carries Z = 2 for λ = 1/2: d(1,1) = 4 exactly
    let cheap11 = rows.iter().find(|r| r[0].starts_with("cheap") && r[1] == "1" && r[2] == "1").unwrap();
    assert_eq!(parse_rational(&cheap11[3]).unwrap(), int(4));
}

#[test]
fn every_csv_cell_has_a_provenance() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), &["tables", "--system", "irw", "--lambdas", "1/2,1"]).status.success());
    for entry in fs::read_dir(dir.path()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "csv") {
            let (header, rows) = read_csv(&p);
            if header.contains(&"expression".to_string()) && !header.contains(&"value".to_string()) {
                continue;
            }
            assert_eq!(header.last().unwrap(), "provenance", "{}", p.display());
            for r in rows {
                assert!(["exact", "certified-bracket"].contains(&r.last().unwrap().as_str()));
            }
        }
    }
    // IRW marginals involve e^{-λ}: brackets, not exact values
    let (_, nu) = read_csv(&dir.path().join("marginals.csv"));
    assert!(nu.iter().all(|r| r[5] == "certified-bracket" && r[2].is_empty()));
}

#[test]
fn verify_duality_reports_all_zero_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["verify-duality", "--system", "irw", "--family", "orthogonal", "--a", "1", "--b", "1"],
    );
    assert!(out.status.success());
    let s = summary(dir.path());
    let checked = s["checked"].as_u64().unwrap();
    assert!(checked > 0);
    assert_eq!(s["summary"], format!("residuals: 0 nonzero / {checked} checked"));
    let echoed: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(echoed, s);
}

#[test]
fn negative_parameters_are_accepted_as_flag_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "verify-duality",
            "--system",
            "sep",
            "--gamma",
            "2",
            "--family",
            "orthogonal",
            "--a",
            "-1/2",
            "--b",
            "1",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(summary(dir.path())["status"], "pass");
}

#[test]
fn mixed_mode_checks_sip_against_bep() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["verify-duality", "--system", "sip", "--alpha", "2", "--mode", "mixed", "--sites", "3"],
    );
    assert!(out.status.success());
    assert_eq!(summary(dir.path())["nonzero"], 0);
    let out = run_in(dir.path(), &["verify-duality", "--system", "sep", "--mode", "mixed"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn continuum_failure_exits_with_one_and_lists_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["verify-continuum", "--system", "sep", "--gamma", "1", "--order", "6"]);
    assert_eq!(out.status.code(), Some(1));
    let (_, rows) = read_csv(&dir.path().join("continuum_residual.csv"));
    assert_eq!(rows.len(), summary(dir.path())["nonzero"].as_u64().unwrap() as usize);
    assert!(!rows.is_empty());
    let out = run_in(
        dir.path(),
        &["verify-continuum", "--system", "sep", "--gamma", "1", "--continuum-family", "regularized"],
    );
    assert!(out.status.success());
    let out = run_in(dir.path(), &["verify-continuum", "--system", "sip", "--alpha", "1/2", "--c", "-1"]);
    assert!(out.status.success());
}

#[test]
fn intertwining_and_stationary_pass() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(
        dir.path(),
        &["verify-intertwining", "--system", "sigma-beta", "--sigma", "-1", "--beta", "2"]
    )
    .status
    .success());
    let s = summary(dir.path());
    assert_eq!(s["nonzero"], 0);
    assert!(s["checks"]["inverse"]["checked"].as_u64().unwrap() > 0);
    assert!(run_in(dir.path(), &["stationary-check", "--system", "sip", "--alpha", "2", "--lambda", "1/3"])
        .status
        .success());
    let (_, rows) = read_csv(&dir.path().join("stationary.csv"));
    assert!(rows.iter().all(|r| r[5] == "true"));
}

#[test]
fn characterize_recognizes_affine_rates() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), &["characterize", "--system", "sep", "--gamma", "3"]).status.success());
    assert_eq!(summary(dir.path())["dimension"], 2);
    assert!(run_in(dir.path(), &["characterize", "--u", "0,1,4,9,16,25,36", "--v", "1,1,1,1,1,1,1"])
        .status
        .success());
    assert_eq!(summary(dir.path())["dimension"], 1);
    assert!(run_in(dir.path(), &["characterize", "--u", "0,1,2", "--v", "1"]).status.code() != Some(0));
}

#[test]
fn simulate_is_deterministic_given_the_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "--seed",
        "9",
        "simulate",
        "--system",
        "sep",
        "--eta",
        "1,0,1",
        "--xi",
        "1,1,0",
        "--samples",
        "5000",
        "--t",
        "0.5",
    ];
    assert!(run_in(a.path(), &args).status.success());
    assert!(run_in(b.path(), &args).status.success());
    let sa = fs::read(a.path().join("summary.json")).unwrap();
    let sb = fs::read(b.path().join("summary.json")).unwrap();
    assert_eq!(sa, sb);
    let (header, rows) = read_csv(&a.path().join("trajectory.csv"));
    assert_eq!(header.len(), 5);
    assert!(rows.iter().all(|r| r[4] == "monte-carlo"));
    let s = summary(a.path());
    assert_eq!(s["conserved"], true);
    assert!(s["duality"]["z_lhs_exact"].as_f64().unwrap().abs() < 4.0);
}

#[test]
fn bep_trajectories_conserve_energy() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "simulate",
            "--system",
            "bep",
            "--alpha",
            "1/2",
            "--z",
            "1,0,2",
            "--geometry",
            "cycle",
            "--t",
            "0.5",
            "--record-every",
            "0.1",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(rows.len(), 6);
    for r in rows {
        let total: f64 = r[1..4].iter().map(|x| x.parse::<f64>().unwrap()).sum();
        assert!((total - 3.0).abs() < 1e-9);
    }
}

#[test]
fn scaling_check_reports_first_order() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), &["scaling-check", "--gamma", "2"]).status.success());
    let order = summary(dir.path())["empirical_order"].as_f64().unwrap();
    assert!((order - 1.0).abs() < 0.05);
    let (_, rows) = read_csv(&dir.path().join("scaling.csv"));
    assert_eq!(rows.len(), 3);
}

#[test]
fn config_file_specifies_a_run_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out_dir = dir.path().join("artifacts");
    fs::write(
        &cfg,
        format!(
            r#"
            out = "{}"
            seed = 4
            [system]
            name = "sip"
            alpha = "1/2"
            [kernel]
            geometry = "cycle"
            sites = 3
            [family]
            name = "orthogonal"
            a = -1
            b = "1/2"
            [verify-duality]
            max_dual_total = 2
            max_entry = 3
            "#,
            out_dir.display()
        ),
    )
    .unwrap();
    let out = ipsdual(&["verify-duality", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out_dir);
    assert_eq!(s["system"], "SIP(1/2)");
    assert_eq!(s["sites"], 3);
    assert_eq!(s["seed"], 4);
    assert_eq!(s["max_dual_total"], 2);
    let out =
        ipsdual(&["verify-duality", "--config", cfg.to_str().unwrap(), "--system", "irw", "--sites", "2"]);
    assert!(out.status.success());
    let s = summary(&out_dir);
    assert_eq!(s["system"], "IRW");
    assert_eq!(s["sites"], 2);
}

#[test]
fn error_classes_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[system]\nname = \"sip\"\nalpha = \"one\"\n").unwrap();
    assert_eq!(ipsdual(&["tables", "--config", bad.to_str().unwrap()]).status.code(), Some(3));
    fs::write(&bad, "[sytsem]\n").unwrap();
    assert_eq!(ipsdual(&["tables", "--config", bad.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(run_in(dir.path(), &["tables", "--system", "sip", "--alpha", "-1"]).status.code(), Some(4));
    assert_eq!(
        run_in(dir.path(), &["stationary-check", "--system", "sip", "--lambda", "1"]).status.code(),
        Some(4)
    );
    assert_eq!(run_in(dir.path(), &["tables", "--system", "sip", "--alpha", "x"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["tables"]).status.code(), Some(2));
    let file = dir.path().join("plain-file");
    fs::write(&file, "").unwrap();
    let out = ipsdual(&["tables", "--system", "irw", "--out", file.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(ipsdual(&["tables", "--config", "/nonexistent/x.toml"]).status.code(), Some(5));
}
