use std::process::{Command, Output};

use serde_json::Value;
use xsect::config::{validate_config, Command as Cmd};

fn xsect(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_xsect"));
    c.args(args).env_remove(xsect::THREADS_ENV);
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn without_timestamp(v: &Value) -> Value {
    let mut v = v.clone();
    v["provenance"].as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn tile_example_passes() {
    let o = xsect(&["tile", "--group", "z2", "--delta", "0.1", "--seed", "7"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["pass"], true);
    assert_eq!(v["verdicts"].as_object().unwrap().len(), 4);
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn entropy_example_is_near_one_bit() {
    let o = xsect(&["entropy", "--system", "bernoulli:0.5", "--window", "10", "--samples", "1000000", "--seed", "1"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let e = json(&o)["outputs"]["estimate"]["estimate"].as_f64().unwrap();
    assert!((e - 1.0).abs() < 0.01, "{e}");
}

#[test]
fn abramov_example_and_checker_failure() {
    let base = ["abramov", "--system", "bernoulli:0.5", "--cylinder", "x0=0", "--samples", "1000000", "--seed", "1"];
    let o = xsect(&base, &[]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["outputs"]["report"]["target"].as_f64().unwrap(), 2.0);
    let mut strict = base.to_vec();
    strict.extend(["--tolerance", "1e-9"]);
    let o = xsect(&strict, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["verdicts"]["ratio"], false);
}

#[test]
fn config_errors_exit_two_and_list_everything() {
    let o = xsect(&["tile", "--delta", "0.2", "--density", "3"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("0 < δ ≤ 0.1"), "{err}");
    assert!(err.contains("seed"), "{err}");
    assert!(err.contains("density"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn precondition_failures_name_the_hypothesis() {
    let o = xsect(&["tile", "--group", "z", "--window", "3", "--seed", "1"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("hypothesis"), "{err}");
}

#[test]
fn bad_thread_variable_is_a_config_error() {
    let o = xsect(&["entropy", "--seed", "1", "--samples", "10000"], &[("XSECT_THREADS", "many")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_files_write_outputs_and_reproduce_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mix.toml");
    let out = dir.path().join("out.json");
    let csv = dir.path().join("out.csv");
    std::fs::write(
        &cfg,
        format!(
            "command = \"mixing\"\nsystem = \"markov:0.9\"\nseed = 11\noutput = {:?}\ncsv = {:?}\n[params]\nscales = [1, 2, 3, 5, 8]\nsample_size = 50000\n",
            out, csv
        ),
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let a = xsect(&["run", cfg, "--threads", "1"], &[]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(a.stdout.is_empty());
    let first: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 6);
    let b = xsect(&["mixing", "--config", cfg], &[("XSECT_THREADS", "4")]);
    assert_eq!(b.status.code(), Some(0));
    let second: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(without_timestamp(&first), without_timestamp(&second));
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), table);
    let c = xsect(&["entropy", "--config", cfg], &[]);
    assert_eq!(c.status.code(), Some(2));
}

#[test]
fn full_configs_round_trip() {
    for cmd in Cmd::ALL {
        let text = format!("command = \"{}\"\nseed = 5\n", cmd.name());
        let cfg = validate_config(&text).unwrap();
        let again = validate_config(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again, "{}", cmd.name());
    }
    let custom = "command = \"abramov\"\nsystem = \"tower:1,2|markov:0.8,0.2;0.4,0.6\"\nseed = 9\noutput = \"r.json\"\n[params]\ncylinder = [0, 1]\nwindow = 3\n";
    let cfg = validate_config(custom).unwrap();
    assert_eq!(validate_config(&cfg.to_toml()).unwrap(), cfg);
}

#[test]
fn missing_seed_and_syntax_errors() {
    let err = validate_config("command = \"entropy\"\n").unwrap_err();
    assert_eq!(err.0.len(), 1);
    assert!(err.0[0].starts_with("seed"));
    assert!(validate_config("command = [").is_err());
    assert!(validate_config("command = \"entropy\"\nseed = 1\nbogus = 2\n").is_err());
    let err = validate_config("command = \"warp\"\nseed = 1\n").unwrap_err();
    assert!(err.0[0].contains("unknown command"));
}
