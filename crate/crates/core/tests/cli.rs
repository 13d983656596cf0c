use hetcdc::cli::{self, EXIT_FAILED, EXIT_OK, EXIT_USAGE};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["hetcdc"];
    full.extend_from_slice(args);
    let code = cli::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn design_dump_lists_storage() {
    let (code, out, _) = run(&["design", "--x", "4,6"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let nodes = v["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 10);
    for n in nodes {
        let want = if n["node"].as_u64().unwrap() <= 4 { 6 } else { 4 };
        assert_eq!(n["files"].as_array().unwrap().len(), want);
    }
    assert_eq!(v["tsets"].as_array().unwrap().len(), 24);
}

#[test]
fn design_csv_three_groups() {
    let (code, out, _) = run(&["design", "--x", "2,2,4", "--format", "csv"]);
    assert_eq!(code, EXIT_OK);
    let files: Vec<usize> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(files, vec![8, 8, 8, 8, 4, 4, 4, 4]);
}

#[test]
fn invalid_group_size_is_a_usage_error() {
    let (code, out, err) = run(&["design", "--x", "4,1"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(out.is_empty());
    assert!(err.contains("at least 2 nodes"), "{err}");
    let (code, _, _) = run(&["simulate"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = run(&["simulate", "--x", "2,2", "--strategy", "bogus"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn simulate_reports_exact_load() {
    let (code, out, _) = run(&["simulate", "--x", "2,2,4", "--seed", "3"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["measured_load"]["numerator"], "39");
    assert_eq!(v["measured_load"]["denominator"], "80");
    assert_eq!(v["measured_load"]["decimal"], "0.4875");
    assert_eq!(v["matches_formula"], true);
    assert_eq!(v["computation_load"]["numerator"], "3");
}

#[test]
fn all_b_load_exceeds_default() {
    let (code, out, _) = run(&["simulate", "--x", "2,2,4", "--strategy", "all-b"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["matches_formula"], serde_json::Value::Null);
    let num: f64 = v["measured_load"]["decimal"].as_str().unwrap().parse().unwrap();
    assert!(num > 0.4875);
}

#[test]
fn ledger_csv_rows() {
    let (code, out, _) = run(&["simulate", "--x", "4,6", "--format", "csv"]);
    assert_eq!(code, EXIT_OK);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("round,method,sender,receivers,bits"));
    assert_eq!(lines.count(), 96 + 720);
}

#[test]
fn verify_passes_and_flags_win_over_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "x = [5, 5]\nseed = 1\nstrategy = \"all-b\"\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let (code, out, _) = run(&["verify", "--config", cfg, "--x", "2,3", "--strategy", "default"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["params"]["x"], serde_json::json!([2, 3]));
    assert_eq!(v["ledger_load"]["numerator"], "17");
    assert_eq!(v["ledger_load"]["denominator"], "36");
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn oracle_limit_is_reported() {
    let (code, _, err) = run(&["verify", "--x", "2,2", "--max-iv-pairs", "4"]);
    assert_eq!(code, EXIT_FAILED);
    assert!(err.contains("oracle limit"), "{err}");
}

#[test]
fn bad_t_bits_names_the_divisor() {
    let (code, _, err) = run(&["simulate", "--x", "2,2,2", "--t-bits", "48"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("40"), "{err}");
}

#[test]
fn output_is_identical_across_runs_and_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let p = path.to_str().unwrap();
    let (code, out, _) = run(&["--jobs", "1", "simulate", "--x", "3,2,3", "--eta1", "2", "--out", p]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let first = std::fs::read(&path).unwrap();
    let (_, again, _) = run(&["simulate", "--x", "3,2,3", "--eta1", "2", "--jobs", "3"]);
    assert_eq!(first, again.into_bytes());
    let (code, _, _) = run(&["--jobs", "0", "simulate", "--x", "2,2"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn sweep_header_only_and_rows() {
    let (code, out, _) = run(&["sweep"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("K,s,x,X,N,Q,formula_load"));

    let (code, out, _) = run(&["sweep", "--uniform", "3:2..5", "--simulate", "--format", "csv"]);
    assert_eq!(code, EXIT_OK);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.contains(",true,")));
}

#[test]
fn sweep_spec_file_skips_invalid_rows() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("sweep.toml");
    std::fs::write(
        &spec,
        "[[config]]\nx = [4, 6]\n[[config]]\nx = [3]\n[[config]]\nx = [1, 4]\n",
    )
    .unwrap();
    let (code, out, _) = run(&["sweep", "--spec", spec.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["formula_load"], "7/12");
}
