use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

use roughness_cli::table::{parse_csv, write_csv, RowStatus};

const PAIR: &str = r#""distribution":{"positions":[-0.05,0.05],"weights":[0.5,0.5]}"#;

fn roughness(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_roughness"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

/// Runs `command` with `config` on stdin; returns (exit code, stdout, stderr).
fn run(command: &str, config: &str, extra: &[&str]) -> (i32, String, String) {
    let mut args = vec![command, "--config", "-"];
    args.extend_from_slice(extra);
    let out = roughness(&args, config);
    (
        out.status.code().expect("exited normally"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(command: &str, config: &str) -> Value {
    let (code, stdout, stderr) = run(command, config, &[]);
    assert_eq!(code, 0, "{stderr}");
    serde_json::from_str(&stdout).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

#[test]
fn bounds_for_close_pair() {
    let v = json("bounds", &format!("{{{PAIR}}}"));
    assert!(close(v["quantum"]["roughness"].as_f64().unwrap(), 1.0, 1e-12));
    assert!(close(v["quantum"]["mean"].as_f64().unwrap(), 1.0, 1e-12));
    assert!(close(v["spade"]["roughness"].as_f64().unwrap(), 1.000625, 1e-12));
    assert!(close(v["direct_imaging"]["roughness"].as_f64().unwrap(), 100.500625, 1e-10));
    assert_eq!(v["units"]["length"], "omega0");
}

#[test]
fn bounds_scale_with_rayleigh_range() {
    let v = json("bounds", &format!(r#"{{"optics":{{"rayleigh_range":2.0}},{PAIR}}}"#));
    assert!(close(v["quantum"]["roughness"].as_f64().unwrap(), 4.0, 1e-12));
    assert_eq!(v["units"]["rayleigh_range"], 2.0);
}

#[test]
fn missing_weights_is_a_parse_error_with_pointer() {
    let (code, _, stderr) = run("bounds", r#"{"distribution":{"positions":[-0.05,0.05]}}"#, &[]);
    assert_eq!(code, 1);
    assert!(stderr.contains("/distribution"), "{stderr}");
    assert!(stderr.contains("weights"), "{stderr}");
}

#[test]
fn nested_parse_errors_point_at_the_field() {
    let (code, _, stderr) = run("bounds", &format!(r#"{{"optics":{{"rayleigh_range":"wide"}},{PAIR}}}"#), &[]);
    assert_eq!(code, 1);
    assert!(stderr.contains("/optics/rayleigh_range"), "{stderr}");
    let (code, _, stderr) = run("bounds", &format!(r#"{{"colour":1,{PAIR}}}"#), &[]);
    assert_eq!(code, 1);
    assert!(stderr.contains("colour"), "{stderr}");
}

#[test]
fn zero_roughness_exits_with_singular_code() {
    let (code, _, stderr) = run("bounds", r#"{"distribution":{"positions":[0.3,0.3],"weights":[0.5,0.5]}}"#, &[]);
    assert_eq!(code, 2);
    assert!(stderr.contains("singular"), "{stderr}");
}

#[test]
fn off_center_distribution_is_rejected_for_classical_bounds() {
    let (code, _, stderr) = run("bounds", r#"{"distribution":{"positions":[0.0,0.1],"weights":[0.5,0.5]}}"#, &[]);
    assert_eq!(code, 1);
    assert!(stderr.contains("centered"), "{stderr}");
}

#[test]
fn csv_only_for_scan_and_simulate() {
    let (code, _, _) = run("bounds", &format!("{{{PAIR}}}"), &["--format", "csv"]);
    assert_eq!(code, 1);
    let (code, _, _) = run("matrices", &format!(r#"{{{PAIR},"format":"csv"}}"#), &[]);
    assert_eq!(code, 1);
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    v["data"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect()
}

#[test]
fn order_zero_matrices_are_one() {
    let v = json("matrices", &format!(r#"{{{PAIR},"truncation":0}}"#));
    for key in ["c_matrix", "c_inverse", "w_matrix", "w_inverse"] {
        assert_eq!(matrix(&v[key]), vec![vec![1.0]], "{key}");
    }
    assert_eq!(v["residuals"]["c"], 0.0);
    assert_eq!(v["residuals"]["w"], 0.0);
}

#[test]
fn order_eight_residuals_are_small() {
    let v = json("matrices", &format!(r#"{{{PAIR},"truncation":8}}"#));
    assert!(v["residuals"]["c"].as_f64().unwrap() <= 1e-9);
    assert!(v["residuals"]["w"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["order"], 8);
    assert_eq!(matrix(&v["c_matrix"]).len(), 9);
}

#[test]
fn order_sixteen_reports_true_residuals() {
    let v = json("matrices", &format!(r#"{{"optics":{{"rayleigh_range":0.5}},{PAIR},"truncation":16}}"#));
    assert_eq!(v["residuals"]["w"], 0.0);
    // 2^j/j! in the inverse is rounded, which the large entries of C amplify
    let c = v["residuals"]["c"].as_f64().unwrap();
    assert!(c > 1e-9 && c < 0.1, "{c}");
}

#[test]
fn oversized_truncation_is_refused() {
    let (code, _, stderr) = run("matrices", &format!(r#"{{{PAIR},"truncation":65}}"#), &[]);
    assert_eq!(code, 1);
    assert!(stderr.contains("64"), "{stderr}");
    let (code, _, _) = run("matrices", &format!(r#"{{{PAIR},"truncation":64}}"#), &[]);
    assert_eq!(code, 0);
}

fn small_run(channel: &str) -> String {
    format!(r#"{{{PAIR},"channel":"{channel}","photons_per_run":20000,"repetitions":24}}"#)
}

#[test]
fn simulate_is_identical_across_thread_counts() {
    for channel in ["spade", "direct-imaging"] {
        let (c1, one, _) = run("simulate", &small_run(channel), &["--threads", "1"]);
        let (c16, sixteen, _) = run("simulate", &small_run(channel), &["--threads", "16"]);
        assert_eq!((c1, c16), (0, 0));
        assert_eq!(one, sixteen, "{channel}");
    }
}

#[test]
fn simulate_seed_flag_overrides_file() {
    let cfg = format!(r#"{{{PAIR},"photons_per_run":5000,"repetitions":4,"seed":3}}"#);
    let (_, from_file, _) = run("simulate", &cfg, &[]);
    let (_, flagged, _) = run("simulate", &cfg, &["--seed", "4"]);
    let (_, same, _) = run("simulate", &cfg, &["--seed", "3"]);
    assert_ne!(from_file, flagged);
    assert_eq!(from_file, same);
    let v: Value = serde_json::from_str(&flagged).unwrap();
    assert_eq!(v["run_config"]["seed"], 4);
}

#[test]
fn simulate_output_reruns_from_its_embedded_config() {
    let (_, first, _) = run("simulate", &small_run("spade"), &[]);
    let v: Value = serde_json::from_str(&first).unwrap();
    let embedded = v["run_config"].to_string();
    let (code, second, _) = run("simulate", &embedded, &[]);
    assert_eq!(code, 0);
    assert_eq!(first, second);
    // defaults are materialized
    assert_eq!(v["run_config"]["target"], "roughness");
    assert_eq!(v["run_config"]["optics"]["omega0"], 1.0);
}

#[test]
fn simulate_prints_summary_line() {
    let (code, _, stderr) = run("simulate", &small_run("direct-imaging"), &[]);
    assert_eq!(code, 0);
    let line = stderr.lines().next().unwrap();
    for field in ["channel=direct-imaging", "m=20000", "reps=24", "m*Var=", "crb=", "ratio="] {
        assert!(line.contains(field), "{line}");
    }
}

#[test]
fn simulate_csv_lists_estimates() {
    let (code, stdout, _) = run("simulate", &small_run("spade"), &["--format", "csv"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "repetition,estimate");
    assert_eq!(lines.len(), 25);
    assert!(lines[1].starts_with("0,"));
}

#[test]
fn zero_photons_is_a_validation_error() {
    let (code, _, stderr) = run("simulate", &format!(r#"{{{PAIR},"photons_per_run":0}}"#), &[]);
    assert_eq!(code, 1);
    assert!(stderr.contains("photons_per_run"), "{stderr}");
}

#[test]
fn estimator_failure_exits_three() {
    let cfg = r#"{"distribution":{"positions":[0.2,0.2],"weights":[0.5,0.5]},"photons_per_run":10,"repetitions":2}"#;
    let (code, _, stderr) = run("simulate", cfg, &[]);
    assert_eq!(code, 3);
    assert!(stderr.contains("estimator"), "{stderr}");
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("roughness-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bounds.json");
    let out = roughness(&["bounds", "--config", "-", "--out", path.to_str().unwrap()], &format!("{{{PAIR}}}"));
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v["spade"]["roughness"].is_number());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn missing_config_file_exits_one() {
    let out = roughness(&["bounds", "--config", "/nonexistent/roughness.json"], "");
    assert_eq!(out.status.code(), Some(1));
}

fn scan_csv(axis: &str, values: &str, extra: &str) -> (i32, String) {
    let cfg = format!(r#"{{{PAIR},"scan":{{"axis":"{axis}","values":{values}{extra}}}}}"#);
    let (code, stdout, _) = run("scan", &cfg, &["--format", "csv"]);
    (code, stdout)
}

#[test]
fn separation_scan_columns_move_the_right_way() {
    let (code, text) = scan_csv("separation", "[0.2,0.1,0.05,0.02,0.01]", "");
    assert_eq!(code, 0);
    let rows = parse_csv(&text).unwrap();
    assert_eq!(rows.len(), 5);
    for w in rows.windows(2) {
        assert!(w[1].direct_imaging_roughness > w[0].direct_imaging_roughness);
        assert!(w[1].spade_roughness < w[0].spade_roughness);
    }
    let last = rows.last().unwrap();
    assert!(close(last.spade_roughness.unwrap(), 1.0, 1e-4));
    assert!(rows.iter().all(|r| r.empirical_rescaled_variance.is_none()));
}

#[test]
fn scan_csv_round_trips() {
    let (_, text) = scan_csv("separation", "[0.3,0.07,0.011]", "");
    let rows = parse_csv(&text).unwrap();
    assert_eq!(write_csv(&rows).unwrap(), text);
    assert!(text.starts_with(
        "value,quantum_roughness,spade_roughness,direct_imaging_roughness,\
         empirical_rescaled_variance,empirical_ratio,status\n"
    ));
}

#[test]
fn rayleigh_range_scan_gives_squares() {
    let (code, text) = scan_csv("rayleigh-range", "[0.5,1,2]", "");
    assert_eq!(code, 0);
    let q: Vec<f64> = parse_csv(&text).unwrap().iter().map(|r| r.quantum_roughness.unwrap()).collect();
    for (got, want) in q.iter().zip([0.25, 1.0, 4.0]) {
        assert!(close(*got, want, 1e-12), "{got}");
    }
}

#[test]
fn zero_separation_row_is_flagged_not_fatal() {
    let (code, text) = scan_csv("separation", "[0.1,0.0]", "");
    assert_eq!(code, 0);
    let rows = parse_csv(&text).unwrap();
    assert_eq!(rows[0].status, RowStatus::Ok);
    assert_eq!(rows[1].status, RowStatus::Divergent);
    assert_eq!(rows[1].spade_roughness, None);
}

#[test]
fn bad_grids_are_rejected() {
    assert_eq!(scan_csv("separation", "[0.1]", "").0, 1);
    assert_eq!(scan_csv("separation", "[0.1,0.2,0.15]", "").0, 1);
    assert_eq!(scan_csv("separation", "[0.1,0.1]", "").0, 1);
    assert_eq!(scan_csv("separation", "[-0.1,0.1]", "").0, 1);
    assert_eq!(scan_csv("photons", "[10,10.5]", "").0, 1);
    assert_eq!(scan_csv("rayleigh-range", "[0,1]", "").0, 1);
    let (code, _, _) = run("scan", &format!("{{{PAIR}}}"), &[]);
    assert_eq!(code, 1);
}

#[test]
fn scan_json_embeds_config() {
    let cfg = format!(r#"{{{PAIR},"scan":{{"axis":"separation","values":[0.1,0.05]}}}}"#);
    let v = json("scan", &cfg);
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["run_config"]["scan"]["simulate"], false);
    assert_eq!(v["rows"][1]["status"], "ok");
}

#[test]
fn photon_scan_approaches_the_bound() {
    let (code, text) = scan_csv("photons", "[1000,10000,100000,1000000]", "");
    assert_eq!(code, 0);
    let rows = parse_csv(&text).unwrap();
    for r in rows.iter().filter(|r| r.value >= 1e5) {
        let ratio = r.empirical_ratio.unwrap();
        assert!((0.9..=1.1).contains(&ratio), "m={} ratio={ratio}", r.value);
    }
}
