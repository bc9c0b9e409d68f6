use std::process::{Command, Output};

use qrepeater::maps::{diagonal_crossings, Crossing};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qrepeater"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a TSV, header first, comments dropped.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}

fn column(table: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = table[0].iter().position(|c| c == name).unwrap();
    table[1..].iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn connect_curve_below_diagonal_in_figure_two_regime() {
    let o = run(&["connect-curve", "--L", "3", "--eta", "1", "--p1", "1", "--p2", "0.97", "--grid", "0.251:0.999:0.001"]);
    assert!(o.status.success());
    let t = rows(&stdout(&o));
    assert_eq!(t[0], ["F", "F_L"]);
    let (f, fl) = (column(&t, "F"), column(&t, "F_L"));
    assert_eq!(f.len(), 749);
    assert!(f.iter().zip(&fl).all(|(a, b)| b < a));
}

#[test]
fn connect_curve_perfect_endpoint() {
    let o = run(&["connect-curve", "--noise", "1", "--L", "5", "--grid", "1"]);
    let t = rows(&stdout(&o));
    assert_eq!(column(&t, "F_L"), [1.0]);
}

#[test]
fn purify_curve_noiseless_fixed_points_and_norm() {
    let o = run(&["purify-curve", "--noise", "1", "--grid", "0.5,1"]);
    let t = rows(&stdout(&o));
    assert_eq!(column(&t, "F_out"), column(&t, "F"));
    assert_eq!(column(&t, "p_succ"), column(&t, "norm"));
}

#[test]
fn purify_curve_has_two_crossings() {
    let o = run(&["purify-curve", "--p1", "1", "--p2", "0.995", "--eta", "0.995", "--grid", "0.251:0.999:0.001"]);
    let t = rows(&stdout(&o));
    let (f, out) = (column(&t, "F"), column(&t, "F_out"));
    let g: Vec<f64> = f.iter().zip(&out).map(|(a, b)| b - a).collect();
    let changes = g.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count();
    assert_eq!(changes, 2);
    // and the library scan on the same map agrees
    let map = qrepeater::werner_map(
        qrepeater::NoiseParams::new(1.0, 0.995, 0.995).unwrap(),
        qrepeater::Protocol::Bennett,
    );
    let c: Vec<Crossing> = diagonal_crossings(&map);
    assert_eq!(c.len(), 2);
}

#[test]
fn sweep_m_orders_noise_levels() {
    let o = run(&["sweep-m", "--protocol", "deutsch", "--noise-list", "1,0.995,0.99", "--grid", "0.9:0.96:0.02"]);
    assert!(o.status.success());
    let t = rows(&stdout(&o));
    assert_eq!(t[0], ["p1", "p2", "eta", "F_work", "M", "F_mean"]);
    let m = column(&t, "M");
    assert_eq!(m.len(), 12);
    for i in 0..4 {
        assert!(m[i] <= m[i + 4] && m[i + 4] <= m[i + 8]);
    }
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = ["sweep-m", "--protocol", "deutsch", "--noise-list", "0.995,0.99", "--grid", "0.9:0.97:0.01"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let args = ["repeater", "--scheme", "B"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn repeater_json_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(&["repeater", "--scheme", "B", "--N", "128", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let summary = String::from_utf8(o.stderr).unwrap();
    assert!(summary.contains("resources=") && summary.contains("time="), "{summary}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["report"]["levels"], 7);
    assert_eq!(v["report"]["records"].as_array().unwrap().len(), 7);
    let r = v["report"]["total_resources"].as_f64().unwrap();
    assert!(r > 100.0 && r < 1000.0);
}

#[test]
fn single_level_smoke() {
    let o = run(&["repeater", "--scheme", "A", "--N", "2", "--f-work", "0.94", "--format", "tsv"]);
    assert!(o.status.success());
    assert_eq!(rows(&stdout(&o)).len(), 2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "scheme = \"C\"\nN = 16\nf-work = 0.96\nnoise = 0.995\nformat = \"tsv\"\n").unwrap();
    let o = run(&["repeater", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(rows(&stdout(&o)).len(), 5);
    let o = run(&["repeater", "--config", cfg.to_str().unwrap(), "--N", "64"]);
    assert_eq!(rows(&stdout(&o)).len(), 7);
}

#[test]
fn config_file_unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "speed = 3\n").unwrap();
    let o = run(&["repeater", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["repeater", "--N", "100"]).status.code(), Some(2));
    assert_eq!(run(&["repeater", "--eta", "0.2"]).status.code(), Some(2));
    assert_eq!(run(&["repeater", "--scheme", "C", "--protocol", "bennett"]).status.code(), Some(3));
    assert_eq!(run(&["repeater", "--scheme", "A", "--f-work", "0.995"]).status.code(), Some(3));
    assert_eq!(run(&["sweep-m", "--noise", "0.9", "--grid", "0.9,0.95"]).status.code(), Some(3));
    let o = run(&["connect-curve", "--out", "/nonexistent-dir/x.tsv"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8(o.stderr).unwrap().contains("/nonexistent-dir/x.tsv"));
}

#[test]
fn oracle_check_passes_and_detects_perturbation() {
    let o = run(&["oracle-check"]);
    assert_eq!(o.status.code(), Some(0));
    let t = rows(&stdout(&o));
    assert!(column(&t, "max_deviation").iter().all(|d| *d <= 1e-12));
    assert_eq!(run(&["oracle-check", "--perturb", "1e-9"]).status.code(), Some(1));
}

#[test]
fn oracle_check_noiseless_subset() {
    let o = run(&["oracle-check", "--noise-list", "1"]);
    let t = rows(&stdout(&o));
    assert!(column(&t, "max_deviation").iter().all(|d| *d <= 1e-14));
}

#[test]
fn fixed_points_table() {
    let o = run(&["fixed-points", "--noise", "1"]);
    let t = rows(&stdout(&o));
    assert!((column(&t, "F_min")[0] - 0.5).abs() < 1e-10);
    assert_eq!(column(&t, "F_max")[0], 1.0);
}

#[test]
fn json_tables_parse() {
    let o = run(&["connect-curve", "--grid", "0.5,0.9", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["columns"][1], "F_L");
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}
