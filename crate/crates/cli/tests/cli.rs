use std::path::Path;
use std::process::{Command, Output};

use fpme_cli::output::Table;

fn fpme(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpme")).args(args).output().expect("binary runs")
}

fn fpme_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpme")).args(args).env(key, val).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(text: &str, key: &str) -> f64 {
    let prefix = format!("{key}=");
    text.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap_or_else(|| panic!("no {key} in {text}")).parse().unwrap()
}

fn read_table(p: &Path) -> Table {
    Table::from_csv(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn exponents_examples() {
    let o = fpme(&["exponents", "--alpha", "0.5", "--m", "2", "--d", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!((value(&s, "a") - 1.0 / 6.0).abs() < 1e-15);
    assert!((value(&s, "b") - 1.0 / 6.0).abs() < 1e-15);
    assert!(s.contains("regime=slow"));

    let o = fpme(&["exponents", "--alpha", "1", "--m", "1", "--d", "2"]);
    let s = stdout(&o);
    assert_eq!((value(&s, "a"), value(&s, "b")), (1.0, 0.5));
    assert!(s.contains("regime=linear"));
}

#[test]
fn below_critical_exponent_is_usage_error() {
    let o = fpme(&["exponents", "--m", "0.2", "--d", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("m_c"));
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(fpme(&["exponents", "--beta", "1"]).status.code(), Some(2));
}

#[test]
fn constants_examples() {
    let s = stdout(&fpme(&["constants", "--alpha", "1", "--m", "0.5", "--d", "1"]));
    assert!((value(&s, "c_star") - 9.0).abs() < 1e-12);
    assert!((value(&s, "gamma_star") - 2.0).abs() < 1e-10);
    let s = stdout(&fpme(&["constants", "--alpha", "0.5", "--m", "2", "--d", "1"]));
    // mpmath: gamma(2.5)/gamma(4)/sqrt(6)
    assert!((value(&s, "free_boundary_constant") - 0.090_450_156_819_783_9).abs() < 1e-12);
    assert!((value(&s, "flux_constant") - 0.564_189_583_547_756_3).abs() < 1e-15);
}

#[test]
fn constants_json() {
    let o = fpme(&["constants", "--alpha", "0.5", "--m", "0.5", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["regime"], "fast");
    assert!(v["gamma_star"].as_str().unwrap().parse::<f64>().unwrap() > 0.0);
}

#[test]
fn slow_profile_file_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("slow.csv");
    let o = fpme(&["profile", "--alpha", "0.5", "--m", "2", "--grid-size", "256", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let t = read_table(&out);
    assert_eq!(t.get("status"), Some("ok"));
    assert_eq!(t.get("regime"), Some("slow"));
    let mass: f64 = t.get("mass_computed").unwrap().parse().unwrap();
    assert!((mass - 1.0).abs() < 1e-6);
    let l: f64 = t.get("L").unwrap().parse().unwrap();
    assert_eq!(t.rows.first().unwrap()[0], 0.0);
    assert_eq!(t.rows.last().unwrap(), &[l, 0.0]);
    assert!(t.rows.windows(2).all(|w| w[1][0] > w[0][0] && w[1][1] <= w[0][1]));
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("slow.csv.report.json")).unwrap()).unwrap();
    assert_eq!(rep["status"], "ok");
    assert_eq!(rep["report"]["monotone_certificate"], true);
}

#[test]
fn fast_profile_has_tail_descriptor() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fast.csv");
    let o = fpme(&["profile", "--alpha", "0.5", "--m", "0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let t = read_table(&out);
    for k in ["c_star", "gamma_star", "L", "tail_c2"] {
        assert!(t.get(k).is_some(), "missing {k}");
    }
}

#[test]
fn linear_profile_head_value() {
    let o = fpme(&["linear", "--alpha", "0.5", "--d", "1", "--grid-size", "10", "--z-max", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let t = Table::from_csv(&stdout(&o)).unwrap();
    assert_eq!(t.rows.len(), 11);
    // M/(2Γ(3/4)), mpmath
    assert!((t.rows[0][1] - 0.408_024_469_553_641).abs() < 1e-8);
}

#[test]
fn csv_reserialization_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    fpme(&["profile", "--alpha", "0.7", "--m", "3", "--grid-size", "64", "--out", out.to_str().unwrap()]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(Table::from_csv(&text).unwrap().to_csv(), text);
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path| vec!["profile".to_string(), "--alpha=0.5".into(), "--m=0.5".into(), "--grid-size=128".into(), format!("--out={}", p.display())];
    let run = |p: &Path| {
        let v = args(p);
        fpme_env(&v.iter().map(|s| s.as_str()).collect::<Vec<_>>(), "FPME_NUM_THREADS", "3")
    };
    run(&a);
    run(&b);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn solver_failure_writes_failed_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = fpme(&["profile", "--m", "2", "--max-iter", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let t = read_table(&out);
    assert_eq!(t.get("status"), Some("failed"));
    assert!(t.rows.is_empty());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# exponents run\nalpha = 0.5\nm = 3\n").unwrap();
    let s = stdout(&fpme(&["exponents", "--config", cfg.to_str().unwrap()]));
    assert!((value(&s, "b") - 0.125).abs() < 1e-15);
    let s = stdout(&fpme(&["exponents", "--config", cfg.to_str().unwrap(), "--m", "2"]));
    assert!((value(&s, "b") - 1.0 / 6.0).abs() < 1e-15);
}

#[test]
fn malformed_config_names_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "alpha = 0.5\nm = two\n").unwrap();
    let o = fpme(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.cfg:2") && err.contains("`m`"), "{err}");
}

#[test]
fn validate_subset_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = fpme(&["validate", "--only", "kernel,gamma_star", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let checks = v.as_array().unwrap();
    assert_eq!(checks.len(), 14);
    assert!(checks.iter().all(|c| c["passed"] == true && c["provenance"].as_str().is_some()));
}

#[test]
fn validate_unknown_suite_is_usage_error() {
    assert_eq!(fpme(&["validate", "--only", "nonsense"]).status.code(), Some(2));
}

#[test]
fn validate_hard_failure_exits_one() {
    // the equicontinuity bound fails for the α = 0.9 profile of this suite
    let o = fpme(&["validate", "--only", "alpha_limit"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL alpha_limit(alpha=0.9)/equicontinuity"));
}
