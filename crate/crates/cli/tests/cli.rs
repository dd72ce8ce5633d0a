use std::process::{Command, Output};

fn qperp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qperp")).args(args).output().expect("qperp runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scalar(args: &[&str]) -> f64 {
    let out = qperp(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    stdout(&out).trim().parse().unwrap()
}

fn values(csv: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# sampler_id="));
    assert_eq!(lines.next(), Some("value"));
    lines.map(|l| l.parse().unwrap()).collect()
}

#[test]
fn eval_examples() {
    assert!((scalar(&["eval", "mellin", "--q", "0.5", "--mu", "2", "--s", "1"]) - 4.0).abs() < 1e-12);
    assert_eq!(scalar(&["eval", "psi", "--q", "0.5", "--mu", "1", "--s", "0"]), 0.0);
    assert!((scalar(&["eval", "qgamma_fn", "--q", "0.5", "--x", "3"]) - 1.5).abs() < 1e-12);
    assert_eq!(scalar(&["eval", "qpoch", "--a", "0.5", "--q", "0.5", "--n", "3"]), 0.328125);
    assert!((scalar(&["eval", "qexp", "--q", "0.5", "--x", "1"]) - 2.384231029031371).abs() < 1e-12);
}

#[test]
fn eval_complex_prints_two_fields() {
    let out = qperp(&["eval", "mellin", "--q", "0.5", "--mu", "2", "--s", "0.5", "--s-im", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim().split(',').count(), 2);
}

#[test]
fn domain_errors_exit_2() {
    for args in [
        &["eval", "mellin", "--q", "0.5", "--mu", "2", "--s", "2"][..],
        &["eval", "qgamma_fn", "--q", "1.5", "--x", "3"],
        &["eval", "density", "--q", "0.5", "--mu", "2"],
        &["eval", "nosuch", "--q", "0.5"],
        &["sample", "path", "--q", "0.5", "--mu", "2", "--n", "0"],
        &["sample", "qgamma", "--q", "0.5", "--mu", "2", "--n", "3"],
        &["limit", "--mu", "2", "--q-grid", ""],
        &["limit", "--mu", "2", "--n", "0"],
    ] {
        let out = qperp(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn missing_flag_is_named() {
    let out = qperp(&["eval", "cdf", "--q", "0.5", "--mu", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--x"));
}

#[test]
fn degenerate_qgamma() {
    let out = qperp(&["sample", "qgamma", "--a", "0", "--q", "0.5", "--n", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(values(&stdout(&out)), vec![2.0; 10]);
}

#[test]
fn sample_is_reproducible() {
    let args = ["sample", "series", "--q", "0.5", "--mu", "1.5", "--n", "3", "--seed", "9"];
    assert_eq!(qperp(&args).stdout, qperp(&args).stdout);
    let other = qperp(&["sample", "series", "--q", "0.5", "--mu", "1.5", "--n", "3", "--seed", "10"]);
    assert_ne!(qperp(&args).stdout, other.stdout);
}

#[test]
fn sample_writes_file() {
    let dir = std::env::temp_dir().join(format!("qperp-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("batch.json");
    let out = qperp(&[
        "sample", "factorization", "--q", "0.5", "--mu", "2", "--n", "5", "--format", "json", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"sampler_id\": \"factorization\""));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn factorization_mean_matches_first_moment() {
    let out = qperp(&["sample", "factorization", "--q", "0.5", "--mu", "2", "--n", "1000000", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let xs = values(&stdout(&out));
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean - 4.0).abs() <= 3.0 * (var / n).sqrt(), "mean {mean}");
}

#[test]
fn verify_analytic_passes_and_negative_control_fails() {
    let out = qperp(&["verify", "analytic"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout(&out);
    assert!(report.contains("\"overall_pass\": true"));
    assert!(report.contains("\"timestamp\": \"1970-01-01T00:00:00Z\""));

    let out = qperp(&["verify", "analytic", "--negative-control"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("\"overall_pass\": false"));
}

#[test]
fn limit_writes_rows() {
    let out = qperp(&["limit", "--mu", "2", "--q-grid", "0.9,0.99", "--n", "10000", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("q,n,ks_distance,ks_critical_1pct"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn help_documents_flags() {
    let out = qperp(&["sample", "--help"]);
    let text = stdout(&out);
    for flag in ["--q", "--mu", "--a", "--n", "--seed", "--tol", "--out", "--format"] {
        assert!(text.contains(flag), "{flag}");
    }
    let out = qperp(&["verify", "--help"]);
    assert!(!stdout(&out).contains("negative-control"));
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_qperp"))
        .args(["eval", "psi", "--q", "0.5", "--mu", "1", "--s", "0"])
        .env("QPERP_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
