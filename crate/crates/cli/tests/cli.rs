use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

fn signseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_signseg"))
        .args(args)
        .env_remove("SIGNSEG_TABLE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

// Deterministic pseudo-noise in [-1, 1).
fn noise(i: usize, j: usize) -> f64 {
    let mut x = (i as u64 * 1_000_003 + j as u64 * 7919 + 12345).wrapping_mul(6364136223846793005);
    x ^= x >> 29;
    x = x.wrapping_mul(0xbf58476d1ce4e5b9);
    x ^= x >> 32;
    (x % 2_000_000) as f64 / 1_000_000.0 - 1.0
}

fn write_panel(path: &Path, n: usize, p: usize, mean: impl Fn(usize) -> f64) {
    let mut s = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..p).map(|j| format!("{:.6}", mean(i) + noise(i, j))).collect();
        writeln!(s, "{}", row.join(",")).unwrap();
    }
    std::fs::write(path, s).unwrap();
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(str::trim))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

fn quantile_row(o: &Output) -> Vec<f64> {
    let out = stdout(o);
    let row = out.lines().nth(1).expect("data row");
    row.split(',').skip(5).map(|v| v.parse().unwrap()).collect()
}

#[test]
fn quantiles_reject_short_windows() {
    let o = signseg(&["quantiles", "--n", "7", "--B", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n must be ≥ 8"), "{}", stderr(&o));
}

#[test]
fn quantiles_header_and_monotone_row() {
    let o = signseg(&["--seed", "3", "quantiles", "--n", "12", "--B", "500"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("n,B,seed,c,bstar,q80,q90,q95,q99,q99.5,q99.9\n"));
    assert!(out.lines().nth(1).unwrap().starts_with("12,500,3,,,"));
    let q = quantile_row(&o);
    assert_eq!(q.len(), 6);
    assert!(q.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn noncentral_quantiles_exceed_central() {
    let central = quantile_row(&signseg(&["quantiles", "--n", "20", "--B", "800"]));
    let shifted = quantile_row(&signseg(&["quantiles", "--n", "20", "--B", "800", "--c", "20"]));
    assert!(shifted[2] > central[2], "{shifted:?} vs {central:?}");
}

#[test]
fn bstar_requires_c() {
    let o = signseg(&["quantiles", "--n", "20", "--bstar", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn quantiles_write_and_reuse_table_dir() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_signseg"))
            .args(["quantiles", "--n", "16", "--B", "300"])
            .env("SIGNSEG_TABLE_DIR", dir.path())
            .output()
            .unwrap()
    };
    let first = run();
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let file = dir.path().join("tn_n16_B300_seed42.sqt");
    assert!(file.exists());
    let second = run();
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn constant_series_has_zero_statistic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("flat.csv");
    write_panel(&data, 20, 30, |_| 0.0);
    let flat: String = (0..20).map(|_| vec!["1.5"; 30].join(",") + "\n").collect();
    std::fs::write(&data, flat).unwrap();
    let o = signseg(&["--table-replicates", "500", "test", "--data", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(field(&out, "statistic:").parse::<f64>().unwrap(), 0.0);
    assert!(field(&out, "p_value:").parse::<f64>().unwrap() > 0.99);
    assert!(field(&out, "decision:").starts_with("accept"));
}

#[test]
fn test_detects_large_shift_and_emits_json() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("shift.csv");
    write_panel(&data, 30, 40, |i| if i < 15 { 0.0 } else { 3.0 });
    let o = signseg(&["--table-replicates", "1000", "test", "--data", data.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n"], 30);
    assert_eq!(v["p"], 40);
    assert_eq!(v["reject"], true);
    assert_eq!(v["argmax_k"], 15);
}

#[test]
fn missing_data_file_is_a_usage_error() {
    let o = signseg(&["test", "--data", "/nonexistent/panel.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("panel.csv"));
}

#[test]
fn malformed_csv_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "1,2,3\n4,x,6\n").unwrap();
    let o = signseg(&["test", "--data", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn segment_finds_nothing_in_noise_and_the_shift_otherwise() {
    let dir = tempfile::tempdir().unwrap();
    let tables = dir.path().join("tables");
    let null = dir.path().join("null.csv");
    write_panel(&null, 40, 30, |_| 0.0);
    let base = ["--table-replicates", "2000", "--table-dir", tables.to_str().unwrap(), "segment"];

    let mut args = base.to_vec();
    args.extend(["--data", null.to_str().unwrap()]);
    let o = signseg(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("change points: 0"), "{}", stdout(&o));

    let shifted = dir.path().join("shift.csv");
    write_panel(&shifted, 40, 30, |i| if i < 20 { 0.0 } else { 4.0 });
    let prefix = dir.path().join("result");
    let mut args = base.to_vec();
    args.extend(["--data", shifted.to_str().unwrap(), "--out", prefix.to_str().unwrap()]);
    let o = signseg(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(prefix.with_extension("csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("location,p_value,interval_a,interval_b,statistic"));
    let found: Vec<usize> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(found.len(), 1, "{csv}");
    assert!(found[0].abs_diff(20) <= 1, "{csv}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(prefix.with_extension("json")).unwrap()).unwrap();
    assert_eq!(json["n"], 40);
    assert_eq!(json["m_hat"], 1);
    assert_eq!(json["locations"][0], found[0]);
}

#[test]
fn segment_rejects_bad_alpha() {
    let o = signseg(&["segment", "--data", "whatever.csv", "--alpha", "0.2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_preset_is_a_usage_error() {
    let o = signseg(&["simulate", "--preset", "table9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("table9"));
}

#[test]
fn hill_reports_every_column() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("h.csv");
    let mut s = String::new();
    for i in 0..30 {
        writeln!(s, "{:.6},2.0", noise(i, 0) * 10.0).unwrap();
    }
    std::fs::write(&data, s).unwrap();
    let o = signseg(&["hill", "--data", data.to_str().unwrap(), "--k", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "column,k,left,right,left_defined,right_defined");
    assert!(lines[1].ends_with("true,true"), "{}", lines[1]);
    assert_eq!(lines[2], "2,10,,,false,false");
}

#[test]
fn hill_rejects_k_at_least_n() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("h.csv");
    write_panel(&data, 10, 2, |_| 0.0);
    let o = signseg(&["hill", "--data", data.to_str().unwrap(), "--k", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_threads_is_rejected() {
    let o = signseg(&["--threads", "0", "quantiles", "--n", "10"]);
    assert_eq!(o.status.code(), Some(2));
}
