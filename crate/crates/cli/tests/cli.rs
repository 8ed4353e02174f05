use std::path::Path;
use std::process::{Command, Output};

fn ptmathieu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptmathieu"))
        .args(args)
        .env_remove("PTMATHIEU_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data lines of a CSV, without header comments and column names.
fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

fn error_record(o: &Output) -> serde_json::Value {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    let line = err.lines().rev().find(|l| l.starts_with('{')).expect("json error record");
    serde_json::from_str(line).unwrap()
}

#[test]
fn free_spectrum_rows() {
    let o = ptmathieu(&["spectrum", "--q", "0", "--delta", "3", "--j", "2", "--bc", "neumann", "--k", "6"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert!(csv.lines().any(|l| l == "level,re,im"));
    assert_eq!(data_rows(&csv), ["0,0,0", "1,1,0", "2,4,0", "3,9,0", "4,16,0", "5,25,0"]);
    assert!(csv.contains("# command = spectrum\n"));
    assert!(csv.contains("# delta = 3.0\n"));
}

#[test]
fn classical_value_in_json() {
    let o = ptmathieu(&["spectrum", "--q", "1", "--delta", "0", "--k", "2", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["command"], "spectrum");
    assert_eq!(v["columns"], serde_json::json!(["level", "re", "im"]));
    assert_eq!(v["rows"][0]["re"].as_f64().unwrap(), -0.455138604107);
}

#[test]
fn trace_leaves_unbounded_fields_empty_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path| {
        vec![
            "trace".to_string(),
            "--j".into(),
            "1".into(),
            "--delta-grid".into(),
            "0,2".into(),
            "--q-max".into(),
            "1".into(),
            "--output".into(),
            out.to_str().unwrap().into(),
        ]
    };
    for out in [&a, &b] {
        let argv = args(out);
        let o = ptmathieu(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.lines().any(|l| l == "delta,q_crit_pos,q_crit_neg,jump_flag"));
    let rows = data_rows(&text);
    assert_eq!(rows[0], "0,,,0");
    let fields: Vec<&str> = rows[1].split(',').collect();
    let q: f64 = fields[1].parse().unwrap();
    assert!((q - 0.275).abs() < 0.01, "{q}");
    assert!(fields[2].parse::<f64>().unwrap() < 0.0);

    // fitting a saved trace needs at least three finite points in range
    let o = ptmathieu(&["fit", "--input", a.to_str().unwrap(), "--fit-lo", "0.1"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_record(&o)["error"], "numerical");
}

#[test]
fn fit_from_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let o = ptmathieu(&["trace", "--j", "1", "--delta-grid", "2:4:0.5", "--q-max", "2", "-o", trace.to_str().unwrap()]);
    assert!(o.status.success());
    let o = ptmathieu(&["fit", "--input", trace.to_str().unwrap(), "--fit-lo", "2", "--fit-hi", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    assert!(csv.lines().any(|l| l == "j,bc,A,alpha,residual_rms,delta_lo,delta_hi"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 1);
    let f: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(&f[..2], ["1", "neumann"]);
    let alpha: f64 = f[3].parse().unwrap();
    assert!(alpha > 0.8 && alpha < 2.0, "{alpha}");
    assert_eq!(&f[5..], ["2", "4"]);
}

#[test]
fn sweep_and_surface_layouts() {
    let o = ptmathieu(&["sweep", "--sweep-param", "delta", "--grid", "0:0.2:0.1", "--q", "1", "--k", "3"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert!(csv.lines().any(|l| l == "q,delta,level,re,im"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 9);
    assert!(rows[0].starts_with("1,0,0,-0.455138604107,"));
    assert!(rows[8].starts_with("1,0.2,2,"));

    let o = ptmathieu(&["surface", "--q-grid", "-1,1", "--delta-grid", "0,0.5", "--k", "2", "--j", "2", "--bc", "d"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    let keys: Vec<String> = data_rows(&csv)
        .iter()
        .map(|r| r.split(',').take(3).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(
        keys,
        ["-1,0,0", "-1,0,1", "-1,0.5,0", "-1,0.5,1", "1,0,0", "1,0,1", "1,0.5,0", "1,0.5,1"]
    );
    assert!(csv.contains("# bc = dirichlet\n"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# free spectrum\ncommand = spectrum\nq = 0\ndelta = 1\nk = 5\nbc = dirichlet\n").unwrap();
    let o = ptmathieu(&["--config", cfg.to_str().unwrap(), "--k", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    assert_eq!(data_rows(&csv), ["0,1,0", "1,4,0", "2,9,0"]);
    assert!(csv.contains("# k = 3\n"));

    // the header of an output is itself a usable config
    let replay = dir.path().join("replay.cfg");
    let header: String = csv
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter(|l| l.contains(" = "))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&replay, header).unwrap();
    let again = ptmathieu(&["--config", replay.to_str().unwrap()]);
    assert_eq!(stdout(&again), csv);
}

#[test]
fn exit_codes() {
    let o = ptmathieu(&["trace", "--delta-grid", "1:0:0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["error"], "config");

    let o = ptmathieu(&["spectrum", "--q", "1", "--delta", "0", "--bogus", "1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = ptmathieu(&["spectrum", "--q", "1", "--delta", "0", "--j", "0"]);
    assert_eq!(o.status.code(), Some(2));

    let o = ptmathieu(&["spectrum", "--q", "1", "--delta", "0.5", "--n-start", "64", "--n-max", "64"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_record(&o)["exit_code"], 3);

    let o = ptmathieu(&["spectrum", "--q", "1", "--delta", "0", "-o", "/nonexistent/dir/out.csv"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_record(&o)["error"], "io");

    let o = Command::new(env!("CARGO_BIN_EXE_ptmathieu"))
        .args(["spectrum", "--q", "0", "--delta", "0"])
        .env("PTMATHIEU_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));

    let o = Command::new(env!("CARGO_BIN_EXE_ptmathieu"))
        .args(["spectrum", "--q", "0", "--delta", "0"])
        .env("PTMATHIEU_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
}
