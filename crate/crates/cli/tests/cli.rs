use std::path::Path;
use std::process::{Command, Output};

use boxlab_cli::cli::column_schema;

fn boxlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boxlab")).args(args).env("BOXLAB_THREADS", "2").output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data rows of a CSV output, skipping the two config comment lines.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn ratio(s: &str) -> (i64, i64) {
    match s.split_once('/') {
        Some((n, d)) => (n.parse().unwrap(), d.parse().unwrap()),
        None => (s.parse().unwrap(), 1),
    }
}

#[test]
fn metrics_of_the_pr_box() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&boxlab(&["metrics", "--box", "pr"]))).unwrap();
    let m = &v["result"]["metrics"];
    assert_eq!(m["s"]["exact"], "0");
    assert_eq!(m["i"]["exact"], "1/2");
    assert_eq!(m["i"]["value"], 0.5);
    assert_eq!(v["config"]["params"]["box"], "pr");
    assert_eq!(v["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn bound_mode_sweep_follows_the_lambda_law() {
    let text = stdout(&boxlab(&["freewill-sweep", "--mode", "L", "--alpha-grid", "0:0.25:0.015625"]));
    let (header, rows) = csv_rows(&text);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rows.len(), 17);
    for row in rows {
        let (fn_, fd) = ratio(&row[col("F")]);
        let (ln, ld) = ratio(&row[col("lambda")]);
        // Λ = 2(4 - 3F) with exact fractions.
        assert_eq!(ln * fd, 2 * (4 * fd - 3 * fn_) * ld, "{row:?}");
    }
}

#[test]
fn singlet_at_sixty_degrees() {
    let text = stdout(&boxlab(&["singlet-sim", "--variant", "prbox", "--trials", "100000", "--theta", "60"]));
    let (header, rows) = csv_rows(&text);
    assert_eq!(header, ["theta", "estimate", "target", "stderr", "comm_bits_per_trial"]);
    let est: f64 = rows[0][1].parse().unwrap();
    let se: f64 = rows[0][3].parse().unwrap();
    assert_eq!(rows[0][0], "60");
    assert!((est - 0.75).abs() <= 4.0 * se, "{est} ± {se}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    // The output path is recorded in the config, so reruns share it.
    let run = |name: &str, args: &[&str]| {
        let path = dir.path().join(name);
        let _ = std::fs::remove_file(&path);
        let mut full = args.to_vec();
        let p = path.to_str().unwrap().to_string();
        full.extend(["--output", &p]);
        stdout(&boxlab(&full));
        std::fs::read(&path).unwrap()
    };
    let args = ["--seed", "11", "singlet-sim", "--variant", "toner-bacon", "--trials", "5000", "--theta-points", "4"];
    assert_eq!(run("a.csv", &args), run("a.csv", &args));
    let srx = ["--seed", "11", "srx-embed", "--trials", "1000", "--v-lambda", "1"];
    assert_eq!(run("a.json", &srx), run("a.json", &srx));
    let one_thread = Command::new(env!("CARGO_BIN_EXE_boxlab"))
        .args(args)
        .env("BOXLAB_THREADS", "1")
        .output()
        .unwrap();
    let path = dir.path().join("c.csv");
    std::fs::write(&path, &one_thread.stdout).unwrap();
    // Different output paths give different config lines; compare the data.
    let strip = |b: Vec<u8>| String::from_utf8(b).unwrap().lines().skip(2).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(run("d.csv", &args)), strip(std::fs::read(&path).unwrap()));
}

#[test]
fn csv_uses_lf_line_endings() {
    let text = stdout(&boxlab(&["hie", "--trials", "100"]));
    assert!(!text.contains('\r'));
    assert!(text.starts_with("# config={"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 5, "format": "json", "hie": {"trials": 200, "v_lambda": "inf"}}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&boxlab(&["--config", c, "hie", "--trials", "300"]))).unwrap();
    assert_eq!(v["config"]["seed"], 5);
    assert_eq!(v["config"]["params"]["trials"], 300);
    assert_eq!(v["config"]["params"]["v_lambda"], "inf");
    assert!(v["result"]["signal"].as_f64().unwrap() < 1e-12);
}

#[test]
fn exit_codes() {
    assert_eq!(boxlab(&["metrics", "--box", "nope"]).status.code(), Some(2));
    assert_eq!(boxlab(&["hie", "--distance", "5"]).status.code(), Some(2));
    assert_eq!(boxlab(&["--numeric-mode", "octal", "metrics"]).status.code(), Some(2));
    assert_eq!(boxlab(&["--config", "/definitely/missing.json", "metrics"]).status.code(), Some(4));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"seed": 1, "colour": "red"}"#).unwrap();
    assert_eq!(boxlab(&["--config", bad.to_str().unwrap(), "metrics"]).status.code(), Some(2));
    let out = dir.path().join("no/such/dir/out.csv");
    assert_eq!(boxlab(&["hie", "--trials", "10", "-o", out.to_str().unwrap()]).status.code(), Some(4));
    // A box with Λ < 2 cannot be decomposed: bad input, not a broken invariant.
    assert_eq!(boxlab(&["decompose", "--box", "white"]).status.code(), Some(2));
    // A corrupted table fails criterion 1.
    let tables = dir.path().join("t.json");
    std::fs::write(&tables, r#"{"zero": [[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[1,0],[1,0]],[[0,1],[0,0],[0,1],[0,0]],[[1,1],[1,0],[0,1],[0,0]],[[0,0],[0,1],[1,0],[1,1]],[[1,0],[1,1],[1,0],[1,1]],[[1,1],[1,1],[0,1],[0,1]],[[1,1],[1,1],[1,1],[1,0]]],
        "one": [[[0,0],[0,0],[0,1],[0,0]],[[1,1],[1,1],[0,1],[0,0]],[[0,0],[0,0],[1,0],[1,1]],[[1,1],[1,1],[1,0],[1,1]],[[0,0],[0,0],[1,0],[0,0]],[[1,1],[0,0],[0,1],[0,0]],[[0,0],[1,1],[1,0],[1,1]],[[1,1],[1,1],[0,1],[1,1]]]}"#).unwrap();
    assert_eq!(boxlab(&["acceptance", "--only", "1", "--tables", tables.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn strict_mode_refuses_an_ontic_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    let out = boxlab(&["srx-embed", "--trials", "10", "--oblivious-strict", "--ontic-trace", trace.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!Path::new(&trace).exists());
    let text = stdout(&boxlab(&["srx-embed", "--trials", "100", "--oblivious-strict"]));
    assert!(!text.contains("ontic"));
    assert!(!text.contains("\"eta"));
    let ok = boxlab(&["srx-embed", "--trials", "10", "--ontic-trace", trace.to_str().unwrap()]);
    assert!(ok.status.success());
    assert!(std::fs::read_to_string(&trace).unwrap().contains("\"state\""));
}

#[test]
fn help_documents_every_csv_column() {
    for (name, cols) in column_schema() {
        let help = stdout(&boxlab(&[&name, "--help"]));
        for c in cols {
            assert!(help.contains(&c.name), "{name} --help lacks {}", c.name);
            assert!(help.contains(&c.description), "{name} --help lacks the description of {}", c.name);
        }
    }
}

#[test]
fn csv_headers_match_the_schema_file() {
    let schema: std::collections::BTreeMap<String, Vec<String>> =
        column_schema().into_iter().map(|(k, v)| (k, v.into_iter().map(|c| c.name).collect())).collect();
    let cases: [(&str, &[&str]); 6] = [
        ("metrics", &["metrics", "--format", "csv"]),
        ("decompose", &["decompose", "--format", "csv"]),
        ("freewill-sweep", &["freewill-sweep", "--alpha-grid", "0,1/4"]),
        ("singlet-sim", &["singlet-sim", "--trials", "10", "--theta", "0"]),
        ("srx-embed", &["srx-embed", "--trials", "10", "--format", "csv"]),
        ("hie", &["hie", "--trials", "10"]),
    ];
    for (name, args) in cases {
        let (header, _) = csv_rows(&stdout(&boxlab(args)));
        assert_eq!(header, schema[name], "{name}");
    }
}
