use std::path::Path;
use std::process::{Command, Output};

use nalgebra::DMatrix;
use serde_json::Value;
use sha2::{Digest, Sha256};

fn tempest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempest"))
        .args(args)
        .env_remove("TEMPEST_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = tempest(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    tempest(args).status.code().expect("exit code")
}

/// First line as JSON, with the CSV comment marker removed.
fn header(text: &str) -> Value {
    let line = text.lines().next().unwrap();
    serde_json::from_str(line.strip_prefix("# ").unwrap_or(line)).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let cols = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (cols, rows)
}

fn sha256_hex(s: &str) -> String {
    Sha256::digest(s.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[test]
fn experiment_threshold_is_near_the_reported_value() {
    let out = ok(&[
        "threshold",
        "--preset",
        "experiment",
        "--certificate",
        "t4",
        "--delta",
        "0.05",
        "--seed",
        "1",
    ]);
    let h = header(&out);
    assert_eq!(h["seed"], 1);
    let result: Value = serde_json::from_str(out.lines().nth(1).unwrap()).unwrap();
    let beta = result["beta_threshold"].as_f64().unwrap();
    assert!((beta / 6.32e-4 - 1.0).abs() < 0.15, "{beta}");
    assert_eq!(result["certificate"], "T4");
}

#[test]
fn header_hash_matches_reserialized_config() {
    for args in [
        &["figure3", "--panel", "c", "--seed", "9"][..],
        &["oracle", "--n", "3", "--edges", "2", "--beta", "0.5"][..],
    ] {
        let h = header(&ok(args));
        let text = h["config"].to_string();
        assert_eq!(h["config_hash"].as_str().unwrap(), sha256_hex(&text));
    }
}

#[test]
fn config_file_reproduces_the_flag_run() {
    let dir = tempfile::tempdir().unwrap();
    let flags = ok(&["figure3", "--panel", "b", "--theta", "0.1,0.2", "--seed", "4"]);
    let h = header(&flags);
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, h["config"].to_string()).unwrap();
    let from_file = ok(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(flags, from_file);

    std::fs::write(&cfg, r#"{"task": {"figure3": {"pannel": "a"}}}"#).unwrap();
    assert_eq!(code(&["--config", cfg.to_str().unwrap()]), 1);
}

/// `η` of `Π ⊗ I + diag(−D, βA − D)` for one edge between two nodes with
/// equal switching rates, so that `Π` is symmetric.
#[test]
fn one_edge_oracle_matches_the_two_mode_system() {
    let dir = tempfile::tempdir().unwrap();
    for (rate, beta) in [(0.3, 0.5), (2.0, 1.5), (5.0, 2.5), (0.1, 3.0)] {
        let spec = format!(
            r#"{{"n": 2, "kind": "amei", "edges": [{{"i": 0, "j": 1,
               "model": {{"type": "markov2", "params": {{"q": {rate}, "r": {rate}}}, "time": "ct"}}}}]}}"#
        );
        let file = dir.path().join("g.json");
        std::fs::write(&file, spec).unwrap();
        let out = ok(&[
            "oracle",
            "--graph",
            file.to_str().unwrap(),
            "--beta",
            &beta.to_string(),
            "--delta",
            "1",
        ]);
        let (_, rows) = csv_rows(&out);
        assert_eq!(rows.len(), 1);
        let eta: f64 = rows[0][1].parse().unwrap();

        let off = DMatrix::from_diagonal_element(2, 2, -1.0);
        let on = DMatrix::from_row_slice(2, 2, &[-1.0, beta, beta, -1.0]);
        let mut m = DMatrix::<f64>::zeros(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(&off);
        m.view_mut((2, 2), (2, 2)).copy_from(&on);
        for i in 0..2 {
            m[(i, i)] -= rate;
            m[(i + 2, i + 2)] -= rate;
            m[(i, i + 2)] = rate;
            m[(i + 2, i)] = rate;
        }
        let want = m.symmetric_eigen().eigenvalues.max();
        assert!((eta - want).abs() < 1e-9, "{eta} vs {want}");
        assert_eq!(rows[0][2], if want < 0.0 { "stable" } else { "unstable" });
    }
}

#[test]
fn figure3_panel_a_decreases_in_delta3() {
    let out = ok(&["figure3", "--panel", "a"]);
    let (cols, rows) = csv_rows(&out);
    assert_eq!(cols, ["rho", "theta", "delta_over_beta", "delta3", "xi_h"]);
    assert_eq!(rows.len(), 40);
    for chunk in rows.chunks(10) {
        let xi: Vec<f64> = chunk.iter().map(|r| r[4].parse().unwrap()).collect();
        assert!(xi.windows(2).all(|w| w[1] < w[0]), "{xi:?}");
    }
}

#[test]
fn empty_simulation_writes_header_only_csv() {
    let out = ok(&[
        "simulate", "--preset", "edge-markovian", "--n", "5", "--beta", "0.1", "--paths", "0",
        "--horizon", "10",
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("# {"));
    assert_eq!(lines[1], "path_id,t_or_k,infected_count");
}

#[test]
fn simulation_traces_have_the_documented_columns() {
    let out = ok(&[
        "simulate", "--n", "40", "--beta", "0.01", "--paths", "3", "--horizon", "50",
    ]);
    let (cols, rows) = csv_rows(&out);
    assert_eq!(cols, ["path_id", "t_or_k", "infected_count"]);
    assert_eq!(rows.len(), 3 * 51);
    assert_eq!(rows[0], ["0", "0.0", "40"]);
    assert_eq!(header(&out)["summary"]["time"], "dt");
}

#[test]
fn thread_count_does_not_change_output() {
    let args = [
        "empirical", "--n", "60", "--paths", "16", "--steps", "60", "--beta-steps", "4",
        "--seed", "3",
    ];
    let one = ok(&[&args[..], &["--threads", "1"]].concat());
    let four = ok(&[&args[..], &["--threads", "4"]].concat());
    assert_eq!(one, four);
    let env = Command::new(env!("CARGO_BIN_EXE_tempest"))
        .args(args)
        .env("TEMPEST_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(env.stdout).unwrap(), one);
    let (cols, rows) = csv_rows(&one);
    assert_eq!(cols, ["beta", "y_star", "z_star"]);
    assert_eq!(rows.len(), 4);
}

#[test]
fn exit_codes_classify_failures() {
    assert_eq!(code(&["threshold", "--no-such-flag"]), 1);
    assert_eq!(code(&["threshold", "--delta", "-1"]), 1);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["simulate"]), 1);
    // already unstable at the bottom of the bracket
    assert_eq!(
        code(&[
            "threshold", "--preset", "edge-markovian", "--certificate", "t2", "--beta-lo", "10",
            "--beta-hi", "20",
        ]),
        2
    );
    // 45 switching edges exceed the exact-condition cap
    assert_eq!(
        code(&["oracle", "--preset", "edge-markovian", "--beta", "0.1"]),
        3
    );
    assert_eq!(code(&["figure456", "--n", "20"]), 1);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn spectra_reproduces_the_complete_graph_closed_form() {
    let out = ok(&[
        "spectra", "--preset", "edge-markovian", "--n", "10", "--q", "1", "--r", "3",
    ]);
    let v: Value = serde_json::from_str(out.lines().nth(1).unwrap()).unwrap();
    let eta = v["eta_mean"].as_f64().unwrap();
    assert!((eta - 9.0 * 0.25).abs() < 1e-12, "{eta}");
    assert!((v["eta_support"].as_f64().unwrap() - 9.0).abs() < 1e-12);
}

#[test]
fn chung_tail_stays_below_the_bound() {
    let out = ok(&["chung", "--n", "8", "--draws", "5000", "--seed", "2"]);
    let (cols, rows) = csv_rows(&out);
    assert_eq!(cols, ["s", "empirical", "bound"]);
    assert_eq!(rows.len(), 20);
    assert_eq!(header(&out)["summary"]["holds"], true);
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn figure456_writes_every_panel() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&[
        "figure456", "--n", "80", "--paths", "10", "--steps", "50", "--sample-paths", "2",
        "--gamma-points", "6", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.lines().count(), 5);

    let fig4 = read(&dir.path().join("figure4.csv"));
    let (cols, rows) = csv_rows(&fig4);
    assert_eq!(cols, ["beta", "gamma_D", "kind"]);
    let last = rows.last().unwrap();
    assert_eq!(last[2], "threshold");
    let certified = header(&fig4)["summary"]["certified_threshold"].as_f64().unwrap();
    assert_eq!(last[0].parse::<f64>().unwrap(), certified);
    let gamma: Vec<f64> = rows[..rows.len() - 1]
        .iter()
        .map(|r| r[1].parse().unwrap())
        .collect();
    assert!(gamma.windows(2).all(|w| w[1] < w[0]), "{gamma:?}");

    let fig5 = read(&dir.path().join("figure5.csv"));
    let (_, rows) = csv_rows(&fig5);
    let kinds: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(kinds.iter().filter(|&&k| k == "grid").count(), 12);
    assert!(kinds.contains(&"certified") && kinds.contains(&"static"));

    for i in 1..=3 {
        let f = read(&dir.path().join(format!("figure6_{i}.csv")));
        let (cols, rows) = csv_rows(&f);
        assert_eq!(cols, ["path_id", "t_or_k", "infected_count"]);
        assert_eq!(rows.len(), 2 * 51);
        assert_eq!(header(&f)["config_hash"], header(&fig4)["config_hash"]);
    }
}
