use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cryptoyield"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].parse().unwrap()).collect()
}

#[test]
fn loan_price_degenerate_vol_is_intrinsic() {
    for (a, b) in [(150.0, 100.0), (80.0, 100.0)] {
        let out = run(&[
            "loan",
            "price",
            "--collateral",
            &a.to_string(),
            "--repayment",
            &b.to_string(),
            "--sigma-alpha",
            "0",
            "--sigma-beta",
            "0",
            "--r-alpha",
            "0.01",
            "--r-beta",
            "0.03",
            "--maturity",
            "2",
        ]);
        let doc = stdout_json(&out);
        let value = doc["summary"]["breakdown"]["value"].as_f64().unwrap();
        let expected = (a * (-0.02f64).exp() - b * (-0.06f64).exp()).max(0.0);
        assert!((value - expected).abs() < 1e-12, "{value} vs {expected}");
        let v = &doc["summary"]["valuation"];
        let sum = v["borrower_value"].as_f64().unwrap() + v["lender_value"].as_f64().unwrap();
        assert!((sum - a * (-0.02f64).exp() - b * (-0.06f64).exp()).abs() < 1e-12);
    }
}

#[test]
fn deribit_funding_strips_the_band() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("timestamp,mark,index\n");
    for i in 0..6 {
        text.push_str(&format!("{},{},{}\n", 1_700_000_000 + i * 28_800, 1002.0, 1000.0));
    }
    let input = write(dir.path(), "ticks.csv", &text);
    let out_dir = dir.path().join("report");
    let out = run(&[
        "perp",
        "funding",
        "--variant",
        "deribit",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rates = csv_column(&out_dir.join("funding.csv"), "funding_rate");
    assert_eq!(rates.len(), 6);
    for r in rates {
        assert!((r - 0.0015).abs() < 1e-15, "{r}");
    }
}

#[test]
fn implied_rate_recovers_the_parity_rate() {
    let dir = tempfile::tempdir().unwrap();
    let r_star = 0.05;
    let mut text = String::from("quote_time,expiry,strike,call,put,underlying\n");
    let t0 = 1_709_280_000i64;
    for day in 0..3 {
        let q = t0 + day * 86_400 + 3_600;
        let s = 60_000.0 + 500.0 * day as f64;
        for days in [7i64, 30, 90] {
            let tau = days as f64 / 365.0;
            let b = (-r_star * tau).exp();
            for k in [50_000.0, 60_000.0, 70_000.0] {
                let c = (s - k * b).max(0.0) + 0.04 * s * tau.sqrt();
                let p = c - s + k * b;
                text.push_str(&format!("{q},{},{k},{c:?},{p:?},{s:?}\n", q + days * 86_400));
            }
        }
    }
    let input = write(dir.path(), "chain.csv", &text);
    let out_dir = dir.path().join("report");
    let out = run(&["implied-rate", "--input", input.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let means = csv_column(&out_dir.join("daily.csv"), "mean_rate_pct");
    assert_eq!(means.len(), 3);
    for m in means {
        assert!((m / 100.0 - r_star).abs() < 1e-9, "{m}");
    }
}

#[test]
fn validate_collects_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.toml", "");
    let out = run(&["validate", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing key `module`"), "{err}");

    // Several independent problems are all reported.
    let bad =
        write(dir.path(), "bad.toml", "module = \"perp\"\nseed = -1\ncolour = 3\n[inputs]\ninput = \"nope.csv\"\n");
    let out = run(&["validate", bad.to_str().unwrap()]);
    let err = String::from_utf8_lossy(&out.stderr);
    for needle in ["unknown key `colour`", "needs a `command`", "file not found", "`seed`"] {
        assert!(err.contains(needle), "missing `{needle}` in {err}");
    }

    write(dir.path(), "ticks.csv", "timestamp,mark,index\n1,101,100\n");
    let good = write(
        dir.path(),
        "good.toml",
        "module = \"perp\"\ncommand = \"funding\"\n[inputs]\ninput = \"ticks.csv\"\n[params]\nvariant = \"bitmex\"\n",
    );
    let out = run(&["validate", good.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stderr.is_empty());
}

#[test]
fn wrong_header_names_the_column() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ticks.csv", "timestamp,markprice,index\n1,101,100\n");
    let cfg =
        write(dir.path(), "cfg.toml", "module = \"perp\"\ncommand = \"funding\"\n[inputs]\ninput = \"ticks.csv\"\n");
    let out = run(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ticks.csv") && err.contains("missing column `mark`"), "{err}");
}

#[test]
fn unknown_parameter_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", "module = \"loan\"\ncommand = \"rates\"\n[params]\nkinkk = 0.9\n");
    let out = run(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--kinkk"));
}

#[test]
fn malformed_row_names_file_and_line_and_leaves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ok.csv", "timestamp,mark,index\n1,101,100\n2,102,100\n");
    write(dir.path(), "bad.csv", "timestamp,mark,index\n1,101,100\n2,abc,100\n");
    let first = write(
        dir.path(),
        "first.toml",
        "module = \"perp\"\ncommand = \"funding\"\noutput_dir = \"first\"\n[inputs]\ninput = \"ok.csv\"\n",
    );
    // Validation passes header checks but execution hits the bad row; both
    // are input errors. Use `run` so the first report is written first.
    let second = write(
        dir.path(),
        "second.toml",
        "module = \"perp\"\ncommand = \"funding\"\noutput_dir = \"second\"\n[inputs]\ninput = \"bad.csv\"\n",
    );
    let out_root = dir.path().join("out");
    let out = run(&["run", "--out", out_root.to_str().unwrap(), first.to_str().unwrap(), second.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv") && err.contains("line 3"), "{err}");
    assert!(!out_root.join("first").join("summary.json").exists());
    assert!(!out_root.join("first").join("funding.csv").exists());
    assert!(!out_root.join("second").exists());
}

#[test]
fn singular_covariance_is_a_numeric_failure() {
    let out = run(&["kelly", "--mean", "0.1,0.1", "--cov", "0.04,0.04;0.04,0.04"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["kelly", "--mean", "0.1", "--cov", "0.04,0.04;0.04,0.04"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn kelly_single_asset_and_sharpe() {
    let doc = stdout_json(&run(&["kelly", "--mean", "0.1", "--cov", "0.04"]));
    assert_eq!(doc["summary"]["weights"][0].as_f64().unwrap(), 2.5);
    let doc = stdout_json(&run(&["kelly", "--mean", "0.1", "--vol", "0.2"]));
    assert!((doc["summary"]["sharpe"][0].as_f64().unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn provenance_identifies_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "ticks.csv", "timestamp,mark,index\n1,101,100\n2,102,100\n");
    let args = ["perp", "funding", "--variant", "bitmex", "--input", input.to_str().unwrap()];
    let a = stdout_json(&run(&args));
    let b = stdout_json(&run(&args));
    let pa = &a["provenance"];
    assert_eq!(pa, &b["provenance"]);
    assert_eq!(pa["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(pa["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(pa["command"]["perp"]["funding"]["variant"], "bitmex");

    write(dir.path(), "ticks.csv", "timestamp,mark,index\n1,101,100\n2,103,100\n");
    let c = stdout_json(&run(&args));
    assert_ne!(pa["config_sha256"], c["provenance"]["config_sha256"]);
}

#[test]
fn oracle_seed_is_recorded_and_reproducible() {
    let args = [
        "oracle",
        "price",
        "--s0-a",
        "1",
        "--s0-b",
        "1",
        "--sigma-a",
        "0.3",
        "--sigma-b",
        "0.2",
        "--maturity",
        "1",
        "--paths",
        "20000",
        "--seed",
        "9",
    ];
    let a = stdout_json(&run(&args));
    let b = stdout_json(&run(&args));
    assert_eq!(a, b);
    assert_eq!(a["provenance"]["seed"], 9);
    assert!(a["summary"]["estimate"]["z_score"].as_f64().unwrap().abs() < 4.0);
}

#[test]
fn xccy_simulate_writes_audit_trail() {
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/demo/data/swap.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["xccy", "simulate", "--scenario", demo.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(doc["summary"]["final_state"], "terminated_breach(B)");
    let audit = fs::read_to_string(dir.path().join("audit.csv")).unwrap();
    assert!(audit.starts_with("seq,time,event,from,to,token,amount,amount_exact"));
    assert!(dir.path().join("history.csv").exists());
}

#[test]
fn help_lists_every_module() {
    let out = run(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for m in ["stake", "amm", "loan", "perp", "implied-rate", "xccy", "oracle", "kelly", "run", "validate"] {
        assert!(text.contains(m), "{m} missing from help");
    }
}
