use std::path::Path;
use std::process::{Command, Output};

use h2_storage::solver::{audit_policy, read_policy};
use h2_storage::stochastics::Calibration;
use h2_storage::SystemConfig;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

const GRID: [&str; 6] = ["--dx", "20", "--dc", "15", "--dj", "10"];

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_h2-storage"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn json(path: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_slice(&read(path)).unwrap()
}

/// Every digest in the manifest matches the file next to it.
fn check_manifest(dir: &Path) -> Vec<String> {
    let m = json(dir.join("manifest.json"));
    let mut files = Vec::new();
    for o in m["outputs"].as_array().unwrap() {
        let name = o["file"].as_str().unwrap();
        let bytes = read(dir.join(name));
        assert_eq!(o["bytes"].as_u64().unwrap(), bytes.len() as u64, "{name}");
        assert_eq!(o["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)), "{name}");
        files.push(name.to_string());
    }
    files
}

#[test]
fn synthetic_fit_writes_packaged_calibration() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["--out-dir", "fit", "fit", "--synthetic"]);
    let text = String::from_utf8(read(tmp.path().join("fit/calibration.json"))).unwrap();
    assert_eq!(Calibration::from_json(&text).unwrap(), Calibration::synthetic());
    let files = check_manifest(&tmp.path().join("fit"));
    assert!(files.contains(&"calibration.json".to_string()));
    let betas = String::from_utf8(read(tmp.path().join("fit/weekly_beta.csv"))).unwrap();
    assert_eq!(betas.lines().count(), 53);
}

#[test]
fn missing_input_file_exits_2_naming_it() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        tmp.path(),
        &["fit", "--prices", "no_prices.csv", "--production", "p.csv", "--consumption", "c.csv"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_prices.csv"));

    let out = run(tmp.path(), &["solve", "--config", "absent.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.json"));
}

#[test]
fn invalid_config_field_exits_2_naming_it() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = serde_json::to_value(SystemConfig::base_case()).unwrap();
    cfg["k_cable"] = 30.into();
    std::fs::write(tmp.path().join("bad.json"), cfg.to_string()).unwrap();
    let out = run(tmp.path(), &["solve", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k_cable"));

    let mut cfg = SystemConfig::base_case();
    cfg.alpha = 1.5;
    std::fs::write(tmp.path().join("alpha.json"), serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = run(tmp.path(), &["solve", "--config", "alpha.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}

#[test]
fn incompatible_grid_exits_2() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["solve", "--dx", "50", "--dj", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn strict_solve_without_convergence_exits_3() {
    let tmp = TempDir::new().unwrap();
    let mut args = vec!["solve", "--max-iters", "2", "--epsilon", "1e-12", "--strict"];
    args.extend(GRID);
    let out = run(tmp.path(), &args);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    // Outputs are still written for inspection.
    assert!(tmp.path().join("out/policy.bin").exists());
}

#[test]
fn solve_simulate_report_pipeline() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let mut args = vec!["--out-dir", "solve", "solve", "--export-policy-slices", "day=1,180 percentiles=25,75"];
    args.extend(GRID);
    ok(d, &args);

    let conv = json(d.join("solve/convergence.json"));
    assert_eq!(conv["converged"], true);
    let policy = read_policy(&read(d.join("solve/policy.bin"))[..]).unwrap();
    assert_eq!(audit_policy(&SystemConfig::base_case(), &policy), 0);
    let files = check_manifest(&d.join("solve"));
    for name in ["policy_day1_p25.csv", "policy_day1_p75.csv", "policy_day180_p25.csv", "policy_day180_p75.csv"] {
        assert!(files.contains(&name.to_string()), "{name} missing");
        let text = String::from_utf8(read(d.join("solve").join(name))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("day,x,y_bar,c,u_star,value"));
        // One row per inventory and price level.
        assert_eq!(lines.count(), policy.grids.nx() * policy.grids.nc());
    }

    let sim = |out: &str| {
        ok(
            d,
            &["--out-dir", out, "simulate", "--policy", "solve/policy.bin", "--years", "120", "--warmup", "20", "--seed", "7", "--trace-years", "1"],
        )
    };
    sim("sim_a");
    sim("sim_b");
    for name in ["kpi.json", "daily.csv", "yearly_profit.csv", "trace.csv"] {
        assert_eq!(read(d.join("sim_a").join(name)), read(d.join("sim_b").join(name)), "{name} differs");
    }
    let files = check_manifest(&d.join("sim_a"));
    assert_eq!(files.len(), 4);
    assert_eq!(json(d.join("sim_a/manifest.json"))["seed"], 7);
    let kpi = json(d.join("sim_a/kpi.json"));
    assert_eq!(kpi["measured_years"], 100);

    let out = run(d, &["simulate", "--policy", "solve/policy.bin", "--dx", "10"]);
    assert_eq!(out.status.code(), Some(2));

    ok(d, &["--out-dir", "report", "report", "--input", "base=sim_a/kpi.json", "--input", "again=sim_b/kpi.json"]);
    let summary = String::from_utf8(read(d.join("report/summary.csv"))).unwrap();
    assert!(summary.starts_with("kpi,base,again\n"));
    assert!(summary.contains("mean_profit_per_year,"));
    check_manifest(&d.join("report"));
}

#[test]
fn solve_output_does_not_depend_on_threads() {
    let tmp = TempDir::new().unwrap();
    for (threads, out) in [("1", "t1"), ("3", "t3")] {
        let mut args = vec!["--threads", threads, "--out-dir", out, "solve"];
        args.extend(GRID);
        ok(tmp.path(), &args);
    }
    for name in ["policy.bin", "values.bin", "convergence.json"] {
        assert_eq!(read(tmp.path().join("t1").join(name)), read(tmp.path().join("t3").join(name)), "{name}");
    }
}

#[test]
fn sweep_plan_gives_one_row_per_value() {
    let tmp = TempDir::new().unwrap();
    let plan = serde_json::json!({
        "name": "kc_desk",
        "base": SystemConfig::base_case(),
        "resolution": {"dx": 20.0, "dc": 15.0, "c_max": 90.0, "dj": 10.0},
        "sweep_param": "k_c",
        "values": [10.0, 20.0, 40.0, 80.0],
        "sim": {"years": 120, "warmup_years": 20, "seed": 3}
    });
    std::fs::write(tmp.path().join("plan.json"), plan.to_string()).unwrap();
    ok(tmp.path(), &["--out-dir", "sweep", "sweep", "--plan", "plan.json"]);

    let files = check_manifest(&tmp.path().join("sweep"));
    assert!(files.contains(&"kc_desk.csv".to_string()));
    let mut r = csv::Reader::from_path(tmp.path().join("sweep/kc_desk.csv")).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    for col in ["plan", "row", "param", "value", "seed", "g", "converged", "mean_profit_per_year", "se_profit", "pct_time_congestion", "infeasible"] {
        assert!(header.iter().any(|h| h == col), "missing column {col}");
    }
    let rows: Vec<csv::StringRecord> = r.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    let value_col = header.iter().position(|h| h == "value").unwrap();
    let values: Vec<f64> = rows.iter().map(|r| r[value_col].parse().unwrap()).collect();
    assert_eq!(values, vec![10.0, 20.0, 40.0, 80.0]);

    ok(tmp.path(), &["--out-dir", "report", "report", "--input", "sweep/kc_desk.csv"]);
    let merged = String::from_utf8(read(tmp.path().join("report/sweeps.csv"))).unwrap();
    assert_eq!(merged, String::from_utf8(read(tmp.path().join("sweep/kc_desk.csv"))).unwrap());
}

#[test]
fn benchmarks_report_has_three_columns() {
    let tmp = TempDir::new().unwrap();
    let mut args = vec!["--out-dir", "bm", "sweep", "--benchmarks", "--years", "120", "--warmup", "20"];
    args.extend(GRID);
    ok(tmp.path(), &args);
    check_manifest(&tmp.path().join("bm"));

    ok(tmp.path(), &["--out-dir", "report", "report", "--input", "bm/benchmarks.json"]);
    let summary = String::from_utf8(read(tmp.path().join("report/summary.csv"))).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("kpi,base,bm1,bm2"));
    let util = summary.lines().find(|l| l.starts_with("electrolyzer_utilization_pct")).unwrap();
    // The no-storage system never runs the electrolyzer.
    assert_eq!(util.split(',').nth(2), Some("-"));
    assert_eq!(read(tmp.path().join("report/summary.csv")), read(tmp.path().join("bm/summary.csv")));
}
