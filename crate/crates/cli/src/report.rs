//! Aggregation of finished runs into summary tables. Reads result files
//! only and never solves or simulates.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use h2_storage::experiments::{read_sweep_csv, write_sweep_csv, BenchmarkReport, SweepResultRow};
use h2_storage::simulator::{ActionClass, KpiReport};

use crate::commands::{input_error, read_text};
use crate::manifest::RunManifest;

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// KPI rows against one column per run.
pub fn summary_table(runs: &[(String, KpiReport)]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["kpi".to_string()];
    header.extend(runs.iter().map(|(n, _)| n.clone()));
    w.write_record(&header)?;

    type Cell = fn(&KpiReport) -> String;
    let rows: [(&str, Cell); 8] = [
        ("mean_profit_per_year", |k| fmt(k.mean_profit_per_year)),
        ("se_profit", |k| fmt(k.se_profit)),
        ("mean_trade_profit", |k| fmt(k.mean_trade_profit)),
        ("electrolyzer_utilization_pct", |k| {
            if k.electrolyzer_used {
                fmt(k.electrolyzer_utilization_pct)
            } else {
                "-".into()
            }
        }),
        ("pct_time_congestion", |k| fmt(k.pct_time_congestion)),
        ("pct_time_congestion_buying", |k| fmt(k.pct_time_congestion_buying)),
        ("pct_time_congestion_selling", |k| fmt(k.pct_time_congestion_selling)),
        ("pct_unmet_demand", |k| format!("{:.4}", k.pct_unmet_demand)),
    ];
    for (name, cell) in rows {
        let mut rec = vec![name.to_string()];
        rec.extend(runs.iter().map(|(_, k)| cell(k)));
        w.write_record(&rec)?;
    }
    Ok(w.into_inner()?)
}

fn per_day_table(runs: &[(String, KpiReport)]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["run", "day", "metric", "value"])?;
    for (name, k) in runs {
        for day in 0..k.mean_inventory_by_day.len() {
            let mut put = |metric: &str, v: f64| w.write_record([name.as_str(), &(day + 1).to_string(), metric, &v.to_string()]);
            put("mean_inventory", k.mean_inventory_by_day[day])?;
            put("congestion_buy", k.congestion_buy_by_day[day])?;
            put("congestion_sell", k.congestion_sell_by_day[day])?;
            for class in ActionClass::ALL {
                put(class.label(), k.action_class_freq_by_day[day][class.index()])?;
            }
        }
    }
    Ok(w.into_inner()?)
}

fn split_input(arg: &str) -> (Option<String>, PathBuf) {
    match arg.split_once('=') {
        Some((name, path)) if !name.is_empty() && !name.contains(['/', '\\']) => {
            (Some(name.to_string()), PathBuf::from(path))
        }
        _ => (None, PathBuf::from(arg)),
    }
}

fn default_name(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    if stem == "kpi" {
        if let Some(dir) = path.parent().and_then(|d| d.file_name()).and_then(|s| s.to_str()) {
            return dir.to_string();
        }
    }
    stem.trim_end_matches(".kpi").to_string()
}

pub fn run(out: &Path, inputs: &[String]) -> Result<()> {
    let mut manifest = RunManifest::start("report");
    let mut runs: Vec<(String, KpiReport)> = Vec::new();
    let mut sweeps: Vec<SweepResultRow> = Vec::new();

    for arg in inputs {
        let (name, path) = split_input(arg);
        manifest.input(Some(&path));
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        match ext {
            "json" => {
                let text = read_text(&path)?;
                let value: serde_json::Value =
                    serde_json::from_str(&text).with_context(|| format!("in {}", path.display()))?;
                if value.get("bm1").is_some() {
                    let b: BenchmarkReport =
                        serde_json::from_value(value).with_context(|| format!("in {}", path.display()))?;
                    let prefix = name.map(|n| format!("{n}:")).unwrap_or_default();
                    for r in [b.base, b.bm1, b.bm2] {
                        runs.push((format!("{prefix}{}", r.name), r.kpi));
                    }
                } else {
                    let k: KpiReport =
                        serde_json::from_value(value).with_context(|| format!("in {}", path.display()))?;
                    runs.push((name.unwrap_or_else(|| default_name(&path)), k));
                }
            }
            "csv" => {
                let file = std::fs::File::open(&path).with_context(|| format!("cannot open {}", path.display()))?;
                sweeps.extend(read_sweep_csv(file).with_context(|| format!("in {}", path.display()))?);
            }
            _ => {
                return Err(input_error(format!(
                    "{}: expected a .json KPI or benchmark file or a .csv sweep file",
                    path.display()
                )))
            }
        }
    }

    if !runs.is_empty() {
        manifest.write(out, "summary.csv", &summary_table(&runs)?)?;
        manifest.write(out, "per_day.csv", &per_day_table(&runs)?)?;
    }
    if !sweeps.is_empty() {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &sweeps)?;
        manifest.write(out, "sweeps.csv", &buf)?;
    }
    manifest.finish(out)
}
