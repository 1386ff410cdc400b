//! Base case, benchmarks and one-parameter sweeps.

use std::io::Write;
use std::path::PathBuf;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::config::{FuelCellMode, SystemConfig};
use crate::error::{Error, Result};
use crate::grid::GridResolution;
use crate::model::Model;
use crate::simulator::{simulate, KpiReport, SimConfig, SimOutput};
use crate::solver::{solve_periodic, ConvergenceReport, SolveOptions, Solution};
use crate::stochastics::{stream_rng, Calibration};

pub fn base_case_config() -> (SystemConfig, GridResolution) {
    (SystemConfig::base_case(), GridResolution::base_case())
}

/// The system without storage. Overages may still be sold directly, so
/// the fuel-cell limit is applied to storage draws only.
pub fn bm1_config(base: &SystemConfig) -> SystemConfig {
    SystemConfig {
        m: 0.0,
        k_plus: 0.0,
        k_minus: 0.0,
        fuel_cell_mode: FuelCellMode::Discharge,
        ..base.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    KC,
    M,
    KPlus,
    Alpha,
    CPlus,
    W,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::KC => "k_c",
            SweepParam::M => "m",
            SweepParam::KPlus => "k_plus",
            SweepParam::Alpha => "alpha",
            SweepParam::CPlus => "c_plus",
            SweepParam::W => "w",
        }
    }

    pub fn apply(self, cfg: &mut SystemConfig, value: f64) {
        match self {
            SweepParam::KC => cfg.k_c = value,
            SweepParam::M => cfg.m = value,
            SweepParam::KPlus => cfg.k_plus = value,
            SweepParam::Alpha => cfg.alpha = value,
            SweepParam::CPlus => cfg.c_plus = value,
            SweepParam::W => cfg.w = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossSweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// How simulation seeds are assigned to sweep rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// A distinct seed per row, derived from the master seed and row index.
    #[default]
    PerRow,
    /// Every row uses the master seed, so rows share their random draws.
    Common,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub name: String,
    pub base: SystemConfig,
    #[serde(default)]
    pub resolution: GridResolution,
    /// Calibration file; the synthetic calibration when absent.
    #[serde(default)]
    pub calibration: Option<PathBuf>,
    pub sweep_param: SweepParam,
    pub values: Vec<f64>,
    #[serde(default)]
    pub cross_param: Option<CrossSweep>,
    #[serde(default)]
    pub solve: SolveOptions,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub seed_mode: SeedMode,
}

fn check_values(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidConfig {
            field: "values",
            reason: format!("{name}: no sweep values"),
        });
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig {
            field: "values",
            reason: format!("{name}: values must be finite and strictly increasing"),
        });
    }
    Ok(())
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        let plan: ExperimentPlan = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Every configuration of the plan in row order: cross value outermost,
    /// then sweep value.
    pub fn configurations(&self) -> Vec<(Option<f64>, f64, SystemConfig)> {
        let crosses: Vec<Option<f64>> = match &self.cross_param {
            Some(c) => c.values.iter().map(|v| Some(*v)).collect(),
            None => vec![None],
        };
        let mut out = Vec::new();
        for cross in crosses {
            for &v in &self.values {
                let mut cfg = self.base.clone();
                if let (Some(c), Some(cv)) = (&self.cross_param, cross) {
                    c.param.apply(&mut cfg, cv);
                }
                self.sweep_param.apply(&mut cfg, v);
                out.push((cross, v, cfg));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        check_values(&self.name, &self.values)?;
        if let Some(c) = &self.cross_param {
            check_values(&self.name, &c.values)?;
            if c.param == self.sweep_param {
                return Err(Error::config("cross_param", "must differ from sweep_param"));
            }
        }
        self.resolution.validate()?;
        self.solve.validate()?;
        self.sim.validate()?;
        for (_, _, cfg) in self.configurations() {
            cfg.validate()?;
        }
        Ok(())
    }

    pub fn seed_for_row(&self, row: usize) -> u64 {
        match self.seed_mode {
            SeedMode::Common => self.sim.seed,
            SeedMode::PerRow => stream_rng(self.sim.seed, 1 << 32 | row as u64).next_u64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResultRow {
    pub plan: String,
    pub row: usize,
    pub param: String,
    pub value: f64,
    pub cross_param: Option<String>,
    pub cross_value: Option<f64>,
    pub seed: u64,
    pub g: f64,
    pub converged: bool,
    pub iterations: usize,
    pub span: f64,
    pub mean_profit_per_year: f64,
    pub se_profit: f64,
    pub mean_trade_profit: f64,
    pub electrolyzer_utilization_pct: f64,
    pub electrolyzer_used: bool,
    pub pct_time_congestion: f64,
    pub pct_time_congestion_buying: f64,
    pub pct_time_congestion_selling: f64,
    pub pct_unmet_demand: f64,
    /// Unmet demand occurred under the optimal policy.
    pub infeasible: bool,
}

/// Solves a model and simulates the result on `eval` (usually the same model).
pub fn solve_and_simulate(
    solve_model: &Model,
    eval_model: &Model,
    solve: &SolveOptions,
    sim: &SimConfig,
) -> Result<(Solution, SimOutput)> {
    let solution = solve_periodic(solve_model, solve)?;
    let out = simulate(eval_model, &solution.policy, sim)?;
    Ok((solution, out))
}

/// Runs every configuration of the plan sequentially; each solve and
/// simulation is parallel internally. Non-convergence is recorded in the
/// row rather than aborting.
pub fn run_sweep(plan: &ExperimentPlan, calibration: &Calibration) -> Result<Vec<SweepResultRow>> {
    plan.validate()?;
    let configs = plan.configurations();
    let models = configs
        .iter()
        .map(|(_, _, cfg)| Model::build(cfg, calibration, plan.resolution))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(configs.len());
    for (row, ((cross, value, _), model)) in configs.iter().zip(&models).enumerate() {
        let sim = SimConfig {
            seed: plan.seed_for_row(row),
            ..plan.sim
        };
        log::info!("{} row {}: {} = {}", plan.name, row, plan.sweep_param.name(), value);
        let (solution, out) = solve_and_simulate(model, model, &plan.solve, &sim)?;
        let k = &out.kpi;
        let r = &solution.report;
        rows.push(SweepResultRow {
            plan: plan.name.clone(),
            row,
            param: plan.sweep_param.name().to_string(),
            value: *value,
            cross_param: plan.cross_param.as_ref().map(|c| c.param.name().to_string()),
            cross_value: *cross,
            seed: sim.seed,
            g: r.g,
            converged: r.converged,
            iterations: r.iterations,
            span: r.span,
            mean_profit_per_year: k.mean_profit_per_year,
            se_profit: k.se_profit,
            mean_trade_profit: k.mean_trade_profit,
            electrolyzer_utilization_pct: k.electrolyzer_utilization_pct,
            electrolyzer_used: k.electrolyzer_used,
            pct_time_congestion: k.pct_time_congestion,
            pct_time_congestion_buying: k.pct_time_congestion_buying,
            pct_time_congestion_selling: k.pct_time_congestion_selling,
            pct_unmet_demand: k.pct_unmet_demand,
            infeasible: k.pct_unmet_demand > 0.0,
        });
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: std::io::Read>(input: R) -> Result<Vec<SweepResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub name: String,
    pub convergence: ConvergenceReport,
    pub kpi: KpiReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub base: BenchmarkResult,
    pub bm1: BenchmarkResult,
    pub bm2: BenchmarkResult,
    /// Relative profit loss of BM2 against the base case, in percent.
    pub bm2_gap_pct: f64,
    /// Mean and standard error of the per-year profit difference between
    /// the base case and BM2 (both use the same random draws).
    pub bm2_paired_diff: f64,
    pub bm2_paired_se: f64,
}

fn paired(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Base case, no-storage system (BM1) and the policy that ignores
/// seasonality (BM2), all simulated with the same seed on the seasonal model.
pub fn run_benchmarks(
    cfg: &SystemConfig,
    resolution: GridResolution,
    calibration: &Calibration,
    solve: &SolveOptions,
    sim: &SimConfig,
) -> Result<BenchmarkReport> {
    let model = Model::build(cfg, calibration, resolution)?;
    let (base_sol, base_out) = solve_and_simulate(&model, &model, solve, sim)?;

    let bm1_model = Model::build(&bm1_config(cfg), calibration, resolution)?;
    let (bm1_sol, bm1_out) = solve_and_simulate(&bm1_model, &bm1_model, solve, sim)?;

    let (bm2_sol, bm2_out) = solve_and_simulate(&model.stationary(), &model, solve, sim)?;

    let base_profit = base_out.kpi.mean_profit_per_year;
    let (diff, se) = paired(&base_out.yearly_profit, &bm2_out.yearly_profit);
    Ok(BenchmarkReport {
        bm2_gap_pct: 100.0 * (base_profit - bm2_out.kpi.mean_profit_per_year) / base_profit.abs(),
        bm2_paired_diff: diff,
        bm2_paired_se: se,
        base: BenchmarkResult {
            name: "base".into(),
            convergence: base_sol.report,
            kpi: base_out.kpi,
        },
        bm1: BenchmarkResult {
            name: "bm1".into(),
            convergence: bm1_sol.report,
            kpi: bm1_out.kpi,
        },
        bm2: BenchmarkResult {
            name: "bm2".into(),
            convergence: bm2_sol.report,
            kpi: bm2_out.kpi,
        },
    })
}

/// Coarse versions of the six sensitivity studies.
pub fn preset_plans() -> Vec<ExperimentPlan> {
    let (base, resolution) = base_case_config();
    let plan = |name: &str, param: SweepParam, values: &[f64], cross: Option<CrossSweep>| ExperimentPlan {
        name: name.to_string(),
        base: base.clone(),
        resolution,
        calibration: None,
        sweep_param: param,
        values: values.to_vec(),
        cross_param: cross,
        solve: SolveOptions::default(),
        sim: SimConfig::default(),
        seed_mode: SeedMode::PerRow,
    };
    vec![
        plan("distribution_capacity", SweepParam::KC, &[10.0, 20.0, 40.0, 80.0], None),
        plan(
            "storage_capacity",
            SweepParam::M,
            &[250.0, 500.0, 750.0, 1000.0],
            Some(CrossSweep {
                param: SweepParam::KC,
                values: vec![10.0, 40.0, 80.0],
            }),
        ),
        plan("electrolyzer_capacity", SweepParam::KPlus, &[10.0, 20.0, 35.0, 50.0], None),
        plan("efficiency", SweepParam::Alpha, &[0.25, 0.5, 0.75, 1.0], None),
        plan("markup", SweepParam::CPlus, &[0.0, 1.5, 3.0, 5.0], None),
        plan("production_capacity", SweepParam::W, &[2.5, 5.0, 7.5, 10.0], None),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_rows_are_ordered_with_cross_outermost() {
        let plan = &preset_plans()[1];
        let cfgs = plan.configurations();
        assert_eq!(cfgs.len(), 12);
        assert_eq!((cfgs[0].0, cfgs[0].1), (Some(10.0), 250.0));
        assert_eq!((cfgs[3].0, cfgs[3].1), (Some(10.0), 1000.0));
        assert_eq!(cfgs[4].2.k_c, 40.0);
        assert_eq!(cfgs[4].2.m, 250.0);
    }

    #[test]
    fn plans_round_trip_and_validate() {
        for plan in preset_plans() {
            let back = ExperimentPlan::from_json(&plan.to_json().unwrap()).unwrap();
            assert_eq!(back, plan);
        }
        let mut bad = preset_plans()[0].clone();
        bad.values = vec![20.0, 10.0];
        assert!(bad.validate().is_err());
        bad.values.clear();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn row_seeds() {
        let mut plan = preset_plans()[0].clone();
        assert_ne!(plan.seed_for_row(0), plan.seed_for_row(1));
        assert_eq!(plan.seed_for_row(2), plan.seed_for_row(2));
        plan.seed_mode = SeedMode::Common;
        assert_eq!(plan.seed_for_row(3), plan.sim.seed);
    }

    #[test]
    fn bm1_has_no_storage() {
        let c = bm1_config(&SystemConfig::base_case());
        assert_eq!((c.m, c.k_plus, c.k_minus), (0.0, 0.0, 0.0));
        assert_eq!(c.k_c, 30.0);
    }
}
