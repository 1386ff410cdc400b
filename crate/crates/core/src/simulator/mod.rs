//! Monte Carlo evaluation of a policy under the model's own uncertainty.
//!
//! Net production is drawn from the same daily pmfs the solver uses and the
//! price moves along the discretized chain, so the simulated and planned
//! dynamics agree exactly. Inventory and price carry over between years.

mod classify;
mod kpi;

pub use classify::{classify_action, ActionClass};
pub use kpi::{congestion_trace, write_daily_csv, KpiReport};

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{reward, transition};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::solver::PolicyTable;
use crate::stochastics::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Simulated years including the warmup.
    pub years: usize,
    /// Leading years that are simulated but not measured.
    pub warmup_years: usize,
    pub seed: u64,
    /// Measured years per independent replication block.
    #[serde(default = "default_replication_block")]
    pub replication_block: usize,
    /// Measured years of the first block recorded in the daily trace.
    #[serde(default)]
    pub trace_years: usize,
}

fn default_replication_block() -> usize {
    250
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            years: 11_000,
            warmup_years: 1_000,
            seed: 20_240_607,
            replication_block: default_replication_block(),
            trace_years: 0,
        }
    }
}

impl SimConfig {
    pub fn quick(years: usize, warmup_years: usize, seed: u64) -> Self {
        SimConfig {
            years,
            warmup_years,
            seed,
            ..Self::default()
        }
    }

    pub fn measured_years(&self) -> usize {
        self.years.saturating_sub(self.warmup_years)
    }

    pub fn validate(&self) -> Result<()> {
        if self.years <= self.warmup_years {
            return Err(Error::config("years", "must exceed the warmup years"));
        }
        if self.replication_block == 0 {
            return Err(Error::config("replication_block", "must be at least 1"));
        }
        Ok(())
    }
}

/// One simulated day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    /// 1-based measured year.
    pub year: usize,
    /// 1-based day of the year.
    pub day: usize,
    pub x: f64,
    pub y_bar: f64,
    pub c: f64,
    pub u: f64,
    pub x_next: f64,
    pub unmet: f64,
    pub spilled: f64,
    pub reward: f64,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub kpi: KpiReport,
    pub yearly_profit: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

/// Per-day offsets mapping the model's net-production indices into the
/// policy's, after checking that inventory and price grids coincide.
fn policy_offsets(model: &Model, policy: &PolicyTable) -> Result<Vec<usize>> {
    let (mg, pg) = (&model.grids, &policy.grids);
    let same = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(p, q)| (p - q).abs() < 1e-9);
    if !same(&mg.x, &pg.x) || !same(&mg.c, &pg.c) || mg.periods() != pg.periods() {
        return Err(Error::InvalidGrid("policy grids do not match the model".into()));
    }
    if (mg.resolution.dj - pg.resolution.dj).abs() > 1e-12 {
        return Err(Error::InvalidGrid("policy net-production step differs from the model".into()));
    }
    (0..mg.periods())
        .map(|d| {
            let (m, p) = (mg.y[d], pg.y[d]);
            if p.k_min <= m.k_min && p.k_max >= m.k_max {
                Ok((m.k_min - p.k_min) as usize)
            } else {
                Err(Error::InvalidGrid(format!("policy support of day {} misses model states", d + 1)))
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Position {
    xi: usize,
    ci: usize,
}

struct Stepper<'a> {
    model: &'a Model,
    policy: &'a PolicyTable,
    offsets: &'a [usize],
    cap_steps: i16,
}

#[derive(Debug, Clone, Copy)]
struct DayResult {
    y_bar: f64,
    u: f64,
    steps: i16,
    x: f64,
    x_next: f64,
    c: f64,
    charged: f64,
    unmet: f64,
    spilled: f64,
    reward: f64,
    trade: f64,
}

impl Stepper<'_> {
    fn step(&self, day: usize, pos: &mut Position, rng: &mut ChaCha8Rng) -> DayResult {
        let model = self.model;
        let grids = &model.grids;
        let yi = model.pmfs[day].sample_index(rng.random::<f64>());
        let y_bar = grids.y_value(day, yi);
        let x = grids.x[pos.xi];
        let c = grids.c[pos.ci];
        let steps = self.policy.step(day, pos.xi, yi + self.offsets[day], pos.ci);
        let u = steps as f64 * self.policy.grids.du;
        let (out, xn) = transition(x, y_bar, u, &model.cfg, grids);
        let r = reward(u, c, out.unmet, &model.cfg);
        pos.xi = xn;
        pos.ci = model.chain.next_index(pos.ci, rng.random::<f64>());
        DayResult {
            y_bar,
            u,
            steps,
            x,
            x_next: out.x_next,
            c,
            charged: out.charged,
            unmet: out.unmet,
            spilled: out.spilled,
            reward: r,
            trade: r + model.cfg.s * out.unmet,
        }
    }
}

/// Runs `policy` on `model`. Years after the warmup are split into blocks
/// that start from the warmup's final state and use their own random
/// streams; results are merged in block order, so the output does not
/// depend on the number of threads.
pub fn simulate(model: &Model, policy: &PolicyTable, sim: &SimConfig) -> Result<SimOutput> {
    sim.validate()?;
    let offsets = policy_offsets(model, policy)?;
    let du = policy.grids.du;
    let stepper = Stepper {
        model,
        policy,
        offsets: &offsets,
        cap_steps: match (model.cfg.k_c / du + 1e-9).floor() as i16 {
            0 => i16::MAX,
            k => k,
        },
    };
    let periods = model.grids.periods();

    let mut pos = Position {
        xi: 0,
        ci: model.grids.snap_c(model.chain.stationary_mean()),
    };
    let mut rng = stream_rng(sim.seed, 0);
    for _ in 0..sim.warmup_years {
        for day in 0..periods {
            stepper.step(day, &mut pos, &mut rng);
        }
    }
    let start = pos;

    let measured = sim.measured_years();
    let blocks = measured.div_ceil(sim.replication_block);
    let parts: Vec<(kpi::Accumulator, Vec<TraceRow>)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let years = sim.replication_block.min(measured - b * sim.replication_block);
            let mut rng = stream_rng(sim.seed, b as u64 + 1);
            let mut pos = start;
            let mut acc = kpi::Accumulator::new(periods);
            let mut trace = Vec::new();
            for year in 0..years {
                let mut profit = 0.0;
                let mut trade = 0.0;
                for day in 0..periods {
                    let d = stepper.step(day, &mut pos, &mut rng);
                    profit += d.reward;
                    trade += d.trade;
                    acc.record_day(day, &d, stepper.cap_steps, model.cfg.k_plus, du);
                    if b == 0 && year < sim.trace_years {
                        trace.push(TraceRow {
                            year: year + 1,
                            day: day + 1,
                            x: d.x,
                            y_bar: d.y_bar,
                            c: d.c,
                            u: d.u,
                            x_next: d.x_next,
                            unmet: d.unmet,
                            spilled: d.spilled,
                            reward: d.reward,
                        });
                    }
                }
                acc.record_year(profit, trade);
            }
            (acc, trace)
        })
        .collect();

    let mut total = kpi::Accumulator::new(periods);
    let mut trace = Vec::new();
    for (acc, t) in parts {
        total.merge(&acc);
        trace.extend(t);
    }
    let yearly_profit = total.yearly_profit.clone();
    Ok(SimOutput {
        kpi: total.finish(sim, model.cfg.k_plus),
        yearly_profit,
        trace,
    })
}

pub fn write_trace_csv<W: Write>(out: W, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
