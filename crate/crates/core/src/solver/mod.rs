//! Finite-horizon backward induction over one year, iterated until the
//! year-over-year value increments become constant.

mod backup;
mod export;
mod table;

pub use backup::{bellman_backup, preference_order, TIE_TOLERANCE};
pub use export::{policy_slice_rows, write_policy_csv, PolicyRow};
pub use table::{read_policy, read_values, PolicyTable, ValueTable};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveOptions {
    /// Stop once the span of the yearly increment is at most this.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Run exactly this many years regardless of the span.
    #[serde(default)]
    pub fixed_iters: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            epsilon: 1e-3,
            max_iters: 500,
            fixed_iters: None,
        }
    }
}

impl SolveOptions {
    pub fn fixed(iters: usize) -> Self {
        SolveOptions {
            fixed_iters: Some(iters),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::config("epsilon", "must be positive"));
        }
        match self.fixed_iters {
            Some(0) => Err(Error::config("fixed_iters", "must be at least 1")),
            None if self.max_iters < 2 => Err(Error::config("max_iters", "must be at least 2")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub converged: bool,
    /// Average gain per year: the mean of the last increment.
    pub g: f64,
    /// `max - min` of the last increment.
    pub span: f64,
    pub span_trace: Vec<f64>,
    pub g_trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub values: ValueTable,
    pub policy: PolicyTable,
    pub report: ConvergenceReport,
}

/// One backward pass over all days, ending in `v_terminal` (a table on the
/// grid of the first day). Overwrites `values` and `policy`.
pub fn solve_year(model: &Model, v_terminal: &[f64], values: &mut ValueTable, policy: &mut PolicyTable) {
    let periods = model.grids.periods();
    assert_eq!(v_terminal.len(), model.grids.day_len(0), "terminal table has the wrong size");
    for day in (0..periods).rev() {
        let (head, tail) = values.days.split_at_mut(day + 1);
        let v_next: &[f64] = if day + 1 == periods { v_terminal } else { &tail[0] };
        bellman_backup(model, day, v_next, &mut head[day], &mut policy.steps[day]);
    }
}

pub fn solve_periodic(model: &Model, opts: &SolveOptions) -> Result<Solution> {
    solve_periodic_from(model, vec![0.0; model.grids.day_len(0)], opts)
}

/// Repeats yearly sweeps, each ending in the start-of-year values of the
/// previous one, until the increment `V_k - V_{k-1}` on the first day has a
/// span of at most `epsilon`. At least two sweeps are always run.
pub fn solve_periodic_from(model: &Model, v_terminal: Vec<f64>, opts: &SolveOptions) -> Result<Solution> {
    opts.validate()?;
    if v_terminal.len() != model.grids.day_len(0) {
        return Err(Error::InvalidGrid(format!(
            "terminal table has {} cells, expected {}",
            v_terminal.len(),
            model.grids.day_len(0)
        )));
    }
    let mut values = ValueTable::zeros(&model.grids);
    let mut policy = PolicyTable::zeros(&model.grids);
    let mut prev = v_terminal;
    let mut report = ConvergenceReport {
        iterations: 0,
        converged: false,
        g: 0.0,
        span: f64::INFINITY,
        span_trace: Vec::new(),
        g_trace: Vec::new(),
    };
    let limit = opts.fixed_iters.unwrap_or(opts.max_iters);
    for k in 1..=limit {
        solve_year(model, &prev, &mut values, &mut policy);
        let (lo, hi, sum) = values.days[0].iter().zip(&prev).fold(
            (f64::INFINITY, f64::NEG_INFINITY, 0.0),
            |(lo, hi, sum), (v, p)| {
                let d = v - p;
                (lo.min(d), hi.max(d), sum + d)
            },
        );
        report.iterations = k;
        report.span = hi - lo;
        report.g = sum / prev.len() as f64;
        report.span_trace.push(report.span);
        report.g_trace.push(report.g);
        report.converged = k >= 2 && report.span <= opts.epsilon;
        log::debug!("year sweep {k}: g = {:.4}, span = {:.3e}", report.g, report.span);
        if report.converged && opts.fixed_iters.is_none() {
            break;
        }
        prev.copy_from_slice(&values.days[0]);
    }
    if !report.converged {
        log::warn!(
            "value iteration stopped after {} sweeps with span {:.3e} > {:.1e}",
            report.iterations,
            report.span,
            opts.epsilon
        );
    }
    Ok(Solution {
        values,
        policy,
        report,
    })
}

/// Number of stored actions that are not feasible for their state under
/// `cfg`, checked against the bounds directly.
pub fn audit_policy(cfg: &crate::config::SystemConfig, policy: &PolicyTable) -> usize {
    use crate::dynamics::{buy_bound, sell_bound};
    let g = &policy.grids;
    let mut bad = 0;
    for day in 0..g.periods() {
        for xi in 0..g.nx() {
            for yi in 0..g.ny(day) {
                let (x, y) = (g.x[xi], g.y_value(day, yi));
                let (buy, sell) = (buy_bound(x, y, cfg), sell_bound(x, y, cfg));
                for ci in 0..g.nc() {
                    let u = policy.get(day, xi, yi, ci);
                    if u > sell + 1e-9 || -u > buy + 1e-9 {
                        bad += 1;
                    }
                }
            }
        }
    }
    bad
}
