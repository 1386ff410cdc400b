use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::model::Model;

use super::{PolicyTable, ValueTable};

#[derive(Debug, Clone, Serialize)]
pub struct PolicyRow {
    /// 1-based day of the year.
    pub day: usize,
    pub x: f64,
    pub y_bar: f64,
    pub c: f64,
    pub u_star: f64,
    pub value: Option<f64>,
}

/// Writes `(day, x, y_bar, c, u_star, value)` rows for all cells accepted by
/// `keep(day, xi, yi, ci)`.
pub fn write_policy_csv<W: Write>(
    out: W,
    policy: &PolicyTable,
    values: Option<&ValueTable>,
    mut keep: impl FnMut(usize, usize, usize, usize) -> bool,
) -> Result<usize> {
    let g = &policy.grids;
    let mut w = csv::Writer::from_writer(out);
    let mut rows = 0;
    for day in 0..g.periods() {
        for xi in 0..g.nx() {
            for yi in 0..g.ny(day) {
                for ci in 0..g.nc() {
                    if !keep(day, xi, yi, ci) {
                        continue;
                    }
                    w.serialize(PolicyRow {
                        day: day + 1,
                        x: g.x[xi],
                        y_bar: g.y_value(day, yi),
                        c: g.c[ci],
                        u_star: policy.get(day, xi, yi, ci),
                        value: values.map(|v| v.get(day, xi, yi, ci)),
                    })?;
                    rows += 1;
                }
            }
        }
    }
    w.flush()?;
    Ok(rows)
}

/// `(day, y index)` pairs picking the given net-production quantiles of each
/// listed day (0-based days).
pub fn policy_slice_rows(model: &Model, days: &[usize], quantiles: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for &day in days {
        for &q in quantiles {
            let y = model.pmfs[day].quantile(q);
            let yi = model.grids.snap_y(day, y);
            if !out.contains(&(day, yi)) {
                out.push((day, yi));
            }
        }
    }
    out
}
