//! Two-segment linear model of daily household demand.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSegment {
    pub intercept: f64,
    /// MWh per day.
    pub slope: f64,
}

impl LinearSegment {
    pub fn at(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }
}

/// Daily demand `D_t ~ N(mu_t, sigma_d^2)` truncated at zero. `mu_t` follows
/// `seg1` on days `1..=split_day` and `seg2` afterwards (days counted from 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandModel {
    pub split_day: usize,
    pub seg1: LinearSegment,
    pub seg2: LinearSegment,
    pub sigma_d: f64,
    #[serde(default = "one")]
    pub households_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl DemandModel {
    /// 1500 households with NEDU profiles.
    pub fn dutch_village() -> Self {
        DemandModel {
            split_day: 199,
            seg1: LinearSegment {
                intercept: 15.3,
                slope: -0.0302,
            },
            seg2: LinearSegment {
                intercept: 1.79,
                slope: 0.0372,
            },
            sigma_d: 0.62,
            households_scale: 1.0,
        }
    }

    /// Mean demand of a zero-based day.
    pub fn mean(&self, day: usize) -> f64 {
        let t = (day + 1) as f64;
        let seg = if day < self.split_day { &self.seg1 } else { &self.seg2 };
        seg.at(t) * self.households_scale
    }

    pub fn sd(&self) -> f64 {
        self.sigma_d * self.households_scale
    }

    pub fn validate(&self, periods: usize) -> Result<()> {
        if !(self.split_day > 1 && self.split_day < periods) {
            return Err(Error::config(
                "split_day",
                format!("must lie strictly between 1 and {periods}"),
            ));
        }
        if !(self.sigma_d > 0.0) {
            return Err(Error::config("sigma_d", "must be positive"));
        }
        if !(self.households_scale > 0.0) {
            return Err(Error::config("households_scale", "must be positive"));
        }
        if let Some(day) = (0..periods).find(|&d| self.mean(d) <= 0.0) {
            return Err(Error::config(
                "seg1",
                format!("mean demand is not positive on day {}", day + 1),
            ));
        }
        Ok(())
    }
}

/// Least-squares line through `(t, y)` pairs. Returns the line and its
/// residual standard error `sqrt(SSR / (n - 2))`.
fn fit_line(ts: &[f64], ys: &[f64]) -> (LinearSegment, f64) {
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let stt: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    let sty: f64 = ts.iter().zip(ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let slope = sty / stt;
    let line = LinearSegment {
        intercept: my - slope * mt,
        slope,
    };
    let ssr: f64 = ts.iter().zip(ys).map(|(t, y)| (y - line.at(*t)).powi(2)).sum();
    (line, (ssr / (n - 2.0)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandFit {
    pub model: DemandModel,
    pub se1: f64,
    pub se2: f64,
}

/// Exhaustive changepoint search. The split minimizing the summed residual
/// standard errors wins (earliest on ties); the larger of the two standard
/// errors becomes `sigma_d`.
pub fn fit_demand(consumption: &[f64]) -> Result<DemandFit> {
    const MARGIN: usize = 30;
    let periods = consumption.len();
    if periods < 2 * MARGIN + 1 {
        return Err(Error::InsufficientData(format!(
            "demand fit needs at least {} daily values, got {periods}",
            2 * MARGIN + 1
        )));
    }
    if consumption.iter().any(|v| !v.is_finite()) {
        return Err(Error::InsufficientData("non-finite consumption value".into()));
    }
    let ts: Vec<f64> = (1..=periods).map(|t| t as f64).collect();
    let scale = 1.0 + consumption.iter().map(|v| v.abs()).sum::<f64>() / periods as f64;
    let tol = 1e-9 * scale;

    let mut best: Option<(f64, DemandFit)> = None;
    for split in MARGIN..=periods - MARGIN {
        let (seg1, se1) = fit_line(&ts[..split], &consumption[..split]);
        let (seg2, se2) = fit_line(&ts[split..], &consumption[split..]);
        let total = se1 + se2;
        if best.as_ref().is_none_or(|(b, _)| total < b - tol) {
            best = Some((
                total,
                DemandFit {
                    model: DemandModel {
                        split_day: split,
                        seg1,
                        seg2,
                        sigma_d: se1.max(se2),
                        households_scale: 1.0,
                    },
                    se1,
                    se2,
                },
            ));
        }
    }
    Ok(best.expect("non-empty split range").1)
}
