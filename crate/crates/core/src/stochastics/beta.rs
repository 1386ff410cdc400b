//! Weekly beta model of daily solar production.

use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const WEEKS: usize = 52;
const MIN_OBS_PER_WEEK: usize = 10;

/// Daily production of a week is `scale * Beta(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeeklyBeta {
    /// 1..=52
    pub week: u32,
    pub a: f64,
    pub b: f64,
    /// Largest possible daily production of the week (MWh).
    pub scale: f64,
    /// Set when moment matching was infeasible and `a = b = 1` was used.
    #[serde(default)]
    pub fallback: bool,
}

impl WeeklyBeta {
    pub fn mean(&self) -> f64 {
        self.scale * self.a / (self.a + self.b)
    }

    pub fn variance(&self) -> f64 {
        let s = self.a + self.b;
        self.scale * self.scale * self.a * self.b / (s * s * (s + 1.0))
    }
}

/// Week (1..=52) of a zero-based day of the year; days past week 52 reuse it.
pub fn week_of_day(day: usize) -> usize {
    (day / 7 + 1).min(WEEKS)
}

pub fn week_of_date(date: NaiveDate) -> usize {
    week_of_day(date.ordinal0() as usize)
}

/// Moment-matched shape parameters of normalized observations. `None` when
/// the sample variance is not below `m(1 - m)`.
pub fn beta_moments(samples: &[f64]) -> Option<(f64, f64)> {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return None;
    }
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if !(mean > 0.0 && mean < 1.0) || var <= 0.0 || var >= mean * (1.0 - mean) {
        return None;
    }
    let k = mean * (1.0 - mean) / var - 1.0;
    Some((mean * k, (1.0 - mean) * k))
}

/// Fits one beta per calendar week. Observations are divided by the week's
/// scale: the largest observation of the week, raised to `theoretical_max`
/// when one is given.
pub fn fit_weekly_beta(
    production: &[(NaiveDate, f64)],
    theoretical_max: Option<f64>,
) -> Result<Vec<WeeklyBeta>> {
    let mut by_week: Vec<Vec<f64>> = vec![Vec::new(); WEEKS];
    for (date, mwh) in production {
        if !mwh.is_finite() || *mwh < 0.0 {
            return Err(Error::InsufficientData(format!(
                "production on {date} must be a non-negative number, got {mwh}"
            )));
        }
        by_week[week_of_date(*date) - 1].push(*mwh);
    }
    by_week
        .iter()
        .enumerate()
        .map(|(i, obs)| {
            let week = i as u32 + 1;
            if obs.len() < MIN_OBS_PER_WEEK {
                return Err(Error::InsufficientData(format!(
                    "week {week} has {} production observations, need {MIN_OBS_PER_WEEK}",
                    obs.len()
                )));
            }
            let observed_max = obs.iter().cloned().fold(0.0, f64::max);
            let scale = observed_max.max(theoretical_max.unwrap_or(0.0));
            if scale <= 0.0 {
                log::warn!("week {week}: no production observed, using Beta(1, 1) on a unit scale");
                return Ok(WeeklyBeta {
                    week,
                    a: 1.0,
                    b: 1.0,
                    scale: 1.0,
                    fallback: true,
                });
            }
            let normalized: Vec<f64> = obs.iter().map(|v| v / scale).collect();
            Ok(match beta_moments(&normalized) {
                Some((a, b)) => WeeklyBeta {
                    week,
                    a,
                    b,
                    scale,
                    fallback: false,
                },
                None => {
                    log::warn!("week {week}: moment matching infeasible, using Beta(1, 1)");
                    WeeklyBeta {
                        week,
                        a: 1.0,
                        b: 1.0,
                        scale,
                        fallback: true,
                    }
                }
            })
        })
        .collect()
}

/// Synthetic stand-in for a fitted 5 MWp park in the Netherlands.
///
/// A cosine seasonal profile runs from a week-1 trough to a week-26 peak.
/// The largest daily yield goes from 8 to 40 MWh and the mean capacity
/// fraction from 0.38 to 0.58, while `a + b = 3` in every week. The annual
/// yield is about 4500 MWh, close to the demand of 1500 households.
pub fn synthetic_weekly_betas() -> Vec<WeeklyBeta> {
    const CONCENTRATION: f64 = 3.0;
    (1..=WEEKS as u32)
        .map(|week| {
            let season = 0.5 * (1.0 + (2.0 * PI * (f64::from(week) - 26.0) / 50.0).cos());
            let scale = 8.0 + 32.0 * season;
            let mean = 0.38 + 0.20 * season;
            WeeklyBeta {
                week,
                a: mean * CONCENTRATION,
                b: (1.0 - mean) * CONCENTRATION,
                scale,
                fallback: false,
            }
        })
        .collect()
}
