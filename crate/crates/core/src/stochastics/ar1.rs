//! AR(1) electricity prices: least-squares fitting with optional
//! month/weekday deseasonalization, and discretization onto the price grid.

use chrono::{Datelike, NaiveDate};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// `C_t = phi + theta * C_{t-1} + xi_t`, `xi_t ~ N(0, sigma_c^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ar1Params {
    pub phi: f64,
    pub theta: f64,
    pub sigma_c: f64,
}

impl Ar1Params {
    /// Daily Dutch day-ahead fit on the raw series.
    pub fn dutch_day_ahead() -> Self {
        Ar1Params {
            phi: 5.23,
            theta: 0.87,
            sigma_c: 7.7,
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.theta.abs() < 1.0
    }

    pub fn stationary_mean(&self) -> f64 {
        self.phi / (1.0 - self.theta)
    }

    pub fn stationary_sd(&self) -> f64 {
        self.sigma_c / (1.0 - self.theta * self.theta).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeasonalityVariant {
    RemoveMonthAndWeekday,
    RemoveWeekday,
    Raw,
}

impl SeasonalityVariant {
    pub const ALL: [SeasonalityVariant; 3] = [
        SeasonalityVariant::RemoveMonthAndWeekday,
        SeasonalityVariant::RemoveWeekday,
        SeasonalityVariant::Raw,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            SeasonalityVariant::RemoveMonthAndWeekday => "remove_month_and_weekday",
            SeasonalityVariant::RemoveWeekday => "remove_weekday",
            SeasonalityVariant::Raw => "raw",
        }
    }

    fn uses_months(&self) -> bool {
        matches!(self, SeasonalityVariant::RemoveMonthAndWeekday)
    }

    fn uses_weekdays(&self) -> bool {
        !matches!(self, SeasonalityVariant::Raw)
    }
}

/// Dummy-variable seasonality `f'(t)`: a constant, 11 month effects
/// (February..December, January is the reference) and 6 weekday effects
/// (Tuesday..Sunday, Monday is the reference).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeasonalityModel {
    pub variant: SeasonalityVariant,
    pub gamma1: f64,
    pub gamma2: Vec<f64>,
    pub gamma3: Vec<f64>,
}

impl PriceSeasonalityModel {
    fn none() -> Self {
        PriceSeasonalityModel {
            variant: SeasonalityVariant::Raw,
            gamma1: 0.0,
            gamma2: Vec::new(),
            gamma3: Vec::new(),
        }
    }

    pub fn effect(&self, date: NaiveDate) -> f64 {
        let mut v = self.gamma1;
        let month = date.month0() as usize;
        if month > 0 {
            v += self.gamma2.get(month - 1).copied().unwrap_or(0.0);
        }
        let weekday = date.weekday().num_days_from_monday() as usize;
        if weekday > 0 {
            v += self.gamma3.get(weekday - 1).copied().unwrap_or(0.0);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ar1Fit {
    pub params: Ar1Params,
    pub seasonality: PriceSeasonalityModel,
    /// `sqrt(sum_{t>=2} (C_t - C_hat_t)^2 / T)` on the original price scale.
    pub std_error: f64,
}

fn fit_seasonality(series: &[(NaiveDate, f64)], variant: SeasonalityVariant) -> PriceSeasonalityModel {
    if variant == SeasonalityVariant::Raw {
        return PriceSeasonalityModel::none();
    }
    let n_month = if variant.uses_months() { 11 } else { 0 };
    let n_week = if variant.uses_weekdays() { 6 } else { 0 };
    let cols = 1 + n_month + n_week;
    let design = DMatrix::from_fn(series.len(), cols, |r, col| {
        let date = series[r].0;
        if col == 0 {
            1.0
        } else if col <= n_month {
            f64::from(date.month0() as usize == col)
        } else {
            f64::from(date.weekday().num_days_from_monday() as usize == col - n_month)
        }
    });
    let target = DVector::from_iterator(series.len(), series.iter().map(|(_, v)| *v));
    let svd = design.svd(true, true);
    let beta = svd
        .solve(&target, 1e-10)
        .unwrap_or_else(|_| DVector::zeros(cols));
    PriceSeasonalityModel {
        variant,
        gamma1: beta[0],
        gamma2: (1..=n_month).map(|i| beta[i]).collect(),
        gamma3: (1..=n_week).map(|i| beta[n_month + i]).collect(),
    }
}

/// Ordinary least squares of `z_t` on `z_{t-1}`. Returns `(phi, theta, ssr)`.
fn ols_lag1(z: &[f64]) -> (f64, f64, f64) {
    let n = (z.len() - 1) as f64;
    let (prev, next) = (&z[..z.len() - 1], &z[1..]);
    let mx = prev.iter().sum::<f64>() / n;
    let my = next.iter().sum::<f64>() / n;
    let sxx: f64 = prev.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = prev.iter().zip(next).map(|(x, y)| (x - mx) * (y - my)).sum();
    let scale = 1.0 + mx * mx;
    let theta = if sxx <= 1e-12 * scale * n { 0.0 } else { sxy / sxx };
    let phi = my - theta * mx;
    let ssr = prev
        .iter()
        .zip(next)
        .map(|(x, y)| (y - phi - theta * x).powi(2))
        .sum();
    (phi, theta, ssr)
}

/// Fits one of the three AR(1) variants to a contiguous daily price series.
pub fn fit_ar1(series: &[(NaiveDate, f64)], variant: SeasonalityVariant) -> Result<Ar1Fit> {
    let fit = estimate_ar1(series, variant)?;
    if !fit.params.is_stationary() {
        return Err(Error::NonStationary { params: fit.params });
    }
    Ok(fit)
}

/// Like [`fit_ar1`] but returns non-stationary estimates as well.
pub fn estimate_ar1(series: &[(NaiveDate, f64)], variant: SeasonalityVariant) -> Result<Ar1Fit> {
    if series.len() < 30 {
        return Err(Error::InsufficientData(format!(
            "AR(1) fit needs at least 30 observations, got {}",
            series.len()
        )));
    }
    if let Some((d, v)) = series.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InsufficientData(format!("non-finite price {v} on {d}")));
    }
    let seasonality = fit_seasonality(series, variant);
    let effects: Vec<f64> = series.iter().map(|(d, _)| seasonality.effect(*d)).collect();
    let z: Vec<f64> = series.iter().zip(&effects).map(|((_, c), e)| c - e).collect();
    let (phi, theta, ssr) = ols_lag1(&z);
    let pairs = z.len() - 1;
    let sigma_c = if pairs > 2 { (ssr / (pairs - 2) as f64).sqrt() } else { 0.0 };

    let total = series.len() as f64;
    let sq: f64 = (1..series.len())
        .map(|t| {
            let predicted = effects[t] + phi + theta * z[t - 1];
            (series[t].1 - predicted).powi(2)
        })
        .sum();
    Ok(Ar1Fit {
        params: Ar1Params { phi, theta, sigma_c },
        seasonality,
        std_error: (sq / total).sqrt(),
    })
}

/// Row-stochastic price transition matrix on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceChain {
    pub grid: Vec<f64>,
    /// Row-major `n x n`; `p[i * n + j] = Pr(c' = grid[j] | c = grid[i])`.
    pub p: Vec<f64>,
}

impl PriceChain {
    pub fn new(grid: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if n == 0 || p.len() != n * n {
            return Err(Error::InvalidGrid(format!(
                "price chain needs an {n}x{n} matrix, got {} entries",
                p.len()
            )));
        }
        for i in 0..n {
            let row = &p[i * n..(i + 1) * n];
            let s: f64 = row.iter().sum();
            if row.iter().any(|v| *v < 0.0 || !v.is_finite()) || (s - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidGrid(format!("price chain row {i} is not a distribution")));
            }
        }
        Ok(PriceChain { grid, p })
    }

    /// A chain that never moves.
    pub fn constant(price: f64) -> Self {
        PriceChain {
            grid: vec![price],
            p: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.p[i * n..(i + 1) * n]
    }

    /// Next-price index for a uniform draw `u` in `[0, 1)`.
    pub fn next_index(&self, i: usize, u: f64) -> usize {
        let row = self.row(i);
        let mut acc = 0.0;
        for (j, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        // u landed in the rounding slack above the last cumulative sum
        row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
    }

    /// Stationary distribution by repeated application of the matrix.
    pub fn stationary(&self) -> Vec<f64> {
        let n = self.len();
        let mut pi = vec![1.0 / n as f64; n];
        let mut next = vec![0.0; n];
        for _ in 0..100_000 {
            next.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n {
                let w = pi[i];
                if w == 0.0 {
                    continue;
                }
                for (j, p) in self.row(i).iter().enumerate() {
                    next[j] += w * p;
                }
            }
            let diff: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            std::mem::swap(&mut pi, &mut next);
            if diff < 1e-15 {
                break;
            }
        }
        pi
    }

    pub fn stationary_mean(&self) -> f64 {
        self.stationary().iter().zip(&self.grid).map(|(p, c)| p * c).sum()
    }

    /// Lag-1 autocorrelation of the stationary chain.
    pub fn lag1_autocorrelation(&self) -> f64 {
        let pi = self.stationary();
        let mean: f64 = pi.iter().zip(&self.grid).map(|(p, c)| p * c).sum();
        let var: f64 = pi.iter().zip(&self.grid).map(|(p, c)| p * (c - mean).powi(2)).sum();
        let cross: f64 = (0..self.len())
            .map(|i| {
                let cond: f64 = self.row(i).iter().zip(&self.grid).map(|(p, c)| p * c).sum();
                pi[i] * (self.grid[i] - mean) * (cond - mean)
            })
            .sum();
        if var > 0.0 {
            cross / var
        } else {
            0.0
        }
    }
}

/// CDF binning of the AR(1) conditional law onto a uniform grid; the outer
/// bins absorb the tails.
pub fn discretize_ar1(params: &Ar1Params, c_grid: &[f64]) -> PriceChain {
    let n = c_grid.len();
    if n == 1 {
        return PriceChain::constant(c_grid[0]);
    }
    let step = c_grid[1] - c_grid[0];
    let mut p = vec![0.0; n * n];
    for (i, &c) in c_grid.iter().enumerate() {
        let mu = params.phi + params.theta * c;
        let row = &mut p[i * n..(i + 1) * n];
        if params.sigma_c <= 0.0 {
            let j = ((mu - c_grid[0]) / step).round().clamp(0.0, (n - 1) as f64) as usize;
            row[j] = 1.0;
            continue;
        }
        let normal = Normal::new(mu, params.sigma_c).expect("positive sigma");
        let mut lower_cdf = 0.0;
        for j in 0..n {
            let upper_cdf = if j + 1 == n {
                1.0
            } else {
                normal.cdf(c_grid[j] + step / 2.0)
            };
            row[j] = (upper_cdf - lower_cdf).max(0.0);
            lower_cdf = upper_cdf;
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    PriceChain {
        grid: c_grid.to_vec(),
        p,
    }
}
