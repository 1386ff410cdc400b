//! The fitted (or synthetic) stochastic inputs of the model.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastics::io::{day_of_year_means, read_daily_csv, ENERGY_COLUMN, PRICE_COLUMN};
use crate::stochastics::{
    estimate_ar1, fit_demand, fit_weekly_beta, synthetic_weekly_betas, week_of_day, Ar1Params,
    DemandModel, SeasonalityVariant, WeeklyBeta, WEEKS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceFitSummary {
    pub variant: SeasonalityVariant,
    pub params: Ar1Params,
    pub std_error: f64,
    pub stationary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    /// True for the packaged synthetic production profile.
    pub synthetic: bool,
    /// Peak capacity (MWp) the weekly scales refer to.
    pub reference_capacity: f64,
    /// Price process used by the solver (the raw-series fit).
    pub price: Ar1Params,
    #[serde(default)]
    pub price_fits: Vec<PriceFitSummary>,
    pub weekly_beta: Vec<WeeklyBeta>,
    pub demand: DemandModel,
}

impl Calibration {
    /// Packaged defaults: the Dutch price and demand fits with a synthetic
    /// weekly production profile.
    pub fn synthetic() -> Self {
        Calibration {
            synthetic: true,
            reference_capacity: 5.0,
            price: Ar1Params::dutch_day_ahead(),
            price_fits: Vec::new(),
            weekly_beta: synthetic_weekly_betas(),
            demand: DemandModel::dutch_village(),
        }
    }

    pub fn beta_for_day(&self, day: usize) -> &WeeklyBeta {
        &self.weekly_beta[week_of_day(day) - 1]
    }

    /// Production scale of a day for a park of `w` MWp.
    pub fn day_scale(&self, day: usize, w: f64) -> f64 {
        self.beta_for_day(day).scale * w / self.reference_capacity
    }

    pub fn validate(&self, periods: usize) -> Result<()> {
        if self.weekly_beta.len() != WEEKS {
            return Err(Error::config(
                "weekly_beta",
                format!("expected {WEEKS} weeks, got {}", self.weekly_beta.len()),
            ));
        }
        for (i, b) in self.weekly_beta.iter().enumerate() {
            if b.week as usize != i + 1 || !(b.a > 0.0 && b.b > 0.0 && b.scale > 0.0) {
                return Err(Error::config("weekly_beta", format!("invalid entry for week {}", i + 1)));
            }
        }
        if !self.price.is_stationary() || !(self.price.sigma_c >= 0.0) {
            return Err(Error::config("price", "AR(1) price process must be stationary"));
        }
        if !(self.reference_capacity > 0.0) {
            return Err(Error::config("reference_capacity", "must be positive"));
        }
        self.demand.validate(periods)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Input files of a calibration run.
#[derive(Debug, Clone)]
pub struct CalibrationInputs<'a> {
    pub prices: &'a Path,
    pub production: &'a Path,
    pub consumption: &'a Path,
    /// Capacity of the park that produced the production series (MWp).
    pub reference_capacity: f64,
    pub theoretical_max: Option<f64>,
}

/// Fits all three price variants, the weekly betas and the demand model.
pub fn fit_calibration(inputs: &CalibrationInputs<'_>) -> Result<Calibration> {
    let prices = read_daily_csv(inputs.prices, PRICE_COLUMN)?;
    let production = read_daily_csv(inputs.production, ENERGY_COLUMN)?;
    let consumption = read_daily_csv(inputs.consumption, ENERGY_COLUMN)?;

    let mut price_fits = Vec::new();
    for variant in SeasonalityVariant::ALL {
        let fit = estimate_ar1(&prices, variant)?;
        price_fits.push(PriceFitSummary {
            variant,
            params: fit.params,
            std_error: fit.std_error,
            stationary: fit.params.is_stationary(),
        });
    }
    let raw = price_fits
        .iter()
        .find(|f| f.variant == SeasonalityVariant::Raw)
        .expect("raw variant fitted");
    if !raw.stationary {
        return Err(Error::NonStationary { params: raw.params });
    }
    let price = raw.params;

    let weekly_beta = fit_weekly_beta(&production, inputs.theoretical_max)?;
    let demand = fit_demand(&day_of_year_means(&consumption)?)?.model;

    Ok(Calibration {
        synthetic: false,
        reference_capacity: inputs.reference_capacity,
        price,
        price_fits,
        weekly_beta,
        demand,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_round_trips_through_json() {
        let cal = Calibration::synthetic();
        cal.validate(365).unwrap();
        let back = Calibration::from_json(&cal.to_json().unwrap()).unwrap();
        assert_eq!(back, cal);
    }

    #[test]
    fn production_scales_with_capacity() {
        let cal = Calibration::synthetic();
        let s5 = cal.day_scale(180, 5.0);
        assert!((cal.day_scale(180, 10.0) - 2.0 * s5).abs() < 1e-12);
    }
}
