//! Physical and economic parameters of the solar park, storage and grid link.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the fuel-cell capacity limits sales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuelCellMode {
    /// `k_minus` caps the total amount sold in a period.
    #[default]
    Literal,
    /// `k_minus` caps only the energy withdrawn from storage; the current
    /// net overage can be sold on top of it.
    Discharge,
}

/// All quantities are per period (one day) unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Installed solar peak capacity (MWp).
    pub w: f64,
    /// Storage capacity (MWh).
    pub m: f64,
    /// Grid distribution capacity (MWh per period).
    pub k_c: f64,
    /// Electrolyzer capacity (MWh per period).
    pub k_plus: f64,
    /// Fuel-cell capacity (MWh per period).
    pub k_minus: f64,
    /// Markup on the buying price (money/MWh).
    pub c_plus: f64,
    /// Round-trip efficiency, applied when charging.
    pub alpha: f64,
    /// Penalty per MWh of unmet demand.
    pub s: f64,
    /// Periods per year.
    #[serde(rename = "T")]
    pub periods: usize,
    #[serde(default)]
    pub fuel_cell_mode: FuelCellMode,
}

impl SystemConfig {
    /// The reference system: 5 MWp park, 30 MWh/day cable, 50 MWh/day
    /// electrolyzer and fuel cell, 1000 MWh tank, efficiency 0.5.
    pub fn base_case() -> Self {
        SystemConfig {
            w: 5.0,
            m: 1000.0,
            k_c: 30.0,
            k_plus: 50.0,
            k_minus: 50.0,
            c_plus: 5.0,
            alpha: 0.5,
            s: 1000.0,
            periods: 365,
            fuel_cell_mode: FuelCellMode::Literal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn finite(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be finite, got {v}")))
            }
        }
        for (field, v) in [
            ("w", self.w),
            ("m", self.m),
            ("k_c", self.k_c),
            ("k_plus", self.k_plus),
            ("k_minus", self.k_minus),
            ("c_plus", self.c_plus),
            ("alpha", self.alpha),
            ("s", self.s),
        ] {
            finite(field, v)?;
        }
        if self.w <= 0.0 {
            return Err(Error::config("w", "must be positive"));
        }
        for (field, v) in [
            ("m", self.m),
            ("k_c", self.k_c),
            ("k_plus", self.k_plus),
            ("k_minus", self.k_minus),
            ("c_plus", self.c_plus),
        ] {
            if v < 0.0 {
                return Err(Error::config(field, format!("must be non-negative, got {v}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config("alpha", format!("must lie in (0, 1], got {}", self.alpha)));
        }
        if self.s <= 0.0 {
            return Err(Error::config("s", "must be positive"));
        }
        if self.periods == 0 {
            return Err(Error::config("T", "must be at least 1"));
        }
        Ok(())
    }

    /// Penalty dominance: unmet demand must cost more than buying at any
    /// representable price.
    pub fn check_penalty_dominance(&self, max_price: f64) -> Result<()> {
        if self.s > max_price + self.c_plus {
            Ok(())
        } else {
            Err(Error::config(
                "s",
                format!(
                    "penalty {} must exceed the highest buy price {}",
                    self.s,
                    max_price + self.c_plus
                ),
            ))
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SystemConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self::base_case()
    }
}
