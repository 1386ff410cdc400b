//! Stochastic inputs: AR(1) prices, weekly beta production, two-segment
//! demand, and their discretizations.

mod ar1;
mod beta;
mod calibration;
mod demand;
pub mod io;
mod pmf;
mod sample;

pub use ar1::{
    discretize_ar1, estimate_ar1, fit_ar1, Ar1Fit, Ar1Params, PriceChain, PriceSeasonalityModel,
    SeasonalityVariant,
};
pub use beta::{
    beta_moments, fit_weekly_beta, synthetic_weekly_betas, week_of_date, week_of_day, WeeklyBeta,
    WEEKS,
};
pub use calibration::{fit_calibration, Calibration, CalibrationInputs, PriceFitSummary};
pub use demand::{fit_demand, DemandFit, DemandModel, LinearSegment};
pub use pmf::{
    bin_to_support, demand_fine, difference, net_production_pmf, net_production_support,
    production_fine, FineMass, NetProductionPmf, FINE_FACTOR,
};
pub use sample::{sample_day, stream_rng, DaySample};
