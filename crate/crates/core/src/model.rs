//! A fully discretized instance: configuration, grids, price chain and
//! daily net-production pmfs.

use rayon::prelude::*;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::grid::{GridResolution, Grids, YSupport};
use crate::stochastics::{
    discretize_ar1, net_production_pmf, net_production_support, Calibration, NetProductionPmf,
    PriceChain,
};

#[derive(Debug, Clone)]
pub struct Model {
    pub cfg: SystemConfig,
    pub grids: Grids,
    pub chain: PriceChain,
    /// One pmf per day, on `grids.y[day]`.
    pub pmfs: Vec<NetProductionPmf>,
}

impl Model {
    pub fn build(cfg: &SystemConfig, calibration: &Calibration, resolution: GridResolution) -> Result<Self> {
        cfg.validate()?;
        calibration.validate(cfg.periods)?;
        let dj = resolution.dj;
        let supports: Vec<YSupport> = (0..cfg.periods)
            .map(|day| {
                net_production_support(calibration.day_scale(day, cfg.w), &calibration.demand, day, dj)
            })
            .collect();
        let grids = Grids::new(cfg, resolution, supports)?;
        cfg.check_penalty_dominance(resolution.c_max)?;
        let chain = discretize_ar1(&calibration.price, &grids.c);
        let pmfs = (0..cfg.periods)
            .into_par_iter()
            .map(|day| {
                net_production_pmf(
                    day,
                    calibration.beta_for_day(day),
                    calibration.day_scale(day, cfg.w),
                    &calibration.demand,
                    grids.y[day],
                    dj,
                )
            })
            .collect();
        Ok(Model {
            cfg: cfg.clone(),
            grids,
            chain,
            pmfs,
        })
    }

    /// Assembles a model from explicit parts (small hand-built instances).
    pub fn from_parts(
        cfg: SystemConfig,
        grids: Grids,
        chain: PriceChain,
        pmfs: Vec<NetProductionPmf>,
    ) -> Result<Self> {
        cfg.validate()?;
        if chain.grid.len() != grids.nc()
            || chain.grid.iter().zip(&grids.c).any(|(a, b)| (a - b).abs() > 1e-9)
        {
            return Err(Error::InvalidGrid("price chain grid differs from the price grid".into()));
        }
        if pmfs.len() != grids.periods() {
            return Err(Error::InvalidGrid(format!(
                "{} pmfs for {} periods",
                pmfs.len(),
                grids.periods()
            )));
        }
        for (day, pmf) in pmfs.iter().enumerate() {
            if pmf.support != grids.y[day] || pmf.probs.len() != grids.ny(day) {
                return Err(Error::InvalidGrid(format!("pmf of day {day} does not match its grid")));
            }
            let total: f64 = pmf.probs.iter().sum();
            if (total - 1.0).abs() > 1e-10 || pmf.probs.iter().any(|p| *p < 0.0) {
                return Err(Error::InvalidGrid(format!("pmf of day {day} is not a distribution")));
            }
        }
        Ok(Model {
            cfg,
            grids,
            chain,
            pmfs,
        })
    }

    /// The same system with seasonality averaged out: every day gets the
    /// uniform mixture of all daily pmfs on the union support.
    pub fn stationary(&self) -> Model {
        let avg = NetProductionPmf::average(&self.pmfs);
        let periods = self.grids.periods();
        let mut grids = self.grids.clone();
        grids.y = vec![avg.support; periods];
        let pmfs = (0..periods)
            .map(|day| NetProductionPmf { day, ..avg.clone() })
            .collect();
        Model {
            cfg: self.cfg.clone(),
            grids,
            chain: self.chain.clone(),
            pmfs,
        }
    }

    /// Number of states of one day.
    pub fn day_states(&self, day: usize) -> usize {
        self.grids.day_len(day)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_model_is_consistent() {
        let model = Model::build(
            &SystemConfig::base_case(),
            &Calibration::synthetic(),
            GridResolution::base_case(),
        )
        .unwrap();
        assert_eq!(model.pmfs.len(), 365);
        for (day, pmf) in model.pmfs.iter().enumerate() {
            assert_eq!(pmf.support, model.grids.y[day]);
            assert!((pmf.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
        for i in 0..model.chain.len() {
            assert!((model.chain.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
        let rebuilt = Model::from_parts(
            model.cfg.clone(),
            model.grids.clone(),
            model.chain.clone(),
            model.pmfs.clone(),
        );
        assert!(rebuilt.is_ok());
    }

    #[test]
    fn stationary_model_shares_one_pmf() {
        let model = Model::build(
            &SystemConfig::base_case(),
            &Calibration::synthetic(),
            GridResolution::base_case(),
        )
        .unwrap();
        let st = model.stationary();
        let first = &st.pmfs[0];
        assert!(st.pmfs.iter().all(|p| p.probs == first.probs && p.support == first.support));
        let mean_seasonal: f64 = model.pmfs.iter().map(|p| p.mean()).sum::<f64>() / 365.0;
        assert!((first.mean() - mean_seasonal).abs() < 1e-9);
        for day in 0..365 {
            assert!(st.grids.y[day].k_min <= model.grids.y[day].k_min);
            assert!(st.grids.y[day].k_max >= model.grids.y[day].k_max);
        }
    }

    #[test]
    fn penalty_dominance_is_enforced() {
        let mut cfg = SystemConfig::base_case();
        cfg.s = 50.0;
        let err = Model::build(&cfg, &Calibration::synthetic(), GridResolution::base_case()).unwrap_err();
        assert!(err.to_string().contains('s'));
    }
}
