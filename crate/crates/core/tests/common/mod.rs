#![allow(dead_code)]

use std::sync::OnceLock;

use h2_storage::solver::{solve_periodic, SolveOptions, Solution};
use h2_storage::stochastics::{Calibration, NetProductionPmf, PriceChain};
use h2_storage::{GridResolution, Grids, Model, SystemConfig, YSupport};

/// A hand-built model: `days[d]` lists `(k, probability)` pairs on the
/// `dj` lattice of day `d`; the price chain is given row-major.
pub fn tiny_model(cfg: SystemConfig, res: GridResolution, days: &[Vec<(i64, f64)>], p: Vec<f64>) -> Model {
    assert_eq!(days.len(), cfg.periods);
    let supports: Vec<YSupport> = days
        .iter()
        .map(|d| YSupport {
            k_min: d.iter().map(|e| e.0).min().unwrap(),
            k_max: d.iter().map(|e| e.0).max().unwrap(),
        })
        .collect();
    let grids = Grids::new(&cfg, res, supports.clone()).unwrap();
    let chain = PriceChain::new(grids.c.clone(), p).unwrap();
    let pmfs = days
        .iter()
        .zip(&supports)
        .enumerate()
        .map(|(day, (d, s))| {
            let mut probs = vec![0.0; s.len()];
            for &(k, q) in d {
                probs[(k - s.k_min) as usize] += q;
            }
            NetProductionPmf {
                day,
                support: *s,
                dj: res.dj,
                probs,
            }
        })
        .collect();
    Model::from_parts(cfg, grids, chain, pmfs).unwrap()
}

pub fn small_config(periods: usize) -> SystemConfig {
    SystemConfig {
        w: 1.0,
        m: 20.0,
        k_c: 10.0,
        k_plus: 10.0,
        k_minus: 10.0,
        c_plus: 5.0,
        alpha: 1.0,
        s: 1000.0,
        periods,
        ..SystemConfig::base_case()
    }
}

pub fn small_resolution() -> GridResolution {
    GridResolution {
        dx: 10.0,
        dc: 40.0,
        c_max: 40.0,
        dj: 10.0,
    }
}

pub fn base_model() -> &'static Model {
    static MODEL: OnceLock<Model> = OnceLock::new();
    MODEL.get_or_init(|| {
        Model::build(
            &SystemConfig::base_case(),
            &Calibration::synthetic(),
            GridResolution::base_case(),
        )
        .unwrap()
    })
}

pub fn base_solution() -> &'static Solution {
    static SOLUTION: OnceLock<Solution> = OnceLock::new();
    SOLUTION.get_or_init(|| solve_periodic(base_model(), &SolveOptions::default()).unwrap())
}
