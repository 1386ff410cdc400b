//! Daily net production `Y_t - D_t` as a probability mass function on the
//! day's net-production grid.
//!
//! Production and demand are first discretized on a fine lattice with step
//! `dj / FINE_FACTOR`, convolved exactly, then binned to the nearest grid
//! level (mass exactly halfway is split evenly; tails go to the end points).

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF, Normal};

use crate::grid::YSupport;
use crate::stochastics::{DemandModel, WeeklyBeta};

pub const FINE_FACTOR: i64 = 10;
/// Demand support half-width in standard deviations.
const DEMAND_SPAN: f64 = 4.0;

/// Masses on `{(offset + i) * h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FineMass {
    pub offset: i64,
    pub probs: Vec<f64>,
}

impl FineMass {
    pub fn point(k: i64) -> Self {
        FineMass {
            offset: k,
            probs: vec![1.0],
        }
    }

    pub fn mean(&self, h: f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| p * (self.offset + i as i64) as f64 * h)
            .sum()
    }
}

/// `scale * Beta(a, b)` binned on `{0, h, 2h, ...}`.
pub fn production_fine(beta: &WeeklyBeta, scale: f64, h: f64) -> FineMass {
    if scale <= 0.0 {
        return FineMass::point(0);
    }
    let dist = Beta::new(beta.a, beta.b).expect("positive beta shapes");
    let top = (scale / h - 1e-9).ceil().max(0.0) as i64;
    let mut probs = Vec::with_capacity(top as usize + 1);
    let mut lower = 0.0;
    for k in 0..=top {
        let edge = ((k as f64 + 0.5) * h).min(scale);
        let upper = if k == top { 1.0 } else { dist.cdf(edge / scale) };
        probs.push((upper - lower).max(0.0));
        lower = upper;
    }
    FineMass { offset: 0, probs }
}

/// Fine-lattice index range `[lo, hi]` of the demand support of a day.
fn demand_range(mean: f64, sd: f64, h: f64) -> (i64, i64) {
    let lo = ((mean - DEMAND_SPAN * sd).max(0.0) / h).floor() as i64;
    let hi = ((mean + DEMAND_SPAN * sd) / h).ceil() as i64;
    (lo, hi.max(lo))
}

/// `N(mean, sd^2)` truncated at zero, binned on the fine lattice; the end
/// bins absorb the tails.
pub fn demand_fine(mean: f64, sd: f64, h: f64) -> FineMass {
    if sd <= 0.0 {
        return FineMass::point((mean.max(0.0) / h).round() as i64);
    }
    let normal = Normal::new(mean, sd).expect("positive sd");
    let (lo, hi) = demand_range(mean, sd, h);
    let below_zero = normal.cdf(0.0);
    let mut probs = Vec::with_capacity((hi - lo + 1) as usize);
    let mut lower = below_zero;
    for j in lo..=hi {
        let upper = if j == hi {
            1.0
        } else {
            normal.cdf((j as f64 + 0.5) * h)
        };
        probs.push((upper - lower).max(0.0));
        lower = upper;
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    FineMass { offset: lo, probs }
}

/// Law of `Y - D` for independent `Y` and `D`.
pub fn difference(y: &FineMass, d: &FineMass) -> FineMass {
    let d_max = d.offset + d.probs.len() as i64 - 1;
    let offset = y.offset - d_max;
    let mut probs = vec![0.0; y.probs.len() + d.probs.len() - 1];
    for (i, py) in y.probs.iter().enumerate() {
        if *py == 0.0 {
            continue;
        }
        for (j, pd) in d.probs.iter().enumerate() {
            // value index: (y.offset + i) - (d.offset + j) - offset
            let k = i + d.probs.len() - 1 - j;
            probs[k] += py * pd;
        }
    }
    FineMass { offset, probs }
}

/// Bins a fine mass (step `dj / FINE_FACTOR`) onto a grid support.
pub fn bin_to_support(fine: &FineMass, support: YSupport) -> Vec<f64> {
    let mut out = vec![0.0; support.len()];
    let mut put = |k: i64, p: f64| {
        let idx = (k.clamp(support.k_min, support.k_max) - support.k_min) as usize;
        out[idx] += p;
    };
    for (i, &p) in fine.probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let k = fine.offset + i as i64;
        let q = k.div_euclid(FINE_FACTOR);
        let r = k.rem_euclid(FINE_FACTOR);
        match (2 * r).cmp(&FINE_FACTOR) {
            std::cmp::Ordering::Less => put(q, p),
            std::cmp::Ordering::Greater => put(q + 1, p),
            std::cmp::Ordering::Equal => {
                put(q, p / 2.0);
                put(q + 1, p / 2.0);
            }
        }
    }
    out
}

/// Grid support of a day: from minus the largest demand level to the
/// week's scale minus the smallest demand level.
pub fn net_production_support(scale: f64, demand: &DemandModel, day: usize, dj: f64) -> YSupport {
    let h = dj / FINE_FACTOR as f64;
    let (lo, hi) = if demand.sd() > 0.0 {
        demand_range(demand.mean(day), demand.sd(), h)
    } else {
        let k = (demand.mean(day).max(0.0) / h).round() as i64;
        (k, k)
    };
    YSupport::covering(-(hi as f64) * h, scale - lo as f64 * h, dj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetProductionPmf {
    pub day: usize,
    pub support: YSupport,
    pub dj: f64,
    pub probs: Vec<f64>,
}

impl NetProductionPmf {
    pub fn value(&self, i: usize) -> f64 {
        (self.support.k_min + i as i64) as f64 * self.dj
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(i, p)| p * self.value(i)).sum()
    }

    /// Smallest support value whose cumulative mass reaches `q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if acc >= q - 1e-12 {
                return self.value(i);
            }
        }
        self.value(self.probs.len() - 1)
    }

    /// Support index for a uniform draw `u` in `[0, 1)`.
    pub fn sample_index(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    /// Uniform mixture of daily pmfs on the union of their supports.
    pub fn average(pmfs: &[NetProductionPmf]) -> NetProductionPmf {
        let support = pmfs
            .iter()
            .map(|p| p.support)
            .reduce(|a, b| a.union(&b))
            .expect("at least one pmf");
        let mut probs = vec![0.0; support.len()];
        let w = 1.0 / pmfs.len() as f64;
        for pmf in pmfs {
            let shift = (pmf.support.k_min - support.k_min) as usize;
            for (i, p) in pmf.probs.iter().enumerate() {
                probs[shift + i] += w * p;
            }
        }
        NetProductionPmf {
            day: 0,
            support,
            dj: pmfs[0].dj,
            probs,
        }
    }
}

pub fn net_production_pmf(
    day: usize,
    beta: &WeeklyBeta,
    scale: f64,
    demand: &DemandModel,
    support: YSupport,
    dj: f64,
) -> NetProductionPmf {
    let h = dj / FINE_FACTOR as f64;
    let y = production_fine(beta, scale, h);
    let d = demand_fine(demand.mean(day), demand.sd(), h);
    let probs = bin_to_support(&difference(&y, &d), support);
    NetProductionPmf {
        day,
        support,
        dj,
        probs,
    }
}
