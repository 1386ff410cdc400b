//! Discretized supports for inventory, price and daily net production.

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};

const LATTICE_TOL: f64 = 1e-9;

/// Step sizes of the three discretized state components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridResolution {
    /// Inventory step (MWh).
    pub dx: f64,
    /// Price step (money/MWh).
    pub dc: f64,
    /// Highest price level on the grid.
    pub c_max: f64,
    /// Net-production step (MWh).
    pub dj: f64,
}

impl GridResolution {
    pub fn base_case() -> Self {
        GridResolution {
            dx: 10.0,
            dc: 3.0,
            c_max: 90.0,
            dj: 5.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("dx", self.dx), ("dc", self.dc), ("dj", self.dj)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidGrid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.c_max.is_finite() && self.c_max >= 0.0) {
            return Err(Error::InvalidGrid(format!("c_max must be non-negative, got {}", self.c_max)));
        }
        // With a finer action step, drawing one step from a full grid level
        // would snap back to the same level and create energy for free.
        let du = self.action_step();
        if 2.0 * du < self.dx * (1.0 - LATTICE_TOL) {
            return Err(Error::InvalidGrid(format!(
                "action step {du} (gcd of dx = {} and dj = {}) is below dx / 2",
                self.dx, self.dj
            )));
        }
        Ok(())
    }

    /// Step of the action lattice: the largest step dividing both `dx` and
    /// `dj`, so that every net-production level is an exact action.
    pub fn action_step(&self) -> f64 {
        const UNITS: f64 = 1e6;
        let to_units = |v: f64| -> Option<u64> {
            let n = (v * UNITS).round();
            ((n / UNITS - v).abs() <= 1e-12 * v.max(1.0) && n >= 1.0).then_some(n as u64)
        };
        match (to_units(self.dx), to_units(self.dj)) {
            (Some(a), Some(b)) => gcd(a, b) as f64 / UNITS,
            _ => self.dx,
        }
    }
}

impl Default for GridResolution {
    fn default() -> Self {
        Self::base_case()
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Multiple of `step` count of `value`, if `value` lies on the lattice.
fn lattice_count(value: f64, step: f64) -> Option<i64> {
    let r = value / step;
    let n = r.round();
    ((r - n).abs() <= LATTICE_TOL * r.abs().max(1.0)).then_some(n as i64)
}

/// Net-production support of one day: `{k_min * dj, ..., k_max * dj}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YSupport {
    pub k_min: i64,
    pub k_max: i64,
}

impl YSupport {
    /// Smallest lattice support covering `[lo, hi]`.
    pub fn covering(lo: f64, hi: f64, dj: f64) -> Self {
        let k_min = (lo / dj + LATTICE_TOL).floor() as i64;
        let k_max = ((hi / dj - LATTICE_TOL).ceil() as i64).max(k_min);
        YSupport { k_min, k_max }
    }

    pub fn len(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn union(&self, other: &YSupport) -> YSupport {
        YSupport {
            k_min: self.k_min.min(other.k_min),
            k_max: self.k_max.max(other.k_max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grids {
    pub resolution: GridResolution,
    /// Action lattice step (MWh).
    pub du: f64,
    pub x: Vec<f64>,
    pub c: Vec<f64>,
    /// One support per day of the year.
    pub y: Vec<YSupport>,
}

impl Grids {
    pub fn new(cfg: &SystemConfig, resolution: GridResolution, y: Vec<YSupport>) -> Result<Self> {
        resolution.validate()?;
        let nx = lattice_count(cfg.m, resolution.dx).ok_or_else(|| {
            Error::InvalidGrid(format!(
                "storage capacity {} is not a multiple of dx = {}",
                cfg.m, resolution.dx
            ))
        })?;
        let nc = lattice_count(resolution.c_max, resolution.dc).ok_or_else(|| {
            Error::InvalidGrid(format!(
                "c_max {} is not a multiple of dc = {}",
                resolution.c_max, resolution.dc
            ))
        })?;
        if y.len() != cfg.periods {
            return Err(Error::InvalidGrid(format!(
                "expected {} net-production supports, got {}",
                cfg.periods,
                y.len()
            )));
        }
        if let Some(bad) = y.iter().find(|s| s.k_max < s.k_min) {
            return Err(Error::InvalidGrid(format!("empty net-production support {bad:?}")));
        }
        Ok(Grids {
            du: resolution.action_step(),
            x: (0..=nx).map(|i| i as f64 * resolution.dx).collect(),
            c: (0..=nc).map(|i| i as f64 * resolution.dc).collect(),
            y,
            resolution,
        })
    }

    pub fn periods(&self) -> usize {
        self.y.len()
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn nc(&self) -> usize {
        self.c.len()
    }

    pub fn ny(&self, day: usize) -> usize {
        self.y[day].len()
    }

    pub fn y_value(&self, day: usize, yi: usize) -> f64 {
        (self.y[day].k_min + yi as i64) as f64 * self.resolution.dj
    }

    pub fn y_values(&self, day: usize) -> Vec<f64> {
        (0..self.ny(day)).map(|i| self.y_value(day, i)).collect()
    }

    /// Number of value cells of one day: `nx * ny * nc`.
    pub fn day_len(&self, day: usize) -> usize {
        self.nx() * self.ny(day) * self.nc()
    }

    /// Row-major `(x, y, c)` offset within a day table.
    #[inline]
    pub fn cell(&self, day: usize, xi: usize, yi: usize, ci: usize) -> usize {
        (xi * self.ny(day) + yi) * self.nc() + ci
    }

    pub fn x_index(&self, x: f64) -> Option<usize> {
        lattice_count(x, self.resolution.dx)
            .filter(|&n| n >= 0 && (n as usize) < self.nx())
            .map(|n| n as usize)
    }

    pub fn c_index(&self, c: f64) -> Option<usize> {
        lattice_count(c, self.resolution.dc)
            .filter(|&n| n >= 0 && (n as usize) < self.nc())
            .map(|n| n as usize)
    }

    pub fn y_index(&self, day: usize, y: f64) -> Option<usize> {
        let support = self.y.get(day)?;
        lattice_count(y, self.resolution.dj)
            .filter(|&k| k >= support.k_min && k <= support.k_max)
            .map(|k| (k - support.k_min) as usize)
    }

    /// Nearest inventory level, ties toward the lower level, clamped to `[0, m]`.
    #[inline]
    pub fn snap_x(&self, x: f64) -> usize {
        let r = x / self.resolution.dx;
        let i = (r - 0.5 - LATTICE_TOL).ceil();
        i.clamp(0.0, (self.nx() - 1) as f64) as usize
    }

    /// Nearest net-production level of `day`, clamped to the support.
    pub fn snap_y(&self, day: usize, y: f64) -> usize {
        let support = self.y[day];
        let k = (y / self.resolution.dj).round() as i64;
        (k.clamp(support.k_min, support.k_max) - support.k_min) as usize
    }

    pub fn snap_c(&self, c: f64) -> usize {
        let i = (c / self.resolution.dc).round();
        i.clamp(0.0, (self.nc() - 1) as f64) as usize
    }
}
