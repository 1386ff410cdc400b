//! Deterministic one-period mechanics: action bounds, the action set, the
//! inventory transition and the period reward.
//!
//! Actions are signed grid exchanges `u` (MWh): positive sells, negative
//! buys. The energy flowing toward storage is `f = y_bar - u`; a positive
//! flow charges the electrolyzer (losses applied on charge), a negative flow
//! is drawn from storage and whatever storage cannot cover is unmet demand.

use serde::{Deserialize, Serialize};

use crate::config::{FuelCellMode, SystemConfig};
use crate::grid::Grids;

const STEP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// Zero-based day of the year.
    pub day: usize,
    pub x: f64,
    pub y_bar: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TransitionOutcome {
    pub x_next: f64,
    pub unmet: f64,
    pub spilled: f64,
    pub charged: f64,
    pub discharged: f64,
}

/// Largest amount that can be bought: grid cable, storage headroom after
/// efficiency losses, and electrolyzer rate.
pub fn buy_bound(x: f64, y_bar: f64, cfg: &SystemConfig) -> f64 {
    let headroom = (cfg.m - x - cfg.alpha * y_bar) / cfg.alpha;
    cfg.k_c.min(headroom).min(cfg.k_plus - y_bar).max(0.0)
}

/// Largest amount that can be sold: grid cable, inventory plus overage, and
/// the fuel-cell limit interpreted per [`FuelCellMode`].
pub fn sell_bound(x: f64, y_bar: f64, cfg: &SystemConfig) -> f64 {
    let fuel_cell = match cfg.fuel_cell_mode {
        FuelCellMode::Literal => cfg.k_minus,
        FuelCellMode::Discharge => y_bar.max(0.0) + cfg.k_minus,
    };
    cfg.k_c.min(x + y_bar).min(fuel_cell).max(0.0)
}

/// Inclusive range of action-lattice multiples `[lo, hi]`; `lo <= 0 <= hi`.
pub fn action_step_range(x: f64, y_bar: f64, cfg: &SystemConfig, du: f64) -> (i64, i64) {
    let lo = -((buy_bound(x, y_bar, cfg) / du + STEP_TOL).floor() as i64);
    let hi = (sell_bound(x, y_bar, cfg) / du + STEP_TOL).floor() as i64;
    (lo, hi)
}

/// Every lattice action between the buy and sell bounds, ascending.
pub fn feasible_actions(x: f64, y_bar: f64, cfg: &SystemConfig, grids: &Grids) -> Vec<f64> {
    let (lo, hi) = action_step_range(x, y_bar, cfg, grids.du);
    (lo..=hi).map(|k| k as f64 * grids.du).collect()
}

/// Flow bookkeeping before snapping; `x_next` is the exact post-flow level.
#[inline]
pub fn flow_outcome(x: f64, y_bar: f64, u: f64, cfg: &SystemConfig) -> TransitionOutcome {
    let f = y_bar - u;
    if f >= 0.0 {
        let headroom = ((cfg.m - x) / cfg.alpha).max(0.0);
        let charged = f.min(cfg.k_plus).min(headroom);
        TransitionOutcome {
            x_next: (x + cfg.alpha * charged).min(cfg.m),
            unmet: 0.0,
            spilled: f - charged,
            charged,
            discharged: 0.0,
        }
    } else {
        let need = -f;
        let discharged = need.min(x).min(cfg.k_minus).max(0.0);
        TransitionOutcome {
            x_next: x - discharged,
            unmet: need - discharged,
            spilled: 0.0,
            charged: 0.0,
            discharged,
        }
    }
}

/// Applies `u` and snaps the resulting inventory to the grid. Returns the
/// outcome together with the index of `x_next`.
#[inline]
pub fn transition(
    x: f64,
    y_bar: f64,
    u: f64,
    cfg: &SystemConfig,
    grids: &Grids,
) -> (TransitionOutcome, usize) {
    let mut out = flow_outcome(x, y_bar, u, cfg);
    let xi = grids.snap_x(out.x_next);
    out.x_next = grids.x[xi];
    (out, xi)
}

pub fn apply_action(x: f64, y_bar: f64, u: f64, cfg: &SystemConfig, grids: &Grids) -> TransitionOutcome {
    transition(x, y_bar, u, cfg, grids).0
}

/// Grid revenue of the period minus the unmet-demand penalty. Purchases pay
/// the markup per MWh.
#[inline]
pub fn reward(u: f64, c: f64, unmet: f64, cfg: &SystemConfig) -> f64 {
    let trade = if u >= 0.0 { u * c } else { u * (c + cfg.c_plus) };
    trade - cfg.s * unmet
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridResolution, YSupport};
    use proptest::prelude::*;

    fn cfg() -> SystemConfig {
        SystemConfig::base_case()
    }

    fn grids_with(cfg: &SystemConfig, dx: f64, dj: f64) -> Grids {
        let res = GridResolution {
            dx,
            dj,
            ..GridResolution::base_case()
        };
        let y = vec![YSupport::covering(-40.0, 60.0, dj); cfg.periods];
        Grids::new(cfg, res, y).unwrap()
    }

    #[test]
    fn buy_bound_examples() {
        let c = cfg();
        assert_eq!(buy_bound(0.0, 35.0, &c), 15.0);
        assert_eq!(buy_bound(1000.0, 0.0, &c), 0.0);
        assert_eq!(buy_bound(500.0, -15.0, &c), 30.0);
    }

    #[test]
    fn sell_bound_examples() {
        let c = cfg();
        assert_eq!(sell_bound(0.0, 35.0, &c), 30.0);
        assert_eq!(sell_bound(0.0, -15.0, &c), 0.0);
        assert_eq!(sell_bound(100.0, -15.0, &c), 30.0);
    }

    #[test]
    fn fuel_cell_modes() {
        let mut c = cfg();
        c.k_c = 80.0;
        c.k_minus = 10.0;
        assert_eq!(sell_bound(100.0, 40.0, &c), 10.0);
        c.fuel_cell_mode = FuelCellMode::Discharge;
        assert_eq!(sell_bound(100.0, 40.0, &c), 50.0);
        // base case: both modes coincide
        let mut b = cfg();
        let lit = sell_bound(300.0, 20.0, &b);
        b.fuel_cell_mode = FuelCellMode::Discharge;
        assert_eq!(lit, sell_bound(300.0, 20.0, &b));
    }

    #[test]
    fn feasible_action_enumeration() {
        let c = cfg();
        let g = grids_with(&c, 5.0, 5.0);
        // B = 15, S = 30
        let acts = feasible_actions(0.0, 35.0, &c, &g);
        assert_eq!(acts, vec![-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
        assert_eq!(acts.iter().cloned().fold(f64::MIN, f64::max), c.k_c);

        // fully constrained: full tank, nothing to sell, no cable
        let mut tight = cfg();
        tight.k_c = 0.0;
        assert_eq!(feasible_actions(1000.0, 0.0, &tight, &g), vec![0.0]);
    }

    #[test]
    fn bounds_round_inward() {
        let c = cfg();
        let g = grids_with(&c, 10.0, 10.0);
        assert_eq!(g.du, 10.0);
        // B = 15 -> -10, S = 30
        let acts = feasible_actions(0.0, 35.0, &c, &g);
        assert_eq!(acts.first(), Some(&-10.0));
        assert_eq!(acts.last(), Some(&30.0));
    }

    #[test]
    fn transition_examples() {
        let c = cfg();
        let g = grids_with(&c, 5.0, 5.0);
        let o = apply_action(100.0, 20.0, 0.0, &c, &g);
        assert_eq!((o.x_next, o.charged, o.unmet), (110.0, 20.0, 0.0));

        let o = apply_action(0.0, -15.0, -10.0, &c, &g);
        assert_eq!((o.discharged, o.unmet, o.x_next), (0.0, 5.0, 0.0));

        let o = apply_action(50.0, -15.0, 0.0, &c, &g);
        assert_eq!((o.discharged, o.x_next, o.unmet), (15.0, 35.0, 0.0));
    }

    #[test]
    fn excess_charge_is_spilled() {
        let mut c = cfg();
        c.k_plus = 2.0;
        let g = grids_with(&c, 10.0, 5.0);
        let o = apply_action(0.0, 35.0, 0.0, &c, &g);
        assert_eq!(o.charged, 2.0);
        assert_eq!(o.spilled, 33.0);
        // 1 MWh stored snaps back to zero on a 10 MWh grid
        assert_eq!(o.x_next, 0.0);

        let o = apply_action(995.0, 20.0, 0.0, &c, &g);
        assert_eq!(o.charged, 2.0);
        let o = apply_action(1000.0, 20.0, 0.0, &c, &g);
        assert_eq!((o.charged, o.spilled, o.x_next), (0.0, 20.0, 1000.0));
    }

    #[test]
    fn reward_examples() {
        let c = cfg();
        assert_eq!(reward(10.0, 20.0, 0.0, &c), 200.0);
        assert_eq!(reward(-10.0, 20.0, 0.0, &c), -250.0);
        let mut c2 = cfg();
        c2.s = 1000.0;
        assert_eq!(reward(0.0, 40.0, 3.0, &c2), -3000.0);
    }

    fn arb_state() -> impl Strategy<Value = (f64, f64, f64, f64)> {
        // x on the 10 grid, y on the 5 grid, alpha, k_c
        (0i64..=100, -8i64..=12, prop::sample::select(vec![0.25, 0.5, 0.75, 1.0]), 0i64..=16)
            .prop_map(|(xi, yk, a, kc)| (xi as f64 * 10.0, yk as f64 * 5.0, a, kc as f64 * 5.0))
    }

    proptest! {
        #[test]
        fn feasible_actions_respect_bounds((x, y, a, kc) in arb_state()) {
            let mut c = cfg();
            c.alpha = a;
            c.k_c = kc;
            let g = grids_with(&c, 10.0, 5.0);
            let acts = feasible_actions(x, y, &c, &g);
            prop_assert!(acts.contains(&0.0));
            for &u in &acts {
                prop_assert!(u.abs() <= c.k_c + 1e-9);
                if u > 0.0 {
                    prop_assert!(u <= x + y + g.resolution.dx);
                }
                if u < 0.0 {
                    prop_assert!(-u <= (c.m - x - a * y) / a + g.resolution.dx);
                }
            }
        }

        #[test]
        fn transition_conserves_energy((x, y, a, kc) in arb_state()) {
            let mut c = cfg();
            c.alpha = a;
            c.k_c = kc;
            let g = grids_with(&c, 10.0, 5.0);
            for u in feasible_actions(x, y, &c, &g) {
                let exact = flow_outcome(x, y, u, &c);
                let f = y - u;
                let balance = exact.charged + exact.spilled - exact.discharged - exact.unmet;
                prop_assert!((f - balance).abs() < 1e-9);
                prop_assert!(exact.charged * exact.discharged == 0.0);
                prop_assert!(exact.unmet * exact.spilled == 0.0);
                prop_assert!(exact.charged <= c.k_plus + 1e-12);
                prop_assert!(exact.discharged <= x.min(c.k_minus) + 1e-12);

                let o = apply_action(x, y, u, &c, &g);
                prop_assert!(g.x_index(o.x_next).is_some());
                prop_assert!(o.x_next >= 0.0 && o.x_next <= c.m);
                prop_assert!((o.x_next - exact.x_next).abs() <= g.resolution.dx / 2.0 + 1e-9);
            }
        }

        #[test]
        fn reward_is_piecewise_linear(u in -60.0f64..60.0, c_price in 0.0f64..90.0, h in 0.01f64..5.0) {
            let c = cfg();
            let slope = (reward(u + h, c_price, 0.0, &c) - reward(u, c_price, 0.0, &c)) / h;
            if u >= 0.0 {
                prop_assert!((slope - c_price).abs() < 1e-6);
            } else if u + h <= 0.0 {
                prop_assert!((slope - (c_price + c.c_plus)).abs() < 1e-6);
            }
        }

        #[test]
        fn unit_efficiency_round_trip(xi in 0i64..=90, q in 1i64..=5) {
            let mut c = cfg();
            c.alpha = 1.0;
            c.k_c = 80.0;
            let g = grids_with(&c, 10.0, 5.0);
            let x = xi as f64 * 10.0;
            let amount = q as f64 * 10.0;
            // store `amount` from a purchase, then cover an equal shortage
            let up = apply_action(x, 0.0, -amount, &c, &g);
            let down = apply_action(up.x_next, -amount, 0.0, &c, &g);
            prop_assert_eq!(down.x_next, x);
            prop_assert_eq!(down.unmet, 0.0);
        }
    }
}
