use rayon::prelude::*;

use crate::dynamics::{action_step_range, reward, transition};
use crate::model::Model;

/// A candidate replaces the incumbent only if it is better by more than this
/// relative margin, so near-ties keep the earlier action in preference order.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Action steps in `[lo, hi]` ordered by preference: no trade first, then
/// alternating sells and buys of growing size.
pub fn preference_order(lo: i64, hi: i64) -> impl Iterator<Item = i64> {
    let reach = hi.max(-lo).max(0);
    std::iter::once(0)
        .filter(move |_| lo <= 0 && hi >= 0)
        .chain((1..=reach).flat_map(move |d| {
            let sell = (d <= hi).then_some(d);
            let buy = (-d >= lo).then_some(-d);
            sell.into_iter().chain(buy)
        }))
}

/// Computes the values and optimal action steps of `day` given the value
/// table `v_next` of the following day (the first day's table for the last
/// day of the year).
///
/// The expectation over next-day net production and price is factored: the
/// continuation only depends on the post-decision inventory and today's
/// price, so it is tabulated once per day as `W[x'][c]`.
pub fn bellman_backup(model: &Model, day: usize, v_next: &[f64], v_out: &mut [f64], policy_out: &mut [i16]) {
    let grids = &model.grids;
    let cfg = &model.cfg;
    let periods = grids.periods();
    let next_day = (day + 1) % periods;
    let (nx, nc) = (grids.nx(), grids.nc());
    let ny = grids.ny(day);
    let ny_next = grids.ny(next_day);
    assert_eq!(v_next.len(), nx * ny_next * nc);
    assert_eq!(v_out.len(), nx * ny * nc);
    assert_eq!(policy_out.len(), v_out.len());

    let probs = &model.pmfs[next_day].probs;
    let mut expected_y = vec![0.0; nx * nc];
    for xi in 0..nx {
        let acc = &mut expected_y[xi * nc..(xi + 1) * nc];
        for (yi, &p) in probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let row = &v_next[(xi * ny_next + yi) * nc..][..nc];
            for (a, v) in acc.iter_mut().zip(row) {
                *a += p * v;
            }
        }
    }
    let mut cont = vec![0.0; nx * nc];
    for xi in 0..nx {
        let ey = &expected_y[xi * nc..(xi + 1) * nc];
        for ci in 0..nc {
            cont[xi * nc + ci] = model.chain.row(ci).iter().zip(ey).map(|(p, v)| p * v).sum();
        }
    }

    let du = grids.du;
    let prices = &grids.c;
    v_out
        .par_chunks_mut(ny * nc)
        .zip(policy_out.par_chunks_mut(ny * nc))
        .enumerate()
        .for_each(|(xi, (v_row, p_row))| {
            let x = grids.x[xi];
            let mut best_v = vec![f64::NEG_INFINITY; nc];
            let mut best_k = vec![0i16; nc];
            for yi in 0..ny {
                let y = grids.y_value(day, yi);
                let (lo, hi) = action_step_range(x, y, cfg, du);
                best_v.fill(f64::NEG_INFINITY);
                for k in preference_order(lo, hi) {
                    let u = k as f64 * du;
                    let (out, xn) = transition(x, y, u, cfg, grids);
                    let w = &cont[xn * nc..(xn + 1) * nc];
                    for ci in 0..nc {
                        let val = reward(u, prices[ci], out.unmet, cfg) + w[ci];
                        let incumbent = best_v[ci];
                        if val > incumbent + TIE_TOLERANCE * (1.0 + incumbent.abs()) || incumbent == f64::NEG_INFINITY {
                            best_v[ci] = val;
                            best_k[ci] = k as i16;
                        }
                    }
                }
                v_row[yi * nc..(yi + 1) * nc].copy_from_slice(&best_v);
                p_row[yi * nc..(yi + 1) * nc].copy_from_slice(&best_k);
            }
        });
}
