//! Seeded sampling of daily net production and prices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};

use crate::grid::Grids;
use crate::stochastics::{DemandModel, PriceChain, WeeklyBeta};

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaySample {
    pub y_index: usize,
    pub y_bar: f64,
    pub c_index: usize,
    pub c: f64,
}

/// Draws production from the week's scaled beta and demand from the
/// zero-truncated normal, snaps their difference to the day's grid, and
/// moves the price one step along the chain from `prev_c`.
#[allow(clippy::too_many_arguments)]
pub fn sample_day<R: Rng + ?Sized>(
    day: usize,
    beta: &WeeklyBeta,
    scale: f64,
    demand: &DemandModel,
    chain: &PriceChain,
    prev_c: usize,
    grids: &Grids,
    rng: &mut R,
) -> DaySample {
    let production = scale * Beta::new(beta.a, beta.b).expect("positive shapes").sample(rng);
    let mean = demand.mean(day);
    let sd = demand.sd();
    let consumption = if sd > 0.0 {
        let normal = Normal::new(mean, sd).expect("positive sd");
        loop {
            let d = normal.sample(rng);
            if d >= 0.0 {
                break d;
            }
        }
    } else {
        mean.max(0.0)
    };
    let y_index = grids.snap_y(day, production - consumption);
    let c_index = chain.next_index(prev_c, rng.random::<f64>());
    DaySample {
        y_index,
        y_bar: grids.y_value(day, y_index),
        c_index,
        c: chain.grid[c_index],
    }
}
