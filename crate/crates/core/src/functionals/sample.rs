//! Seeded smooth random states around the wave.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::state::{Reference, State};
use crate::grid::Grid;
use crate::wave::WaveParams;

/// Smooth random field: a sum of Gaussian bumps with centers in the inner half of the grid.
fn bump_field(rng: &mut ChaCha8Rng, grid: &Grid, amplitude: f64, bumps: usize) -> Vec<f64> {
    let span = grid.xi_max() - grid.xi_min();
    let mid = 0.5 * (grid.xi_max() + grid.xi_min());
    let specs: Vec<(f64, f64, f64)> = (0..bumps)
        .map(|_| {
            let c = mid + rng.gen_range(-0.25..0.25) * span;
            let w = rng.gen_range(0.01..0.08) * span;
            let h = rng.gen_range(-amplitude..amplitude);
            (c, w, h)
        })
        .collect();
    grid.nodes()
        .map(|x| {
            specs
                .iter()
                .map(|&(c, w, h)| h * (-((x - c) / w).powi(2)).exp())
                .sum()
        })
        .collect()
}

/// `n = n~ exp(f)`, `q = q~ + g` with `f, g` random bump sums of size up to `amplitude`.
///
/// Large amplitudes put part of the grid outside every threshold `|n/n~ - 1| <= delta`.
pub fn random_state(params: &WaveParams, grid: Grid, seed: u64, amplitude: f64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = Reference::new(params, grid, 0.0);
    let f = bump_field(&mut rng, &grid, amplitude, 6);
    let g = bump_field(&mut rng, &grid, amplitude, 6);
    let n = r.n.iter().zip(&f).map(|(nt, f)| nt * f.exp()).collect();
    let q = r.q.iter().zip(&g).map(|(qt, g)| qt + g).collect();
    State::from_values(grid, n, q).expect("random states are positive and finite")
}
