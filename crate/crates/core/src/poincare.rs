//! Nonlinear Poincaré functional on `[0, 1]`
//!
//! ```text
//! R_delta(W) = -(1/delta)(int W^2 + 2 int W)^2 + (1 + delta) int W^2 + (2/3) int W^3
//!              + delta int |W|^3 - (1 - delta) int y(1-y) |W'|^2
//! ```
//!
//! with sampled test functions and a scan for the largest admissible `delta`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::functionals::Reference;
use crate::grid::{trapezoid, GridField};

/// Default number of cells on the `y` grid.
pub const DEFAULT_Y_CELLS: usize = 4096;

/// Threshold below which `R_delta` counts as non-positive.
pub const SIGN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Fourier,
    Polynomial,
    /// Gaussian bump near `y = 1/2`.
    Bump,
    /// `W = c + alpha g` with `int g = 0` and `int W^2 + 2 int W = 0`.
    Adversarial,
    /// Pulled back from a density on the line.
    FromState,
    Custom,
}

impl Family {
    pub const SAMPLED: [Family; 4] = [
        Family::Fourier,
        Family::Polynomial,
        Family::Bump,
        Family::Adversarial,
    ];
}

/// The five `delta`-independent integrals entering `R_delta`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PoincareIntegrals {
    pub l2_sq: f64,
    pub mean: f64,
    pub cube: f64,
    pub abs_cube: f64,
    pub weighted_h1: f64,
}

impl PoincareIntegrals {
    /// Trapezoid integrals of `w` on the uniform grid of `[0, 1]`; the derivative
    /// is a central difference weighted by the exact `y(1-y)`.
    pub fn of(w: &[f64]) -> Result<Self> {
        if w.len() < 3 {
            return domain("a test function needs at least 3 samples");
        }
        if w.iter().any(|v| !v.is_finite()) {
            return domain("test function has non-finite samples");
        }
        let cells = w.len() - 1;
        let dy = 1.0 / cells as f64;
        let sq: Vec<f64> = w.iter().map(|v| v * v).collect();
        let cube: Vec<f64> = w.iter().map(|v| v * v * v).collect();
        let abs_cube: Vec<f64> = cube.iter().map(|v| v.abs()).collect();
        let mut grad = vec![0.0; w.len()];
        for i in 1..cells {
            let y = i as f64 * dy;
            let d = (w[i + 1] - w[i - 1]) / (2.0 * dy);
            grad[i] = y * (1.0 - y) * d * d;
        }
        Ok(Self {
            l2_sq: trapezoid(dy, &sq),
            mean: trapezoid(dy, w),
            cube: trapezoid(dy, &cube),
            abs_cube: trapezoid(dy, &abs_cube),
            weighted_h1: trapezoid(dy, &grad),
        })
    }

    pub fn r_delta(&self, delta: f64) -> f64 {
        let k = self.l2_sq + 2.0 * self.mean;
        -k * k / delta + (1.0 + delta) * self.l2_sq + (2.0 / 3.0) * self.cube + delta * self.abs_cube
            - (1.0 - delta) * self.weighted_h1
    }
}

/// A test function on the `y` grid with its integrals and `R_delta` value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareSample {
    pub family: Family,
    pub seed: u64,
    #[serde(skip)]
    pub w: Vec<f64>,
    pub integrals: PoincareIntegrals,
    pub l2_sq: f64,
    pub weighted_h1: f64,
    pub r_delta: f64,
    pub delta: f64,
    #[serde(rename = "M")]
    pub m: f64,
}

impl PoincareSample {
    pub fn new(family: Family, seed: u64, w: Vec<f64>, m: f64, delta: f64) -> Result<Self> {
        let integrals = PoincareIntegrals::of(&w)?;
        Ok(Self {
            family,
            seed,
            w,
            integrals,
            l2_sq: integrals.l2_sq,
            weighted_h1: integrals.weighted_h1,
            r_delta: integrals.r_delta(delta),
            delta,
            m,
        })
    }

    /// Re-evaluates at another `delta`.
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self.r_delta = self.integrals.r_delta(delta);
        self
    }

    pub fn y_cells(&self) -> usize {
        self.w.len() - 1
    }
}

/// `R_delta(W)` for samples of `W` at `y_i = i / (len - 1)`.
pub fn r_poincare(w: &[f64], delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return domain(format!("delta must lie in (0, 1), got {delta}"));
    }
    Ok(PoincareIntegrals::of(w)?.r_delta(delta))
}

fn y_nodes(cells: usize) -> impl Iterator<Item = f64> {
    (0..=cells).map(move |i| i as f64 / cells as f64)
}

fn legendre(x: f64, degree: usize) -> Vec<f64> {
    let mut p = vec![1.0, x];
    for k in 1..degree {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
        p.push(next);
    }
    p.truncate(degree + 1);
    p
}

fn raw_shape(family: Family, rng: &mut ChaCha8Rng, cells: usize) -> Vec<f64> {
    match family {
        Family::Polynomial => {
            let degree = rng.gen_range(1..=6);
            let c: Vec<f64> = (0..=degree).map(|_| rng.gen_range(-1.0..1.0)).collect();
            y_nodes(cells)
                .map(|y| {
                    legendre(2.0 * y - 1.0, degree)
                        .iter()
                        .zip(&c)
                        .map(|(p, c)| p * c)
                        .sum()
                })
                .collect()
        }
        Family::Bump => {
            let c = 0.5 + rng.gen_range(-0.05..0.05);
            let w = rng.gen_range(0.03..0.08);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            y_nodes(cells)
                .map(|y| sign * (-((y - c) / w).powi(2)).exp())
                .collect()
        }
        _ => {
            let modes = rng.gen_range(1..=8usize);
            let c: Vec<(f64, f64)> = (0..=modes)
                .map(|k| {
                    let s = 1.0 / (1.0 + k as f64);
                    (rng.gen_range(-1.0..1.0) * s, rng.gen_range(-1.0..1.0) * s)
                })
                .collect();
            y_nodes(cells)
                .map(|y| {
                    c.iter()
                        .enumerate()
                        .map(|(k, &(a, b))| {
                            let t = std::f64::consts::PI * k as f64 * y;
                            a * t.cos() + b * t.sin()
                        })
                        .sum()
                })
                .collect()
        }
    }
}

/// Seeded random test function of `family` with `int W^2` in `[M/2, M]`.
///
/// The adversarial family sits on `int W^2 + 2 int W = 0`, which forces
/// `int W^2 < 4`; for budgets with `M/2 >= 3.9` its norm is capped at 3.9.
pub fn sample_w(seed: u64, m: f64, family: Family, cells: usize, delta: f64) -> Result<PoincareSample> {
    if !(m > 0.0 && m.is_finite()) {
        return domain(format!("norm budget M must be positive, got {m}"));
    }
    if cells < 2 {
        return domain("the y grid needs at least 2 cells");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = rng.gen_range(0.5 * m..=m);
    let dy = 1.0 / cells as f64;
    let w = match family {
        Family::Fourier | Family::Polynomial | Family::Bump => {
            let w = raw_shape(family, &mut rng, cells);
            let l2 = trapezoid(dy, &w.iter().map(|v| v * v).collect::<Vec<_>>());
            let s = (target / l2).sqrt();
            w.into_iter().map(|v| v * s).collect()
        }
        Family::Adversarial => {
            // zero-mean cosine series, then W = c + alpha g with c^2 + alpha^2 G + 2c = 0
            let modes = rng.gen_range(1..=4usize);
            let coeffs: Vec<f64> = (1..=modes)
                .map(|k| rng.gen_range(-1.0..1.0) / k as f64)
                .collect();
            let g: Vec<f64> = y_nodes(cells)
                .map(|y| {
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(k, a)| a * (std::f64::consts::PI * (k + 1) as f64 * y).cos())
                        .sum()
                })
                .collect();
            let gm = trapezoid(dy, &g);
            let g: Vec<f64> = g.into_iter().map(|v| v - gm).collect();
            let gg = trapezoid(dy, &g.iter().map(|v| v * v).collect::<Vec<_>>());
            let mass = target.min(3.9);
            let c = -0.5 * mass;
            let alpha = (-c * (c + 2.0) / gg).sqrt();
            g.into_iter().map(|v| c + alpha * v).collect()
        }
        Family::FromState | Family::Custom => {
            return domain("only the sampled families can be drawn at random");
        }
    };
    PoincareSample::new(family, seed, w, m, delta)
}

/// Family used for seed `seed` in a mixed scan.
pub fn mixed_family(seed: u64) -> Family {
    Family::SAMPLED[(seed % 4) as usize]
}

/// Outcome of [`scan_delta_star`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    #[serde(rename = "M")]
    pub m: f64,
    pub delta_grid: Vec<f64>,
    /// Samples with `R_delta <= 1e-10`, per grid value.
    pub pass_counts: Vec<usize>,
    pub n_samples: usize,
    /// Largest grid value passed by every sample, zero when none is.
    pub delta_star_empirical: f64,
    /// Sample with the largest `R_delta` at the first failing grid value
    /// (at the last grid value when every value passes).
    pub worst_sample_seed: u64,
    pub worst_sample_family: Family,
    pub worst_value: f64,
    pub worst_delta: f64,
    pub base_seed: u64,
    pub y_cells: usize,
}

/// Scans `delta_grid` (ascending) over `n_samples` mixed-family samples drawn
/// from seeds `base_seed..base_seed + n_samples`.
pub fn scan_delta_star(
    m: f64,
    n_samples: usize,
    delta_grid: &[f64],
    base_seed: u64,
    y_cells: usize,
) -> Result<ScanResult> {
    if delta_grid.is_empty() || n_samples == 0 {
        return domain("the scan needs a non-empty delta grid and at least one sample");
    }
    if delta_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return domain("delta grid must be strictly ascending");
    }
    if delta_grid.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
        return domain("delta grid values must lie in (0, 1)");
    }
    let samples: Vec<PoincareSample> = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let seed = base_seed + k;
            sample_w(seed, m, mixed_family(seed), y_cells, delta_grid[0]).map(|mut s| {
                s.w = Vec::new();
                s
            })
        })
        .collect::<Result<_>>()?;
    let pass_counts: Vec<usize> = delta_grid
        .iter()
        .map(|&d| {
            samples
                .iter()
                .filter(|s| s.integrals.r_delta(d) <= SIGN_TOLERANCE)
                .count()
        })
        .collect();
    let delta_star = delta_grid
        .iter()
        .zip(&pass_counts)
        .filter(|(_, &c)| c == n_samples)
        .map(|(&d, _)| d)
        .fold(0.0, f64::max);
    let probe = delta_grid
        .iter()
        .zip(&pass_counts)
        .find(|(_, &c)| c < n_samples)
        .map(|(&d, _)| d)
        .unwrap_or(*delta_grid.last().expect("non-empty grid"));
    let worst = samples
        .iter()
        .max_by(|a, b| a.integrals.r_delta(probe).total_cmp(&b.integrals.r_delta(probe)))
        .expect("non-empty sample set");
    Ok(ScanResult {
        m,
        delta_grid: delta_grid.to_vec(),
        pass_counts,
        n_samples,
        delta_star_empirical: delta_star,
        worst_sample_seed: worst.seed,
        worst_sample_family: worst.family,
        worst_value: worst.integrals.r_delta(probe),
        worst_delta: probe,
        base_seed,
        y_cells,
    })
}

/// Geometric grid of `count` values from `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (count - 1) as f64;
    (0..count)
        .map(|k| if k + 1 == count { hi } else { lo * (r * k as f64).exp() })
        .collect()
}

/// `W = (lambda n_- / eps)(n / n~ - 1)` carried to a uniform `y` grid through `xi(y)`,
/// linearly interpolated in `xi` and held constant beyond the domain ends.
pub fn w_from_state(r: &Reference, n: &GridField, y_cells: usize, delta: f64) -> Result<PoincareSample> {
    if n.grid() != r.grid() {
        return domain("density and reference live on different grids");
    }
    if n.values().iter().any(|&v| v <= 0.0) {
        return domain("density must be positive");
    }
    if y_cells < 2 {
        return domain("the y grid needs at least 2 cells");
    }
    let p = r.params();
    let scale = p.lambda() * p.n_minus() / p.eps();
    let w_xi: Vec<f64> = n
        .values()
        .iter()
        .zip(&r.n)
        .map(|(n, nt)| (n - nt) / nt)
        .collect();
    let grid = r.grid();
    let last = grid.num_nodes() - 1;
    let at = |xi: f64| -> f64 {
        let s = (xi - grid.xi_min()) / grid.dx();
        if s <= 0.0 {
            return w_xi[0];
        }
        if s >= last as f64 {
            return w_xi[last];
        }
        let i = s.floor() as usize;
        let t = s - i as f64;
        w_xi[i] + t * (w_xi[i + 1] - w_xi[i])
    };
    let mut w = Vec::with_capacity(y_cells + 1);
    for (j, y) in y_nodes(y_cells).enumerate() {
        let v = if j == 0 {
            w_xi[0]
        } else if j == y_cells {
            w_xi[last]
        } else {
            // the reference is translated by its shift
            at(p.xi_of_y(y)? + r.shift())
        };
        w.push(scale * v);
    }
    PoincareSample::new(Family::FromState, 0, w, f64::INFINITY, delta)
}
