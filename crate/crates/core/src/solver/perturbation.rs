//! Initial data `U0 = U~ + perturbation`.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, LabError, Result};
use crate::functionals::{Reference, State};
use crate::grid::{csv_err, Grid};
use crate::wave::WaveParams;

/// Size of the admissible perturbation outside the inner 80% of the domain.
pub const TAIL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// No perturbation: the sampled wave itself.
    None,
    GaussianBump,
    /// Random Fourier modes under a Gaussian envelope.
    RandomFourier,
    /// The wave translated by `center`.
    ShiftedWave,
    /// `xi,dn,dq` columns read from `path`, linearly interpolated, zero outside.
    CustomFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub amplitude_n: f64,
    pub amplitude_q: f64,
    pub width: f64,
    pub center: f64,
    pub seed: u64,
    /// Number of modes for `random_fourier`.
    pub modes: usize,
    pub path: Option<PathBuf>,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            kind: PerturbationKind::GaussianBump,
            amplitude_n: 0.5,
            amplitude_q: 0.5,
            width: 10.0,
            center: 0.0,
            seed: 0,
            modes: 6,
            path: None,
        }
    }
}

impl PerturbationSpec {
    pub fn none() -> Self {
        Self {
            kind: PerturbationKind::None,
            amplitude_n: 0.0,
            amplitude_q: 0.0,
            ..Self::default()
        }
    }

    pub fn gaussian(amplitude_n: f64, amplitude_q: f64, width: f64, center: f64) -> Self {
        Self {
            kind: PerturbationKind::GaussianBump,
            amplitude_n,
            amplitude_q,
            width,
            center,
            ..Self::default()
        }
    }

    /// Perturbation `(dn, dq)` at the nodes of `grid`.
    pub fn deviation(&self, params: &WaveParams, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
        let needs_width = matches!(
            self.kind,
            PerturbationKind::GaussianBump | PerturbationKind::RandomFourier
        );
        if needs_width && !(self.width > 0.0 && self.width.is_finite()) {
            return domain(format!("perturbation width must be positive, got {}", self.width));
        }
        let xs: Vec<f64> = grid.nodes().collect();
        let gauss = |x: f64| (-((x - self.center) / self.width).powi(2)).exp();
        Ok(match self.kind {
            PerturbationKind::None => (vec![0.0; xs.len()], vec![0.0; xs.len()]),
            PerturbationKind::GaussianBump => (
                xs.iter().map(|&x| self.amplitude_n * gauss(x)).collect(),
                xs.iter().map(|&x| self.amplitude_q * gauss(x)).collect(),
            ),
            PerturbationKind::RandomFourier => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let modes = self.modes.max(1);
                let mut coeffs = |amp: f64| -> Vec<(f64, f64)> {
                    (0..modes)
                        .map(|_| {
                            let c = rng.gen_range(-1.0..1.0) * amp / modes as f64;
                            let s = rng.gen_range(-1.0..1.0) * amp / modes as f64;
                            (c, s)
                        })
                        .collect()
                };
                let cn = coeffs(self.amplitude_n);
                let cq = coeffs(self.amplitude_q);
                let series = |x: f64, c: &[(f64, f64)]| -> f64 {
                    let th = std::f64::consts::PI * (x - self.center) / self.width;
                    let sum: f64 = c
                        .iter()
                        .enumerate()
                        .map(|(k, &(a, b))| {
                            let kt = (k + 1) as f64 * th;
                            a * kt.cos() + b * kt.sin()
                        })
                        .sum();
                    sum * gauss(x)
                };
                (
                    xs.iter().map(|&x| series(x, &cn)).collect(),
                    xs.iter().map(|&x| series(x, &cq)).collect(),
                )
            }
            PerturbationKind::ShiftedWave => {
                let moved = Reference::new(params, *grid, self.center);
                let base = Reference::new(params, *grid, 0.0);
                (
                    moved.n.iter().zip(&base.n).map(|(a, b)| a - b).collect(),
                    moved.q.iter().zip(&base.q).map(|(a, b)| a - b).collect(),
                )
            }
            PerturbationKind::CustomFile => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| LabError::Parse("custom_file perturbation needs a path".into()))?;
                let table = read_table(path)?;
                (
                    xs.iter().map(|&x| interpolate(&table, x, 1)).collect(),
                    xs.iter().map(|&x| interpolate(&table, x, 2)).collect(),
                )
            }
        })
    }

    /// Validated initial state on `grid`, with the end nodes pinned to the wave.
    pub fn initial_state(&self, params: &WaveParams, grid: Grid) -> Result<State> {
        let (dn, dq) = self.deviation(params, &grid)?;
        let mid = 0.5 * (grid.xi_min() + grid.xi_max());
        let inner = 0.4 * (grid.xi_max() - grid.xi_min());
        for (i, x) in grid.nodes().enumerate() {
            if (x - mid).abs() > inner {
                let size = dn[i].abs().max(dq[i].abs());
                if !(size <= TAIL_TOLERANCE) {
                    return domain(format!(
                        "perturbation of size {size:e} at xi = {x} lies outside the inner 80% of the domain"
                    ));
                }
            }
        }
        let r = Reference::new(params, grid, 0.0);
        let last = grid.num_nodes() - 1;
        let mut n: Vec<f64> = r.n.iter().zip(&dn).map(|(a, b)| a + b).collect();
        let mut q: Vec<f64> = r.q.iter().zip(&dq).map(|(a, b)| a + b).collect();
        for i in [0, last] {
            n[i] = r.n[i];
            q[i] = r.q[i];
        }
        if let Some(i) = n.iter().position(|v| !(*v > 0.0)) {
            return domain(format!(
                "initial density {} at xi = {} is not positive",
                n[i],
                grid.node(i)
            ));
        }
        State::from_values(grid, n, q)
    }
}

fn read_table(path: &PathBuf) -> Result<Vec<[f64; 3]>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let expected = ["xi", "dn", "dq"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h.trim() != e) {
        return Err(LabError::Parse(format!(
            "{}: expected header xi,dn,dq",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let mut row = [0.0; 3];
        for (k, cell) in rec.iter().enumerate().take(3) {
            row[k] = cell.trim().parse().map_err(|_| {
                LabError::Parse(format!("{}: line {}: bad number {cell:?}", path.display(), line + 2))
            })?;
        }
        if let Some(prev) = rows.last().map(|r: &[f64; 3]| r[0]) {
            if !(row[0] > prev) {
                return Err(LabError::Parse(format!(
                    "{}: line {}: xi must be strictly increasing",
                    path.display(),
                    line + 2
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(LabError::Parse(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

fn interpolate(table: &[[f64; 3]], x: f64, col: usize) -> f64 {
    let first = table[0][0];
    let last = table[table.len() - 1][0];
    if x < first || x > last {
        return 0.0;
    }
    let j = table.partition_point(|r| r[0] <= x);
    if j == table.len() {
        return table[j - 1][col];
    }
    let (a, b) = (table[j - 1], table[j]);
    let t = (x - a[0]) / (b[0] - a[0]);
    a[col] + t * (b[col] - a[col])
}
