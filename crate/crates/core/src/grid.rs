//! Uniform one-dimensional grid, trapezoid quadrature and finite-difference stencils.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{domain, LabError, Result};

/// Uniform node set `xi_min + i dx`, `i = 0..=num_cells`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    xi_min: f64,
    xi_max: f64,
    num_cells: usize,
    dx: f64,
}

impl Grid {
    pub fn new(xi_min: f64, xi_max: f64, num_cells: usize) -> Result<Self> {
        if !(xi_min.is_finite() && xi_max.is_finite() && xi_min < xi_max) {
            return domain(format!("invalid grid interval [{xi_min}, {xi_max}]"));
        }
        if num_cells < 3 {
            return domain(format!("need at least 3 cells, got {num_cells}"));
        }
        Ok(Self {
            xi_min,
            xi_max,
            num_cells,
            dx: (xi_max - xi_min) / num_cells as f64,
        })
    }

    /// Grid on `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, num_cells: usize) -> Result<Self> {
        Self::new(-half_width, half_width, num_cells)
    }

    pub fn xi_min(&self) -> f64 {
        self.xi_min
    }
    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }
    pub fn num_cells(&self) -> usize {
        self.num_cells
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn num_nodes(&self) -> usize {
        self.num_cells + 1
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.num_cells {
            self.xi_max
        } else {
            self.xi_min + i as f64 * self.dx
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.num_nodes()).map(move |i| self.node(i))
    }

    /// Same interval with twice as many cells.
    pub fn refined(&self) -> Self {
        Self {
            num_cells: 2 * self.num_cells,
            dx: 0.5 * self.dx,
            ..*self
        }
    }
}

/// Real field sampled at every node of a grid. Values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Grid,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return domain(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                grid.num_nodes()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("non-finite value {} at node {i}", values[i]));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.num_nodes()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn integrate(&self) -> f64 {
        trapezoid(self.grid.dx, &self.values)
    }

    /// Writes `xi,value` rows with a header line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["xi", "value"]).map_err(csv_err)?;
        for (xi, v) in self.grid.nodes().zip(&self.values) {
            w.serialize((xi, v)).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a field written by [`GridField::write_csv`] back onto `grid`.
    pub fn read_csv<R: Read>(grid: Grid, input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut values = Vec::with_capacity(grid.num_nodes());
        for (i, rec) in r.deserialize::<(f64, f64)>().enumerate() {
            let (xi, v) = rec.map_err(csv_err)?;
            if i >= grid.num_nodes() || (xi - grid.node(i)).abs() > 1e-9 * (1.0 + xi.abs()) {
                return Err(LabError::Parse(format!(
                    "row {i}: xi = {xi} does not match the grid"
                )));
            }
            values.push(v);
        }
        Self::new(grid, values)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> LabError {
    LabError::Parse(e.to_string())
}

/// Composite trapezoid rule on uniformly spaced samples, with compensated summation.
pub fn trapezoid(dx: f64, values: &[f64]) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        m => {
            let mut acc = NeumaierSum::default();
            acc.add(0.5 * values[0]);
            for &v in &values[1..m - 1] {
                acc.add(v);
            }
            acc.add(0.5 * values[m - 1]);
            dx * acc.value()
        }
    }
}

pub fn integrate(f: &GridField) -> f64 {
    f.integrate()
}

/// Running sum with Neumaier's error compensation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Second-order central first derivative; one-sided second-order stencils at both ends.
/// Stencils are written in differences so a constant field differentiates to exactly zero.
pub fn ddx_central_slice(dx: f64, f: &[f64], out: &mut [f64]) {
    let m = f.len();
    debug_assert!(m >= 3 && out.len() == m);
    let inv2 = 0.5 / dx;
    out[0] = (3.0 * (f[1] - f[0]) - (f[2] - f[1])) * inv2;
    for i in 1..m - 1 {
        out[i] = (f[i + 1] - f[i - 1]) * inv2;
    }
    out[m - 1] = (3.0 * (f[m - 1] - f[m - 2]) - (f[m - 2] - f[m - 3])) * inv2;
}

/// Second-order Laplacian; one-sided second-order stencils at both ends.
pub fn d2dx2_slice(dx: f64, f: &[f64], out: &mut [f64]) {
    let m = f.len();
    debug_assert!(m >= 4 && out.len() == m);
    let inv = 1.0 / (dx * dx);
    out[0] = (2.0 * (f[0] - f[1]) - 3.0 * (f[1] - f[2]) + (f[2] - f[3])) * inv;
    for i in 1..m - 1 {
        out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * inv;
    }
    out[m - 1] = (2.0 * (f[m - 1] - f[m - 2]) - 3.0 * (f[m - 2] - f[m - 3]) + (f[m - 3] - f[m - 4])) * inv;
}

pub fn ddx_central(f: &GridField) -> GridField {
    let mut out = vec![0.0; f.values.len()];
    ddx_central_slice(f.grid.dx, &f.values, &mut out);
    GridField {
        grid: f.grid,
        values: out,
    }
}

/// First-order upwind derivative for transport `f_t + speed f_xi = 0`:
/// backward difference where `speed > 0`, forward otherwise.
pub fn ddx_upwind(f: &GridField, speed: &GridField) -> Result<GridField> {
    if f.grid != speed.grid {
        return domain("upwind derivative needs the speed on the same grid");
    }
    let m = f.values.len();
    let dx = f.grid.dx;
    let v = &f.values;
    let out = (0..m)
        .map(|i| {
            let backward = i == m - 1 || (i > 0 && speed.values[i] > 0.0);
            if backward {
                (v[i] - v[i - 1]) / dx
            } else {
                (v[i + 1] - v[i]) / dx
            }
        })
        .collect();
    GridField::new(f.grid, out)
}

pub fn d2dx2(f: &GridField) -> GridField {
    let mut out = vec![0.0; f.values.len()];
    d2dx2_slice(f.grid.dx, &f.values, &mut out);
    GridField {
        grid: f.grid,
        values: out,
    }
}
