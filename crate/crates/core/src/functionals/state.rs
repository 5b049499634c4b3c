use crate::error::{domain, Result};
use crate::grid::{Grid, GridField};
use crate::wave::WaveParams;

/// Solution `U = (n, q)` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    n: GridField,
    q: GridField,
}

impl State {
    pub fn new(n: GridField, q: GridField) -> Result<Self> {
        if n.grid() != q.grid() {
            return domain("n and q live on different grids");
        }
        if let Some(i) = n.values().iter().position(|&v| v <= 0.0) {
            return domain(format!("density {} at node {i} is not positive", n.values()[i]));
        }
        Ok(Self { n, q })
    }

    /// Builds a state from raw node values on `grid`.
    pub fn from_values(grid: Grid, n: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        Self::new(GridField::new(grid, n)?, GridField::new(grid, q)?)
    }

    /// The traveling wave translated by `shift`, sampled at the nodes.
    pub fn wave(params: &WaveParams, grid: Grid, shift: f64) -> Self {
        let r = Reference::new(params, grid, shift);
        Self {
            n: GridField::new(grid, r.n).expect("wave samples are finite"),
            q: GridField::new(grid, r.q).expect("wave samples are finite"),
        }
    }

    pub fn n(&self) -> &GridField {
        &self.n
    }
    pub fn q(&self) -> &GridField {
        &self.q
    }
    pub fn grid(&self) -> &Grid {
        self.n.grid()
    }
    pub fn into_parts(self) -> (GridField, GridField) {
        (self.n, self.q)
    }
}

/// Analytic reference objects evaluated at the nodes `xi_i - shift`.
///
/// Evaluating any functional of `U` against this frame equals evaluating it on
/// `U(. + shift)` against the unshifted wave: the two are the same sums.
#[derive(Debug, Clone)]
pub struct Reference {
    pub(crate) params: WaveParams,
    pub(crate) grid: Grid,
    pub(crate) shift: f64,
    pub n: Vec<f64>,
    pub n_prime: Vec<f64>,
    pub n_second: Vec<f64>,
    pub q: Vec<f64>,
    pub a: Vec<f64>,
    pub a_prime: Vec<f64>,
    pub a_second: Vec<f64>,
}

impl Reference {
    pub fn new(params: &WaveParams, grid: Grid, shift: f64) -> Self {
        let m = grid.num_nodes();
        let mut r = Self {
            params: *params,
            grid,
            shift,
            n: Vec::with_capacity(m),
            n_prime: Vec::with_capacity(m),
            n_second: Vec::with_capacity(m),
            q: Vec::with_capacity(m),
            a: Vec::with_capacity(m),
            a_prime: Vec::with_capacity(m),
            a_second: Vec::with_capacity(m),
        };
        for xi in grid.nodes() {
            let s = params.sample(xi - shift);
            r.n.push(s.n);
            r.n_prime.push(s.n_prime);
            r.n_second.push(s.n_second);
            r.q.push(s.q);
            r.a.push(s.a);
            r.a_prime.push(s.a_prime);
            r.a_second.push(s.a_second);
        }
        r
    }

    pub fn params(&self) -> &WaveParams {
        &self.params
    }
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn shift(&self) -> f64 {
        self.shift
    }
}
