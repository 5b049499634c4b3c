//! Time integration of the moving-frame system
//!
//! ```text
//! U_t + A(U)_xi = (nu n_xixi, 0),    A(U) = (-sigma n - n q, -sigma q - n)
//! ```
//!
//! Central flux differences with fourth-order Kreiss-Oliger smoothing, SSP-RK3 in
//! time, and diffusion either inside the Runge-Kutta stages (explicit) or as two
//! Crank-Nicolson half steps around them (Strang splitting). End nodes stay
//! pinned to the wave. With `well_balanced` the discrete residual of the sampled
//! wave is subtracted, so the sampled wave is an exact steady state.

mod perturbation;
mod run;

pub use perturbation::{PerturbationKind, PerturbationSpec, TAIL_TOLERANCE};
pub use run::{
    entropy_balance_residual, run, BalanceResidual, RMainProfile, RunOutput, Snapshot,
    StepRecord, Verdict,
};

use serde::{Deserialize, Serialize};

use crate::error::{domain, LabError, Result};
use crate::functionals::{Reference, State, DEFAULT_DELTA0, DEFAULT_DELTA1};
use crate::grid::{Grid, GridField, NeumaierSum};
use crate::wave::WaveParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionMode {
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub params: WaveParams,
    pub grid: Grid,
    pub t_end: f64,
    pub cfl: f64,
    pub diffusion_mode: DiffusionMode,
    pub perturbation: PerturbationSpec,
    /// Overrides the CFL step when set (the last step is still shortened to hit `t_end`).
    pub fixed_dt: Option<f64>,
    pub well_balanced: bool,
    /// Kreiss-Oliger coefficient, zero disables.
    pub dissipation: f64,
    pub shift_substeps: usize,
    pub delta0: f64,
    pub delta1: f64,
    /// Store a record every this many steps (the verdict still sees every step).
    pub report_stride: usize,
    /// Store the full state every this many steps; `None` keeps only the final state.
    pub snapshot_stride: Option<usize>,
    /// Per-step tolerance for increases of the weighted entropy.
    pub violation_tolerance: f64,
}

impl SolverConfig {
    pub fn new(params: WaveParams, grid: Grid, t_end: f64) -> Self {
        Self {
            params,
            grid,
            t_end,
            cfl: 0.4,
            diffusion_mode: DiffusionMode::Implicit,
            perturbation: PerturbationSpec::default(),
            fixed_dt: None,
            well_balanced: true,
            dissipation: 0.05,
            shift_substeps: 4,
            delta0: DEFAULT_DELTA0,
            delta1: DEFAULT_DELTA1,
            report_stride: 1,
            snapshot_stride: None,
            violation_tolerance: 1e-7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return domain(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return domain(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return domain(format!("fixed dt must be positive, got {dt}"));
            }
        }
        if !(self.dissipation >= 0.0 && self.dissipation <= 1.0) {
            return domain(format!("dissipation must lie in [0, 1], got {}", self.dissipation));
        }
        if self.grid.num_cells() < 6 {
            return domain("the scheme needs at least 6 cells");
        }
        if self.shift_substeps == 0 || self.report_stride == 0 {
            return domain("substeps and report stride must be positive");
        }
        if self.snapshot_stride == Some(0) {
            return domain("snapshot stride must be positive");
        }
        if !(self.delta0 > 0.0 && self.delta0 < 0.5 && self.delta1 > 0.0 && self.delta1 < 0.5) {
            return domain(format!(
                "delta0 = {} and delta1 = {} must lie in (0, 1/2)",
                self.delta0, self.delta1
            ));
        }
        Ok(())
    }
}

/// Largest characteristic speed `(|2 sigma + q| + sqrt(q^2 + 4 n)) / 2` of the first-order part.
pub fn max_char_speed(sigma: f64, n: &[f64], q: &[f64]) -> f64 {
    n.iter()
        .zip(q)
        .map(|(&n, &q)| 0.5 * ((2.0 * sigma + q).abs() + (q * q + 4.0 * n).sqrt()))
        .fold(0.0, f64::max)
}

/// Spatial operator and integrator for one configuration.
#[derive(Debug, Clone)]
pub struct Solver {
    config: SolverConfig,
    wave_n: Vec<f64>,
    wave_q: Vec<f64>,
    /// Residual of the sampled wave, first-order part and diffusion part.
    balance: Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
    ko_speed: f64,
    scratch: Scratch,
}

#[derive(Debug, Clone, Default)]
struct Scratch {
    fa_n: Vec<f64>,
    fa_q: Vec<f64>,
    k_n: Vec<f64>,
    k_q: Vec<f64>,
    n1: Vec<f64>,
    q1: Vec<f64>,
    acc_n: Vec<f64>,
    acc_q: Vec<f64>,
    tri_c: Vec<f64>,
    tri_d: Vec<f64>,
    v: Vec<f64>,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let m = config.grid.num_nodes();
        let r = Reference::new(&config.params, config.grid, 0.0);
        let ko_speed = max_char_speed(config.params.sigma(), &r.n, &r.q);
        let mut s = Self {
            config,
            wave_n: r.n,
            wave_q: r.q,
            balance: None,
            ko_speed,
            scratch: Scratch {
                fa_n: vec![0.0; m],
                fa_q: vec![0.0; m],
                k_n: vec![0.0; m],
                k_q: vec![0.0; m],
                n1: vec![0.0; m],
                q1: vec![0.0; m],
                acc_n: vec![0.0; m],
                acc_q: vec![0.0; m],
                tri_c: vec![0.0; m],
                tri_d: vec![0.0; m],
                v: vec![0.0; m],
            },
        };
        if s.config.well_balanced {
            let (wn, wq) = (s.wave_n.clone(), s.wave_q.clone());
            let mut hn = vec![0.0; m];
            let mut hq = vec![0.0; m];
            s.first_order_rhs(&wn, &wq, &mut hn, &mut hq);
            let mut dn = vec![0.0; m];
            s.diffusion_rhs(&wn, &mut dn);
            s.balance = Some((hn, hq, dn));
        }
        Ok(s)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn grid(&self) -> Grid {
        self.config.grid
    }

    pub fn initial_state(&self) -> Result<State> {
        self.config
            .perturbation
            .initial_state(&self.config.params, self.config.grid)
    }

    /// Stable step for `state`: `cfl dx / max|lambda|`, also `cfl dx^2 / (2 nu)` when explicit.
    pub fn stable_dt(&self, state: &State) -> f64 {
        let dx = self.config.grid.dx();
        let c = max_char_speed(
            self.config.params.sigma(),
            state.n().values(),
            state.q().values(),
        )
        .max(self.ko_speed);
        let hyper = self.config.cfl * dx / c;
        match self.config.diffusion_mode {
            DiffusionMode::Implicit => hyper,
            DiffusionMode::Explicit => {
                hyper.min(self.config.cfl * dx * dx / (2.0 * self.config.params.nu()))
            }
        }
    }

    /// Step size used from `state`, honoring `fixed_dt`.
    pub fn dt_for(&self, state: &State) -> f64 {
        self.config.fixed_dt.unwrap_or_else(|| self.stable_dt(state))
    }

    /// One step of length `dt` from `state`, which is left untouched.
    pub fn step(&mut self, state: &State, dt: f64, time: f64) -> Result<State> {
        let mut n = state.n().values().to_vec();
        let mut q = state.q().values().to_vec();
        self.step_in_place(&mut n, &mut q, dt, time)?;
        State::from_values(self.config.grid, n, q)
    }

    /// `H(U)` on interior nodes: central flux differences and Kreiss-Oliger smoothing.
    fn first_order_rhs(&mut self, n: &[f64], q: &[f64], out_n: &mut [f64], out_q: &mut [f64]) {
        let m = n.len();
        let sigma = self.config.params.sigma();
        let dx = self.config.grid.dx();
        let fa_n = &mut self.scratch.fa_n;
        let fa_q = &mut self.scratch.fa_q;
        for i in 0..m {
            fa_n[i] = -sigma * n[i] - n[i] * q[i];
            fa_q[i] = -sigma * q[i] - n[i];
        }
        let inv2dx = 0.5 / dx;
        out_n[0] = 0.0;
        out_q[0] = 0.0;
        out_n[m - 1] = 0.0;
        out_q[m - 1] = 0.0;
        for i in 1..m - 1 {
            out_n[i] = -(fa_n[i + 1] - fa_n[i - 1]) * inv2dx;
            out_q[i] = -(fa_q[i + 1] - fa_q[i - 1]) * inv2dx;
        }
        let kappa = self.config.dissipation * self.ko_speed / (16.0 * dx);
        if kappa > 0.0 {
            for i in 2..m - 2 {
                let d4 = |f: &[f64]| {
                    (f[i - 2] + f[i + 2]) - 4.0 * (f[i - 1] + f[i + 1]) + 6.0 * f[i]
                };
                out_n[i] -= kappa * d4(n);
                out_q[i] -= kappa * d4(q);
            }
        }
    }

    /// `nu n_xixi` on interior nodes.
    fn diffusion_rhs(&self, n: &[f64], out: &mut [f64]) {
        let m = n.len();
        let dx = self.config.grid.dx();
        let c = self.config.params.nu() / (dx * dx);
        out[0] = 0.0;
        out[m - 1] = 0.0;
        for i in 1..m - 1 {
            out[i] = c * ((n[i + 1] - n[i]) - (n[i] - n[i - 1]));
        }
    }

    fn full_rhs(&mut self, n: &[f64], q: &[f64], out_n: &mut [f64], out_q: &mut [f64]) {
        self.first_order_rhs(n, q, out_n, out_q);
        if let Some((hn, hq, dn)) = &self.balance {
            for i in 0..n.len() {
                out_n[i] -= hn[i];
                out_q[i] -= hq[i];
            }
            if self.config.diffusion_mode == DiffusionMode::Explicit {
                for (o, d) in out_n.iter_mut().zip(dn) {
                    *o -= d;
                }
            }
        }
        if self.config.diffusion_mode == DiffusionMode::Explicit {
            let m = n.len();
            let dx = self.config.grid.dx();
            let c = self.config.params.nu() / (dx * dx);
            for i in 1..m - 1 {
                out_n[i] += c * ((n[i + 1] - n[i]) - (n[i] - n[i - 1]));
            }
        }
    }

    /// SSP-RK3 over `dt` of the operator assembled by [`Solver::full_rhs`], in
    /// increment form so a vanishing operator leaves the state bit-identical.
    fn rk3(&mut self, n: &mut [f64], q: &mut [f64], dt: f64) {
        let m = n.len();
        let mut k_n = std::mem::take(&mut self.scratch.k_n);
        let mut k_q = std::mem::take(&mut self.scratch.k_q);
        let mut n1 = std::mem::take(&mut self.scratch.n1);
        let mut q1 = std::mem::take(&mut self.scratch.q1);
        let mut acc_n = std::mem::take(&mut self.scratch.acc_n);
        let mut acc_q = std::mem::take(&mut self.scratch.acc_q);

        self.full_rhs(n, q, &mut k_n, &mut k_q);
        for i in 0..m {
            acc_n[i] = k_n[i];
            acc_q[i] = k_q[i];
            n1[i] = n[i] + dt * k_n[i];
            q1[i] = q[i] + dt * k_q[i];
        }
        self.full_rhs(&n1, &q1, &mut k_n, &mut k_q);
        for i in 0..m {
            acc_n[i] += k_n[i];
            acc_q[i] += k_q[i];
            n1[i] = n[i] + 0.25 * dt * acc_n[i];
            q1[i] = q[i] + 0.25 * dt * acc_q[i];
        }
        self.full_rhs(&n1, &q1, &mut k_n, &mut k_q);
        for i in 0..m {
            n[i] += dt * (acc_n[i] / 6.0 + (2.0 / 3.0) * k_n[i]);
            q[i] += dt * (acc_q[i] / 6.0 + (2.0 / 3.0) * k_q[i]);
        }

        self.scratch.k_n = k_n;
        self.scratch.k_q = k_q;
        self.scratch.n1 = n1;
        self.scratch.q1 = q1;
        self.scratch.acc_n = acc_n;
        self.scratch.acc_q = acc_q;
    }

    /// Crank-Nicolson step of `v_t = nu v_xixi` on the interior, `v` being `n`
    /// or, when well balanced, `n - n~`. End values are held fixed. Solved for the
    /// increment, so states with vanishing second differences are kept exactly.
    fn crank_nicolson(&mut self, n: &mut [f64], h: f64) {
        let m = n.len();
        let dx = self.config.grid.dx();
        let theta = 0.5 * self.config.params.nu() * h / (dx * dx);
        let mut v = std::mem::take(&mut self.scratch.v);
        let mut c = std::mem::take(&mut self.scratch.tri_c);
        let mut d = std::mem::take(&mut self.scratch.tri_d);
        let balanced = self.balance.is_some();
        for i in 0..m {
            v[i] = if balanced { n[i] - self.wave_n[i] } else { n[i] };
        }
        // (1 + 2 theta) w_i - theta (w_{i-1} + w_{i+1}) = 2 theta (D2 v)_i, w = 0 at the ends
        let diag = 1.0 + 2.0 * theta;
        for i in 1..m - 1 {
            let rhs = 2.0 * theta * ((v[i + 1] - v[i]) - (v[i] - v[i - 1]));
            let denom = if i == 1 { diag } else { diag + theta * c[i - 1] };
            c[i] = -theta / denom;
            d[i] = if i == 1 { rhs } else { rhs + theta * d[i - 1] } / denom;
        }
        let mut next = d[m - 2];
        n[m - 2] += next;
        for i in (1..m - 2).rev() {
            next = d[i] - c[i] * next;
            n[i] += next;
        }
        self.scratch.v = v;
        self.scratch.tri_c = c;
        self.scratch.tri_d = d;
    }

    /// Advances raw node arrays by `dt`, then checks positivity and finiteness.
    pub fn step_in_place(&mut self, n: &mut [f64], q: &mut [f64], dt: f64, time: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return domain(format!("step size must be positive, got {dt}"));
        }
        match self.config.diffusion_mode {
            DiffusionMode::Implicit => {
                self.crank_nicolson(n, 0.5 * dt);
                self.rk3(n, q, dt);
                self.crank_nicolson(n, 0.5 * dt);
            }
            DiffusionMode::Explicit => self.rk3(n, q, dt),
        }
        let t = time + dt;
        for i in 0..n.len() {
            if !n[i].is_finite() || !q[i].is_finite() {
                return Err(LabError::Stability {
                    time: t,
                    node: i,
                    reason: "non-finite value".into(),
                });
            }
            if n[i] <= 0.0 {
                return Err(LabError::Stability {
                    time: t,
                    node: i,
                    reason: format!("density {} is not positive", n[i]),
                });
            }
        }
        Ok(())
    }
}

/// `c(xi) = c_ref exp(-int_{xi_min}^{xi} q)`, inverting `q = -(ln c)_xi`.
pub fn reconstruct_concentration(q: &GridField, c_ref: f64) -> Result<GridField> {
    if !(c_ref > 0.0 && c_ref.is_finite()) {
        return domain(format!("reference concentration must be positive, got {c_ref}"));
    }
    let v = q.values();
    let dx = q.grid().dx();
    let mut acc = NeumaierSum::default();
    let mut out = Vec::with_capacity(v.len());
    out.push(c_ref);
    for i in 1..v.len() {
        acc.add(0.5 * dx * (v[i - 1] + v[i]));
        out.push(c_ref * (-acc.value()).exp());
    }
    GridField::new(*q.grid(), out)
}

#[cfg(test)]
mod tests;
