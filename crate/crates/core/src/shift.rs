//! Shift function driven by the sign of `Y`, integrated alongside the PDE.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::functionals::{Evaluation, Reference, State};
use crate::wave::WaveParams;

/// Active branch of `Phi_eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `y <= -eps^2`, `Phi = 1/eps^2`.
    SaturatedPlus,
    Linear,
    /// `y >= eps^2`, `Phi = -1/eps^2`.
    SaturatedMinus,
}

impl Regime {
    pub fn of(y: f64, eps: f64) -> Self {
        let e2 = eps * eps;
        if y <= -e2 {
            Regime::SaturatedPlus
        } else if y >= e2 {
            Regime::SaturatedMinus
        } else {
            Regime::Linear
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::SaturatedPlus => "saturated_plus",
            Regime::Linear => "linear",
            Regime::SaturatedMinus => "saturated_minus",
        }
    }
}

/// `1/eps^2` below `-eps^2`, `-y/eps^4` in between, `-1/eps^2` above `eps^2`.
pub fn phi_eps(y: f64, eps: f64) -> f64 {
    let e2 = eps * eps;
    let inv_e2 = 1.0 / e2;
    match Regime::of(y, eps) {
        Regime::SaturatedPlus => inv_e2,
        Regime::SaturatedMinus => -inv_e2,
        Regime::Linear => (-y / (e2 * e2)).clamp(-inv_e2, inv_e2),
    }
}

/// One evaluation of the shift velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSample {
    pub x: f64,
    pub y: f64,
    pub i_bad: f64,
    pub x_dot: f64,
    pub regime: Regime,
    /// `(1/eps^2)(2|I_bad| + 1)`
    pub bound: f64,
}

impl ShiftSample {
    pub fn within_bound(&self) -> bool {
        self.x_dot.abs() <= self.bound
    }
}

/// `Phi_eps(Y)(2|I_bad| + 1)` for `U` seen from the wave translated by `x`.
pub fn xdot(params: &WaveParams, u: &State, x: f64) -> Result<ShiftSample> {
    let r = Reference::new(params, *u.grid(), x);
    xdot_with(&r, u)
}

pub fn xdot_with(r: &Reference, u: &State) -> Result<ShiftSample> {
    Ok(sample_from(&Evaluation::new(r, u)?))
}

/// Shift velocity from an evaluation already made at the current shift.
pub fn sample_from(e: &Evaluation<'_>) -> ShiftSample {
    let r = e.reference();
    let eps = r.params().eps();
    let y = e.y();
    let i_bad = e.i_bad();
    let amp = 2.0 * i_bad.abs() + 1.0;
    ShiftSample {
        x: r.shift(),
        y,
        i_bad,
        x_dot: phi_eps(y, eps) * amp,
        regime: Regime::of(y, eps),
        bound: amp * (1.0 / (eps * eps)),
    }
}

/// Current shift and last velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftState {
    pub x: f64,
    pub x_dot: f64,
    pub regime: Regime,
}

impl Default for ShiftState {
    fn default() -> Self {
        Self {
            x: 0.0,
            x_dot: 0.0,
            regime: Regime::Linear,
        }
    }
}

/// Running record of the right-hand side `F(X) = Phi_eps(Y)(2|I_bad|+1)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ShiftMonitor {
    pub evaluations: usize,
    pub max_abs_f: f64,
    /// Largest difference quotient `|F(X1) - F(X0)| / |X1 - X0|` between consecutive substeps.
    pub max_abs_df_dx: f64,
    pub bound_violations: usize,
    /// Largest `|X'| / bound` seen.
    pub max_bound_ratio: f64,
}

impl ShiftMonitor {
    fn record(&mut self, s: &ShiftSample, prev: Option<&ShiftSample>) {
        self.evaluations += 1;
        self.max_abs_f = self.max_abs_f.max(s.x_dot.abs());
        if !s.within_bound() {
            self.bound_violations += 1;
        }
        self.max_bound_ratio = self.max_bound_ratio.max(s.x_dot.abs() / s.bound);
        if let Some(p) = prev {
            let dx = s.x - p.x;
            if dx != 0.0 {
                self.max_abs_df_dx = self.max_abs_df_dx.max(((s.x_dot - p.x_dot) / dx).abs());
            }
        }
    }
}

/// Forward-Euler substepping of the shift ODE with `U` frozen over the step.
#[derive(Debug, Clone)]
pub struct ShiftIntegrator {
    pub substeps: usize,
    pub monitor: ShiftMonitor,
    last: Option<ShiftSample>,
}

impl ShiftIntegrator {
    pub fn new(substeps: usize) -> Self {
        Self {
            substeps: substeps.max(1),
            monitor: ShiftMonitor::default(),
            last: None,
        }
    }

    /// Advances `shift` over `dt`, returning the new state and every substep sample.
    pub fn advance(
        &mut self,
        shift: &ShiftState,
        u: &State,
        dt: f64,
        params: &WaveParams,
        time: f64,
    ) -> Result<(ShiftState, Vec<ShiftSample>)> {
        let first = xdot(params, u, shift.x)?;
        self.advance_from(first, u, dt, params, time)
    }

    /// As [`ShiftIntegrator::advance`], reusing `first`, the sample at the current shift.
    pub fn advance_from(
        &mut self,
        first: ShiftSample,
        u: &State,
        dt: f64,
        params: &WaveParams,
        time: f64,
    ) -> Result<(ShiftState, Vec<ShiftSample>)> {
        let h = dt / self.substeps as f64;
        let limit = u.grid().xi_max().abs().max(u.grid().xi_min().abs());
        let mut x = first.x;
        let mut samples = Vec::with_capacity(self.substeps);
        for k in 0..self.substeps {
            let s = if k == 0 { first } else { xdot(params, u, x)? };
            self.monitor.record(&s, self.last.as_ref());
            self.last = Some(s);
            samples.push(s);
            x += h * s.x_dot;
            if !x.is_finite() || x.abs() >= limit {
                return Err(LabError::Shift {
                    time: time + (k + 1) as f64 * h,
                    reason: format!("shift {x} left the domain of half-width {limit}"),
                });
            }
        }
        let last = samples.last().expect("at least one substep");
        Ok((
            ShiftState {
                x,
                x_dot: last.x_dot,
                regime: last.regime,
            },
            samples,
        ))
    }
}

/// Single call form of [`ShiftIntegrator::advance`].
pub fn advance(
    shift: &ShiftState,
    u: &State,
    dt: f64,
    params: &WaveParams,
    substeps: usize,
) -> Result<ShiftState> {
    ShiftIntegrator::new(substeps)
        .advance(shift, u, dt, params, 0.0)
        .map(|(s, _)| s)
}
