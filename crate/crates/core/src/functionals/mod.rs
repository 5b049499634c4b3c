//! Relative entropies and every scalar functional of the weighted entropy method.
//!
//! All reference objects (`n~`, `q~`, `a` and their derivatives) are evaluated
//! analytically at the nodes through [`Reference`]; only the solution is
//! differenced. Integrals use the trapezoid rule on the solution grid, so the
//! algebraic identities between functionals hold to rounding error.

mod eval;
mod relative;
mod sample;
mod state;

use serde::{Deserialize, Serialize};

pub use eval::{
    r_eps_delta_from_parts, r_main_from_parts, BParts, Evaluation, ExpansionFunctionals, GParts,
    YParts,
};
pub use relative::{eta_rel, pi_rel, pi_taylor_lower};
pub use sample::random_state;
pub use state::{Reference, State};

use crate::error::{domain, Result};
use crate::grid::GridField;
use crate::wave::WaveParams;

/// Default weight on the dissipation and on `|B|` in the main functional.
pub const DEFAULT_DELTA0: f64 = 0.01;
/// Default threshold of the near-wave set `|n/n~ - 1| <= delta1`.
pub const DEFAULT_DELTA1: f64 = 0.25;

/// `(1/sigma)(Pi(n|n~) + (1 + (eps/lambda) a/n~)(n - n~))` at a single point.
pub fn phi_of_n(params: &WaveParams, xi: f64, n: f64) -> Result<f64> {
    let nt = params.profile_n(xi);
    let pi = pi_rel(n, nt)?;
    let k = 1.0 + params.eps_over_lambda() * params.weight_a(xi) / nt;
    Ok((pi + k * (n - nt)) / params.sigma())
}

pub fn y_functional(r: &Reference, u: &State) -> Result<f64> {
    Ok(Evaluation::new(r, u)?.y())
}

pub fn i_bad(r: &Reference, u: &State) -> Result<f64> {
    Ok(Evaluation::new(r, u)?.i_bad())
}

pub fn i_good(r: &Reference, u: &State) -> Result<f64> {
    Ok(Evaluation::new(r, u)?.i_good())
}

pub fn b_delta(r: &Reference, u: &State, delta: f64) -> Result<f64> {
    check_positive("delta", delta)?;
    Ok(Evaluation::new(r, u)?.b_delta(delta))
}

pub fn g_delta(r: &Reference, u: &State, delta: f64) -> Result<f64> {
    check_positive("delta", delta)?;
    Ok(Evaluation::new(r, u)?.g_delta(delta))
}

/// `int a n |d log(n/n~)|^2`, scaled by the viscosity.
pub fn dissipation(r: &Reference, n: &GridField) -> Result<f64> {
    Ok(Evaluation::density_only(r, n)?.dissipation())
}

/// Clamps `n` into the tube `(1 - theta) n~ <= n <= (1 + theta) n~`.
pub fn truncate(r: &Reference, n: &GridField, theta: f64) -> Result<GridField> {
    if !(theta > 0.0 && theta <= 0.5) {
        return domain(format!("truncation level {theta} outside (0, 1/2]"));
    }
    if *n.grid() != r.grid {
        return domain("density and reference live on different grids");
    }
    let values = n
        .values()
        .iter()
        .zip(&r.n)
        .map(|(&v, &nt)| {
            let ratio = (v - nt) / nt;
            if ratio > theta {
                (1.0 + theta) * nt
            } else if ratio < -theta {
                (1.0 - theta) * nt
            } else {
                v
            }
        })
        .collect();
    GridField::new(r.grid, values)
}

pub fn expansion_functionals(r: &Reference, n: &GridField) -> Result<ExpansionFunctionals> {
    Ok(Evaluation::density_only(r, n)?.expansion())
}

pub fn decompositions(r: &Reference, u: &State, delta1: f64) -> Result<(YParts, BParts, GParts)> {
    check_delta1(delta1)?;
    let e = Evaluation::new(r, u)?;
    Ok((e.y_parts(delta1), e.b_parts(delta1), e.g_parts(delta1)))
}

pub fn r_main(r: &Reference, u: &State, delta0: f64, delta1: f64) -> Result<f64> {
    check_positive("delta0", delta0)?;
    check_delta1(delta1)?;
    let e = Evaluation::new(r, u)?;
    let p = &r.params;
    Ok(r_main_from_parts(
        p.eps(),
        p.eps_over_lambda(),
        e.y(),
        e.b_delta(delta1),
        e.g_delta(delta1),
        e.dissipation(),
        delta0,
    ))
}

pub fn r_eps_delta(r: &Reference, n: &GridField, delta: f64) -> Result<f64> {
    check_positive("delta", delta)?;
    let e = Evaluation::density_only(r, n)?.expansion();
    let p = &r.params;
    Ok(r_eps_delta_from_parts(p.eps(), p.eps_over_lambda(), &e, delta))
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be positive, got {v}"))
    }
}

fn check_delta1(delta1: f64) -> Result<()> {
    if delta1 > 0.0 && delta1 < 0.5 {
        Ok(())
    } else {
        domain(format!("delta1 must lie in (0, 1/2), got {delta1}"))
    }
}

/// Every functional value at one time, flat for JSON and CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub eta_weighted: f64,
    pub eta_unweighted: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "I_bad")]
    pub i_bad: f64,
    #[serde(rename = "I_good")]
    pub i_good: f64,
    #[serde(rename = "B_delta")]
    pub b_delta: f64,
    #[serde(rename = "G_delta")]
    pub g_delta: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "Y_g")]
    pub y_g: f64,
    #[serde(rename = "Y_b")]
    pub y_b: f64,
    #[serde(rename = "Y_l")]
    pub y_l: f64,
    #[serde(rename = "Y_s")]
    pub y_s: f64,
    #[serde(rename = "B1")]
    pub b1: f64,
    #[serde(rename = "B2_in")]
    pub b2_in: f64,
    #[serde(rename = "B2_out")]
    pub b2_out: f64,
    #[serde(rename = "B3")]
    pub b3: f64,
    #[serde(rename = "G1_in")]
    pub g1_in: f64,
    #[serde(rename = "G1_out")]
    pub g1_out: f64,
    #[serde(rename = "G2")]
    pub g2: f64,
    #[serde(rename = "R_main")]
    pub r_main: f64,
    pub delta0: f64,
    pub delta_used: f64,
}

impl FunctionalReport {
    /// CSV column names, in output order.
    pub const COLUMNS: [&'static str; 22] = [
        "eta_weighted",
        "eta_unweighted",
        "Y",
        "I_bad",
        "I_good",
        "B_delta",
        "G_delta",
        "D",
        "Y_g",
        "Y_b",
        "Y_l",
        "Y_s",
        "B1",
        "B2_in",
        "B2_out",
        "B3",
        "G1_in",
        "G1_out",
        "G2",
        "R_main",
        "delta0",
        "delta_used",
    ];

    pub fn evaluate(r: &Reference, u: &State, delta0: f64, delta1: f64) -> Result<Self> {
        check_positive("delta0", delta0)?;
        check_delta1(delta1)?;
        let e = Evaluation::new(r, u)?;
        Ok(Self::from_evaluation(&e, delta0, delta1))
    }

    pub fn from_evaluation(e: &Evaluation<'_>, delta0: f64, delta1: f64) -> Self {
        let p = e.reference().params();
        let y = e.y();
        let b = e.b_delta(delta1);
        let g = e.g_delta(delta1);
        let d = e.dissipation();
        let yp = e.y_parts(delta1);
        let bp = e.b_parts(delta1);
        let gp = e.g_parts(delta1);
        Self {
            eta_weighted: e.eta_weighted(),
            eta_unweighted: e.eta_unweighted(),
            y,
            i_bad: e.i_bad(),
            i_good: e.i_good(),
            b_delta: b,
            g_delta: g,
            d,
            y_g: yp.y_g,
            y_b: yp.y_b,
            y_l: yp.y_l,
            y_s: yp.y_s,
            b1: bp.b1,
            b2_in: bp.b2_in,
            b2_out: bp.b2_out,
            b3: bp.b3,
            g1_in: gp.g1_in,
            g1_out: gp.g1_out,
            g2: gp.g2,
            r_main: r_main_from_parts(p.eps(), p.eps_over_lambda(), y, b, g, d, delta0),
            delta0,
            delta_used: delta1,
        }
    }

    pub fn y_parts(&self) -> YParts {
        YParts {
            y_g: self.y_g,
            y_b: self.y_b,
            y_l: self.y_l,
            y_s: self.y_s,
        }
    }

    pub fn b_parts(&self) -> BParts {
        BParts {
            b1: self.b1,
            b2_in: self.b2_in,
            b2_out: self.b2_out,
            b3: self.b3,
        }
    }

    pub fn g_parts(&self) -> GParts {
        GParts {
            g1_in: self.g1_in,
            g1_out: self.g1_out,
            g2: self.g2,
            d: self.d,
        }
    }

    /// Values in [`FunctionalReport::COLUMNS`] order.
    pub fn values(&self) -> [f64; 22] {
        [
            self.eta_weighted,
            self.eta_unweighted,
            self.y,
            self.i_bad,
            self.i_good,
            self.b_delta,
            self.g_delta,
            self.d,
            self.y_g,
            self.y_b,
            self.y_l,
            self.y_s,
            self.b1,
            self.b2_in,
            self.b2_out,
            self.b3,
            self.g1_in,
            self.g1_out,
            self.g2,
            self.r_main,
            self.delta0,
            self.delta_used,
        ]
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Error of a decomposition, scaled by the largest of the total and its parts.
pub fn decomposition_gap(total: f64, parts: &[f64]) -> f64 {
    let sum: f64 = parts.iter().sum();
    let scale = parts.iter().fold(total.abs(), |m, p| m.max(p.abs()));
    if scale == 0.0 {
        0.0
    } else {
        (total - sum).abs() / scale
    }
}

#[cfg(test)]
mod tests;
