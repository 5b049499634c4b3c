//! Relative entropy of the density and of the full state.

use crate::error::{domain, Result};

/// Below this `|n1/n2 - 1|` the series form is used.
const SERIES_RADIUS: f64 = 1e-2;

/// `(1+r) log(1+r) - r`, accurate for small `r`.
pub(crate) fn pi_hat(r: f64) -> f64 {
    if r.abs() < SERIES_RADIUS {
        // sum_{k>=2} (-1)^k r^k / (k (k-1))
        let mut term = r * r;
        let mut acc = 0.0;
        for k in 2..14 {
            let kf = k as f64;
            acc += term / (kf * (kf - 1.0));
            term *= -r;
        }
        acc
    } else {
        ((1.0 + r) * r.ln_1p() - r).max(0.0)
    }
}

/// `n1 log(n1/n2) - (n1 - n2)` without range checks.
pub(crate) fn pi_rel_unchecked(n1: f64, n2: f64) -> f64 {
    let r = (n1 - n2) / n2;
    if r.abs() < SERIES_RADIUS {
        n2 * pi_hat(r)
    } else {
        (n1 * (n1 / n2).ln() - (n1 - n2)).max(0.0)
    }
}

/// Relative entropy of `n log n - n`: `n1 log(n1/n2) - (n1 - n2)`.
pub fn pi_rel(n1: f64, n2: f64) -> Result<f64> {
    if !(n1 > 0.0 && n2 > 0.0) || !n1.is_finite() || !n2.is_finite() {
        return domain(format!("relative entropy needs positive densities, got ({n1}, {n2})"));
    }
    Ok(pi_rel_unchecked(n1, n2))
}

/// `|q1 - q2|^2 / 2 + Pi(n1 | n2)` for states `(n, q)`.
pub fn eta_rel(u1: (f64, f64), u2: (f64, f64)) -> Result<f64> {
    let dq = u1.1 - u2.1;
    Ok(0.5 * dq * dq + pi_rel(u1.0, u2.0)?)
}

/// Third-order Taylor lower bound `(n2/2)(r^2 - r^3/3)` with `r = n1/n2 - 1`.
pub fn pi_taylor_lower(n1: f64, n2: f64) -> f64 {
    let r = (n1 - n2) / n2;
    0.5 * n2 * r * r * (1.0 - r / 3.0)
}
