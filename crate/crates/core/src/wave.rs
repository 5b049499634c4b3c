//! Closed-form viscous shock of the transformed Keller-Segel system.
//!
//! In the moving frame `xi = x - sigma t` the density profile solves the
//! logistic equation `n' = (n - n_-)(n - n_+) / (nu sigma)`, so every reference
//! object (profile, derivatives, weight, `xi <-> y` map) is available in closed
//! form. All evaluations are pure functions of the parameters and `xi`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Beyond this value of `|eps xi / (nu sigma)|` the profile equals its end state to machine precision.
pub const EXP_CLAMP: f64 = 700.0;

/// Left and right states of a Lax shock with `n_minus > n_plus`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndStates {
    pub n_minus: f64,
    pub n_plus: f64,
    pub q_minus: f64,
    pub q_plus: f64,
}

/// Reference wave, weight and coordinate at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSample {
    pub n: f64,
    pub n_prime: f64,
    pub n_second: f64,
    pub q: f64,
    pub a: f64,
    pub a_prime: f64,
    pub a_second: f64,
    pub y: f64,
}

/// Which way the caller's states were oriented before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Input already had `n_left > n_right`.
    AsGiven,
    /// Input had `n_left < n_right`; it was mirrored by `(x, n, q) -> (-x, n, -q)`.
    Mirrored,
}

/// Positive root of `s^2 + q s - n = 0`, written without cancellation for either sign of `q`.
fn positive_root(q: f64, n: f64) -> f64 {
    let disc = (q * q + 4.0 * n).sqrt();
    if q > 0.0 {
        2.0 * n / (q + disc)
    } else {
        0.5 * (-q + disc)
    }
}

/// Builds the right state from `(n_-, q_-)` and the shock strength.
pub fn derive_end_state(n_minus: f64, q_minus: f64, eps: f64) -> Result<EndStates> {
    if !(n_minus > 0.0) || !n_minus.is_finite() {
        return domain(format!("n_minus must be positive, got {n_minus}"));
    }
    if !q_minus.is_finite() {
        return domain("q_minus must be finite");
    }
    if !(eps > 0.0) {
        return domain(format!("shock strength must be positive, got {eps}"));
    }
    if eps >= n_minus {
        return domain(format!(
            "shock strength {eps} >= n_minus {n_minus} would make n_plus non-positive"
        ));
    }
    let n_plus = n_minus - eps;
    let sigma = positive_root(q_minus, n_plus);
    let q_plus = q_minus + eps / sigma;
    Ok(EndStates {
        n_minus,
        n_plus,
        q_minus,
        q_plus,
    })
}

impl EndStates {
    /// Validates arbitrary end states and mirrors them into the `n_- > n_+` case.
    pub fn from_states(
        n_left: f64,
        q_left: f64,
        n_right: f64,
        q_right: f64,
    ) -> Result<(EndStates, Orientation)> {
        let (states, orientation) = if n_left > n_right {
            (
                EndStates {
                    n_minus: n_left,
                    n_plus: n_right,
                    q_minus: q_left,
                    q_plus: q_right,
                },
                Orientation::AsGiven,
            )
        } else if n_left < n_right {
            (
                EndStates {
                    n_minus: n_right,
                    n_plus: n_left,
                    q_minus: -q_right,
                    q_plus: -q_left,
                },
                Orientation::Mirrored,
            )
        } else {
            return domain("end states must differ in density");
        };
        if !(states.n_plus > 0.0) {
            return domain("densities must be positive");
        }
        if !(states.q_minus < states.q_plus) {
            return domain("Lax condition q_- < q_+ violated");
        }
        let [r1, r2] = states.rankine_hugoniot_residuals();
        let scale = 1.0 + states.n_minus.abs() + states.q_minus.abs() + states.q_plus.abs();
        if r1.abs() > 1e-10 * scale || r2.abs() > 1e-10 * scale {
            return domain(format!(
                "Rankine-Hugoniot residuals ({r1:e}, {r2:e}) are not zero"
            ));
        }
        Ok((states, orientation))
    }

    pub fn eps(&self) -> f64 {
        self.n_minus - self.n_plus
    }

    /// Shock speed, the positive root of `sigma^2 + q_- sigma - n_+ = 0`.
    pub fn sigma(&self) -> f64 {
        positive_root(self.q_minus, self.n_plus)
    }

    /// Speed of the degenerate shock at the left state.
    pub fn sigma_minus(&self) -> f64 {
        positive_root(self.q_minus, self.n_minus)
    }

    /// Residuals of both jump conditions.
    pub fn rankine_hugoniot_residuals(&self) -> [f64; 2] {
        let sigma = self.sigma();
        let dn = self.n_plus - self.n_minus;
        let dq = self.q_plus - self.q_minus;
        [
            -sigma * dn - (self.n_plus * self.q_plus - self.n_minus * self.q_minus),
            -sigma * dq - dn,
        ]
    }

    pub fn lax_holds(&self) -> bool {
        self.n_minus > self.n_plus && self.q_minus < self.q_plus
    }
}

/// Parameters of one traveling wave and its weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveParams {
    end_states: EndStates,
    eps: f64,
    lambda: f64,
    sigma: f64,
    sigma_minus: f64,
    nu: f64,
}

impl WaveParams {
    pub fn new(n_minus: f64, q_minus: f64, eps: f64, lambda: f64) -> Result<Self> {
        Self::with_viscosity(n_minus, q_minus, eps, lambda, 1.0)
    }

    pub fn with_viscosity(
        n_minus: f64,
        q_minus: f64,
        eps: f64,
        lambda: f64,
        nu: f64,
    ) -> Result<Self> {
        let end_states = derive_end_state(n_minus, q_minus, eps)?;
        if !(lambda > 0.0) || !lambda.is_finite() {
            return domain(format!("weight amplitude must be positive, got {lambda}"));
        }
        if !(nu > 0.0) || !nu.is_finite() {
            return domain(format!("viscosity must be positive, got {nu}"));
        }
        Ok(Self {
            end_states,
            eps,
            lambda,
            sigma: end_states.sigma(),
            sigma_minus: end_states.sigma_minus(),
            nu,
        })
    }

    pub fn end_states(&self) -> EndStates {
        self.end_states
    }
    pub fn n_minus(&self) -> f64 {
        self.end_states.n_minus
    }
    pub fn n_plus(&self) -> f64 {
        self.end_states.n_plus
    }
    pub fn q_minus(&self) -> f64 {
        self.end_states.q_minus
    }
    pub fn q_plus(&self) -> f64 {
        self.end_states.q_plus
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn sigma_minus(&self) -> f64 {
        self.sigma_minus
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `eps / lambda`, the ratio that multiplies every weight-coupling term.
    pub fn eps_over_lambda(&self) -> f64 {
        self.eps / self.lambda
    }

    /// Length scale `nu sigma / eps` of the profile.
    pub fn length_scale(&self) -> f64 {
        self.nu * self.sigma / self.eps
    }

    /// Default truncated half-width `30 nu sigma / eps`.
    pub fn default_half_width(&self) -> f64 {
        30.0 * self.length_scale()
    }

    /// Whether `eps / delta0 < lambda < delta0`; only advisory since `delta0` is not explicit.
    pub fn in_theorem_window(&self, delta0: f64) -> bool {
        self.eps / delta0 < self.lambda && self.lambda < delta0
    }

    fn z(&self, xi: f64) -> f64 {
        self.eps * xi / (self.nu * self.sigma)
    }

    /// `(s, y, s y)` with `s = 1/(1+e^z)`, `y = 1 - s`, computed without cancellation.
    fn logistic_parts(&self, xi: f64) -> (f64, f64, f64) {
        let z = self.z(xi);
        if z > EXP_CLAMP {
            return (0.0, 1.0, 0.0);
        }
        if z < -EXP_CLAMP {
            return (1.0, 0.0, 0.0);
        }
        let e = (-z.abs()).exp();
        let small = e / (1.0 + e);
        let large = 1.0 / (1.0 + e);
        let prod = e / ((1.0 + e) * (1.0 + e));
        if z >= 0.0 {
            (small, large, prod)
        } else {
            (large, small, prod)
        }
    }

    /// Density profile `n_+ + eps / (1 + exp(eps xi / (nu sigma)))`.
    pub fn profile_n(&self, xi: f64) -> f64 {
        let (s, _, _) = self.logistic_parts(xi);
        self.n_plus() + self.eps * s
    }

    pub fn profile_n_prime(&self, xi: f64) -> f64 {
        let (_, _, sy) = self.logistic_parts(xi);
        -self.eps * self.eps * sy / (self.nu * self.sigma)
    }

    pub fn profile_n_second(&self, xi: f64) -> f64 {
        let (s, y, sy) = self.logistic_parts(xi);
        let ns = self.nu * self.sigma;
        -self.eps * self.eps * sy / ns * (self.eps * (s - y) / ns)
    }

    /// `q_- - (n - n_-) / sigma`, increasing from `q_-` to `q_+`.
    pub fn profile_q(&self, xi: f64) -> f64 {
        let (_, y, _) = self.logistic_parts(xi);
        self.q_minus() + self.eps * y / self.sigma
    }

    pub fn profile_q_prime(&self, xi: f64) -> f64 {
        -self.profile_n_prime(xi) / self.sigma
    }

    /// Weight `1 + (lambda/eps)(n_- - n)`, increasing from 1 to `1 + lambda`.
    pub fn weight_a(&self, xi: f64) -> f64 {
        let (_, y, _) = self.logistic_parts(xi);
        1.0 + self.lambda * y
    }

    pub fn weight_a_prime(&self, xi: f64) -> f64 {
        -(self.lambda / self.eps) * self.profile_n_prime(xi)
    }

    pub fn weight_a_second(&self, xi: f64) -> f64 {
        -(self.lambda / self.eps) * self.profile_n_second(xi)
    }

    /// `y = (n_- - n(xi)) / eps`, mapping the line onto `[0, 1]`.
    pub fn y_of_xi(&self, xi: f64) -> f64 {
        self.logistic_parts(xi).1
    }

    pub fn dy_dxi(&self, xi: f64) -> f64 {
        let (_, _, sy) = self.logistic_parts(xi);
        self.eps / (self.nu * self.sigma) * sy
    }

    pub fn xi_of_y(&self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y < 1.0) {
            return domain(format!("y = {y} is not in the open unit interval"));
        }
        Ok(self.length_scale() * (y.ln() - (-y).ln_1p()))
    }

    /// Every reference quantity at `xi`, sharing one exponential evaluation.
    pub fn sample(&self, xi: f64) -> WaveSample {
        let (s, y, sy) = self.logistic_parts(xi);
        let ns = self.nu * self.sigma;
        let n_prime = -self.eps * self.eps * sy / ns;
        let n_second = n_prime * (self.eps * (s - y) / ns);
        let k = self.lambda / self.eps;
        WaveSample {
            n: self.n_plus() + self.eps * s,
            n_prime,
            n_second,
            q: self.q_minus() + self.eps * y / self.sigma,
            a: 1.0 + self.lambda * y,
            a_prime: -k * n_prime,
            a_second: -k * n_second,
            y,
        }
    }

    /// Sampled reference state `(n, q)` at `xi`.
    pub fn reference(&self, xi: f64) -> (f64, f64) {
        (self.profile_n(xi), self.profile_q(xi))
    }

    /// Upper and lower envelopes of `n'` from the decay estimate
    /// `-(eps^2/sigma_-) e^{-eps|xi|/sigma_-} <= n' <= -(eps^2/(4 sigma_-)) e^{-eps|xi|/sigma_-}`.
    pub fn decay_envelope(&self, xi: f64) -> (f64, f64) {
        let sm = self.nu * self.sigma_minus;
        let e = (-self.eps * xi.abs() / sm).exp();
        let scale = self.eps * self.eps / sm;
        (-scale * e, -0.25 * scale * e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn unit_shock_example() {
        let s = derive_end_state(2.0, 0.0, 1.0).unwrap();
        assert_eq!(s.n_plus, 1.0);
        assert!(close(s.sigma(), 1.0, 1e-15));
        assert!(close(s.q_plus, 1.0, 1e-15));
    }

    #[test]
    fn degenerate_shock_limit() {
        let s = derive_end_state(1.0, 0.0, 1e-12).unwrap();
        assert!(close(s.sigma(), 1.0, 1e-11));
        assert!(close(s.q_plus, s.q_minus, 1e-11));
    }

    #[test]
    fn rankine_hugoniot_residuals_vanish() {
        let s = derive_end_state(2.0, 1.0, 0.5).unwrap();
        let [r1, r2] = s.rankine_hugoniot_residuals();
        assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12, "{r1} {r2}");
        assert!(s.lax_holds());
    }

    #[test]
    fn rejects_non_positive_right_density() {
        assert!(derive_end_state(1.0, 0.0, 1.0).is_err());
        assert!(derive_end_state(1.0, 0.0, 2.0).is_err());
        assert!(derive_end_state(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn mirrored_states_are_normalized() {
        // n_- = 2, q_- = 0, eps = 1 mirrored: left (1, -1), right (2, 0).
        let (s, o) = EndStates::from_states(1.0, -1.0, 2.0, 0.0).unwrap();
        assert_eq!(o, Orientation::Mirrored);
        assert_eq!(s.n_minus, 2.0);
        assert_eq!(s.q_minus, 0.0);
        assert_eq!(s.q_plus, 1.0);
        assert!(EndStates::from_states(2.0, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn profile_midpoint_and_limits() {
        let p = WaveParams::new(2.0, 0.0, 0.1, 0.3).unwrap();
        assert!(close(p.profile_n(0.0), 1.95, 1e-15));
        assert_eq!(p.profile_n(1e9), p.n_plus());
        assert_eq!(p.profile_n(-1e9), p.n_minus());
        assert!(close(p.profile_q(-1e9), p.q_minus(), 1e-15));
        assert!(close(p.profile_q(1e9), p.q_plus(), 1e-15));
        assert!(close(
            p.profile_q(0.0),
            p.q_minus() + p.eps() / (2.0 * p.sigma()),
            1e-15
        ));
        assert!(close(
            p.profile_n_prime(0.0),
            -p.eps() * p.eps() / (4.0 * p.sigma()),
            1e-17
        ));
    }

    #[test]
    fn weight_midpoint_and_range() {
        let p = WaveParams::new(2.0, 0.0, 0.1, 0.3).unwrap();
        assert!(close(p.weight_a(0.0), 1.15, 1e-15));
        let mut prev = 0.0;
        for i in -200..=200 {
            let xi = i as f64 * p.length_scale() * 0.1;
            let a = p.weight_a(xi);
            assert!(a > 1.0 && a < 1.3);
            assert!(a > prev);
            assert!(p.weight_a_prime(xi) > 0.0);
            prev = a;
        }
    }

    #[test]
    fn y_map_inverse() {
        let p = WaveParams::new(2.0, 1.0, 0.2, 0.4).unwrap();
        assert!(close(p.y_of_xi(0.0), 0.5, 1e-16));
        let l = p.length_scale();
        for i in -500..=500 {
            let xi = i as f64 * 0.1 * l;
            let y = p.y_of_xi(xi);
            if y == 1.0 {
                // 1 - y is below half an ulp of 1; the point is not representable in y
                assert!(p.xi_of_y(y).is_err());
                continue;
            }
            let back = p.xi_of_y(y).unwrap();
            // rounding y to an ulp moves xi by l * ulp(y) / (y (1 - y))
            let conditioning = 2.0 * l * f64::EPSILON * y / (y * (1.0 - y));
            assert!(
                (back - xi).abs() <= 1e-10 * (1.0 + xi.abs()) + conditioning,
                "{xi} {back}"
            );
            if xi <= 0.0 {
                assert!((back - xi).abs() <= 1e-10 * (1.0 + xi.abs()), "{xi} {back}");
            }
        }
        assert!(p.xi_of_y(0.0).is_err());
        assert!(p.xi_of_y(1.0).is_err());
    }

    #[test]
    fn clamped_tails_do_not_overflow() {
        let p = WaveParams::new(1.0, 0.0, 0.5, 0.5).unwrap();
        for xi in [-1e300, -1e6, 1e6, 1e300] {
            assert!(p.profile_n(xi).is_finite());
            assert!(p.profile_n_second(xi).is_finite());
            assert!(p.weight_a_prime(xi) >= 0.0);
        }
    }

    #[test]
    fn sample_agrees_with_pointwise_evaluators() {
        let p = WaveParams::new(2.0, -1.0, 0.3, 0.4).unwrap();
        for i in -40..=40 {
            let xi = i as f64 * 2.5;
            let s = p.sample(xi);
            assert_eq!(s.n, p.profile_n(xi));
            assert_eq!(s.n_prime, p.profile_n_prime(xi));
            assert_eq!(s.n_second, p.profile_n_second(xi));
            assert_eq!(s.q, p.profile_q(xi));
            assert_eq!(s.a, p.weight_a(xi));
            assert_eq!(s.a_prime, p.weight_a_prime(xi));
            assert_eq!(s.a_second, p.weight_a_second(xi));
            assert_eq!(s.y, p.y_of_xi(xi));
        }
    }

    #[test]
    fn viscosity_rescales_profile() {
        let p1 = WaveParams::new(2.0, 0.0, 0.1, 0.3).unwrap();
        let p2 = WaveParams::with_viscosity(2.0, 0.0, 0.1, 0.3, 4.0).unwrap();
        for xi in [-30.0, -1.0, 0.0, 2.5, 17.0] {
            assert!(close(p2.profile_n(4.0 * xi), p1.profile_n(xi), 1e-15));
            assert!(close(p2.weight_a(4.0 * xi), p1.weight_a(xi), 1e-15));
        }
    }
}
