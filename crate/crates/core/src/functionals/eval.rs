//! Nodewise integrands of every functional, sharing one pass over the state.

use serde::{Deserialize, Serialize};

use super::relative::pi_rel_unchecked;
use super::state::{Reference, State};
use crate::error::{domain, Result};
use crate::grid::{ddx_central_slice, GridField, NeumaierSum};

/// The five density-only functionals of the expansion near the wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFunctionals {
    pub y_g: f64,
    pub i1: f64,
    pub i2: f64,
    pub g2: f64,
    pub d: f64,
}

/// `Y = Y_g + Y_b + Y_l + Y_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YParts {
    pub y_g: f64,
    pub y_b: f64,
    pub y_l: f64,
    pub y_s: f64,
}

/// `B = B1 + B2_in + B2_out + B3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BParts {
    pub b1: f64,
    pub b2_in: f64,
    pub b2_out: f64,
    pub b3: f64,
}

/// `G = G1_in + G1_out + G2 + D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GParts {
    pub g1_in: f64,
    pub g1_out: f64,
    pub g2: f64,
    pub d: f64,
}

impl YParts {
    pub fn sum(&self) -> f64 {
        self.y_g + self.y_b + self.y_l + self.y_s
    }
    pub fn as_array(&self) -> [f64; 4] {
        [self.y_g, self.y_b, self.y_l, self.y_s]
    }
}
impl BParts {
    pub fn sum(&self) -> f64 {
        self.b1 + self.b2_in + self.b2_out + self.b3
    }
    pub fn as_array(&self) -> [f64; 4] {
        [self.b1, self.b2_in, self.b2_out, self.b3]
    }
}
impl GParts {
    pub fn sum(&self) -> f64 {
        self.g1_in + self.g1_out + self.g2 + self.d
    }
    pub fn as_array(&self) -> [f64; 4] {
        [self.g1_in, self.g1_out, self.g2, self.d]
    }
}

/// A state (or a bare density) paired with reference objects, with every
/// nodewise ingredient precomputed.
#[derive(Debug, Clone)]
pub struct Evaluation<'a> {
    r: &'a Reference,
    n: &'a [f64],
    /// `n - n~`
    dn: Vec<f64>,
    /// `n / n~ - 1`
    ratio: Vec<f64>,
    pi: Vec<f64>,
    /// `1 + (eps/lambda) a / n~`
    k: Vec<f64>,
    phi: Vec<f64>,
    log_ratio: Vec<f64>,
    dlog: Vec<f64>,
    /// `q - q~`, zero for density-only evaluations
    dq: Vec<f64>,
}

impl<'a> Evaluation<'a> {
    pub fn new(r: &'a Reference, u: &'a State) -> Result<Self> {
        let mut e = Self::density_only(r, u.n())?;
        e.dq = u
            .q()
            .values()
            .iter()
            .zip(&r.q)
            .map(|(q, qt)| q - qt)
            .collect();
        Ok(e)
    }

    pub fn density_only(r: &'a Reference, n: &'a GridField) -> Result<Self> {
        if *n.grid() != r.grid {
            return domain("state and reference live on different grids");
        }
        let n = n.values();
        if let Some(i) = n.iter().position(|&v| v <= 0.0) {
            return domain(format!("density {} at node {i} is not positive", n[i]));
        }
        let p = &r.params;
        let el = p.eps_over_lambda();
        let sigma = p.sigma();
        let m = n.len();
        let mut e = Self {
            r,
            n,
            dn: Vec::with_capacity(m),
            ratio: Vec::with_capacity(m),
            pi: Vec::with_capacity(m),
            k: Vec::with_capacity(m),
            phi: Vec::with_capacity(m),
            log_ratio: Vec::with_capacity(m),
            dlog: vec![0.0; m],
            dq: vec![0.0; m],
        };
        for i in 0..m {
            let nt = r.n[i];
            let dn = n[i] - nt;
            let ratio = dn / nt;
            let pi = pi_rel_unchecked(n[i], nt);
            let k = 1.0 + el * r.a[i] / nt;
            e.dn.push(dn);
            e.ratio.push(ratio);
            e.pi.push(pi);
            e.k.push(k);
            e.phi.push((pi + k * dn) / sigma);
            e.log_ratio.push(ratio.ln_1p());
        }
        ddx_central_slice(r.grid.dx(), &e.log_ratio, &mut e.dlog);
        Ok(e)
    }

    pub fn reference(&self) -> &Reference {
        self.r
    }

    fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        let m = self.n.len();
        let mut acc = NeumaierSum::default();
        acc.add(0.5 * f(0));
        for i in 1..m - 1 {
            acc.add(f(i));
        }
        acc.add(0.5 * f(m - 1));
        self.r.grid.dx() * acc.value()
    }

    fn inside(&self, i: usize, delta: f64) -> bool {
        self.ratio[i].abs() <= delta
    }

    fn eta(&self, i: usize) -> f64 {
        0.5 * self.dq[i] * self.dq[i] + self.pi[i]
    }

    /// `-a' (q - q~)(Pi + k (n - n~))`, the hyperbolic coupling.
    fn coupling(&self, i: usize) -> f64 {
        -self.r.a_prime[i] * (self.pi[i] + self.k[i] * self.dn[i]) * self.dq[i]
    }

    fn transport(&self, i: usize) -> f64 {
        -self.r.a_prime[i] * self.r.q[i] * self.pi[i]
    }

    /// `nu (a n~'/n~ - a') n log(n/n~) d log(n/n~)`, with `a n~'/n~ - a' = -a' k`.
    fn cross_log(&self, i: usize) -> f64 {
        -self.r.params.nu()
            * self.r.a_prime[i]
            * self.k[i]
            * self.n[i]
            * self.log_ratio[i]
            * self.dlog[i]
    }

    fn curvature(&self, i: usize) -> f64 {
        self.r.params.nu() * self.r.a[i] * self.r.n_second[i] / self.r.n[i] * self.pi[i]
    }

    fn dissipation_density(&self, i: usize) -> f64 {
        self.r.params.nu() * self.r.a[i] * self.n[i] * self.dlog[i] * self.dlog[i]
    }

    fn y_linear(&self, i: usize) -> f64 {
        let r = self.r;
        -r.params.eps_over_lambda()
            * r.a[i]
            * r.a_prime[i]
            * (self.ratio[i] - self.dq[i] / r.params.sigma())
    }

    /// `int a eta(U | U~)`
    pub fn eta_weighted(&self) -> f64 {
        self.integrate(|i| self.r.a[i] * self.eta(i))
    }

    /// `int eta(U | U~)`
    pub fn eta_unweighted(&self) -> f64 {
        self.integrate(|i| self.eta(i))
    }

    pub fn y(&self) -> f64 {
        self.integrate(|i| -self.r.a_prime[i] * self.eta(i) + self.y_linear(i))
    }

    pub fn i_bad(&self) -> f64 {
        self.integrate(|i| {
            self.coupling(i) + self.transport(i) + self.cross_log(i) + self.curvature(i)
        })
    }

    pub fn i_good(&self) -> f64 {
        let sigma = self.r.params.sigma();
        self.integrate(|i| {
            sigma * self.r.a_prime[i] * self.eta(i) + self.dissipation_density(i)
        })
    }

    pub fn dissipation(&self) -> f64 {
        self.integrate(|i| self.dissipation_density(i))
    }

    pub fn b_delta(&self, delta: f64) -> f64 {
        let sigma = self.r.params.sigma();
        self.integrate(|i| {
            let local = if self.inside(i, delta) {
                0.5 * sigma * self.r.a_prime[i] * self.phi[i] * self.phi[i]
            } else {
                self.coupling(i)
            };
            self.transport(i) + local + self.cross_log(i) + self.curvature(i)
        })
    }

    pub fn g_delta(&self, delta: f64) -> f64 {
        let sigma = self.r.params.sigma();
        self.integrate(|i| {
            let ap = self.r.a_prime[i];
            let local = if self.inside(i, delta) {
                let s = self.dq[i] + self.phi[i];
                0.5 * sigma * ap * s * s
            } else {
                0.5 * sigma * ap * self.dq[i] * self.dq[i]
            };
            local + sigma * ap * self.pi[i] + self.dissipation_density(i)
        })
    }

    pub fn y_parts(&self, delta: f64) -> YParts {
        let p = &self.r.params;
        let el = p.eps_over_lambda();
        let sigma = p.sigma();
        let ins = |i: usize| if self.inside(i, delta) { 1.0 } else { 0.0 };
        let y_g = self.integrate(|i| {
            let ap = self.r.a_prime[i];
            let phi = self.phi[i];
            ins(i)
                * (-ap * (0.5 * phi * phi + self.pi[i])
                    - el * self.r.a[i] * ap * (self.ratio[i] + phi / sigma))
        });
        let y_b = self.integrate(|i| {
            let ap = self.r.a_prime[i];
            let s = self.dq[i] + self.phi[i];
            ins(i) * (-0.5 * ap * s * s + ap * self.phi[i] * s)
        });
        let y_l = self.integrate(|i| {
            ins(i) * el / sigma * self.r.a[i] * self.r.a_prime[i] * (self.dq[i] + self.phi[i])
        });
        let y_s = self.integrate(|i| {
            (1.0 - ins(i)) * (-self.r.a_prime[i] * self.eta(i) + self.y_linear(i))
        });
        YParts { y_g, y_b, y_l, y_s }
    }

    pub fn b_parts(&self, delta: f64) -> BParts {
        let sigma = self.r.params.sigma();
        BParts {
            b1: self.integrate(|i| self.transport(i) + self.curvature(i)),
            b2_in: self.integrate(|i| {
                if self.inside(i, delta) {
                    0.5 * sigma * self.r.a_prime[i] * self.phi[i] * self.phi[i]
                } else {
                    0.0
                }
            }),
            b2_out: self.integrate(|i| {
                if self.inside(i, delta) {
                    0.0
                } else {
                    self.coupling(i)
                }
            }),
            b3: self.integrate(|i| self.cross_log(i)),
        }
    }

    pub fn g_parts(&self, delta: f64) -> GParts {
        let sigma = self.r.params.sigma();
        GParts {
            g1_in: self.integrate(|i| {
                if self.inside(i, delta) {
                    let s = self.dq[i] + self.phi[i];
                    0.5 * sigma * self.r.a_prime[i] * s * s
                } else {
                    0.0
                }
            }),
            g1_out: self.integrate(|i| {
                if self.inside(i, delta) {
                    0.0
                } else {
                    0.5 * sigma * self.r.a_prime[i] * self.dq[i] * self.dq[i]
                }
            }),
            g2: self.integrate(|i| sigma * self.r.a_prime[i] * self.pi[i]),
            d: self.dissipation(),
        }
    }

    /// Density-only functionals over the whole line.
    pub fn expansion(&self) -> ExpansionFunctionals {
        let p = &self.r.params;
        let el = p.eps_over_lambda();
        let sigma = p.sigma();
        ExpansionFunctionals {
            y_g: self.integrate(|i| {
                let ap = self.r.a_prime[i];
                let phi = self.phi[i];
                -ap * (0.5 * phi * phi + self.pi[i])
                    - el * self.r.a[i] * ap * (self.ratio[i] + phi / sigma)
            }),
            i1: self.integrate(|i| self.transport(i) + self.curvature(i)),
            i2: self.integrate(|i| 0.5 * sigma * self.r.a_prime[i] * self.phi[i] * self.phi[i]),
            g2: self.integrate(|i| sigma * self.r.a_prime[i] * self.pi[i]),
            d: self.dissipation(),
        }
    }

    /// Largest `|n/n~ - 1|` over the grid.
    pub fn max_ratio_deviation(&self) -> f64 {
        self.ratio.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Nodes where `|n/n~ - 1| <= delta`.
    pub fn inside_count(&self, delta: f64) -> usize {
        (0..self.n.len()).filter(|&i| self.inside(i, delta)).count()
    }
}

/// `-|Y|^2/eps^4 + B + delta0 (eps/lambda)|B| - G + delta0 D`.
pub fn r_main_from_parts(eps: f64, eps_over_lambda: f64, y: f64, b: f64, g: f64, d: f64, delta0: f64) -> f64 {
    -y * y / eps.powi(4) + b + delta0 * eps_over_lambda * b.abs() - g + delta0 * d
}

/// `-|Y_g|^2/(eps delta) + (I1+I2) + delta (eps/lambda)(|I1|+|I2|) - (1 - delta eps/lambda) G2 - (1-delta) D`.
pub fn r_eps_delta_from_parts(eps: f64, eps_over_lambda: f64, e: &ExpansionFunctionals, delta: f64) -> f64 {
    -e.y_g * e.y_g / (eps * delta) + (e.i1 + e.i2) + delta * eps_over_lambda * (e.i1.abs() + e.i2.abs())
        - (1.0 - delta * eps_over_lambda) * e.g2
        - (1.0 - delta) * e.d
}
