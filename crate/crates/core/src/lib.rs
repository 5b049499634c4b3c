//! Numerical laboratory for the weighted relative-entropy contraction of viscous
//! shocks in the Cole-Hopf transformed Keller-Segel system
//!
//! ```text
//! n_t - sigma n_xi - (n q)_xi = nu n_xixi,    q_t - sigma q_xi - n_xi = 0
//! ```
//!
//! written in the frame moving with the shock. The crate builds the exact
//! traveling wave, evolves perturbations of it, integrates the shift ODE and
//! evaluates the functionals entering the contraction estimate.

pub mod error;
pub mod functionals;
pub mod grid;
pub mod poincare;
pub mod shift;
pub mod solver;
pub mod wave;

pub use error::{LabError, Result};
pub use functionals::{FunctionalReport, Reference, State};
pub use grid::{Grid, GridField};
pub use shift::{phi_eps, Regime, ShiftState};
pub use solver::{DiffusionMode, PerturbationKind, PerturbationSpec, Solver, SolverConfig};
pub use wave::{derive_end_state, EndStates, WaveParams};
