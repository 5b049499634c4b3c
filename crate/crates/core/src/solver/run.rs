//! Lockstep integration of the PDE and the shift, with the contraction verdict.

use serde::{Deserialize, Serialize};

use super::{Solver, SolverConfig};
use crate::error::Result;
use crate::functionals::{Evaluation, FunctionalReport, Reference, State};
use crate::shift::{sample_from, Regime, ShiftIntegrator, ShiftMonitor, ShiftState};

/// Diagnostics at one time level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    /// Step taken from this time level, zero at the final time.
    pub dt: f64,
    #[serde(rename = "X")]
    pub x: f64,
    /// Right-hand side of the shift ODE at `(U, X)`.
    #[serde(rename = "X_dot")]
    pub x_dot: f64,
    /// `(X(t + dt) - X(t)) / dt`, zero at the final time.
    #[serde(rename = "X_dot_realized")]
    pub x_dot_realized: f64,
    pub regime: Regime,
    /// `(1/eps^2)(2|I_bad| + 1)`
    pub xdot_bound: f64,
    pub report: FunctionalReport,
}

impl StepRecord {
    /// Leading CSV columns, followed by [`FunctionalReport::COLUMNS`].
    pub const COLUMNS: [&'static str; 8] = [
        "step",
        "t",
        "dt",
        "X",
        "X_dot",
        "X_dot_realized",
        "regime",
        "xdot_bound",
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub x: f64,
    pub state: State,
}

/// Sign record of `R_main` over the steps with `|Y| <= eps^2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RMainProfile {
    pub steps_checked: usize,
    pub steps_positive: usize,
    pub max_value: Option<f64>,
    pub first_positive_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// Every per-step increase of the weighted entropy is within `violation_tolerance`.
    pub contraction_held: bool,
    pub max_violation: f64,
    pub violation_tolerance: f64,
    /// `E(t) + delta0 int_0^t D <= E(0) + tolerance` at every step.
    pub dissipation_augmented_held: bool,
    pub max_dissipation_violation: f64,
    /// Unweighted entropy never exceeds four times its initial value.
    pub factor4_held: bool,
    pub max_factor4_ratio: f64,
    pub shift_bound_held: bool,
    #[serde(rename = "Rmain_sign_profile")]
    pub rmain_sign_profile: RMainProfile,
    pub rmain_held: bool,
    pub initial_entropy: f64,
    pub final_entropy: f64,
    pub final_time: f64,
    pub steps: usize,
    pub final_shift: f64,
    /// `sigma t - X(t)` at the final time.
    pub lab_frame_shift: f64,
    pub shift_monitor: ShiftMonitor,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.contraction_held
            && self.dissipation_augmented_held
            && self.factor4_held
            && self.shift_bound_held
            && self.rmain_held
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: State,
    pub shift: ShiftState,
    pub verdict: Verdict,
}

struct Tracker {
    tol: f64,
    delta0: f64,
    e0: f64,
    eta0: f64,
    prev: Option<(f64, f64)>,
    integral_d: f64,
    max_violation: f64,
    max_diss: f64,
    max_ratio: f64,
    shift_bound_ok: bool,
    rmain: RMainProfile,
}

impl Tracker {
    fn observe(&mut self, t: f64, dt_prev: f64, rep: &FunctionalReport, eps: f64, bound_ok: bool) {
        let e = rep.eta_weighted;
        match self.prev {
            None => {
                self.e0 = e;
                self.eta0 = rep.eta_unweighted;
            }
            Some((e_prev, d_prev)) => {
                self.max_violation = self.max_violation.max(e - e_prev);
                self.integral_d += 0.5 * dt_prev * (d_prev + rep.d);
            }
        }
        self.prev = Some((e, rep.d));
        self.max_diss = self
            .max_diss
            .max(e + self.delta0 * self.integral_d - self.e0);
        if self.eta0 > 0.0 {
            self.max_ratio = self.max_ratio.max(rep.eta_unweighted / self.eta0);
        } else if rep.eta_unweighted > 0.0 {
            self.max_ratio = f64::INFINITY;
        }
        self.shift_bound_ok &= bound_ok;
        if rep.y.abs() <= eps * eps {
            let p = &mut self.rmain;
            p.steps_checked += 1;
            p.max_value = Some(p.max_value.map_or(rep.r_main, |m| m.max(rep.r_main)));
            if rep.r_main > 0.0 {
                p.steps_positive += 1;
                p.first_positive_time.get_or_insert(t);
            }
        }
    }
}

impl Solver {
    /// Integrates PDE and shift ODE to `t_end`.
    pub fn run(&mut self) -> Result<RunOutput> {
        let cfg = self.config.clone();
        let params = cfg.params;
        let grid = cfg.grid;
        let eps = params.eps();
        let init = self.initial_state()?;
        let (nf, qf) = init.into_parts();
        let mut n = nf.into_values();
        let mut q = qf.into_values();
        let mut shift = ShiftState::default();
        let mut integ = ShiftIntegrator::new(cfg.shift_substeps);
        let mut tr = Tracker {
            tol: cfg.violation_tolerance,
            delta0: cfg.delta0,
            e0: 0.0,
            eta0: 0.0,
            prev: None,
            integral_d: 0.0,
            max_violation: 0.0,
            max_diss: 0.0,
            max_ratio: 0.0,
            shift_bound_ok: true,
            rmain: RMainProfile::default(),
        };
        let mut records = Vec::new();
        let mut snapshots = Vec::new();
        let mut t = 0.0;
        let mut k = 0usize;
        let mut dt_prev = 0.0;
        loop {
            let state = State::from_values(grid, n.clone(), q.clone())?;
            let r = Reference::new(&params, grid, shift.x);
            let ev = Evaluation::new(&r, &state)?;
            let report = FunctionalReport::from_evaluation(&ev, cfg.delta0, cfg.delta1);
            let sample = sample_from(&ev);
            tr.observe(t, dt_prev, &report, eps, sample.within_bound());

            let remaining = cfg.t_end - t;
            let done = remaining <= 1e-12 * cfg.t_end;
            let dt = if done {
                0.0
            } else {
                let dt = self.dt_for(&state);
                if dt >= remaining * (1.0 - 1e-9) {
                    remaining
                } else {
                    dt
                }
            };
            let keep = done || k % cfg.report_stride == 0;
            let mut record = StepRecord {
                step: k,
                t,
                dt,
                x: shift.x,
                x_dot: sample.x_dot,
                x_dot_realized: 0.0,
                regime: sample.regime,
                xdot_bound: sample.bound,
                report,
            };
            if cfg.snapshot_stride.is_some_and(|s| k % s == 0) {
                snapshots.push(Snapshot {
                    t,
                    x: shift.x,
                    state: state.clone(),
                });
            }
            if done {
                records.push(record);
                let verdict = Verdict {
                    contraction_held: tr.max_violation <= tr.tol,
                    max_violation: tr.max_violation,
                    violation_tolerance: tr.tol,
                    dissipation_augmented_held: tr.max_diss <= tr.tol,
                    max_dissipation_violation: tr.max_diss,
                    factor4_held: tr.max_ratio <= 4.0,
                    max_factor4_ratio: tr.max_ratio,
                    shift_bound_held: tr.shift_bound_ok && integ.monitor.bound_violations == 0,
                    rmain_sign_profile: tr.rmain,
                    rmain_held: tr.rmain.steps_positive == 0,
                    initial_entropy: tr.e0,
                    final_entropy: report.eta_weighted,
                    final_time: t,
                    steps: k,
                    final_shift: shift.x,
                    lab_frame_shift: params.sigma() * t - shift.x,
                    shift_monitor: integ.monitor,
                };
                return Ok(RunOutput {
                    records,
                    snapshots,
                    final_state: state,
                    shift,
                    verdict,
                });
            }

            let (next, _) = integ.advance_from(sample, &state, dt, &params, t)?;
            record.x_dot_realized = (next.x - shift.x) / dt;
            if keep {
                records.push(record);
            }
            self.step_in_place(&mut n, &mut q, dt, t)?;
            shift = next;
            t = if dt == remaining { cfg.t_end } else { t + dt };
            dt_prev = dt;
            k += 1;
        }
    }
}

/// Builds the solver and runs it.
pub fn run(config: SolverConfig) -> Result<RunOutput> {
    Solver::new(config)?.run()
}

/// Discrete residual of the weighted entropy balance
/// `dE/dt = X' Y + I_bad - I_good` along consecutive records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceResidual {
    pub times: Vec<f64>,
    /// Right-hand side at the left time level.
    pub forward: Vec<f64>,
    /// Right-hand side averaged over both time levels.
    pub centered: Vec<f64>,
}

impl BalanceResidual {
    /// `sum |r_k| dt_k` over the steps.
    pub fn l1(values: &[f64], times: &[f64], t_end: f64) -> f64 {
        values
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let next = times.get(k + 1).copied().unwrap_or(t_end);
                r.abs() * (next - times[k])
            })
            .sum()
    }

    pub fn l1_forward(&self, t_end: f64) -> f64 {
        Self::l1(&self.forward, &self.times, t_end)
    }

    pub fn l1_centered(&self, t_end: f64) -> f64 {
        Self::l1(&self.centered, &self.times, t_end)
    }
}

/// Residuals from records taken at every step (`report_stride = 1`); the shift
/// velocity is the realized one, `(X(t + dt) - X(t)) / dt`.
pub fn entropy_balance_residual(records: &[StepRecord]) -> BalanceResidual {
    let mut out = BalanceResidual {
        times: Vec::new(),
        forward: Vec::new(),
        centered: Vec::new(),
    };
    for w in records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let dt = b.t - a.t;
        if !(dt > 0.0) || b.step != a.step + 1 {
            continue;
        }
        let de = (b.report.eta_weighted - a.report.eta_weighted) / dt;
        let v = a.x_dot_realized;
        let ra = &a.report;
        let rb = &b.report;
        let f = v * ra.y + ra.i_bad - ra.i_good;
        let c = v * 0.5 * (ra.y + rb.y) + 0.5 * ((ra.i_bad - ra.i_good) + (rb.i_bad - rb.i_good));
        out.times.push(a.t);
        out.forward.push(de - f);
        out.centered.push(de - c);
    }
    out
}
