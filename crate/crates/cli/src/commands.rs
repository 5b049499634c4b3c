//! The four experiment commands. Each writes its files into the output directory
//! and returns a summary; failed checks surface as [`CliError::Verification`].

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use contraction_lab::functionals::{decomposition_gap, random_state, Evaluation};
use contraction_lab::grid::trapezoid;
use contraction_lab::poincare::{geometric_grid, r_poincare, scan_delta_star, ScanResult};
use contraction_lab::solver::{entropy_balance_residual, run, RunOutput, StepRecord, Verdict};
use contraction_lab::{FunctionalReport, Reference};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Format};
use crate::error::{CliError, CliResult};

/// Files written by a command and a one-line summary for the terminal.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
    pub passed: bool,
}

impl Outcome {
    /// Converts a failed check into a verification error.
    pub fn into_result(self) -> CliResult<Self> {
        if self.passed {
            Ok(self)
        } else {
            Err(CliError::Verification(self.summary))
        }
    }
}

struct Sink<'a> {
    cfg: &'a ExperimentConfig,
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl<'a> Sink<'a> {
    fn new(cfg: &'a ExperimentConfig) -> CliResult<Self> {
        let dir = cfg.output.dir.as_path();
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut s = Self {
            cfg,
            dir,
            files: Vec::new(),
        };
        s.text("config.resolved.toml", &cfg.to_toml())?;
        Ok(s)
    }

    fn text(&mut self, name: &str, body: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    /// Writes `{"config": ..., <body fields>}` when JSON output is enabled.
    fn json<T: Serialize>(&mut self, name: &str, body: &T) -> CliResult<()> {
        if !self.cfg.output.wants(Format::Json) {
            return Ok(());
        }
        let mut v = serde_json::to_value(body).expect("summary serializes");
        if let serde_json::Value::Object(map) = &mut v {
            map.insert(
                "config".into(),
                serde_json::to_value(self.cfg).expect("config serializes"),
            );
        }
        let mut s = serde_json::to_string_pretty(&v).expect("summary serializes");
        s.push('\n');
        self.text(name, &s)
    }

    /// Writes a header line and one comma-separated line per row.
    fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        if !self.cfg.output.wants(Format::Csv) {
            return Ok(());
        }
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        let write = || -> std::io::Result<()> {
            writeln!(w, "{}", header.join(","))?;
            for row in rows {
                writeln!(w, "{}", row.join(","))?;
            }
            w.flush()
        };
        write().map_err(|e| CliError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn finish(self, summary: String, passed: bool) -> Outcome {
        Outcome {
            files: self.files,
            summary,
            passed,
        }
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Clone, Serialize)]
pub struct WaveSummary {
    pub sigma: f64,
    pub sigma_minus: f64,
    pub n_minus: f64,
    pub n_plus: f64,
    pub q_minus: f64,
    pub q_plus: f64,
    pub rh_residuals: [f64; 2],
    pub lax_holds: bool,
    pub length_scale: f64,
    pub half_width: f64,
    pub num_cells: usize,
    pub max_ode_residual: f64,
    /// Lower envelope `n' >= -(eps^2/sigma_-) e^{-eps|xi|/sigma_-}` at every node.
    pub decay_lower_held: bool,
    /// Upper envelope `n' <= -(eps^2/(4 sigma_-)) e^{-eps|xi|/sigma_-}` at every node.
    pub decay_upper_held: bool,
    /// `|n''| <= (4 eps/sigma_-)|n'|` at every node.
    pub second_derivative_held: bool,
    pub integral_a_prime: f64,
    pub lambda: f64,
    pub passed: bool,
}

/// Samples the wave, its weight and the coordinate `y` on the grid.
pub fn cmd_wave(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let p = cfg.wave_params()?;
    let g = cfg.grid()?;
    let samples: Vec<_> = g.nodes().map(|x| (x, p.sample(x))).collect();
    let mut worst_ode: f64 = 0.0;
    let mut lower = true;
    let mut upper = true;
    let mut second = true;
    let (sigma, sm) = (p.sigma(), p.sigma_minus());
    let mut a_prime = Vec::with_capacity(samples.len());
    for (x, _) in &samples {
        let n = p.profile_n(*x);
        let np = p.profile_n_prime(*x);
        let ode = (n - p.n_minus()) * (n - p.n_plus()) / (p.nu() * sigma);
        worst_ode = worst_ode.max((np - ode).abs());
        let (lo, hi) = p.decay_envelope(*x);
        lower &= lo <= np;
        upper &= np <= hi;
        second &= p.profile_n_second(*x).abs() <= 4.0 * p.eps() / (p.nu() * sm) * np.abs();
        a_prime.push(p.weight_a_prime(*x));
    }
    let rh = p.end_states().rankine_hugoniot_residuals();
    let e = p.end_states();
    let summary = WaveSummary {
        sigma,
        sigma_minus: sm,
        n_minus: e.n_minus,
        n_plus: e.n_plus,
        q_minus: e.q_minus,
        q_plus: e.q_plus,
        rh_residuals: rh,
        lax_holds: e.lax_holds(),
        length_scale: p.length_scale(),
        half_width: g.xi_max(),
        num_cells: g.num_cells(),
        max_ode_residual: worst_ode,
        decay_lower_held: lower,
        decay_upper_held: upper,
        second_derivative_held: second,
        integral_a_prime: trapezoid(g.dx(), &a_prime),
        lambda: p.lambda(),
        passed: rh.iter().all(|r| r.abs() < 1e-12) && worst_ode < 1e-12 && lower && upper && second,
    };
    let mut sink = Sink::new(cfg)?;
    sink.csv(
        "wave.csv",
        &["xi", "n", "q", "n_prime", "a", "a_prime", "y"],
        samples.iter().map(|(x, s)| {
            vec![
                num(*x),
                num(s.n),
                num(s.q),
                num(s.n_prime),
                num(s.a),
                num(p.weight_a_prime(*x)),
                num(s.y),
            ]
        }),
    )?;
    sink.json("wave_summary.json", &summary)?;
    let line = format!(
        "sigma = {:.6}, sigma_- = {:.6}, RH residuals ({:.1e}, {:.1e}), int a' = {:.6} (lambda {}), bounds {}",
        summary.sigma,
        summary.sigma_minus,
        rh[0],
        rh[1],
        summary.integral_a_prime,
        summary.lambda,
        if lower && upper && second { "held" } else { "violated" }
    );
    Ok(sink.finish(line, summary.passed))
}

#[derive(Debug, Clone, Serialize)]
struct SimulateSummary<'a> {
    passed: bool,
    #[serde(flatten)]
    verdict: &'a Verdict,
    /// L1-in-time residuals of the discrete entropy balance; present with `report_stride = 1`.
    entropy_balance: Option<BalanceSummary>,
}

#[derive(Debug, Clone, Serialize)]
struct BalanceSummary {
    l1_forward: f64,
    l1_centered: f64,
}

fn record_row(r: &StepRecord) -> Vec<String> {
    let mut row = vec![
        r.step.to_string(),
        num(r.t),
        num(r.dt),
        num(r.x),
        num(r.x_dot),
        num(r.x_dot_realized),
        r.regime.as_str().to_string(),
        num(r.xdot_bound),
    ];
    row.extend(r.report.values().iter().map(|v| num(*v)));
    row
}

/// Runs the PDE with the shift and writes the time series and the verdict.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let sc = cfg.solver_config()?;
    let t_end = sc.t_end;
    let out: RunOutput = run(sc)?;
    let mut sink = Sink::new(cfg)?;
    let header: Vec<&str> = StepRecord::COLUMNS
        .iter()
        .chain(FunctionalReport::COLUMNS.iter())
        .copied()
        .collect();
    sink.csv("run.csv", &header, out.records.iter().map(record_row))?;
    if !out.snapshots.is_empty() {
        sink.csv(
            "snapshots.csv",
            &["t", "X", "xi", "n", "q"],
            out.snapshots.iter().flat_map(|s| {
                s.state
                    .grid()
                    .nodes()
                    .zip(s.state.n().values().iter().zip(s.state.q().values()))
                    .map(|(x, (n, q))| vec![num(s.t), num(s.x), num(x), num(*n), num(*q)])
                    .collect::<Vec<_>>()
            }),
        )?;
    }
    let entropy_balance = (cfg.functionals.report_stride == 1).then(|| {
        let b = entropy_balance_residual(&out.records);
        BalanceSummary {
            l1_forward: b.l1_forward(t_end),
            l1_centered: b.l1_centered(t_end),
        }
    });
    let v = &out.verdict;
    sink.json(
        "verdict.json",
        &SimulateSummary {
            passed: v.passed(),
            verdict: v,
            entropy_balance,
        },
    )?;
    let line = format!(
        "{} steps to t = {}, contraction {} (max violation {:.3e}), factor-4 {} (ratio {:.4}), shift bound {}, R_main sign {} ({} checked), lab-frame shift {:.6}",
        v.steps,
        v.final_time,
        held(v.contraction_held),
        v.max_violation,
        held(v.factor4_held),
        v.max_factor4_ratio,
        held(v.shift_bound_held),
        held(v.rmain_held),
        v.rmain_sign_profile.steps_checked,
        v.lab_frame_shift
    );
    Ok(sink.finish(line, v.passed()))
}

fn held(b: bool) -> &'static str {
    if b {
        "held"
    } else {
        "FAILED"
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityResult {
    pub name: &'static str,
    pub max_relative_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
struct IdentitiesSummary {
    passed: bool,
    n_random: usize,
    base_seed: u64,
    deltas: Vec<f64>,
    tolerance: f64,
    identities: Vec<IdentityResult>,
}

const IDENTITY_NAMES: [&str; 4] = [
    "I_bad - I_good = B_delta - G_delta",
    "Y = Y_g + Y_b + Y_l + Y_s",
    "B_delta = B1 + B2_in + B2_out + B3",
    "G_delta = G1_in + G1_out + G2 + D",
];

/// Checks the functional identities on `n_random` seeded random states.
pub fn cmd_identities(cfg: &ExperimentConfig, n_random: usize) -> CliResult<Outcome> {
    if n_random == 0 {
        return Err(CliError::Config("n_random must be positive".into()));
    }
    let p = cfg.wave_params()?;
    let g = cfg.grid()?;
    let r = Reference::new(&p, g, 0.0);
    let id = &cfg.identities;
    let [a0, a1] = id.amplitude_range;
    let per_state: Vec<[f64; 4]> = (0..n_random)
        .into_par_iter()
        .map(|k| {
            let frac = if n_random > 1 { k as f64 / (n_random - 1) as f64 } else { 0.0 };
            let u = random_state(&p, g, cfg.seed + k as u64, a0 + (a1 - a0) * frac);
            let e = Evaluation::new(&r, &u)?;
            let mut worst = [0.0f64; 4];
            for &delta in &id.deltas {
                let (b, gd) = (e.b_delta(delta), e.g_delta(delta));
                let lhs = e.i_bad() - e.i_good();
                let scale = e.i_bad().abs().max(e.i_good().abs()).max(b.abs()).max(gd.abs());
                let gap = if scale == 0.0 { 0.0 } else { (lhs - (b - gd)).abs() / scale };
                worst[0] = worst[0].max(gap);
                worst[1] = worst[1].max(decomposition_gap(e.y(), &e.y_parts(delta).as_array()));
                worst[2] = worst[2].max(decomposition_gap(b, &e.b_parts(delta).as_array()));
                worst[3] = worst[3].max(decomposition_gap(gd, &e.g_parts(delta).as_array()));
            }
            Ok(worst)
        })
        .collect::<contraction_lab::Result<_>>()?;
    let identities: Vec<IdentityResult> = IDENTITY_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let m = per_state.iter().map(|w| w[i]).fold(0.0, f64::max);
            IdentityResult {
                name,
                max_relative_error: m,
                passed: m <= id.tolerance,
            }
        })
        .collect();
    let passed = identities.iter().all(|r| r.passed);
    let line = identities
        .iter()
        .map(|r| format!("[{}] {}: {:.2e}", if r.passed { "pass" } else { "FAIL" }, r.name, r.max_relative_error))
        .collect::<Vec<_>>()
        .join("; ");
    let mut sink = Sink::new(cfg)?;
    sink.json(
        "identities.json",
        &IdentitiesSummary {
            passed,
            n_random,
            base_seed: cfg.seed,
            deltas: id.deltas.clone(),
            tolerance: id.tolerance,
            identities,
        },
    )?;
    Ok(sink.finish(line, passed))
}

#[derive(Debug, Clone, Serialize)]
struct PoincareSummary {
    passed: bool,
    /// Every sample has `R_delta <= 1e-10` at `delta_min`.
    holds_at_delta_min: bool,
    scan: ScanResult,
    /// `R_delta` of the constant `W = c` against its closed form.
    constant_check: ConstantCheck,
}

#[derive(Debug, Clone, Serialize)]
struct ConstantCheck {
    c: f64,
    delta: f64,
    numeric: f64,
    closed_form: f64,
    error: f64,
}

/// Closed form of `R_delta(c)` for a constant `W = c`.
pub fn r_constant(c: f64, delta: f64) -> f64 {
    let k = c * c + 2.0 * c;
    -k * k / delta + (1.0 + delta) * c * c + (2.0 / 3.0) * c.powi(3) + delta * c.abs().powi(3)
}

/// Scans `delta` over mixed-family samples and reports the empirical threshold.
pub fn cmd_poincare(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let pc = &cfg.poincare;
    let grid = if pc.delta_min == pc.delta_max {
        vec![pc.delta_min]
    } else {
        geometric_grid(pc.delta_min, pc.delta_max, pc.grid_points.max(2))
    };
    let scan = scan_delta_star(pc.m, pc.n_samples, &grid, cfg.seed, pc.y_cells)?;
    let (c, delta) = (0.5, pc.delta_min);
    let numeric = r_poincare(&vec![c; pc.y_cells + 1], delta)?;
    let closed_form = r_constant(c, delta);
    let error = (numeric - closed_form).abs();
    let holds = scan.pass_counts[0] == scan.n_samples;
    let passed = holds && error <= 1e-9;
    let line = format!(
        "empirical delta* = {} over {} samples (M = {}), violations at delta_min {}: {}, worst sample seed {} ({:?}) R = {:.3e} at delta {:.4}, constant case error {:.1e}",
        scan.delta_star_empirical,
        scan.n_samples,
        scan.m,
        pc.delta_min,
        scan.n_samples - scan.pass_counts[0],
        scan.worst_sample_seed,
        scan.worst_sample_family,
        scan.worst_value,
        scan.worst_delta,
        error
    );
    let mut sink = Sink::new(cfg)?;
    sink.json(
        "poincare.json",
        &PoincareSummary {
            passed,
            holds_at_delta_min: holds,
            scan,
            constant_check: ConstantCheck {
                c,
                delta,
                numeric,
                closed_form,
                error,
            },
        },
    )?;
    Ok(sink.finish(line, passed))
}
