//! Strict TOML experiment configuration with dot-path overrides.

use std::path::{Path, PathBuf};

use contraction_lab::functionals::{DEFAULT_DELTA0, DEFAULT_DELTA1};
use contraction_lab::poincare::DEFAULT_Y_CELLS;
use contraction_lab::{DiffusionMode, Grid, PerturbationSpec, SolverConfig, WaveParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveSection {
    pub n_minus: f64,
    pub q_minus: f64,
    pub eps: f64,
    pub lambda: f64,
    pub nu: f64,
}

impl Default for WaveSection {
    fn default() -> Self {
        Self {
            n_minus: 2.0,
            q_minus: 0.0,
            eps: 0.1,
            lambda: 0.3,
            nu: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Half-width of the domain in units of `nu sigma / eps`.
    pub half_width_factor: f64,
    pub num_cells: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            half_width_factor: 30.0,
            num_cells: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub t_end: f64,
    pub cfl: f64,
    pub diffusion_mode: DiffusionMode,
    pub fixed_dt: Option<f64>,
    pub well_balanced: bool,
    pub dissipation: f64,
    pub violation_tolerance: f64,
    pub snapshot_stride: Option<usize>,
    /// The top-level `seed` replaces `perturbation.seed`.
    pub perturbation: PerturbationSpec,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            cfl: 0.4,
            diffusion_mode: DiffusionMode::Implicit,
            fixed_dt: None,
            well_balanced: true,
            dissipation: 0.05,
            violation_tolerance: 1e-7,
            snapshot_stride: None,
            perturbation: PerturbationSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShiftSection {
    pub substeps: usize,
}

impl Default for ShiftSection {
    fn default() -> Self {
        Self { substeps: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FunctionalsSection {
    pub delta0: f64,
    pub delta1: f64,
    pub report_stride: usize,
}

impl Default for FunctionalsSection {
    fn default() -> Self {
        Self {
            delta0: DEFAULT_DELTA0,
            delta1: DEFAULT_DELTA1,
            report_stride: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

impl OutputSection {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesSection {
    pub n_random: usize,
    /// Perturbation amplitudes run linearly from the first to the second value over the states.
    pub amplitude_range: [f64; 2],
    pub deltas: Vec<f64>,
    pub tolerance: f64,
}

impl Default for IdentitiesSection {
    fn default() -> Self {
        Self {
            n_random: 100,
            amplitude_range: [0.02, 1.52],
            deltas: vec![0.05, 0.25, 0.49],
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoincareSection {
    #[serde(rename = "M")]
    pub m: f64,
    pub n_samples: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub grid_points: usize,
    pub y_cells: usize,
}

impl Default for PoincareSection {
    fn default() -> Self {
        Self {
            m: 1.0,
            n_samples: 1000,
            delta_min: 1e-3,
            delta_max: 0.45,
            grid_points: 25,
            y_cells: DEFAULT_Y_CELLS,
        }
    }
}

/// Everything an experiment reads; every field has a default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seeds the perturbation, the identity states and the Poincare samples.
    pub seed: u64,
    pub wave: WaveSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub shift: ShiftSection,
    pub functionals: FunctionalsSection,
    pub output: OutputSection,
    pub identities: IdentitiesSection,
    pub poincare: PoincareSection,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    /// Parses TOML text; errors carry the line and column of the offending key.
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    /// Reads `path` (defaults when `None`), applies `KEY=VALUE` overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| config_err(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| config_err(format!("{}: {e}", path.map_or("<defaults>".into(), |p| p.display().to_string()))))?;
        if !overrides.is_empty() {
            cfg = cfg.with_overrides(overrides)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies dot-path overrides such as `solver.cfl=0.3`; values are parsed as
    /// TOML and fall back to plain strings.
    pub fn with_overrides(&self, overrides: &[String]) -> CliResult<Self> {
        let mut root = toml::Table::try_from(self).map_err(|e| config_err(e.to_string()))?;
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| config_err(format!("override `{item}` is not KEY=VALUE")))?;
            let key = key.trim();
            let raw = raw.trim();
            let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.to_string()));
            let parts: Vec<&str> = key.split('.').collect();
            if parts.iter().any(|p| p.is_empty()) {
                return Err(config_err(format!("override key `{key}` has an empty segment")));
            }
            let mut table = &mut root;
            for part in &parts[..parts.len() - 1] {
                let entry = table
                    .entry(part.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()));
                table = entry
                    .as_table_mut()
                    .ok_or_else(|| config_err(format!("override `{key}`: `{part}` is not a table")))?;
            }
            table.insert(parts[parts.len() - 1].to_string(), value);
        }
        toml::Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| config_err(format!("after overrides: {}", e.message())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn wave_params(&self) -> CliResult<WaveParams> {
        let w = &self.wave;
        WaveParams::with_viscosity(w.n_minus, w.q_minus, w.eps, w.lambda, w.nu)
            .map_err(|e| config_err(format!("[wave] {e}")))
    }

    pub fn grid(&self) -> CliResult<Grid> {
        let p = self.wave_params()?;
        let g = &self.grid;
        if !(g.half_width_factor > 0.0 && g.half_width_factor.is_finite()) {
            return Err(config_err(format!(
                "[grid] half_width_factor must be positive, got {}",
                g.half_width_factor
            )));
        }
        Grid::symmetric(g.half_width_factor * p.length_scale(), g.num_cells)
            .map_err(|e| config_err(format!("[grid] {e}")))
    }

    pub fn solver_config(&self) -> CliResult<SolverConfig> {
        let mut c = SolverConfig::new(self.wave_params()?, self.grid()?, self.solver.t_end);
        let s = &self.solver;
        c.cfl = s.cfl;
        c.diffusion_mode = s.diffusion_mode;
        c.fixed_dt = s.fixed_dt;
        c.well_balanced = s.well_balanced;
        c.dissipation = s.dissipation;
        c.violation_tolerance = s.violation_tolerance;
        c.snapshot_stride = s.snapshot_stride;
        c.perturbation = s.perturbation.clone();
        c.perturbation.seed = self.seed;
        c.shift_substeps = self.shift.substeps;
        c.delta0 = self.functionals.delta0;
        c.delta1 = self.functionals.delta1;
        c.report_stride = self.functionals.report_stride;
        c.validate().map_err(|e| config_err(format!("[solver] {e}")))?;
        Ok(c)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.solver_config()?;
        if !(self.solver.violation_tolerance >= 0.0) {
            return Err(config_err("[solver] violation_tolerance must be non-negative"));
        }
        if self.output.formats.is_empty() {
            return Err(config_err("[output] formats must name at least one of csv, json"));
        }
        let id = &self.identities;
        if id.n_random == 0 {
            return Err(config_err("[identities] n_random must be positive"));
        }
        let [a0, a1] = id.amplitude_range;
        if !(a0 >= 0.0 && a1 >= a0 && a1.is_finite()) {
            return Err(config_err("[identities] amplitude_range must be ordered and non-negative"));
        }
        if id.deltas.is_empty() || id.deltas.iter().any(|&d| !(d > 0.0 && d < 0.5)) {
            return Err(config_err("[identities] deltas must be non-empty and lie in (0, 1/2)"));
        }
        if !(id.tolerance > 0.0) {
            return Err(config_err("[identities] tolerance must be positive"));
        }
        let pc = &self.poincare;
        if !(pc.m > 0.0 && pc.m.is_finite()) {
            return Err(config_err("[poincare] M must be positive"));
        }
        if pc.n_samples == 0 || pc.grid_points == 0 || pc.y_cells < 8 {
            return Err(config_err(
                "[poincare] n_samples and grid_points must be positive and y_cells at least 8",
            ));
        }
        if !(pc.delta_min > 0.0 && pc.delta_min <= pc.delta_max && pc.delta_max < 1.0) {
            return Err(config_err("[poincare] need 0 < delta_min <= delta_max < 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.wave.eps, 0.1);
        assert_eq!(c.grid.half_width_factor, 30.0);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = ExperimentConfig::from_toml("[wave]\nn_minus = 2.0\nepsilon = 0.1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("epsilon"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn overrides_follow_dot_paths() {
        let c = ExperimentConfig::default()
            .with_overrides(&[
                "solver.cfl=0.25".into(),
                "wave.eps = 0.05".into(),
                "solver.perturbation.kind=none".into(),
                "output.formats=[\"json\"]".into(),
                "poincare.M=2".into(),
                "solver.fixed_dt=0.01".into(),
            ])
            .unwrap();
        assert_eq!(c.solver.cfl, 0.25);
        assert_eq!(c.wave.eps, 0.05);
        assert_eq!(c.solver.perturbation.kind, contraction_lab::PerturbationKind::None);
        assert_eq!(c.output.formats, vec![Format::Json]);
        assert_eq!(c.poincare.m, 2.0);
        assert_eq!(c.solver.fixed_dt, Some(0.01));
    }

    #[test]
    fn bad_overrides_are_config_errors() {
        let base = ExperimentConfig::default();
        for bad in ["solver.cfl", "solver.nope=1", "wave.eps.x=1", "solver..cfl=1", "wave.eps=abc"] {
            let err = base.with_overrides(&[bad.into()]).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}: {err}");
        }
    }

    #[test]
    fn invalid_values_fail_validation() {
        let base = ExperimentConfig::default();
        for o in [
            "wave.eps=0",
            "wave.eps=3",
            "wave.nu=-1",
            "grid.num_cells=2",
            "grid.half_width_factor=0",
            "solver.cfl=2",
            "functionals.delta1=0.6",
            "shift.substeps=0",
            "identities.n_random=0",
            "identities.deltas=[0.7]",
            "poincare.delta_min=0.5",
            "output.formats=[]",
        ] {
            let c = base.with_overrides(&[o.into()]).unwrap();
            assert!(c.validate().is_err(), "{o}");
        }
    }

    #[test]
    fn seed_feeds_the_perturbation() {
        let mut c = ExperimentConfig::default();
        c.seed = 17;
        assert_eq!(c.solver_config().unwrap().perturbation.seed, 17);
    }
}
