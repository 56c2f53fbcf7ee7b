//! Run configuration: one TOML document with global blocks and one block per command.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use prespa_core::budget::{ActiveQecParams, PassiveInputs};
use prespa_core::heating::ReadoutCalib;
use prespa_core::hilbert::ModeDims;
use prespa_core::model::{DriveConfig, EffectiveOptions, ModelOptions, SystemParams};
use prespa_core::solver::{SolverOptions, TimeGrid};
use prespa_core::tomography::WignerGrid;
use prespa_core::Error;

pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemParams,
    pub drives: DriveConfig,
    pub dims: ModeDims,
    pub solver: SolverOptions,
    pub simulate: SimulateBlock,
    pub sweep: SweepBlock,
    pub lifetime: LifetimeBlock,
    pub budget: BudgetBlock,
    pub wigner: WignerBlock,
    pub plan: PlanBlock,
    pub heating: HeatingBlock,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulateMode {
    #[default]
    Conversion,
    Logical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateBlock {
    pub mode: SimulateMode,
    /// Even Fock states to start from in conversion mode.
    pub initial_fock: Vec<usize>,
    pub grid: TimeGrid,
    pub options: ModelOptions,
    /// Logical mode: code, correction rate and truncation come from `[lifetime]`.
    pub logical_grid: TimeGrid,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        SimulateBlock {
            mode: SimulateMode::Conversion,
            initial_fock: vec![0, 2, 4],
            grid: TimeGrid { t_start: 0.0, t_end: 15.0, n_points: 151 },
            options: ModelOptions::default(),
            logical_grid: TimeGrid { t_start: 0.0, t_end: 400.0, n_points: 81 },
        }
    }
}

/// Ranges are fractions of the angular reservoir linewidth `κ = 2π κ_r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    pub n_grid: usize,
    pub omega1_range: [f64; 2],
    pub omega2_range: [f64; 2],
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock { n_grid: 200, omega1_range: [0.25 / 200.0, 0.25], omega2_range: [0.5 / 200.0, 0.5] }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeChoice {
    #[default]
    Binomial,
    Fock01,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LifetimeBlock {
    pub code: CodeChoice,
    /// 1/µs; zero disables the correction.
    pub kappa_cor: f64,
    pub n_cav: usize,
    pub grid: TimeGrid,
    /// Fit window in µs; whole grid when absent.
    pub window: Option<[f64; 2]>,
    pub options: EffectiveOptions,
}

impl Default for LifetimeBlock {
    fn default() -> Self {
        LifetimeBlock {
            code: CodeChoice::Binomial,
            kappa_cor: 0.25,
            n_cav: 12,
            grid: TimeGrid { t_start: 0.0, t_end: 600.0, n_points: 121 },
            window: None,
            options: EffectiveOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetBlock {
    pub passive: PassiveInputs,
    pub active: ActiveQecParams,
    pub active_nbar: f64,
    /// Also report the recovery loss extracted from the effective model.
    pub simulate_recovery: bool,
    pub recovery_n_cav: usize,
}

impl Default for BudgetBlock {
    fn default() -> Self {
        BudgetBlock {
            passive: PassiveInputs::default(),
            active: ActiveQecParams::default(),
            active_nbar: 3.0,
            simulate_recovery: false,
            recovery_n_cav: 12,
        }
    }
}

/// A cardinal state of the binomial code, optionally evolved under the
/// effective model for `time_us` before the Wigner function is taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerBlock {
    pub state: String,
    pub n_cav: usize,
    pub time_us: f64,
    pub kappa_cor: f64,
    pub grid: WignerGrid,
}

impl Default for WignerBlock {
    fn default() -> Self {
        WignerBlock { state: "+Z".into(), n_cav: 10, time_us: 0.0, kappa_cor: 0.25, grid: WignerGrid::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanBlock {
    pub guard_mhz: f64,
}

impl Default for PlanBlock {
    fn default() -> Self {
        PlanBlock { guard_mhz: 5.0 }
    }
}

/// Population data for the heating fit. With `calib` set the file holds raw
/// readouts `pump_time_us, d1, d2, d3, d4` instead of populations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatingBlock {
    pub data: Option<PathBuf>,
    pub t1ge: f64,
    pub t1ef: f64,
    pub calib: Option<ReadoutCalib>,
}

impl Default for HeatingBlock {
    fn default() -> Self {
        HeatingBlock { data: None, t1ge: 50.0, t1ef: 31.0, calib: None }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Read(PathBuf, std::io::Error),
    Parse(String),
    Invalid(Error),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Read(p, e) => write!(f, "cannot read config {}: {e}", p.display()),
            ConfigError::Parse(m) => write!(f, "config parse error: {m}"),
            ConfigError::Invalid(e) => write!(f, "config validation failed: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        ConfigError::Invalid(e)
    }
}

fn invalid(msg: String) -> ConfigError {
    ConfigError::Invalid(Error::InvalidParameter(msg))
}

impl RunConfig {
    /// Parses TOML; unknown keys anywhere are rejected.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Reads `path`, or the bundled default when `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Read(p.to_path_buf(), e))?;
                let mut cfg = Self::from_toml(&text)?;
                if let (Some(data), Some(dir)) = (cfg.heating.data.as_mut(), p.parent()) {
                    if data.is_relative() {
                        *data = dir.join(&*data);
                    }
                }
                cfg
            }
            None => Self::from_toml(DEFAULT_CONFIG)?,
        };
        Ok(cfg)
    }

    /// Checks shared by every command.
    pub fn validate_common(&self) -> Result<(), ConfigError> {
        self.system.validate()?;
        self.dims.validate()?;
        self.solver.validate()?;
        Ok(())
    }

    pub fn validate_simulate(&self) -> Result<(), ConfigError> {
        self.validate_common()?;
        let s = &self.simulate;
        match s.mode {
            SimulateMode::Conversion => {
                self.drives.validate(self.dims)?;
                s.grid.validate()?;
                if s.initial_fock.is_empty() {
                    return Err(invalid("simulate.initial_fock is empty".into()));
                }
                for &n in &s.initial_fock {
                    if n % 2 != 0 || n > 4 {
                        return Err(invalid(format!("simulate.initial_fock entries must be 0, 2 or 4, got {n}")));
                    }
                    if n + 1 >= self.dims.n_cav {
                        return Err(invalid(format!("Fock {} exceeds dims.n_cav = {}", n + 1, self.dims.n_cav)));
                    }
                }
            }
            SimulateMode::Logical => {
                s.logical_grid.validate()?;
                self.validate_code_block()?;
            }
        }
        Ok(())
    }

    fn validate_code_block(&self) -> Result<(), ConfigError> {
        let l = &self.lifetime;
        if !(l.kappa_cor >= 0.0) || !l.kappa_cor.is_finite() {
            return Err(invalid(format!("lifetime.kappa_cor must be >= 0, got {}", l.kappa_cor)));
        }
        let need = match l.code {
            CodeChoice::Binomial => 6,
            CodeChoice::Fock01 => 2,
        };
        if l.n_cav < need {
            return Err(invalid(format!("lifetime.n_cav must be >= {need}, got {}", l.n_cav)));
        }
        Ok(())
    }

    pub fn validate_sweep(&self) -> Result<(), ConfigError> {
        self.validate_common()?;
        let s = &self.sweep;
        if s.n_grid == 0 {
            return Err(invalid("sweep.n_grid must be >= 1".into()));
        }
        for (name, r) in [("omega1_range", s.omega1_range), ("omega2_range", s.omega2_range)] {
            if !(r[0] >= 0.0) || !(r[1] >= r[0]) || !r[1].is_finite() {
                return Err(invalid(format!("sweep.{name} must satisfy 0 <= lo <= hi, got {r:?}")));
            }
        }
        if !(self.system.kappa_r > 0.0) {
            return Err(invalid("system.kappa_r must be > 0 for a sweep".into()));
        }
        Ok(())
    }

    pub fn validate_lifetime(&self) -> Result<(), ConfigError> {
        self.validate_common()?;
        self.lifetime.grid.validate()?;
        if let Some([lo, hi]) = self.lifetime.window {
            if !(hi > lo) {
                return Err(invalid(format!("lifetime.window must satisfy lo < hi, got [{lo}, {hi}]")));
            }
        }
        self.validate_code_block()
    }

    pub fn validate_budget(&self) -> Result<(), ConfigError> {
        self.validate_common()?;
        let b = &self.budget;
        b.active.validate()?;
        let p = &b.passive;
        if !(p.kappa_cor > 0.0) || !(p.nbar >= 0.0) || !(p.gamma_up >= 0.0) || !(p.recovery_loss >= 0.0) {
            return Err(invalid(
                "budget.passive needs kappa_cor > 0 and non-negative nbar, gamma_up, recovery_loss".into(),
            ));
        }
        if !(b.active_nbar >= 0.0) {
            return Err(invalid("budget.active_nbar must be >= 0".into()));
        }
        if b.simulate_recovery && b.recovery_n_cav < 6 {
            return Err(invalid("budget.recovery_n_cav must be >= 6".into()));
        }
        Ok(())
    }

    pub fn validate_wigner(&self) -> Result<(), ConfigError> {
        self.validate_common()?;
        let w = &self.wigner;
        w.grid.validate()?;
        if w.n_cav < 6 {
            return Err(invalid(format!("wigner.n_cav must be >= 6, got {}", w.n_cav)));
        }
        if !prespa_core::codes::CARDINAL_LABELS.contains(&w.state.as_str()) {
            return Err(invalid(format!(
                "wigner.state must be one of {:?}, got {:?}",
                prespa_core::codes::CARDINAL_LABELS,
                w.state
            )));
        }
        if !(w.time_us >= 0.0) || !w.time_us.is_finite() || !(w.kappa_cor >= 0.0) {
            return Err(invalid("wigner.time_us and wigner.kappa_cor must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn validate_plan(&self) -> Result<(), ConfigError> {
        self.validate_common()?;
        self.drives.validate(ModeDims { n_cav: usize::MAX, ..self.dims })?;
        if !(self.plan.guard_mhz >= 0.0) {
            return Err(invalid("plan.guard_mhz must be >= 0".into()));
        }
        Ok(())
    }

    pub fn validate_heating(&self) -> Result<(), ConfigError> {
        let h = &self.heating;
        if !(h.t1ge > 0.0) || !(h.t1ef > 0.0) {
            return Err(invalid("heating.t1ge and heating.t1ef must be > 0".into()));
        }
        if h.data.is_none() {
            return Err(invalid("heating.data is not set and no data file was given".into()));
        }
        if let Some(c) = &h.calib {
            c.validate()?;
        }
        Ok(())
    }

    /// Canonical TOML of the effective configuration.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}
