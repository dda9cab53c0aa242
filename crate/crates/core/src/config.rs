//! Simulation configuration and its validation rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridSpec};
use crate::initial::InitialPreset;

pub const DEFAULT_CFL: f64 = 0.9;
pub const MAX_CFL: f64 = 0.95;
pub const DEFAULT_XI_BINS: usize = 64;
pub const MIN_XI_BINS: usize = 16;
pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_ENTROPY_LEVELS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    FiniteVolume,
    Kinetic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluxScheme {
    #[default]
    Godunov,
    LaxFriedrichs,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    None,
    VanishingViscosity,
    Rigidity,
    LongTime,
    Metastability,
}

impl ExperimentKind {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "none" => Self::None,
            "vanishing-viscosity" => Self::VanishingViscosity,
            "rigidity" => Self::Rigidity,
            "long-time" => Self::LongTime,
            "metastability" => Self::Metastability,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::VanishingViscosity => "vanishing-viscosity",
            Self::Rigidity => "rigidity",
            Self::LongTime => "long-time",
            Self::Metastability => "metastability",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    /// Viscosity ε of the parabolic approximation (0 = hyperbolic).
    #[serde(default)]
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub final_time: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_xi_bins")]
    pub xi_bins: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub flux: FluxScheme,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    /// Time between snapshots; `None` means a tenth of the final time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cadence: Option<f64>,
    /// Keep one diagnostics row every this many steps.
    #[serde(default = "default_every")]
    pub timeseries_every: usize,
    /// Kruzkov levels audited each step (empty disables the audit).
    #[serde(default = "default_levels")]
    pub entropy_levels: Vec<f64>,
    /// Treat a failed cellwise entropy gate as an error instead of reporting it.
    #[serde(default)]
    pub strict_entropy: bool,
}

impl Default for Output {
    fn default() -> Self {
        Self {
            cadence: None,
            timeseries_every: 1,
            entropy_levels: DEFAULT_ENTROPY_LEVELS.to_vec(),
            strict_entropy: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    #[serde(default)]
    pub name: ExperimentKind,
    #[serde(default = "default_ladder")]
    pub epsilon_ladder: Vec<f64>,
    /// Spatial box sizes (cells per axis) for the rigidity study, coarse to fine.
    #[serde(default = "default_box_cells")]
    pub box_cells: Vec<usize>,
    /// Snapshots per time box for the rigidity study.
    #[serde(default = "default_box_snapshots")]
    pub box_snapshots: usize,
    /// Viscosity of the constant-state regime of the metastability study.
    #[serde(default = "default_diffusive_epsilon")]
    pub diffusive_epsilon: f64,
    /// Cells per axis for the constant-state regime (explicit diffusion is
    /// costly on fine grids).
    #[serde(default = "default_diffusive_cells")]
    pub diffusive_cells: usize,
    /// Viscosity of the metastable regime.
    #[serde(default = "default_metastable_epsilon")]
    pub metastable_epsilon: f64,
    /// Time horizon of the metastable regime.
    #[serde(default = "default_metastable_horizon")]
    pub metastable_horizon: f64,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            name: ExperimentKind::None,
            epsilon_ladder: default_ladder(),
            box_cells: default_box_cells(),
            box_snapshots: default_box_snapshots(),
            diffusive_epsilon: default_diffusive_epsilon(),
            diffusive_cells: default_diffusive_cells(),
            metastable_epsilon: default_metastable_epsilon(),
            metastable_horizon: default_metastable_horizon(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub grid: GridSpec,
    #[serde(default)]
    pub physics: Physics,
    pub numerics: Numerics,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub initial: InitialPreset,
    #[serde(default)]
    pub experiment: Experiment,
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}
fn default_xi_bins() -> usize {
    DEFAULT_XI_BINS
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_every() -> usize {
    1
}
fn default_levels() -> Vec<f64> {
    DEFAULT_ENTROPY_LEVELS.to_vec()
}
fn default_ladder() -> Vec<f64> {
    vec![0.02, 0.01, 0.005, 0.0025, 0.00125]
}
fn default_box_cells() -> Vec<usize> {
    vec![16, 8, 4]
}
fn default_box_snapshots() -> usize {
    2
}
fn default_diffusive_epsilon() -> f64 {
    0.3
}
fn default_diffusive_cells() -> usize {
    50
}
fn default_metastable_epsilon() -> f64 {
    0.002
}
fn default_metastable_horizon() -> f64 {
    400.0
}

impl SimConfig {
    /// A config with every optional field at its default.
    pub fn new(grid: GridSpec, final_time: f64) -> Self {
        Self {
            grid,
            physics: Physics::default(),
            numerics: Numerics {
                final_time,
                cfl: DEFAULT_CFL,
                xi_bins: DEFAULT_XI_BINS,
                tol: DEFAULT_TOL,
                backend: Backend::FiniteVolume,
                flux: FluxScheme::Godunov,
            },
            output: Output::default(),
            initial: InitialPreset::default(),
            experiment: Experiment::default(),
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.physics.epsilon = epsilon;
        self
    }

    pub fn with_initial(mut self, initial: InitialPreset) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_cadence(mut self, cadence: f64) -> Self {
        self.output.cadence = Some(cadence);
        self
    }

    pub fn cadence(&self) -> f64 {
        self.output
            .cadence
            .unwrap_or(self.numerics.final_time / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        Grid::new(&self.grid).map_err(|e| Error::param("grid", e.to_string()))?;
        let eps = self.physics.epsilon;
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::param(
                "physics.epsilon",
                format!("{eps} must be >= 0"),
            ));
        }
        let n = &self.numerics;
        if !(n.cfl > 0.0 && n.cfl <= MAX_CFL) {
            return Err(Error::param(
                "numerics.cfl",
                format!("{} must lie in (0, {MAX_CFL}]", n.cfl),
            ));
        }
        if !(n.final_time.is_finite() && n.final_time > 0.0) {
            return Err(Error::param("numerics.final_time", "must be positive"));
        }
        if n.xi_bins < MIN_XI_BINS {
            return Err(Error::param(
                "numerics.xi_bins",
                format!("{} is below the minimum of {MIN_XI_BINS}", n.xi_bins),
            ));
        }
        if !(1e-14..=1e-6).contains(&n.tol) {
            return Err(Error::param(
                "numerics.tol",
                format!("{} must lie in [1e-14, 1e-6]", n.tol),
            ));
        }
        let o = &self.output;
        if let Some(c) = o.cadence {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::param("output.cadence", "must be positive"));
            }
        }
        if o.timeseries_every == 0 {
            return Err(Error::param(
                "output.timeseries_every",
                "must be at least 1",
            ));
        }
        if let Some(k) = o.entropy_levels.iter().find(|k| !(0.0..=1.0).contains(*k)) {
            return Err(Error::param(
                "output.entropy_levels",
                format!("{k} is not in [0, 1]"),
            ));
        }
        self.initial.validate()?;
        let x = &self.experiment;
        if x.epsilon_ladder
            .iter()
            .any(|e| !(e.is_finite() && *e > 0.0))
        {
            return Err(Error::param(
                "experiment.epsilon_ladder",
                "rungs must be positive",
            ));
        }
        if x.box_cells.contains(&0) {
            return Err(Error::param(
                "experiment.box_cells",
                "box sizes must be positive",
            ));
        }
        if x.box_snapshots == 0 {
            return Err(Error::param(
                "experiment.box_snapshots",
                "must be at least 1",
            ));
        }
        for (key, e) in [
            ("experiment.diffusive_epsilon", x.diffusive_epsilon),
            ("experiment.metastable_epsilon", x.metastable_epsilon),
        ] {
            if !(e.is_finite() && e >= 0.0) {
                return Err(Error::param(key, "must be >= 0"));
            }
        }
        if x.diffusive_cells < crate::grid::MIN_CELLS_PER_AXIS {
            return Err(Error::param("experiment.diffusive_cells", "too few cells"));
        }
        if !(x.metastable_horizon.is_finite() && x.metastable_horizon > 0.0) {
            return Err(Error::param(
                "experiment.metastable_horizon",
                "must be positive",
            ));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid> {
        Grid::new(&self.grid)
    }
}
