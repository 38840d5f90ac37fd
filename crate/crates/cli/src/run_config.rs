use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use hillspec::potential::{Potential, PotentialSpec};
use hillspec::Config;
use serde::{Deserialize, Serialize};

use crate::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Test function for `project` and `expand`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GridInput {
    /// Gaussian `exp(-(x - center)² / (2 width²))`.
    Bump { center: f64, width: f64 },
    /// CSV with columns `x, re, im` on a uniform cell grid.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectParams {
    pub band: usize,
    pub band_max: usize,
    pub allow_fail: bool,
    pub n_cells: usize,
    pub input: GridInput,
}

impl Default for ProjectParams {
    fn default() -> Self {
        ProjectParams { band: 1, band_max: 8, allow_fail: false, n_cells: 4, input: GridInput::Bump { center: FRAC_PI_2, width: 0.5 } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreensParams {
    pub z: [f64; 2],
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Default for GreensParams {
    fn default() -> Self {
        GreensParams { z: [-1.0, 0.0], x_min: 0.0, x_max: std::f64::consts::PI, points: 17 }
    }
}

/// Everything a run depends on. Written next to the artifacts, so a run can be repeated
/// with `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    pub k_max: usize,
    pub seed: u64,
    pub format: Format,
    /// Output directory; not written back, so artifacts do not depend on where they live.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub tolerances: Config,
    pub project: ProjectParams,
    pub greens: GreensParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            potential: PotentialSpec::Preset("zero".into()),
            k_max: 8,
            seed: 0,
            format: Format::Json,
            out: None,
            tolerances: Config::default(),
            project: ProjectParams::default(),
            greens: GreensParams::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn potential(&self) -> Result<Potential, ConfigError> {
        self.potential.build().map_err(|e| ConfigError(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k_max == 0 {
            return Err(ConfigError("k_max must be at least 1".into()));
        }
        let t = self.tolerances.floquet.tol;
        if !(t > 0.0 && t < 1e-2) {
            return Err(ConfigError(format!("integration tolerance {t} out of range")));
        }
        if self.project.n_cells == 0 {
            return Err(ConfigError("n_cells must be at least 1".into()));
        }
        if self.greens.points < 2 || self.greens.x_max <= self.greens.x_min {
            return Err(ConfigError("greens range needs two points and x_max > x_min".into()));
        }
        Ok(())
    }
}

pub fn load_potential_file(path: &Path) -> Result<PotentialSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}
