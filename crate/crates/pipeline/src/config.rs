use std::path::{Path, PathBuf};

use lmd_core::solver::SolverConfig;
use lmd_core::{GridSpec, ModelParams};
use lmd_uafno::UafnoConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::RolloutSchedule;
use crate::train::TrainConfig;

pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub dx_nm: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            nx: 64,
            ny: 64,
            dx_nm: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    pub solid_fraction: f64,
    pub noise_amp: f64,
    pub seed: u64,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            solid_fraction: 0.75,
            noise_amp: 0.025,
            seed: 0,
        }
    }
}

/// Ground-truth corpus: run `k` starts from `init.seed + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub n_runs: usize,
    /// Steps per run; defaults to the roll-out's total step count.
    pub n_steps: Option<u64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            n_runs: 11,
            n_steps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    /// Where `run_*` directories are read from.
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            data_dir: "out".into(),
            out_dir: "out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub params: ModelParams,
    pub solver: SolverConfig,
    pub init: InitConfig,
    pub simulate: SimulateConfig,
    pub model: UafnoConfig,
    pub train: TrainConfig,
    pub rollout: RolloutSchedule,
    pub paths: PathsConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(self.grid.nx, self.grid.ny, self.grid.dx_nm)?)
    }

    pub fn n_steps(&self) -> u64 {
        self.simulate
            .n_steps
            .unwrap_or_else(|| self.rollout.total_steps().unwrap_or(u64::MAX))
    }

    /// Replaces every seed.
    pub fn override_seed(&mut self, seed: u64) {
        self.init.seed = seed;
        self.train.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid_spec()?;
        self.params.validate()?;
        self.solver.validate()?;
        let i = &self.init;
        if !(i.solid_fraction > 0.0 && i.solid_fraction < 1.0) {
            return Err(Error::Config(format!("init.solid_fraction must lie in (0, 1), got {}", i.solid_fraction)));
        }
        if !(i.noise_amp >= 0.0 && i.noise_amp.is_finite()) {
            return Err(Error::Config(format!("init.noise_amp must be non-negative, got {}", i.noise_amp)));
        }
        if self.simulate.n_runs == 0 {
            return Err(Error::Config("simulate.n_runs must be at least 1".into()));
        }
        self.model.validate()?;
        if (self.model.height, self.model.width) != (grid.ny, grid.nx) || self.model.in_channels != 3 {
            return Err(Error::Config(format!(
                "model takes {}x{}x{} fields, grid is 3x{}x{}",
                self.model.in_channels, self.model.height, self.model.width, grid.ny, grid.nx
            )));
        }
        self.train.validate()?;
        self.rollout.validate()
    }

    /// Creates `out_dir` and writes the resolved configuration into it.
    pub fn write_resolved(&self) -> Result<PathBuf> {
        let dir = &self.paths.out_dir;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(RESOLVED_CONFIG_FILE);
        std::fs::write(&path, self.to_json()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
