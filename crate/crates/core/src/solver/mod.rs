//! High-fidelity time integration: forward Euler for the phase field and a
//! stabilised semi-implicit step for the conserved species.

pub mod banded;
mod species;

use std::time::Instant;

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::energy;
use crate::error::{Error, Result};
use crate::grid::{Boundary, GridSpec};
use crate::params::ModelParams;
use crate::qoi::masses;
use crate::state::{project_simplex, FieldState};

pub use species::{explicit_species_rhs, SpeciesStepper};

/// Time step of the reference simulations, s.
pub const REFERENCE_DT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Time step, s.
    pub dt_s: f64,
    /// Coefficient of the implicit biharmonic, m^4/s. `None` selects
    /// [`default_stabilization`].
    pub stabilization: Option<f64>,
    pub boundary: Boundary,
    /// Steps between emitted snapshots and reports.
    pub snapshot_cadence: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt_s: REFERENCE_DT,
            stabilization: None,
            boundary: Boundary::Reservoir,
            snapshot_cadence: 1000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s >= 0.0 && self.dt_s.is_finite()) {
            return Err(Error::Parameter(format!("dt_s must be non-negative, got {}", self.dt_s)));
        }
        if let Some(s) = self.stabilization {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Parameter(format!("stabilization must be non-negative, got {s}")));
            }
        }
        if self.snapshot_cadence == 0 {
            return Err(Error::Parameter("snapshot_cadence must be at least 1".into()));
        }
        Ok(())
    }

    pub fn stabilization_for(&self, p: &ModelParams) -> f64 {
        self.stabilization.unwrap_or_else(|| default_stabilization(p))
    }
}

/// `2 D (V_a / kT) kappa / 4`: the largest biharmonic coefficient of the
/// species equations, reached at c (1 - c) = 1/4 in the liquid.
pub fn default_stabilization(p: &ModelParams) -> f64 {
    2.0 * p.d_liq / p.thermal_energy_density() * p.kappa * 0.25
}

/// Per-cadence diagnostics of a high-fidelity run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: u64,
    pub time_s: f64,
    /// Wall-clock seconds since the start of the run.
    pub wall_s: f64,
    pub m_phi: f64,
    pub m_a: f64,
    pub m_b: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub ca_min: f64,
    pub ca_max: f64,
    pub cb_min: f64,
    pub cb_max: f64,
    /// Cells whose composition was projected back onto the simplex since the last report.
    pub projected_cells: u64,
}

impl StepReport {
    pub const CSV_HEADER: &'static str = "step,time_s,wall_s,m_phi,m_A,m_B,phi_min,phi_max";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:.6},{},{},{},{},{}",
            self.step, self.time_s, self.wall_s, self.m_phi, self.m_a, self.m_b, self.phi_min, self.phi_max
        )
    }
}

fn min_max(a: &Array2<f64>) -> (f64, f64) {
    a.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Receives reports and snapshots at the configured cadence.
pub trait HfObserver {
    fn report(&mut self, _report: &StepReport) -> Result<()> {
        Ok(())
    }
    fn snapshot(&mut self, _state: &FieldState) -> Result<()> {
        Ok(())
    }
}

/// Observer that discards everything.
pub struct Discard;

impl HfObserver for Discard {}

/// Observer that keeps everything in memory.
#[derive(Debug, Default)]
pub struct Collect {
    pub reports: Vec<StepReport>,
    pub snapshots: Vec<FieldState>,
}

impl HfObserver for Collect {
    fn report(&mut self, report: &StepReport) -> Result<()> {
        self.reports.push(report.clone());
        Ok(())
    }
    fn snapshot(&mut self, state: &FieldState) -> Result<()> {
        self.snapshots.push(state.clone());
        Ok(())
    }
}

/// New phase field after one forward-Euler step, clamped to [0, 1].
pub fn step_phi(state: &FieldState, grid: &GridSpec, boundary: Boundary, p: &ModelParams, dt: f64) -> Result<Array2<f64>> {
    let rate = dt * p.phase_relaxation_rate();
    if rate == 0.0 {
        return Ok(state.phi.clone());
    }
    let force = energy::df_dphi(state, grid, boundary, p);
    let mut out = state.phi.clone();
    let mut bad = None;
    Zip::indexed(&mut out).and(&force).for_each(|(j, i), phi, &f| {
        let v = *phi - rate * f;
        if !v.is_finite() && bad.is_none() {
            bad = Some((j, i));
        }
        *phi = v.clamp(0.0, 1.0);
    });
    if let Some((j, i)) = bad {
        return Err(Error::Numeric {
            step: state.step,
            what: format!("phi update at ({j}, {i})"),
        });
    }
    Ok(out)
}

/// Species update of one step (no projection).
pub fn step_species_semi_implicit(
    state: &FieldState,
    grid: &GridSpec,
    p: &ModelParams,
    cfg: &SolverConfig,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let stepper = SpeciesStepper::new(grid, cfg.boundary, cfg.dt_s, cfg.stabilization_for(p))?;
    Ok(stepper.step(state, p))
}

/// A prepared high-fidelity integrator.
pub struct HfSolver {
    grid: GridSpec,
    params: ModelParams,
    cfg: SolverConfig,
    species: SpeciesStepper,
}

impl HfSolver {
    pub fn new(grid: &GridSpec, params: &ModelParams, cfg: &SolverConfig) -> Result<Self> {
        grid.validate()?;
        params.validate()?;
        cfg.validate()?;
        let species = SpeciesStepper::new(grid, cfg.boundary, cfg.dt_s, cfg.stabilization_for(params))?;
        Ok(HfSolver {
            grid: *grid,
            params: *params,
            cfg: *cfg,
            species,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// One full step in place: phi first, then the species on the updated phi.
    /// Returns the number of cells whose composition needed projection.
    pub fn step(&self, state: &mut FieldState) -> Result<u64> {
        let dt = self.cfg.dt_s;
        state.phi = step_phi(state, &self.grid, self.cfg.boundary, &self.params, dt)?;
        let (mut ca, mut cb) = self.species.step(state, &self.params);
        let mut projected = 0;
        let mut bad = None;
        Zip::indexed(&mut ca).and(&mut cb).for_each(|(j, i), a, b| {
            if !(a.is_finite() && b.is_finite()) {
                bad.get_or_insert((j, i));
                return;
            }
            let (pa, pb) = project_simplex(*a, *b);
            if pa != *a || pb != *b {
                projected += 1;
            }
            (*a, *b) = (pa, pb);
        });
        if let Some((j, i)) = bad {
            return Err(Error::Numeric {
                step: state.step,
                what: format!("species update at ({j}, {i})"),
            });
        }
        state.ca = ca;
        state.cb = cb;
        state.step += 1;
        state.time += dt;
        Ok(projected)
    }

    pub fn report(&self, state: &FieldState, wall_s: f64, projected_cells: u64) -> StepReport {
        let (m_phi, m_a, m_b) = masses(state, &self.grid);
        let (phi_min, phi_max) = min_max(&state.phi);
        let (ca_min, ca_max) = min_max(&state.ca);
        let (cb_min, cb_max) = min_max(&state.cb);
        StepReport {
            step: state.step,
            time_s: state.time,
            wall_s,
            m_phi,
            m_a,
            m_b,
            phi_min,
            phi_max,
            ca_min,
            ca_max,
            cb_min,
            cb_max,
            projected_cells,
        }
    }

    /// Advance `n_steps`, emitting a report and a snapshot whenever the step
    /// index is a multiple of the cadence.
    pub fn run(&self, mut state: FieldState, n_steps: u64, sink: &mut dyn HfObserver) -> Result<FieldState> {
        state.matches_grid(&self.grid)?;
        let start = Instant::now();
        let mut projected = 0;
        for _ in 0..n_steps {
            projected += self.step(&mut state)?;
            if state.step % self.cfg.snapshot_cadence == 0 {
                let r = self.report(&state, start.elapsed().as_secs_f64(), projected);
                projected = 0;
                sink.report(&r)?;
                sink.snapshot(&state)?;
            }
        }
        Ok(state)
    }
}

/// Run `n_steps` of the high-fidelity model from `state`.
pub fn run_hf(
    state: FieldState,
    grid: &GridSpec,
    p: &ModelParams,
    cfg: &SolverConfig,
    n_steps: u64,
    sink: &mut dyn HfObserver,
) -> Result<FieldState> {
    HfSolver::new(grid, p, cfg)?.run(state, n_steps, sink)
}
