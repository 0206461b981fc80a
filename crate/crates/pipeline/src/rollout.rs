use std::time::Instant;

use lmd_core::solver::{Collect, HfSolver, SolverConfig};
use lmd_core::{FieldState, GridSpec, ModelParams};
use lmd_uafno::Model;
use serde::{Deserialize, Serialize};

use crate::dataset::{state_to_tensor, tensor_to_state};
use crate::error::{Error, Result};
use crate::schedule::{LeapSpec, RolloutSchedule};

/// Wall-clock split of a roll-out.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RolloutTiming {
    pub hf_steps: u64,
    pub hf_wall_s: f64,
    pub leaps: u64,
    pub leap_wall_s: f64,
}

impl RolloutTiming {
    pub fn hf_step_s(&self) -> Option<f64> {
        (self.hf_steps > 0).then(|| self.hf_wall_s / self.hf_steps as f64)
    }

    pub fn leap_s(&self) -> Option<f64> {
        (self.leaps > 0).then(|| self.leap_wall_s / self.leaps as f64)
    }
}

#[derive(Debug, Clone)]
pub struct Rollout {
    pub snapshots: Vec<FieldState>,
    pub timing: RolloutTiming,
}

/// Checks that the model maps states of this grid onto themselves.
pub fn check_model_grid(model: &Model, grid: &GridSpec) -> Result<()> {
    let c = model.config();
    if c.in_channels != 3 || c.height != grid.ny || c.width != grid.nx {
        return Err(Error::Config(format!(
            "model expects {}x{}x{} inputs, grid is 3x{}x{}",
            c.in_channels, c.height, c.width, grid.ny, grid.nx
        )));
    }
    Ok(())
}

/// One surrogate pass: the sigmoid output becomes the next state after
/// projecting the species onto the simplex.
pub fn surrogate_leap(model: &Model, state: &FieldState, leap: &LeapSpec) -> Result<FieldState> {
    let y = model.forward(&state_to_tensor(state))?;
    let mut next = tensor_to_state(&y, state.time + leap.duration_s(), state.step + leap.leap_steps)?;
    next.project();
    Ok(next)
}

/// Warm-up HF steps, then `n_leaps` cycles of a surrogate leap followed by
/// `n_relax` HF steps. Emits warm-up snapshots at the solver cadence, the
/// state after every leap and, when relaxing, the state closing every cycle.
pub fn rollout_hybrid(
    state0: FieldState,
    model: &Model,
    schedule: &RolloutSchedule,
    grid: &GridSpec,
    params: &ModelParams,
    solver_cfg: &SolverConfig,
) -> Result<Rollout> {
    schedule.validate()?;
    if state0.step != 0 {
        return Err(Error::Config(format!("roll-outs start at step 0, got {}", state0.step)));
    }
    check_model_grid(model, grid)?;
    state0.matches_grid(grid)?;
    let leap = LeapSpec::new(schedule.leap_steps, solver_cfg.dt_s)?;
    let solver = HfSolver::new(grid, params, solver_cfg)?;
    let mut timing = RolloutTiming::default();

    let t0 = Instant::now();
    let mut sink = Collect::default();
    let mut state = solver.run(state0, schedule.n_init, &mut sink)?;
    timing.hf_wall_s += t0.elapsed().as_secs_f64();
    timing.hf_steps += schedule.n_init;
    let mut snapshots = sink.snapshots;

    for _ in 0..schedule.n_leaps {
        let t0 = Instant::now();
        state = surrogate_leap(model, &state, &leap)?;
        timing.leap_wall_s += t0.elapsed().as_secs_f64();
        timing.leaps += 1;
        snapshots.push(state.clone());
        if schedule.n_relax > 0 {
            let t0 = Instant::now();
            for _ in 0..schedule.n_relax {
                solver.step(&mut state)?;
            }
            timing.hf_wall_s += t0.elapsed().as_secs_f64();
            timing.hf_steps += schedule.n_relax;
            snapshots.push(state.clone());
        }
    }
    Ok(Rollout { snapshots, timing })
}

/// Fully auto-regressive roll-out: every leap starts from the previous
/// surrogate output.
pub fn rollout_auto(
    state0: FieldState,
    model: &Model,
    schedule: &RolloutSchedule,
    grid: &GridSpec,
    params: &ModelParams,
    solver_cfg: &SolverConfig,
) -> Result<Rollout> {
    if schedule.n_relax != 0 {
        return Err(Error::Config(format!(
            "auto-regressive roll-outs take no relaxation steps, got n_relax = {}",
            schedule.n_relax
        )));
    }
    rollout_hybrid(state0, model, schedule, grid, params, solver_cfg)
}
