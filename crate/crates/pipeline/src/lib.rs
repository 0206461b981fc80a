//! Surrogate workflows for the dealloying model: paired datasets, training,
//! auto-regressive and hybrid roll-outs, evaluation and speedup accounting.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod rollout;
pub mod schedule;
pub mod speedup;
pub mod train;

pub use config::RunConfig;
pub use dataset::{build_dataset, load_pairs, state_to_tensor, tensor_to_state, Dataset, Pair};
pub use error::{Class, Error, Result};
pub use evaluate::{evaluate, Evaluation, QoiErrors, QOI_COLUMNS};
pub use rollout::{rollout_auto, rollout_hybrid, surrogate_leap, Rollout, RolloutTiming};
pub use schedule::{LeapSpec, RolloutSchedule};
pub use speedup::{speedup_report, SpeedupReport, Timings};
pub use train::{dataset_mse, train, TrainConfig, TrainLog};
