//! Phase-field model of liquid-metal dealloying: state, free energy,
//! high-fidelity integration, interface statistics and error metrics.

pub mod energy;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod params;
pub mod qoi;
pub mod snapshot;
pub mod solver;
pub mod spectral;
pub mod state;
pub mod stencil;

pub use error::{Error, Result};
pub use grid::{Boundary, GridSpec};
pub use params::ModelParams;
pub use state::{init_state, FieldState};
