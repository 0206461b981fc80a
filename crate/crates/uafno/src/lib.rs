//! U-AFNO surrogate: a convolutional U-Net whose bottleneck mixes tokens
//! with adaptive Fourier blocks, ending in a sigmoid so that predicted
//! fields stay inside (0, 1).

mod config;
mod error;
mod model;
mod weights;

pub use config::{shape_plan, Padding, ShapePlan, UafnoConfig};
pub use error::{Error, Result};
pub use model::{afno_block, param_specs, Init, Model, ParamSpec, PER_BLOCK};
pub use weights::{from_bytes, load_weights, load_weights_for, save_weights, to_bytes};
