//! Reverse-mode automatic differentiation over dense `f64` and `Complex64`
//! tensors, with the operation set needed by a U-Net/AFNO surrogate.

mod adam;
pub mod check;
mod error;
mod ops;
mod tape;
mod tensor;

pub use adam::Adam;
pub use check::{check_gradients, CheckOptions, CheckReport};
pub use error::{Error, Result};
pub use ops::{PadMode, LAYERNORM_EPS};
pub use tape::{Gradients, Tape, Var};
pub use tensor::{Data, Tensor};
