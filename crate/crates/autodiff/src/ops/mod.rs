//! Differentiable operations, recorded as methods on [`crate::Tape`].

mod act;
mod conv;
mod dense;
mod shape;
mod spectral;

pub use conv::PadMode;
pub use dense::LAYERNORM_EPS;

use crate::error::{Error, Result};

pub(crate) fn same_shape(what: &str, a: &[usize], b: &[usize]) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("{what}: {a:?} vs {b:?}")));
    }
    Ok(())
}
