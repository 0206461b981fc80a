use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("measurement error: {0}")]
    Measurement(String),

    #[error("non-finite loss {loss} at epoch {epoch}, step {step}")]
    Diverged { epoch: usize, step: u64, loss: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] lmd_core::Error),

    #[error(transparent)]
    Model(#[from] lmd_uafno::Error),

    #[error(transparent)]
    Tensor(#[from] lmd_autodiff::Error),
}

/// Broad failure class, used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Config,
    Io,
    Numeric,
}

impl Class {
    pub fn exit_code(self) -> i32 {
        match self {
            Class::Config => 2,
            Class::Io => 3,
            Class::Numeric => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Class::Config => "config",
            Class::Io => "io",
            Class::Numeric => "numeric",
        }
    }
}

fn core_class(e: &lmd_core::Error) -> Class {
    use lmd_core::Error as E;
    match e {
        E::InFile { source, .. } => core_class(source),
        E::Io { .. } | E::Format { .. } => Class::Io,
        E::Numeric { .. } => Class::Numeric,
        _ => Class::Config,
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> Class {
        use lmd_uafno::Error as M;
        match self {
            Error::Config(_) | Error::Dataset(_) => Class::Config,
            Error::Io { .. } => Class::Io,
            Error::Measurement(_) | Error::Diverged { .. } | Error::Tensor(_) => Class::Numeric,
            Error::Core(e) => core_class(e),
            Error::Model(M::Io { .. } | M::Format(_)) => Class::Io,
            Error::Model(M::Tensor(_)) => Class::Numeric,
            Error::Model(_) => Class::Config,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
