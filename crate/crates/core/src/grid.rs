use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform 2D grid. Rows run along y (row 0 at the bottom), columns along x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// Grid spacing in nanometres.
    pub dx_nm: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, dx_nm: f64) -> Result<Self> {
        let g = GridSpec { nx, ny, dx_nm };
        g.validate()?;
        Ok(g)
    }

    /// The 512x512, 0.2 nm grid of the reference simulations.
    pub fn reference() -> Self {
        GridSpec {
            nx: 512,
            ny: 512,
            dx_nm: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 8 || self.ny < 8 {
            return Err(Error::Parameter(format!(
                "grid must be at least 8x8, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !self.nx.is_power_of_two() || !self.ny.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "grid dimensions must be powers of two, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.dx_nm > 0.0 && self.dx_nm.is_finite()) {
            return Err(Error::Parameter(format!(
                "grid spacing must be positive, got {}",
                self.dx_nm
            )));
        }
        Ok(())
    }

    /// Spacing in metres.
    pub fn dx_m(&self) -> f64 {
        self.dx_nm * 1e-9
    }

    pub fn width_nm(&self) -> f64 {
        self.nx as f64 * self.dx_nm
    }

    pub fn height_nm(&self) -> f64 {
        self.ny as f64 * self.dx_nm
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.ny, self.nx)
    }
}

/// Boundary treatment of the three fields.
///
/// `Reservoir`: periodic in x, fixed pure-liquid state (phi = 0, cA = cB = 0)
/// in a ghost row above the top row, zero normal gradient below the bottom
/// row. `Closed`: periodic in both directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Reservoir,
    Closed,
}

impl Boundary {
    /// Dirichlet values (phi, cA, cB) held by the top ghost row in reservoir mode.
    pub const TOP_VALUES: (f64, f64, f64) = (0.0, 0.0, 0.0);

    pub fn periodic_y(self) -> bool {
        matches!(self, Boundary::Closed)
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reservoir" => Ok(Boundary::Reservoir),
            "closed" => Ok(Boundary::Closed),
            other => Err(Error::Parameter(format!("unknown boundary mode {other:?}"))),
        }
    }
}
