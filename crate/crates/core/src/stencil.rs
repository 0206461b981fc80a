//! Five-point finite differences with boundary ghost cells.
//!
//! Reservoir boundaries: x wraps, the row above the top holds a fixed value and
//! the row below the bottom mirrors row 0. Closed boundaries wrap in both
//! directions. The squared-gradient density and the Laplacian are built on
//! the same face differences, so the Laplacian is the exact variational
//! derivative of the discrete gradient energy.

use ndarray::Array2;

use crate::grid::Boundary;

#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub nx: usize,
    pub ny: usize,
    pub boundary: Boundary,
    pub inv_dx2: f64,
}

/// Value of a neighbour across one face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Neighbour {
    Cell(usize, usize),
    /// Fixed-value ghost (top Dirichlet row).
    Ghost,
    /// Zero-gradient face (bottom Neumann row).
    Mirror,
}

impl Stencil {
    pub fn new(nx: usize, ny: usize, boundary: Boundary, dx_m: f64) -> Self {
        Stencil {
            nx,
            ny,
            boundary,
            inv_dx2: 1.0 / (dx_m * dx_m),
        }
    }

    /// Neighbours in the order east, west, north, south.
    #[inline]
    pub fn neighbours(&self, j: usize, i: usize) -> [Neighbour; 4] {
        let e = Neighbour::Cell(j, (i + 1) % self.nx);
        let w = Neighbour::Cell(j, (i + self.nx - 1) % self.nx);
        let (n, s) = match self.boundary {
            Boundary::Closed => (
                Neighbour::Cell((j + 1) % self.ny, i),
                Neighbour::Cell((j + self.ny - 1) % self.ny, i),
            ),
            Boundary::Reservoir => (
                if j + 1 == self.ny {
                    Neighbour::Ghost
                } else {
                    Neighbour::Cell(j + 1, i)
                },
                if j == 0 {
                    Neighbour::Mirror
                } else {
                    Neighbour::Cell(j - 1, i)
                },
            ),
        };
        [e, w, n, s]
    }

    #[inline]
    fn value(u: &Array2<f64>, nb: Neighbour, here: f64, ghost: f64) -> f64 {
        match nb {
            Neighbour::Cell(j, i) => u[[j, i]],
            Neighbour::Ghost => ghost,
            Neighbour::Mirror => here,
        }
    }

    /// Discrete Laplacian; `ghost` is the value held by the top ghost row.
    pub fn laplacian(&self, u: &Array2<f64>, ghost: f64) -> Array2<f64> {
        let mut out = Array2::zeros((self.ny, self.nx));
        for j in 0..self.ny {
            for i in 0..self.nx {
                let here = u[[j, i]];
                let mut acc = 0.0;
                for nb in self.neighbours(j, i) {
                    acc += Self::value(u, nb, here, ghost) - here;
                }
                out[[j, i]] = acc * self.inv_dx2;
            }
        }
        out
    }

    /// Per-cell squared gradient.
    ///
    /// Interior faces are shared half-and-half between their two cells; a
    /// Dirichlet face belongs entirely to the top cell; a Neumann face
    /// contributes nothing.
    pub fn grad_sq(&self, u: &Array2<f64>, ghost: f64) -> Array2<f64> {
        let mut out = Array2::zeros((self.ny, self.nx));
        for j in 0..self.ny {
            for i in 0..self.nx {
                let here = u[[j, i]];
                let mut acc = 0.0;
                for nb in self.neighbours(j, i) {
                    let d = Self::value(u, nb, here, ghost) - here;
                    let weight = if nb == Neighbour::Ghost { 1.0 } else { 0.5 };
                    acc += weight * d * d;
                }
                out[[j, i]] = acc * self.inv_dx2;
            }
        }
        out
    }
}
