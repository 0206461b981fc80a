use ndarray::{Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Nominal alloy composition (cA, cB) of the solid at t = 0.
pub const ALLOY_COMPOSITION: (f64, f64) = (0.3, 0.7);

/// Phase field and the two independent mole fractions on a `ny x nx` grid.
///
/// `cC = 1 - cA - cB` is never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub phi: Array2<f64>,
    pub ca: Array2<f64>,
    pub cb: Array2<f64>,
    /// Simulation clock in seconds.
    pub time: f64,
    pub step: u64,
}

impl FieldState {
    pub fn new(phi: Array2<f64>, ca: Array2<f64>, cb: Array2<f64>, time: f64, step: u64) -> Result<Self> {
        let s = FieldState {
            phi,
            ca,
            cb,
            time,
            step,
        };
        s.check_shapes()?;
        Ok(s)
    }

    /// Uniform state with the given values in every cell.
    pub fn uniform(grid: &GridSpec, phi: f64, ca: f64, cb: f64) -> Self {
        let shape = grid.shape();
        FieldState {
            phi: Array2::from_elem(shape, phi),
            ca: Array2::from_elem(shape, ca),
            cb: Array2::from_elem(shape, cb),
            time: 0.0,
            step: 0,
        }
    }

    /// `(ny, nx)`.
    pub fn shape(&self) -> (usize, usize) {
        self.phi.dim()
    }

    pub fn fields(&self) -> [&Array2<f64>; 3] {
        [&self.phi, &self.ca, &self.cb]
    }

    pub fn check_shapes(&self) -> Result<()> {
        if self.ca.dim() != self.phi.dim() || self.cb.dim() != self.phi.dim() {
            return Err(Error::Shape(format!(
                "field shapes differ: phi {:?}, cA {:?}, cB {:?}",
                self.phi.dim(),
                self.ca.dim(),
                self.cb.dim()
            )));
        }
        Ok(())
    }

    pub fn matches_grid(&self, grid: &GridSpec) -> Result<()> {
        if self.shape() != grid.shape() {
            return Err(Error::Shape(format!(
                "state is {:?} but grid is {:?}",
                self.shape(),
                grid.shape()
            )));
        }
        Ok(())
    }

    /// Full invariant check: finite entries, phi in [0, 1], species on the simplex.
    pub fn validate(&self) -> Result<()> {
        self.check_shapes()?;
        for ((j, i), &p) in self.phi.indexed_iter() {
            let a = self.ca[[j, i]];
            let b = self.cb[[j, i]];
            if !(p.is_finite() && a.is_finite() && b.is_finite()) {
                return Err(Error::Domain(format!("non-finite value at ({j}, {i})")));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("phi = {p} outside [0, 1] at ({j}, {i})")));
            }
            if a < 0.0 || b < 0.0 || a + b > 1.0 {
                return Err(Error::Domain(format!(
                    "composition ({a}, {b}) off the simplex at ({j}, {i})"
                )));
            }
        }
        Ok(())
    }

    /// Clamp phi to [0, 1] and project every (cA, cB) pair onto the simplex.
    pub fn project(&mut self) {
        self.phi.mapv_inplace(|p| p.clamp(0.0, 1.0));
        Zip::from(&mut self.ca)
            .and(&mut self.cb)
            .for_each(|a, b| (*a, *b) = project_simplex(*a, *b));
    }
}

/// Map a composition onto `{cA >= 0, cB >= 0, cA + cB <= 1}`.
///
/// cA is clamped to [0, 1] first, then cB to [0, 1 - cA], so an excess is
/// always taken out of B.
pub fn project_simplex(ca: f64, cb: f64) -> (f64, f64) {
    let a = ca.clamp(0.0, 1.0);
    let b = cb.clamp(0.0, 1.0 - a);
    (a, b)
}

/// Elementwise `1 - cA - cB`.
pub fn derived_cc(state: &FieldState) -> Array2<f64> {
    let mut cc = Array2::zeros(state.shape());
    Zip::from(&mut cc)
        .and(&state.ca)
        .and(&state.cb)
        .for_each(|c, &a, &b| *c = 1.0 - a - b);
    cc
}

/// Alloy in the lower `solid_fraction` of the domain, pure liquid C above.
///
/// Each solid cell gets independent uniform noise in `[-noise_amp, noise_amp]`
/// on cA and cB before projection onto the simplex.
pub fn init_state(grid: &GridSpec, solid_fraction: f64, noise_amp: f64, seed: u64) -> Result<FieldState> {
    grid.validate()?;
    if !(solid_fraction > 0.0 && solid_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "solid_fraction must lie in (0, 1), got {solid_fraction}"
        )));
    }
    if !(noise_amp >= 0.0 && noise_amp.is_finite()) {
        return Err(Error::Parameter(format!(
            "noise_amp must be non-negative, got {noise_amp}"
        )));
    }
    let (ny, nx) = grid.shape();
    let solid_rows = solid_fraction * ny as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = FieldState::uniform(grid, 0.0, 0.0, 0.0);
    let (a0, b0) = ALLOY_COMPOSITION;
    for j in 0..ny {
        if (j as f64) >= solid_rows {
            continue;
        }
        for i in 0..nx {
            let (u, v) = if noise_amp > 0.0 {
                (
                    rng.gen_range(-noise_amp..=noise_amp),
                    rng.gen_range(-noise_amp..=noise_amp),
                )
            } else {
                (0.0, 0.0)
            };
            let (a, b) = project_simplex(a0 + u, b0 + v);
            state.phi[[j, i]] = 1.0;
            state.ca[[j, i]] = a;
            state.cb[[j, i]] = b;
        }
    }
    Ok(state)
}
