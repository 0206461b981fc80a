//! Conserved species update: explicit flux divergence plus a stabilised
//! semi-implicit correction with a constant-coefficient biharmonic.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::energy::{self, Species};
use crate::error::{Error, Result};
use crate::grid::{Boundary, GridSpec};
use crate::params::ModelParams;
use crate::solver::banded::{PentaLu, Pentadiagonal};
use crate::spectral::{second_difference_symbol, to_complex, Fft2Plan};
use crate::state::FieldState;
use crate::stencil::{Neighbour, Stencil};

/// Mobility matrix entries (AA, AB, BB) per cell.
fn mobilities(state: &FieldState, p: &ModelParams) -> [Array2<f64>; 3] {
    [
        energy::solute_mobility(state, p, Species::A, Species::A),
        energy::solute_mobility(state, p, Species::A, Species::B),
        energy::solute_mobility(state, p, Species::B, Species::B),
    ]
}

/// `(dcA/dt, dcB/dt)` from the divergence of face fluxes.
///
/// Interior faces carry the arithmetic mean of the two cell mobility
/// matrices times the potential difference. Neumann faces carry nothing.
/// The Dirichlet face at the top exchanges with the pure-liquid reservoir:
/// the ideal-mixing flux is written as `D (1 - phi_face) (c_reservoir - c)`
/// (the exact image of `M grad mu_ideal`) and the non-ideal remainder uses
/// the half-weighted cell mobility.
pub fn explicit_species_rhs(
    state: &FieldState,
    grid: &GridSpec,
    boundary: Boundary,
    p: &ModelParams,
) -> (Array2<f64>, Array2<f64>) {
    let (ny, nx) = state.shape();
    let st = Stencil::new(nx, ny, boundary, grid.dx_m());
    let (mu_a, mu_b) = energy::diffusion_potentials(state, grid, boundary, p);
    let [m_aa, m_ab, m_bb] = mobilities(state, p);
    let kt = p.thermal_energy_density();
    let (g_phi, g_a, g_b) = Boundary::TOP_VALUES;
    // reservoir potentials without the ideal-mixing term (uniform, so no gradient term)
    let reservoir_mu = |s: Species| {
        let [ga, gb, gc] = p.driving_forces();
        let h = energy::h_interp(g_phi).unwrap_or(0.0);
        let c = 1.0 - g_a - g_b;
        match s {
            Species::A => p.omega_ac * (c - g_a) + h * (ga - gc),
            Species::B => -p.omega_ac * g_a + h * (gb - gc),
        }
    };
    let (res_a, res_b) = (reservoir_mu(Species::A), reservoir_mu(Species::B));

    let mut ra = vec![0.0; nx * ny];
    let mut rb = vec![0.0; nx * ny];
    ra.par_chunks_mut(nx)
        .zip(rb.par_chunks_mut(nx))
        .enumerate()
        .for_each(|(j, (row_a, row_b))| {
            for i in 0..nx {
                let (maa, mab, mbb) = (m_aa[[j, i]], m_ab[[j, i]], m_bb[[j, i]]);
                let (ua, ub) = (mu_a[[j, i]], mu_b[[j, i]]);
                let mut fa = 0.0;
                let mut fb = 0.0;
                for nb in st.neighbours(j, i) {
                    match nb {
                        Neighbour::Cell(jn, in_) => {
                            let faa = 0.5 * (maa + m_aa[[jn, in_]]);
                            let fab = 0.5 * (mab + m_ab[[jn, in_]]);
                            let fbb = 0.5 * (mbb + m_bb[[jn, in_]]);
                            let da = mu_a[[jn, in_]] - ua;
                            let db = mu_b[[jn, in_]] - ub;
                            fa += faa * da + fab * db;
                            fb += fab * da + fbb * db;
                        }
                        Neighbour::Mirror => {}
                        Neighbour::Ghost => {
                            let (phi, a, b) = (state.phi[[j, i]], state.ca[[j, i]], state.cb[[j, i]]);
                            let d_face = p.d_liq * (1.0 - 0.5 * (phi + g_phi));
                            let ex_a = ua - energy::ideal_potential(a, b, Species::A, kt);
                            let ex_b = ub - energy::ideal_potential(a, b, Species::B, kt);
                            let da = res_a - ex_a;
                            let db = res_b - ex_b;
                            fa += d_face * (g_a - a) + 0.5 * (maa * da + mab * db);
                            fb += d_face * (g_b - b) + 0.5 * (mab * da + mbb * db);
                        }
                    }
                }
                row_a[i] = fa * st.inv_dx2;
                row_b[i] = fb * st.inv_dx2;
            }
        });
    (
        Array2::from_shape_vec((ny, nx), ra).unwrap(),
        Array2::from_shape_vec((ny, nx), rb).unwrap(),
    )
}

/// `lambda^2` of the semi-implicit operator, kept per transform mode.
enum Implicit {
    /// S = 0: plain forward Euler.
    Euler,
    /// Fourier in x, one banded system per x-mode in y.
    Mixed {
        plan: Fft2Plan,
        biharmonic: Vec<Pentadiagonal>,
        factors: Vec<PentaLu>,
    },
    /// Fully periodic: diagonal in 2D Fourier space.
    Periodic { plan: Fft2Plan, biharmonic: Array2<f64> },
}

/// Prepared semi-implicit species integrator for one grid, boundary, dt and S.
pub struct SpeciesStepper {
    grid: GridSpec,
    boundary: Boundary,
    dt: f64,
    stabilization: f64,
    implicit: Implicit,
}

impl SpeciesStepper {
    pub fn new(grid: &GridSpec, boundary: Boundary, dt: f64, stabilization: f64) -> Result<Self> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::Parameter(format!("dt must be non-negative, got {dt}")));
        }
        if !(stabilization >= 0.0 && stabilization.is_finite()) {
            return Err(Error::Parameter(format!(
                "stabilization must be non-negative, got {stabilization}"
            )));
        }
        let (ny, nx) = grid.shape();
        let dx = grid.dx_m();
        let implicit = if stabilization == 0.0 || dt == 0.0 {
            Implicit::Euler
        } else {
            let plan = Fft2Plan::new(ny, nx);
            let lx = second_difference_symbol(nx, dx);
            match boundary {
                Boundary::Closed => {
                    let ly = second_difference_symbol(ny, dx);
                    let biharmonic = Array2::from_shape_fn((ny, nx), |(j, i)| (lx[i] + ly[j]).powi(2));
                    Implicit::Periodic { plan, biharmonic }
                }
                Boundary::Reservoir => {
                    let inv = 1.0 / (dx * dx);
                    let mut biharmonic = Vec::with_capacity(nx);
                    let mut factors = Vec::with_capacity(nx);
                    for &lam in &lx {
                        // y Laplacian: mirrored bottom row, zero-valued ghost above the top row
                        let mut diag = vec![-2.0 * inv - lam; ny];
                        diag[0] = -inv - lam;
                        let off = vec![inv; ny - 1];
                        let b = Pentadiagonal::square_of_tridiagonal(&diag, &off);
                        let mut a = b.clone();
                        let scale = dt * stabilization;
                        for v in a
                            .sub2
                            .iter_mut()
                            .chain(a.sub1.iter_mut())
                            .chain(a.sup1.iter_mut())
                            .chain(a.sup2.iter_mut())
                        {
                            *v *= scale;
                        }
                        for v in a.diag.iter_mut() {
                            *v = 1.0 + scale * *v;
                        }
                        let lu = a.factor().ok_or_else(|| {
                            Error::Parameter("singular semi-implicit system".to_string())
                        })?;
                        biharmonic.push(b);
                        factors.push(lu);
                    }
                    Implicit::Mixed {
                        plan,
                        biharmonic,
                        factors,
                    }
                }
            }
        };
        Ok(SpeciesStepper {
            grid: *grid,
            boundary,
            dt,
            stabilization,
            implicit,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn stabilization(&self) -> f64 {
        self.stabilization
    }

    /// Advance cA and cB by one step, returning the new arrays.
    pub fn step(&self, state: &FieldState, p: &ModelParams) -> (Array2<f64>, Array2<f64>) {
        let (ra, rb) = explicit_species_rhs(state, &self.grid, self.boundary, p);
        (self.advance(&state.ca, &ra), self.advance(&state.cb, &rb))
    }

    fn advance(&self, c: &Array2<f64>, rhs: &Array2<f64>) -> Array2<f64> {
        let dt = self.dt;
        let s = self.stabilization;
        match &self.implicit {
            Implicit::Euler => {
                let mut out = c.clone();
                out.zip_mut_with(rhs, |o, &r| *o += dt * r);
                out
            }
            Implicit::Periodic { plan, biharmonic } => {
                let (ny, nx) = c.dim();
                let mut ch = to_complex(c);
                let mut rh = to_complex(rhs);
                plan.forward(&mut ch);
                plan.forward(&mut rh);
                ndarray::Zip::from(&mut ch).and(&rh).and(biharmonic).for_each(|cv, &rv, &b| {
                    let damp = dt * s * b;
                    *cv = (*cv * (1.0 + damp) + rv * dt) / (1.0 + damp);
                });
                plan.inverse(&mut ch);
                let norm = 1.0 / (nx * ny) as f64;
                ch.mapv(|v| v.re * norm)
            }
            Implicit::Mixed {
                plan,
                biharmonic,
                factors,
            } => {
                let (ny, nx) = c.dim();
                let mut ch = to_complex(c);
                let mut rh = to_complex(rhs);
                plan.forward_rows(&mut ch);
                plan.forward_rows(&mut rh);
                let mut modes: Vec<Vec<Complex64>> = ch.axis_iter(Axis(1)).map(|col| col.to_vec()).collect();
                let rmodes: Vec<Vec<Complex64>> = rh.axis_iter(Axis(1)).map(|col| col.to_vec()).collect();
                modes.par_iter_mut().enumerate().for_each(|(k, col)| {
                    let mut bc = vec![Complex64::default(); ny];
                    biharmonic[k].matvec(col, &mut bc);
                    for j in 0..ny {
                        col[j] += (rmodes[k][j] + bc[j] * s) * dt;
                    }
                    factors[k].solve(col);
                });
                for (k, col) in modes.iter().enumerate() {
                    for j in 0..ny {
                        ch[[j, k]] = col[j];
                    }
                }
                plan.inverse_rows(&mut ch);
                let norm = 1.0 / nx as f64;
                ch.mapv(|v| v.re * norm)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smooth_state(grid: &GridSpec) -> FieldState {
        let (ny, nx) = grid.shape();
        let tau = 2.0 * std::f64::consts::PI;
        let f = |j: usize, i: usize, a: f64, b: f64| {
            let x = i as f64 / nx as f64;
            let y = j as f64 / ny as f64;
            (tau * (x + a)).sin() * (tau * (y + b)).cos()
        };
        let phi = Array2::from_shape_fn((ny, nx), |(j, i)| 0.5 + 0.2 * f(j, i, 0.1, 0.3));
        let ca = Array2::from_shape_fn((ny, nx), |(j, i)| 0.3 + 0.05 * f(j, i, 0.7, 0.2));
        let cb = Array2::from_shape_fn((ny, nx), |(j, i)| 0.4 + 0.05 * f(j, i, 0.4, 0.9));
        FieldState::new(phi, ca, cb, 0.0, 0).unwrap()
    }

    #[test]
    fn uniform_state_has_zero_rhs() {
        let g = GridSpec::new(16, 16, 0.2).unwrap();
        let s = FieldState::uniform(&g, 0.4, 0.2, 0.5);
        let (ra, rb) = explicit_species_rhs(&s, &g, Boundary::Closed, &ModelParams::default());
        assert!(ra.iter().chain(rb.iter()).all(|v| v.abs() < 1e-30));
    }

    #[test]
    fn closed_rhs_telescopes() {
        let g = GridSpec::new(32, 32, 0.2).unwrap();
        let s = smooth_state(&g);
        let (ra, rb) = explicit_species_rhs(&s, &g, Boundary::Closed, &ModelParams::default());
        for r in [ra, rb] {
            let scale: f64 = r.iter().map(|v| v.abs()).sum();
            assert!(scale > 0.0);
            assert!(r.sum().abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn zero_stabilization_is_forward_euler() {
        let g = GridSpec::new(16, 16, 0.2).unwrap();
        let s = smooth_state(&g);
        let p = ModelParams::default();
        let dt = 1e-13;
        let stepper = SpeciesStepper::new(&g, Boundary::Reservoir, dt, 0.0).unwrap();
        let (a, b) = stepper.step(&s, &p);
        let (ra, rb) = explicit_species_rhs(&s, &g, Boundary::Reservoir, &p);
        for ((x, c), r) in a.iter().zip(s.ca.iter()).zip(ra.iter()) {
            assert_eq!(*x, c + dt * r);
        }
        for ((x, c), r) in b.iter().zip(s.cb.iter()).zip(rb.iter()) {
            assert_eq!(*x, c + dt * r);
        }
    }

    #[test]
    fn stationary_state_is_a_fixed_point_of_the_implicit_part() {
        // with R = 0 the stabilisation must leave c unchanged
        for bc in [Boundary::Reservoir, Boundary::Closed] {
            let g = GridSpec::new(16, 16, 0.2).unwrap();
            let stepper = SpeciesStepper::new(&g, bc, 1e-12, 1e-26).unwrap();
            let c = smooth_state(&g).ca;
            let out = stepper.advance(&c, &Array2::zeros(c.dim()));
            for (x, y) in out.iter().zip(c.iter()) {
                assert!((x - y).abs() < 1e-13, "{bc:?}");
            }
        }
    }
}
