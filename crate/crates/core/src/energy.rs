//! Free-energy densities, the total functional and its variational derivatives.
//!
//! All densities are J/m^3; the 2D totals are per unit depth (J/m), summed
//! with cell measure dx^2.

use std::f64::consts::PI;

use ndarray::{Array2, Zip};

use crate::error::{Error, Result};
use crate::grid::{Boundary, GridSpec};
use crate::params::ModelParams;
use crate::state::FieldState;
use crate::stencil::Stencil;

/// Floor inside the entropy logarithms.
pub const LOG_FLOOR: f64 = 1e-9;

const H_DRIFT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub f_phase_total: f64,
    pub f_chem_total: f64,
    pub f_total: f64,
}

/// Interpolation function with h(0) = 0, h(1) = 1 and h(phi) + h(1 - phi) = 1.
pub fn h_interp(phi: f64) -> Result<f64> {
    if !(-H_DRIFT..=1.0 + H_DRIFT).contains(&phi) {
        return Err(Error::Domain(format!("h(phi) needs phi in [0, 1], got {phi}")));
    }
    Ok(h_unchecked(phi.clamp(0.0, 1.0)))
}

#[inline]
pub(crate) fn h_unchecked(phi: f64) -> f64 {
    let q = (phi * (1.0 - phi)).max(0.0).sqrt();
    let s = (2.0 * phi - 1.0).clamp(-1.0, 1.0);
    0.5 + 2.0 / PI * (s * q + 0.5 * s.asin())
}

/// dh/dphi = (8/pi) sqrt(phi (1 - phi)).
#[inline]
pub fn h_prime(phi: f64) -> f64 {
    let p = phi.clamp(0.0, 1.0);
    8.0 / PI * (p * (1.0 - p)).sqrt()
}

/// Solid-liquid reference energy difference for composition (cA, cB, cC).
pub fn delta_g_sl(ca: f64, cb: f64, cc: f64, p: &ModelParams) -> Result<f64> {
    const TOL: f64 = 1e-9;
    if ca < -TOL || cb < -TOL || cc < -TOL || (ca + cb + cc - 1.0).abs() > TOL {
        return Err(Error::Domain(format!(
            "composition ({ca}, {cb}, {cc}) is not on the simplex"
        )));
    }
    Ok(delta_g_unchecked(ca, cb, cc, p))
}

#[inline]
fn delta_g_unchecked(ca: f64, cb: f64, cc: f64, p: &ModelParams) -> f64 {
    let [ga, gb, gc] = p.driving_forces();
    ca * ga + cb * gb + cc * gc
}

/// Interface energy density for phase value `phi` and squared gradient `grad_sq` (1/m^2).
pub fn f_phase_density(phi: f64, grad_sq: f64, p: &ModelParams) -> f64 {
    let eta = p.eta;
    4.0 * p.sigma_sl / eta * (eta * eta / (PI * PI) * grad_sq + phi * (1.0 - phi))
}

#[inline]
fn entropy_term(c: f64) -> f64 {
    c * c.max(LOG_FLOOR).ln()
}

/// d/dc of `entropy_term`.
#[inline]
pub(crate) fn entropy_slope(c: f64) -> f64 {
    if c > LOG_FLOOR {
        c.ln() + 1.0
    } else {
        LOG_FLOOR.ln()
    }
}

/// Chemical energy density; `grad_sq` holds the squared gradients of cA, cB, cC.
pub fn f_chem_density(phi: f64, ca: f64, cb: f64, grad_sq: [f64; 3], p: &ModelParams) -> f64 {
    let cc = 1.0 - ca - cb;
    let mixing = p.thermal_energy_density() * (entropy_term(ca) + entropy_term(cb) + entropy_term(cc));
    let enthalpy = p.omega_ac * ca * cc;
    let bulk = h_unchecked(phi) * delta_g_unchecked(ca, cb, cc, p);
    let gradient = 0.5 * p.kappa * (grad_sq[0] + grad_sq[1] + grad_sq[2]);
    mixing + enthalpy + bulk + gradient
}

fn stencil(grid: &GridSpec, boundary: Boundary) -> Stencil {
    Stencil::new(grid.nx, grid.ny, boundary, grid.dx_m())
}

/// Per-cell squared gradients of phi, cA, cB and cC.
pub(crate) fn grad_sq_fields(state: &FieldState, st: &Stencil) -> [Array2<f64>; 4] {
    let (gp, ga, gb) = Boundary::TOP_VALUES;
    let cc = crate::state::derived_cc(state);
    [
        st.grad_sq(&state.phi, gp),
        st.grad_sq(&state.ca, ga),
        st.grad_sq(&state.cb, gb),
        st.grad_sq(&cc, 1.0 - ga - gb),
    ]
}

pub fn total_free_energy(state: &FieldState, grid: &GridSpec, boundary: Boundary, p: &ModelParams) -> EnergyBreakdown {
    let st = stencil(grid, boundary);
    let [gp, ga, gb, gc] = grad_sq_fields(state, &st);
    let mut phase = 0.0;
    let mut chem = 0.0;
    for ((j, i), &phi) in state.phi.indexed_iter() {
        phase += f_phase_density(phi, gp[[j, i]], p);
        chem += f_chem_density(
            phi,
            state.ca[[j, i]],
            state.cb[[j, i]],
            [ga[[j, i]], gb[[j, i]], gc[[j, i]]],
            p,
        );
    }
    let area = grid.dx_m().powi(2);
    let f_phase_total = phase * area;
    let f_chem_total = chem * area;
    EnergyBreakdown {
        f_phase_total,
        f_chem_total,
        f_total: f_phase_total + f_chem_total,
    }
}

/// Variational derivative of the total energy with respect to phi, J/m^3.
pub fn df_dphi(state: &FieldState, grid: &GridSpec, boundary: Boundary, p: &ModelParams) -> Array2<f64> {
    let st = stencil(grid, boundary);
    let lap = st.laplacian(&state.phi, Boundary::TOP_VALUES.0);
    let well = 4.0 * p.sigma_sl / p.eta;
    let stiffness = 8.0 * p.sigma_sl * p.eta / (PI * PI);
    let mut out = Array2::zeros(state.shape());
    Zip::from(&mut out)
        .and(&state.phi)
        .and(&state.ca)
        .and(&state.cb)
        .and(&lap)
        .for_each(|o, &phi, &a, &b, &l| {
            let dg = delta_g_unchecked(a, b, 1.0 - a - b, p);
            *o = well * (1.0 - 2.0 * phi) - stiffness * l + h_prime(phi) * dg;
        });
    out
}

/// Diffusion potential of species A or B relative to C, J/m^3.
pub fn diffusion_potential(
    state: &FieldState,
    grid: &GridSpec,
    boundary: Boundary,
    p: &ModelParams,
    species: Species,
) -> Array2<f64> {
    let st = stencil(grid, boundary);
    let (_, ta, tb) = Boundary::TOP_VALUES;
    let lap_a = st.laplacian(&state.ca, ta);
    let lap_b = st.laplacian(&state.cb, tb);
    potential_from_laplacians(state, p, species, &lap_a, &lap_b)
}

/// Both diffusion potentials sharing one pair of Laplacians.
pub fn diffusion_potentials(
    state: &FieldState,
    grid: &GridSpec,
    boundary: Boundary,
    p: &ModelParams,
) -> (Array2<f64>, Array2<f64>) {
    let st = stencil(grid, boundary);
    let (_, ta, tb) = Boundary::TOP_VALUES;
    let lap_a = st.laplacian(&state.ca, ta);
    let lap_b = st.laplacian(&state.cb, tb);
    (
        potential_from_laplacians(state, p, Species::A, &lap_a, &lap_b),
        potential_from_laplacians(state, p, Species::B, &lap_a, &lap_b),
    )
}

fn potential_from_laplacians(
    state: &FieldState,
    p: &ModelParams,
    species: Species,
    lap_a: &Array2<f64>,
    lap_b: &Array2<f64>,
) -> Array2<f64> {
    let kt = p.thermal_energy_density();
    let [ga, gb, gc] = p.driving_forces();
    let mut out = Array2::zeros(state.shape());
    Zip::from(&mut out)
        .and(&state.phi)
        .and(&state.ca)
        .and(&state.cb)
        .and(lap_a)
        .and(lap_b)
        .for_each(|o, &phi, &a, &b, &la, &lb| {
            *o = local_potential(phi, a, b, species, p, kt, [ga, gb, gc]) - gradient_potential(species, la, lb, p);
        });
    out
}

/// Homogeneous (gradient-free) part of the diffusion potential.
#[inline]
pub(crate) fn local_potential(phi: f64, a: f64, b: f64, species: Species, p: &ModelParams, kt: f64, g: [f64; 3]) -> f64 {
    let c = 1.0 - a - b;
    let h = h_unchecked(phi);
    match species {
        Species::A => kt * (entropy_slope(a) - entropy_slope(c)) + p.omega_ac * (c - a) + h * (g[0] - g[2]),
        Species::B => kt * (entropy_slope(b) - entropy_slope(c)) - p.omega_ac * a + h * (g[1] - g[2]),
    }
}

/// Ideal-mixing part of the diffusion potential.
#[inline]
pub(crate) fn ideal_potential(a: f64, b: f64, species: Species, kt: f64) -> f64 {
    let c = 1.0 - a - b;
    match species {
        Species::A => kt * (entropy_slope(a) - entropy_slope(c)),
        Species::B => kt * (entropy_slope(b) - entropy_slope(c)),
    }
}

#[inline]
fn gradient_potential(species: Species, lap_a: f64, lap_b: f64, p: &ModelParams) -> f64 {
    match species {
        Species::A => p.kappa * (2.0 * lap_a + lap_b),
        Species::B => p.kappa * (lap_a + 2.0 * lap_b),
    }
}

/// Solute mobility `M_ij = D (1 - phi) V_a / kT * c_i (delta_ij - c_j)` for one cell.
#[inline]
pub fn mobility_at(phi: f64, a: f64, b: f64, i: Species, j: Species, p: &ModelParams) -> f64 {
    let scale = p.d_liq * (1.0 - phi) / p.thermal_energy_density();
    let ci = match i {
        Species::A => a,
        Species::B => b,
    };
    let cj = match j {
        Species::A => a,
        Species::B => b,
    };
    if i == j {
        scale * ci * (1.0 - ci)
    } else {
        -scale * (ci * cj)
    }
}

pub fn solute_mobility(state: &FieldState, p: &ModelParams, i: Species, j: Species) -> Array2<f64> {
    let mut out = Array2::zeros(state.shape());
    Zip::from(&mut out)
        .and(&state.phi)
        .and(&state.ca)
        .and(&state.cb)
        .for_each(|o, &phi, &a, &b| *o = mobility_at(phi, a, b, i, j, p));
    out
}
