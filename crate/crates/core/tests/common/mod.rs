#![allow(dead_code)]

use lmd_core::{FieldState, GridSpec};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sum of a few random low Fourier modes, scaled into [-1, 1].
pub fn smooth_noise(ny: usize, nx: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let modes: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-2i32..=2) as f64,
                rng.gen_range(-2i32..=2) as f64,
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.5..1.0),
            )
        })
        .collect();
    let norm: f64 = modes.iter().map(|m| m.3).sum();
    Array2::from_shape_fn((ny, nx), |(j, i)| {
        let (x, y) = (i as f64 / nx as f64, j as f64 / ny as f64);
        modes
            .iter()
            .map(|&(kx, ky, ph, a)| a * (std::f64::consts::TAU * (kx * x + ky * y) + ph).sin())
            .sum::<f64>()
            / norm
    })
}

/// Smooth periodic state with phi in (0.15, 0.85) and composition well inside the simplex.
pub fn smooth_state(grid: &GridSpec, seed: u64) -> FieldState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ny, nx) = grid.shape();
    let phi = smooth_noise(ny, nx, &mut rng).mapv(|v| 0.5 + 0.35 * v);
    let ca = smooth_noise(ny, nx, &mut rng).mapv(|v| 0.3 + 0.1 * v);
    let cb = smooth_noise(ny, nx, &mut rng).mapv(|v| 0.35 + 0.1 * v);
    FieldState::new(phi, ca, cb, 0.0, 0).unwrap()
}

pub fn rel_l2(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Smooth state whose compositions taper to the pure-liquid values at the top reservoir.
pub fn smooth_reservoir_state(grid: &GridSpec, seed: u64) -> FieldState {
    let mut s = smooth_state(grid, seed);
    let ny = grid.ny as f64;
    for ((j, _), v) in s.ca.indexed_iter_mut() {
        *v *= taper(j, ny);
    }
    for ((j, _), v) in s.cb.indexed_iter_mut() {
        *v *= taper(j, ny);
    }
    s
}

fn taper(j: usize, ny: f64) -> f64 {
    (std::f64::consts::FRAC_PI_2 * (j as f64 + 0.5) / (ny + 0.5)).cos()
}
