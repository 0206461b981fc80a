//! Row and 2D FFT helpers over `ny x nx` arrays.

use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Unnormalised forward/inverse transforms for one grid shape.
#[derive(Clone)]
pub struct Fft2Plan {
    ny: usize,
    nx: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2Plan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2Plan").field("ny", &self.ny).field("nx", &self.nx).finish()
    }
}

impl Fft2Plan {
    pub fn new(ny: usize, nx: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2Plan {
            ny,
            nx,
            row_fwd: planner.plan_fft_forward(nx),
            row_inv: planner.plan_fft_inverse(nx),
            col_fwd: planner.plan_fft_forward(ny),
            col_inv: planner.plan_fft_inverse(ny),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.ny, self.nx)
    }

    fn rows(&self, a: &mut Array2<Complex64>, fft: &Arc<dyn Fft<f64>>) {
        assert_eq!(a.dim(), (self.ny, self.nx));
        let data = a.as_slice_mut().expect("standard layout");
        fft.process(data);
    }

    fn cols(&self, a: &mut Array2<Complex64>, fft: &Arc<dyn Fft<f64>>) {
        let mut buf = vec![Complex64::default(); self.ny];
        for mut col in a.axis_iter_mut(Axis(1)) {
            for (b, v) in buf.iter_mut().zip(col.iter()) {
                *b = *v;
            }
            fft.process(&mut buf);
            for (v, b) in col.iter_mut().zip(buf.iter()) {
                *v = *b;
            }
        }
    }

    /// Forward transform of every row (along x).
    pub fn forward_rows(&self, a: &mut Array2<Complex64>) {
        self.rows(a, &self.row_fwd);
    }

    /// Inverse transform of every row, without the 1/nx factor.
    pub fn inverse_rows(&self, a: &mut Array2<Complex64>) {
        self.rows(a, &self.row_inv);
    }

    pub fn forward(&self, a: &mut Array2<Complex64>) {
        self.rows(a, &self.row_fwd);
        self.cols(a, &self.col_fwd);
    }

    /// Inverse 2D transform, without the 1/(nx ny) factor.
    pub fn inverse(&self, a: &mut Array2<Complex64>) {
        self.rows(a, &self.row_inv);
        self.cols(a, &self.col_inv);
    }
}

pub fn to_complex(a: &Array2<f64>) -> Array2<Complex64> {
    let mut out = Array2::zeros(a.dim());
    out.zip_mut_with(a, |o, &v| *o = Complex64::new(v, 0.0));
    out
}

/// Eigenvalues of the negated periodic second difference, `(4/dx^2) sin^2(pi k / n)`.
pub fn second_difference_symbol(n: usize, dx: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / n as f64).sin();
            4.0 * s * s / (dx * dx)
        })
        .collect()
}
