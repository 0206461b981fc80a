//! Pentadiagonal LU without pivoting, factored once and reused per right-hand side.

use num_complex::Complex64;

/// Real pentadiagonal matrix stored by diagonals, all of length `n`.
///
/// `sub2[i] = A[i][i-2]`, `sub1[i] = A[i][i-1]`, `diag[i] = A[i][i]`,
/// `sup1[i] = A[i][i+1]`, `sup2[i] = A[i][i+2]`; out-of-range slots are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Pentadiagonal {
    pub sub2: Vec<f64>,
    pub sub1: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup1: Vec<f64>,
    pub sup2: Vec<f64>,
}

impl Pentadiagonal {
    pub fn zeros(n: usize) -> Self {
        Pentadiagonal {
            sub2: vec![0.0; n],
            sub1: vec![0.0; n],
            diag: vec![0.0; n],
            sup1: vec![0.0; n],
            sup2: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Square of a symmetric tridiagonal matrix given by its diagonal and off-diagonal
    /// (`off[i] = T[i][i+1]`, length n - 1).
    pub fn square_of_tridiagonal(diag: &[f64], off: &[f64]) -> Self {
        let n = diag.len();
        assert_eq!(off.len() + 1, n);
        let t = |i: usize, j: usize| -> f64 {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        };
        let mut m = Pentadiagonal::zeros(n);
        for i in 0..n {
            let entry = |j: usize| -> f64 {
                let lo = i.saturating_sub(1).max(j.saturating_sub(1));
                let hi = (i + 1).min(j + 1).min(n - 1);
                (lo..=hi).map(|k| t(i, k) * t(k, j)).sum()
            };
            m.diag[i] = entry(i);
            if i >= 1 {
                m.sub1[i] = entry(i - 1);
            }
            if i >= 2 {
                m.sub2[i] = entry(i - 2);
            }
            if i + 1 < n {
                m.sup1[i] = entry(i + 1);
            }
            if i + 2 < n {
                m.sup2[i] = entry(i + 2);
            }
        }
        m
    }

    pub fn matvec(&self, x: &[Complex64], out: &mut [Complex64]) {
        let n = self.len();
        for i in 0..n {
            let mut acc = x[i] * self.diag[i];
            if i >= 1 {
                acc += x[i - 1] * self.sub1[i];
            }
            if i >= 2 {
                acc += x[i - 2] * self.sub2[i];
            }
            if i + 1 < n {
                acc += x[i + 1] * self.sup1[i];
            }
            if i + 2 < n {
                acc += x[i + 2] * self.sup2[i];
            }
            out[i] = acc;
        }
    }

    /// Factor `A = L U` with unit upper-triangular `U`. Returns `None` on a zero pivot.
    pub fn factor(&self) -> Option<PentaLu> {
        let n = self.len();
        let mut lu = PentaLu {
            sub2: self.sub2.clone(),
            gamma: vec![0.0; n],
            mu: vec![0.0; n],
            alpha: vec![0.0; n],
            beta: vec![0.0; n],
        };
        for i in 0..n {
            let s2 = if i >= 2 { self.sub2[i] } else { 0.0 };
            let gamma = if i >= 1 {
                self.sub1[i] - if i >= 2 { lu.alpha[i - 2] * s2 } else { 0.0 }
            } else {
                0.0
            };
            let mut mu = self.diag[i];
            if i >= 2 {
                mu -= lu.beta[i - 2] * s2;
            }
            if i >= 1 {
                mu -= lu.alpha[i - 1] * gamma;
            }
            if mu == 0.0 || !mu.is_finite() {
                return None;
            }
            let sup1 = if i + 1 < n { self.sup1[i] } else { 0.0 };
            let sup2 = if i + 2 < n { self.sup2[i] } else { 0.0 };
            lu.alpha[i] = (sup1 - if i >= 1 { lu.beta[i - 1] * gamma } else { 0.0 }) / mu;
            lu.beta[i] = sup2 / mu;
            lu.gamma[i] = gamma;
            lu.mu[i] = mu;
        }
        Some(lu)
    }
}

/// Factors of a pentadiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PentaLu {
    sub2: Vec<f64>,
    gamma: Vec<f64>,
    mu: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl PentaLu {
    /// Solve in place.
    pub fn solve(&self, rhs: &mut [Complex64]) {
        let n = self.mu.len();
        assert_eq!(rhs.len(), n);
        for i in 0..n {
            let mut z = rhs[i];
            if i >= 2 {
                z -= rhs[i - 2] * self.sub2[i];
            }
            if i >= 1 {
                z -= rhs[i - 1] * self.gamma[i];
            }
            rhs[i] = z / self.mu[i];
        }
        for i in (0..n).rev() {
            let mut x = rhs[i];
            if i + 1 < n {
                x -= rhs[i + 1] * self.alpha[i];
            }
            if i + 2 < n {
                x -= rhs[i + 2] * self.beta[i];
            }
            rhs[i] = x;
        }
    }
}
