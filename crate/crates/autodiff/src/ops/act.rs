use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tape::{Tape, Var};
use crate::tensor::{Data, Tensor};

/// Largest double below one; sigmoid outputs are kept inside the open unit interval.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

pub(crate) fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x * FRAC_1_SQRT_2))
}

pub(crate) fn gelu_slope(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(x * FRAC_1_SQRT_2));
    let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    cdf + x * pdf
}

fn sigmoid(x: f64) -> f64 {
    let y = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    y.clamp(f64::MIN_POSITIVE, BELOW_ONE)
}

fn shrink(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

fn shrink_slope(x: f64, lambda: f64) -> f64 {
    if x.abs() > lambda {
        1.0
    } else {
        0.0
    }
}

/// Apply `f` to real entries, or to real and imaginary parts separately.
fn map_parts(t: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    match t.data() {
        Data::Real(v) => Tensor::real(t.shape(), v.iter().map(|&x| f(x)).collect()).unwrap(),
        Data::Complex(v) => {
            Tensor::complex(t.shape(), v.iter().map(|z| Complex64::new(f(z.re), f(z.im))).collect()).unwrap()
        }
    }
}

impl Tape {
    fn partwise(&self, x: Var, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64 + 'static) -> Var {
        let out = map_parts(&self.value(x), f);
        self.op(
            &[x],
            out,
            Box::new(move |inp, _, g| {
                let t = partwise_grad(inp[0], g, &df)?;
                Ok(vec![Some(t)])
            }),
        )
    }

    /// `0.5 x (1 + erf(x / sqrt 2))`; complex inputs are mapped part by part.
    pub fn gelu(&self, x: Var) -> Var {
        self.partwise(x, gelu, gelu_slope)
    }

    /// Soft thresholding by `lambda >= 0`; complex inputs are mapped part by part.
    pub fn softshrink(&self, x: Var, lambda: f64) -> Var {
        self.partwise(x, move |v| shrink(v, lambda), move |v| shrink_slope(v, lambda))
    }

    /// Logistic function, kept strictly inside (0, 1).
    pub fn sigmoid(&self, x: Var) -> Result<Var> {
        let out = {
            let v = self.value(x);
            Tensor::real(v.shape(), v.as_real()?.iter().map(|&a| sigmoid(a)).collect())?
        };
        Ok(self.op(
            &[x],
            out,
            Box::new(|_, y, g| {
                let gx = y
                    .as_real()?
                    .iter()
                    .zip(g.as_real()?)
                    .map(|(y, g)| g * y * (1.0 - y))
                    .collect();
                Ok(vec![Some(Tensor::real(y.shape(), gx)?)])
            }),
        ))
    }

    /// Softmax of a real tensor along `axis`.
    pub fn softmax(&self, x: Var, axis: usize) -> Result<Var> {
        let shape = self.shape(x);
        if axis >= shape.len() {
            return Err(Error::Shape(format!("axis {axis} out of range for {shape:?}")));
        }
        let n = shape[axis];
        let inner: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let lanes = move |f: &mut dyn FnMut(Vec<usize>)| {
            for o in 0..outer {
                for i in 0..inner {
                    f((0..n).map(|k| (o * n + k) * inner + i).collect());
                }
            }
        };
        let out = {
            let v = self.value(x);
            let v = v.as_real()?;
            let mut y = vec![0.0; v.len()];
            lanes(&mut |idx| {
                let m = idx.iter().map(|&k| v[k]).fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = idx.iter().map(|&k| (v[k] - m).exp()).sum();
                for &k in &idx {
                    y[k] = (v[k] - m).exp() / s;
                }
            });
            Tensor::real(&shape, y)?
        };
        Ok(self.op(
            &[x],
            out,
            Box::new(move |_, y, g| {
                let (y, g) = (y.as_real()?, g.as_real()?);
                let mut gx = vec![0.0; y.len()];
                lanes(&mut |idx| {
                    let dot: f64 = idx.iter().map(|&k| g[k] * y[k]).sum();
                    for &k in &idx {
                        gx[k] = y[k] * (g[k] - dot);
                    }
                });
                Ok(vec![Some(Tensor::real(&shape, gx)?)])
            }),
        ))
    }
}

/// Gradient of a partwise map: `g * f'(x)` per real or imaginary part.
fn partwise_grad(x: &Tensor, g: &Tensor, df: &dyn Fn(f64) -> f64) -> Result<Tensor> {
    match (x.data(), g.data()) {
        (Data::Real(xv), Data::Real(gv)) => {
            Tensor::real(x.shape(), xv.iter().zip(gv).map(|(&a, &b)| b * df(a)).collect())
        }
        (Data::Complex(xv), Data::Complex(gv)) => Tensor::complex(
            x.shape(),
            xv.iter()
                .zip(gv)
                .map(|(z, g)| Complex64::new(g.re * df(z.re), g.im * df(z.im)))
                .collect(),
        ),
        _ => Err(Error::Kind("gradient kind does not match value kind".into())),
    }
}
