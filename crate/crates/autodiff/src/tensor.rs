use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Element storage of a tensor.
#[derive(Debug, Clone, PartialEq)]
pub enum Data {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

/// Dense row-major tensor of `f64` or `Complex64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Data,
}

fn count(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Tensor {
    pub fn real(shape: &[usize], values: Vec<f64>) -> Result<Self> {
        if values.len() != count(shape) {
            return Err(Error::Shape(format!("{} values for shape {shape:?}", values.len())));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data: Data::Real(values),
        })
    }

    pub fn complex(shape: &[usize], values: Vec<Complex64>) -> Result<Self> {
        if values.len() != count(shape) {
            return Err(Error::Shape(format!("{} values for shape {shape:?}", values.len())));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data: Data::Complex(values),
        })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: Data::Real(vec![0.0; count(shape)]),
        }
    }

    pub fn complex_zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: Data::Complex(vec![Complex64::default(); count(shape)]),
        }
    }

    pub fn full(shape: &[usize], v: f64) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: Data::Real(vec![v; count(shape)]),
        }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            shape: vec![],
            data: Data::Real(vec![v]),
        }
    }

    /// Zeros of the same kind and shape.
    pub fn zeros_like(&self) -> Self {
        match self.data {
            Data::Real(_) => Tensor::zeros(&self.shape),
            Data::Complex(_) => Tensor::complex_zeros(&self.shape),
        }
    }

    /// Uniform entries in `[-bound, bound]`.
    pub fn uniform(shape: &[usize], bound: f64, rng: &mut impl Rng) -> Self {
        let v = (0..count(shape)).map(|_| rng.gen_range(-bound..=bound)).collect();
        Tensor {
            shape: shape.to_vec(),
            data: Data::Real(v),
        }
    }

    /// Complex entries with real and imaginary parts uniform in `[-bound, bound]`.
    pub fn complex_uniform(shape: &[usize], bound: f64, rng: &mut impl Rng) -> Self {
        let v = (0..count(shape))
            .map(|_| Complex64::new(rng.gen_range(-bound..=bound), rng.gen_range(-bound..=bound)))
            .collect();
        Tensor {
            shape: shape.to_vec(),
            data: Data::Complex(v),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        count(&self.shape)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.data, Data::Complex(_))
    }

    pub fn data(&self) -> &Data {
        &self.data
    }

    pub fn as_real(&self) -> Result<&[f64]> {
        match &self.data {
            Data::Real(v) => Ok(v),
            Data::Complex(_) => Err(Error::Kind(format!("expected a real tensor of shape {:?}", self.shape))),
        }
    }

    pub fn as_real_mut(&mut self) -> Result<&mut [f64]> {
        match &mut self.data {
            Data::Real(v) => Ok(v),
            Data::Complex(_) => Err(Error::Kind("expected a real tensor".into())),
        }
    }

    pub fn as_complex(&self) -> Result<&[Complex64]> {
        match &self.data {
            Data::Complex(v) => Ok(v),
            Data::Real(_) => Err(Error::Kind(format!("expected a complex tensor of shape {:?}", self.shape))),
        }
    }

    pub fn as_complex_mut(&mut self) -> Result<&mut [Complex64]> {
        match &mut self.data {
            Data::Complex(v) => Ok(v),
            Data::Real(_) => Err(Error::Kind("expected a complex tensor".into())),
        }
    }

    /// Number of real degrees of freedom (complex entries count twice).
    pub fn dof(&self) -> usize {
        match &self.data {
            Data::Real(v) => v.len(),
            Data::Complex(v) => 2 * v.len(),
        }
    }

    /// Real degree of freedom `k`; complex entry `i` maps to `2i` (re) and `2i + 1` (im).
    pub fn get_dof(&self, k: usize) -> f64 {
        match &self.data {
            Data::Real(v) => v[k],
            Data::Complex(v) => {
                if k % 2 == 0 {
                    v[k / 2].re
                } else {
                    v[k / 2].im
                }
            }
        }
    }

    pub fn set_dof(&mut self, k: usize, x: f64) {
        match &mut self.data {
            Data::Real(v) => v[k] = x,
            Data::Complex(v) => {
                if k % 2 == 0 {
                    v[k / 2].re = x
                } else {
                    v[k / 2].im = x
                }
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        match &self.data {
            Data::Real(v) => v.iter().all(|x| x.is_finite()),
            Data::Complex(v) => v.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        }
    }

    /// Same data under a new shape with the same element count.
    pub fn reshaped(mut self, shape: &[usize]) -> Result<Self> {
        if count(shape) != self.len() {
            return Err(Error::Shape(format!("cannot reshape {:?} to {shape:?}", self.shape)));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Elementwise `self += other`; both must have the same kind and shape.
    pub fn accumulate(&mut self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!("{:?} vs {:?}", self.shape, other.shape)));
        }
        match (&mut self.data, &other.data) {
            (Data::Real(a), Data::Real(b)) => a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
            (Data::Complex(a), Data::Complex(b)) => a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
            _ => return Err(Error::Kind("cannot mix real and complex tensors".into())),
        }
        Ok(())
    }

    /// Multiply every entry by a real factor.
    pub fn scale(&mut self, s: f64) {
        match &mut self.data {
            Data::Real(v) => v.iter_mut().for_each(|x| *x *= s),
            Data::Complex(v) => v.iter_mut().for_each(|x| *x *= s),
        }
    }

    /// Squared Euclidean norm over all real degrees of freedom.
    pub fn norm_sqr(&self) -> f64 {
        match &self.data {
            Data::Real(v) => v.iter().map(|x| x * x).sum(),
            Data::Complex(v) => v.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    /// Raw little-endian bytes of every real degree of freedom.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        (0..self.dof()).flat_map(|k| self.get_dof(k).to_le_bytes()).collect()
    }
}
