use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ops::same_shape;
use crate::tape::{Tape, Var};
use crate::tensor::{Data, Tensor};

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// Source index in `shape` for every element of the permuted tensor.
fn permutation_map(shape: &[usize], perm: &[usize]) -> Vec<usize> {
    let src = strides(shape);
    let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let n: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    let mut map = Vec::with_capacity(n);
    for _ in 0..n {
        map.push(idx.iter().zip(perm).map(|(&i, &p)| i * src[p]).sum());
        for d in (0..idx.len()).rev() {
            idx[d] += 1;
            if idx[d] < out_shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    map
}

fn gather(t: &Tensor, map: &[usize], shape: &[usize]) -> Tensor {
    match t.data() {
        Data::Real(v) => Tensor::real(shape, map.iter().map(|&i| v[i]).collect()).unwrap(),
        Data::Complex(v) => Tensor::complex(shape, map.iter().map(|&i| v[i]).collect()).unwrap(),
    }
}

fn scatter(g: &Tensor, map: &[usize], shape: &[usize]) -> Tensor {
    match g.data() {
        Data::Real(v) => {
            let mut out = vec![0.0; v.len()];
            for (k, &i) in map.iter().enumerate() {
                out[i] = v[k];
            }
            Tensor::real(shape, out).unwrap()
        }
        Data::Complex(v) => {
            let mut out = vec![Complex64::default(); v.len()];
            for (k, &i) in map.iter().enumerate() {
                out[i] = v[k];
            }
            Tensor::complex(shape, out).unwrap()
        }
    }
}

impl Tape {
    /// Elementwise sum of two tensors of equal kind and shape.
    pub fn add(&self, a: Var, b: Var) -> Result<Var> {
        let mut out = self.value(a).clone();
        {
            let vb = self.value(b);
            same_shape("add", out.shape(), vb.shape())?;
            out.accumulate(&vb)?;
        }
        Ok(self.op(&[a, b], out, Box::new(|_, _, g| Ok(vec![Some(g.clone()), Some(g.clone())]))))
    }

    /// Elementwise product of two real tensors.
    pub fn mul(&self, a: Var, b: Var) -> Result<Var> {
        let out = {
            let (va, vb) = (self.value(a), self.value(b));
            same_shape("mul", va.shape(), vb.shape())?;
            let v = va.as_real()?.iter().zip(vb.as_real()?).map(|(x, y)| x * y).collect();
            Tensor::real(va.shape(), v)?
        };
        Ok(self.op(
            &[a, b],
            out,
            Box::new(|inp, _, g| {
                let (x, y, g) = (inp[0].as_real()?, inp[1].as_real()?, g.as_real()?);
                let gx = g.iter().zip(y).map(|(g, y)| g * y).collect();
                let gy = g.iter().zip(x).map(|(g, x)| g * x).collect();
                Ok(vec![
                    Some(Tensor::real(inp[0].shape(), gx)?),
                    Some(Tensor::real(inp[1].shape(), gy)?),
                ])
            }),
        ))
    }

    /// Multiply by a real constant.
    pub fn scale(&self, x: Var, s: f64) -> Var {
        let mut out = self.value(x).clone();
        out.scale(s);
        self.op(
            &[x],
            out,
            Box::new(move |_, _, g| {
                let mut g = g.clone();
                g.scale(s);
                Ok(vec![Some(g)])
            }),
        )
    }

    /// Sum of all entries of a real tensor, as a scalar.
    pub fn sum(&self, x: Var) -> Result<Var> {
        let s: f64 = self.value(x).as_real()?.iter().sum();
        Ok(self.op(
            &[x],
            Tensor::scalar(s),
            Box::new(|inp, _, g| {
                let g = g.as_real()?[0];
                Ok(vec![Some(Tensor::full(inp[0].shape(), g))])
            }),
        ))
    }

    pub fn reshape(&self, x: Var, shape: &[usize]) -> Result<Var> {
        let out = self.value(x).clone().reshaped(shape)?;
        Ok(self.op(
            &[x],
            out,
            Box::new(|inp, _, g| Ok(vec![Some(g.clone().reshaped(inp[0].shape())?)])),
        ))
    }

    /// Reorder axes: output axis `k` is input axis `perm[k]`.
    pub fn permute(&self, x: Var, perm: &[usize]) -> Result<Var> {
        let shape = self.shape(x);
        let mut seen = vec![false; shape.len()];
        if perm.len() != shape.len() || perm.iter().any(|&p| p >= shape.len() || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Shape(format!("invalid permutation {perm:?} for shape {shape:?}")));
        }
        let map = permutation_map(&shape, perm);
        let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
        let out = gather(&self.value(x), &map, &out_shape);
        Ok(self.op(&[x], out, Box::new(move |_, _, g| Ok(vec![Some(scatter(g, &map, &shape))]))))
    }

    /// Concatenate real tensors along axis 0 (channels).
    pub fn concat(&self, parts: &[Var]) -> Result<Var> {
        let shapes: Vec<Vec<usize>> = parts.iter().map(|&p| self.shape(p)).collect();
        let first = shapes.first().ok_or_else(|| Error::Shape("concat of nothing".into()))?;
        if first.is_empty() {
            return Err(Error::Shape("concat needs at least one axis".into()));
        }
        let tail = &first[1..];
        let mut values = Vec::new();
        let mut lead = 0;
        for (p, s) in parts.iter().zip(&shapes) {
            if s.len() != first.len() || &s[1..] != tail {
                return Err(Error::Shape(format!("concat: {first:?} vs {s:?}")));
            }
            lead += s[0];
            values.extend_from_slice(self.value(*p).as_real()?);
        }
        let mut shape = vec![lead];
        shape.extend_from_slice(tail);
        let sizes: Vec<usize> = parts.iter().map(|&p| self.value(p).len()).collect();
        Ok(self.op(
            parts,
            Tensor::real(&shape, values)?,
            Box::new(move |inp, _, g| {
                let g = g.as_real()?;
                let mut off = 0;
                let mut out = Vec::with_capacity(inp.len());
                for (t, &n) in inp.iter().zip(&sizes) {
                    out.push(Some(Tensor::real(t.shape(), g[off..off + n].to_vec())?));
                    off += n;
                }
                Ok(out)
            }),
        ))
    }

    /// Complex tensor of shape `s` to a real tensor of shape `s + [2]`
    /// holding (re, im) pairs.
    pub fn re_im(&self, x: Var) -> Result<Var> {
        let (out, shape) = {
            let v = self.value(x);
            let z = v.as_complex()?;
            let mut shape = v.shape().to_vec();
            shape.push(2);
            (z.iter().flat_map(|c| [c.re, c.im]).collect::<Vec<_>>(), shape)
        };
        Ok(self.op(
            &[x],
            Tensor::real(&shape, out)?,
            Box::new(|inp, _, g| {
                let g = g.as_real()?;
                let z = g.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
                Ok(vec![Some(Tensor::complex(inp[0].shape(), z)?)])
            }),
        ))
    }
}
