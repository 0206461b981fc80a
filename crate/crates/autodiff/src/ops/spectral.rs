use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::ops::same_shape;
use crate::tape::{Tape, Var};
use crate::tensor::{Data, Tensor};

/// `(h, w, channels)` of a `[h, w, ...]` token grid with power-of-two `h`, `w`.
fn grid_dims(shape: &[usize]) -> Result<(usize, usize, usize)> {
    if shape.len() < 2 || !shape[0].is_power_of_two() || !shape[1].is_power_of_two() {
        return Err(Error::Shape(format!("fft2 needs power-of-two leading dims, got {shape:?}")));
    }
    Ok((shape[0], shape[1], shape[2..].iter().product()))
}

fn to_complex(t: &Tensor) -> Vec<Complex64> {
    match t.data() {
        Data::Real(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        Data::Complex(v) => v.clone(),
    }
}

/// Unitary 2D DFT in place over the two leading axes of `[h, w, c]` data.
fn transform(data: &mut [Complex64], h: usize, w: usize, c: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (fw, fh) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };
    let mut lane = vec![Complex64::default(); w.max(h)];
    for y in 0..h {
        for ch in 0..c {
            for x in 0..w {
                lane[x] = data[(y * w + x) * c + ch];
            }
            fw.process(&mut lane[..w]);
            for x in 0..w {
                data[(y * w + x) * c + ch] = lane[x];
            }
        }
    }
    for x in 0..w {
        for ch in 0..c {
            for y in 0..h {
                lane[y] = data[(y * w + x) * c + ch];
            }
            fh.process(&mut lane[..h]);
            for y in 0..h {
                data[(y * w + x) * c + ch] = lane[y];
            }
        }
    }
    let norm = 1.0 / ((h * w) as f64).sqrt();
    data.iter_mut().for_each(|z| *z *= norm);
}

impl Tape {
    /// Unitary 2D Fourier transform over the two leading axes of `[h, w, ...]`.
    pub fn fft2(&self, x: Var) -> Result<Var> {
        let shape = self.shape(x);
        let (h, w, c) = grid_dims(&shape)?;
        let (out, real_input) = {
            let v = self.value(x);
            let mut d = to_complex(&v);
            transform(&mut d, h, w, c, false);
            (Tensor::complex(&shape, d)?, !v.is_complex())
        };
        Ok(self.op(
            &[x],
            out,
            Box::new(move |inp, _, g| {
                let mut d = g.as_complex()?.to_vec();
                transform(&mut d, h, w, c, true);
                let gx = if real_input {
                    Tensor::real(inp[0].shape(), d.iter().map(|z| z.re).collect())?
                } else {
                    Tensor::complex(inp[0].shape(), d)?
                };
                Ok(vec![Some(gx)])
            }),
        ))
    }

    /// Real part of the unitary inverse 2D Fourier transform of a complex `[h, w, ...]`.
    pub fn ifft2(&self, x: Var) -> Result<Var> {
        let shape = self.shape(x);
        let (h, w, c) = grid_dims(&shape)?;
        let out = {
            let v = self.value(x);
            let mut d = v.as_complex()?.to_vec();
            transform(&mut d, h, w, c, true);
            Tensor::real(&shape, d.iter().map(|z| z.re).collect())?
        };
        Ok(self.op(
            &[x],
            out,
            Box::new(move |inp, _, g| {
                let mut d = to_complex(g);
                transform(&mut d, h, w, c, false);
                Ok(vec![Some(Tensor::complex(inp[0].shape(), d)?)])
            }),
        ))
    }

    /// Per-mode, per-head complex matrix product: the last axis of `x` is split
    /// into `heads` blocks of `dh`, each mixed by `w: [heads, dh, dh]` and
    /// offset by `b: [heads, dh]`.
    pub fn block_complex_linear(&self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let xs = self.shape(x);
        let ws = self.shape(w);
        if ws.len() != 3 || ws[1] != ws[2] || ws[0] == 0 {
            return Err(Error::Shape(format!("block weight must be [heads, dh, dh], got {ws:?}")));
        }
        let (heads, dh) = (ws[0], ws[1]);
        let d = *xs.last().unwrap_or(&0);
        if d % heads != 0 {
            return Err(Error::Config(format!("channel count {d} not divisible by {heads} heads")));
        }
        if d != heads * dh {
            return Err(Error::Shape(format!("input {xs:?} incompatible with block weight {ws:?}")));
        }
        if let Some(b) = b {
            same_shape("block bias", &self.shape(b), &[heads, dh])?;
        }
        let out = {
            let (xv, wv) = (self.value(x), self.value(w));
            let (xv, wv) = (xv.as_complex()?, wv.as_complex()?);
            let bias = match b {
                Some(b) => self.value(b).as_complex()?.to_vec(),
                None => vec![Complex64::default(); d],
            };
            let mut y = vec![Complex64::default(); xv.len()];
            y.par_chunks_mut(d).zip(xv.par_chunks(d)).for_each(|(yr, xr)| {
                for hd in 0..heads {
                    for j in 0..dh {
                        let mut acc = bias[hd * dh + j];
                        for i in 0..dh {
                            acc += xr[hd * dh + i] * wv[(hd * dh + i) * dh + j];
                        }
                        yr[hd * dh + j] = acc;
                    }
                }
            });
            Tensor::complex(&xs, y)?
        };
        let mut inputs = vec![x, w];
        inputs.extend(b);
        Ok(self.op(
            &inputs,
            out,
            Box::new(move |inp, _, g| {
                let (xv, wv, g) = (inp[0].as_complex()?, inp[1].as_complex()?, g.as_complex()?);
                let mut gx = vec![Complex64::default(); xv.len()];
                gx.par_chunks_mut(d).zip(g.par_chunks(d)).for_each(|(gxr, gr)| {
                    for hd in 0..heads {
                        for i in 0..dh {
                            let mut acc = Complex64::default();
                            for j in 0..dh {
                                acc += gr[hd * dh + j] * wv[(hd * dh + i) * dh + j].conj();
                            }
                            gxr[hd * dh + i] = acc;
                        }
                    }
                });
                let mut gw = vec![Complex64::default(); heads * dh * dh];
                let mut gb = vec![Complex64::default(); d];
                for (xr, gr) in xv.chunks(d).zip(g.chunks(d)) {
                    for hd in 0..heads {
                        for i in 0..dh {
                            let xc = xr[hd * dh + i].conj();
                            for j in 0..dh {
                                gw[(hd * dh + i) * dh + j] += xc * gr[hd * dh + j];
                            }
                        }
                    }
                    for (a, b) in gb.iter_mut().zip(gr) {
                        *a += b;
                    }
                }
                let mut out = vec![
                    Some(Tensor::complex(inp[0].shape(), gx)?),
                    Some(Tensor::complex(inp[1].shape(), gw)?),
                ];
                if inp.len() == 3 {
                    out.push(Some(Tensor::complex(&[heads, dh], gb)?));
                }
                Ok(out)
            }),
        ))
    }

    /// Mean squared difference of two real tensors, as a scalar.
    pub fn mse(&self, pred: Var, target: Var) -> Result<Var> {
        let m = {
            let (p, t) = (self.value(pred), self.value(target));
            same_shape("mse", p.shape(), t.shape())?;
            let (p, t) = (p.as_real()?, t.as_real()?);
            if p.is_empty() {
                return Err(Error::Shape("mse of empty tensors".into()));
            }
            p.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / p.len() as f64
        };
        Ok(self.op(
            &[pred, target],
            Tensor::scalar(m),
            Box::new(|inp, _, g| {
                let (p, t) = (inp[0].as_real()?, inp[1].as_real()?);
                let s = 2.0 * g.as_real()?[0] / p.len() as f64;
                let gp: Vec<f64> = p.iter().zip(t).map(|(a, b)| s * (a - b)).collect();
                let gt = gp.iter().map(|v| -v).collect();
                Ok(vec![
                    Some(Tensor::real(inp[0].shape(), gp)?),
                    Some(Tensor::real(inp[1].shape(), gt)?),
                ])
            }),
        ))
    }
}
