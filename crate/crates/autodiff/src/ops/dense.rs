use crate::error::{Error, Result};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Variance offset inside [`Tape::layernorm`].
pub const LAYERNORM_EPS: f64 = 1e-12;

fn last_axis(what: &str, shape: &[usize]) -> Result<(usize, usize)> {
    match shape.last() {
        Some(&d) if d > 0 => Ok((shape.iter().product::<usize>() / d, d)),
        _ => Err(Error::Shape(format!("{what} needs a non-empty last axis, got {shape:?}"))),
    }
}

impl Tape {
    /// `x · w + b` over the last axis of `x`; `w: [d_in, d_out]`, `b: [d_out]`.
    pub fn linear(&self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let xs = self.shape(x);
        let ws = self.shape(w);
        let (rows, din) = last_axis("linear", &xs)?;
        if ws.len() != 2 || ws[0] != din {
            return Err(Error::Shape(format!("linear input {xs:?} incompatible with weight {ws:?}")));
        }
        let dout = ws[1];
        if let Some(b) = b {
            let bs = self.shape(b);
            if bs != [dout] {
                return Err(Error::Shape(format!("linear bias {bs:?} for weight {ws:?}")));
            }
        }
        let mut out_shape = xs.clone();
        *out_shape.last_mut().unwrap() = dout;
        let out = {
            let xv = self.value(x);
            let wv = self.value(w);
            let (xv, wv) = (xv.as_real()?, wv.as_real()?);
            let mut y = match b {
                Some(b) => self.value(b).as_real()?.repeat(rows),
                None => vec![0.0; rows * dout],
            };
            for r in 0..rows {
                let yr = &mut y[r * dout..(r + 1) * dout];
                for (i, &xi) in xv[r * din..(r + 1) * din].iter().enumerate() {
                    for (yv, wv) in yr.iter_mut().zip(&wv[i * dout..(i + 1) * dout]) {
                        *yv += xi * wv;
                    }
                }
            }
            Tensor::real(&out_shape, y)?
        };
        let mut inputs = vec![x, w];
        inputs.extend(b);
        Ok(self.op(
            &inputs,
            out,
            Box::new(move |inp, _, g| {
                let (xv, wv, g) = (inp[0].as_real()?, inp[1].as_real()?, g.as_real()?);
                let mut gx = vec![0.0; rows * din];
                let mut gw = vec![0.0; din * dout];
                for r in 0..rows {
                    let gr = &g[r * dout..(r + 1) * dout];
                    for i in 0..din {
                        let wrow = &wv[i * dout..(i + 1) * dout];
                        gx[r * din + i] = gr.iter().zip(wrow).map(|(a, b)| a * b).sum();
                        let xi = xv[r * din + i];
                        for (gwv, gv) in gw[i * dout..(i + 1) * dout].iter_mut().zip(gr) {
                            *gwv += xi * gv;
                        }
                    }
                }
                let mut out = vec![
                    Some(Tensor::real(inp[0].shape(), gx)?),
                    Some(Tensor::real(inp[1].shape(), gw)?),
                ];
                if inp.len() == 3 {
                    let mut gb = vec![0.0; dout];
                    for r in 0..rows {
                        for (a, b) in gb.iter_mut().zip(&g[r * dout..(r + 1) * dout]) {
                            *a += b;
                        }
                    }
                    out.push(Some(Tensor::real(&[dout], gb)?));
                }
                Ok(out)
            }),
        ))
    }

    /// Normalize each lane of the last axis to zero mean and unit variance,
    /// then apply `scale` and `shift` (both of the last-axis length).
    pub fn layernorm(&self, x: Var, scale: Var, shift: Var) -> Result<Var> {
        let xs = self.shape(x);
        let (rows, d) = last_axis("layernorm", &xs)?;
        for p in [scale, shift] {
            let ps = self.shape(p);
            if ps != [d] {
                return Err(Error::Shape(format!("layernorm affine {ps:?} for input {xs:?}")));
            }
        }
        let normalize = move |x: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let mut xhat = vec![0.0; x.len()];
            let mut inv = vec![0.0; rows];
            for r in 0..rows {
                let lane = &x[r * d..(r + 1) * d];
                let mean = lane.iter().sum::<f64>() / d as f64;
                let var = lane.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d as f64;
                inv[r] = 1.0 / (var + LAYERNORM_EPS).sqrt();
                for (h, v) in xhat[r * d..(r + 1) * d].iter_mut().zip(lane) {
                    *h = (v - mean) * inv[r];
                }
            }
            (xhat, inv)
        };
        let out = {
            let (xv, sv, bv) = (self.value(x), self.value(scale), self.value(shift));
            let (xhat, _) = normalize(xv.as_real()?);
            let (sv, bv) = (sv.as_real()?, bv.as_real()?);
            let y = xhat.iter().enumerate().map(|(k, h)| h * sv[k % d] + bv[k % d]).collect();
            Tensor::real(&xs, y)?
        };
        Ok(self.op(
            &[x, scale, shift],
            out,
            Box::new(move |inp, _, g| {
                let (xv, sv, g) = (inp[0].as_real()?, inp[1].as_real()?, g.as_real()?);
                let (xhat, inv) = normalize(xv);
                let mut gx = vec![0.0; xv.len()];
                let mut gs = vec![0.0; d];
                let mut gb = vec![0.0; d];
                let mut gh = vec![0.0; d];
                for r in 0..rows {
                    let span = r * d..(r + 1) * d;
                    let (hr, gr) = (&xhat[span.clone()], &g[span.clone()]);
                    for j in 0..d {
                        gs[j] += gr[j] * hr[j];
                        gb[j] += gr[j];
                        gh[j] = gr[j] * sv[j];
                    }
                    let m1 = gh.iter().sum::<f64>() / d as f64;
                    let m2 = gh.iter().zip(hr).map(|(a, b)| a * b).sum::<f64>() / d as f64;
                    for (j, o) in gx[span].iter_mut().enumerate() {
                        *o = inv[r] * (gh[j] - m1 - hr[j] * m2);
                    }
                }
                Ok(vec![
                    Some(Tensor::real(inp[0].shape(), gx)?),
                    Some(Tensor::real(&[d], gs)?),
                    Some(Tensor::real(&[d], gb)?),
                ])
            }),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_zero_weights() {
        let tape = Tape::new();
        let xv = Tensor::real(&[2, 3], vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.0]).unwrap();
        let x = tape.constant(xv.clone());
        let eye = Tensor::real(&[3, 3], (0..9).map(|k| if k % 4 == 0 { 1.0 } else { 0.0 }).collect()).unwrap();
        let y = tape.linear(x, tape.constant(eye), None).unwrap();
        assert_eq!(*tape.value(y), xv);
        let b = tape.constant(Tensor::real(&[2], vec![0.25, -4.0]).unwrap());
        let z = tape.linear(x, tape.constant(Tensor::zeros(&[3, 2])), Some(b)).unwrap();
        assert_eq!(tape.value(z).as_real().unwrap(), &[0.25, -4.0, 0.25, -4.0]);
    }

    #[test]
    fn layernorm_statistics() {
        let tape = Tape::new();
        let x = tape.constant(Tensor::real(&[2, 4], vec![1.0, 2.0, 3.0, 4.0, -7.0, 0.0, 0.5, 9.0]).unwrap());
        let one = tape.constant(Tensor::full(&[4], 1.0));
        let zero = tape.constant(Tensor::zeros(&[4]));
        let y = tape.layernorm(x, one, zero).unwrap();
        let v = tape.value(y).as_real().unwrap().to_vec();
        for lane in v.chunks(4) {
            let m = lane.iter().sum::<f64>() / 4.0;
            let var = lane.iter().map(|a| (a - m).powi(2)).sum::<f64>() / 4.0;
            assert!(m.abs() < 1e-14 && (var - 1.0).abs() < 1e-10);
        }
        let again = tape.layernorm(y, one, zero).unwrap();
        for (a, b) in tape.value(again).as_real().unwrap().iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
