use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Border handling of [`Tape::conv2d`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PadMode {
    /// Zeros outside the image.
    #[default]
    Zero,
    /// Wrap around in x (last axis); mirror about the border faces in y.
    PeriodicXMirrorY,
}

/// Source index along one axis of length `n` for padded coordinate `i - pad`.
fn source(i: isize, n: usize, periodic: bool) -> Option<usize> {
    let n = n as isize;
    if (0..n).contains(&i) {
        return Some(i as usize);
    }
    if periodic {
        Some(i.rem_euclid(n) as usize)
    } else {
        None
    }
}

fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let p = i.rem_euclid(2 * n);
    (if p < n { p } else { 2 * n - 1 - p }) as usize
}

struct Geometry {
    cin: usize,
    h: usize,
    w: usize,
    cout: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    hp: usize,
    wp: usize,
    ho: usize,
    wo: usize,
    /// Source (row, col) for padded rows / cols, `None` for zeros.
    rows: Vec<Option<usize>>,
    cols: Vec<Option<usize>>,
}

impl Geometry {
    fn new(x: &[usize], k: &[usize], stride: usize, pad: usize, mode: PadMode) -> Result<Self> {
        if x.len() != 3 || k.len() != 4 || k[1] != x[0] || stride == 0 {
            return Err(Error::Shape(format!(
                "conv2d input {x:?} incompatible with kernel {k:?} (stride {stride})"
            )));
        }
        let (cin, h, w) = (x[0], x[1], x[2]);
        let (cout, kh, kw) = (k[0], k[2], k[3]);
        let (hp, wp) = (h + 2 * pad, w + 2 * pad);
        if hp < kh || wp < kw || (mode == PadMode::PeriodicXMirrorY && (pad > h || pad > w)) {
            return Err(Error::Shape(format!(
                "conv2d input {x:?} too small for kernel {k:?} with padding {pad}"
            )));
        }
        let p = pad as isize;
        let rows = (0..hp as isize)
            .map(|i| match mode {
                PadMode::Zero => source(i - p, h, false),
                PadMode::PeriodicXMirrorY => Some(mirror(i - p, h)),
            })
            .collect();
        let cols = (0..wp as isize)
            .map(|i| source(i - p, w, mode == PadMode::PeriodicXMirrorY))
            .collect();
        Ok(Geometry {
            cin,
            h,
            w,
            cout,
            kh,
            kw,
            stride,

            hp,
            wp,
            ho: (hp - kh) / stride + 1,
            wo: (wp - kw) / stride + 1,
            rows,
            cols,
        })
    }

    fn pad_input(&self, x: &[f64]) -> Vec<f64> {
        let mut xp = vec![0.0; self.cin * self.hp * self.wp];
        for c in 0..self.cin {
            for (yy, sy) in self.rows.iter().enumerate() {
                let Some(sy) = sy else { continue };
                for (xx, sx) in self.cols.iter().enumerate() {
                    if let Some(sx) = sx {
                        xp[(c * self.hp + yy) * self.wp + xx] = x[(c * self.h + sy) * self.w + sx];
                    }
                }
            }
        }
        xp
    }

    fn fold_padded(&self, gp: &[f64]) -> Vec<f64> {
        let mut gx = vec![0.0; self.cin * self.h * self.w];
        for c in 0..self.cin {
            for (yy, sy) in self.rows.iter().enumerate() {
                let Some(sy) = sy else { continue };
                for (xx, sx) in self.cols.iter().enumerate() {
                    if let Some(sx) = sx {
                        gx[(c * self.h + sy) * self.w + sx] += gp[(c * self.hp + yy) * self.wp + xx];
                    }
                }
            }
        }
        gx
    }
}

impl Geometry {
    /// Patch matrix `[C_in * kh * kw, ho * wo]` of the padded input.
    fn im2col(&self, xp: &[f64]) -> Array2<f64> {
        let mut cols = Array2::zeros((self.cin * self.kh * self.kw, self.ho * self.wo));
        for ((ci, ky, kx), mut row) in self.taps().zip(cols.rows_mut()) {
            let row = row.as_slice_mut().unwrap();
            for oy in 0..self.ho {
                let src = &xp[(ci * self.hp + oy * self.stride + ky) * self.wp..][..self.wp];
                let dst = &mut row[oy * self.wo..(oy + 1) * self.wo];
                if self.stride == 1 {
                    dst.copy_from_slice(&src[kx..kx + self.wo]);
                } else {
                    for (ox, d) in dst.iter_mut().enumerate() {
                        *d = src[ox * self.stride + kx];
                    }
                }
            }
        }
        cols
    }

    /// Adjoint of [`Geometry::im2col`].
    fn col2im(&self, cols: &Array2<f64>) -> Vec<f64> {
        let mut gp = vec![0.0; self.cin * self.hp * self.wp];
        for ((ci, ky, kx), row) in self.taps().zip(cols.rows()) {
            let row = row.as_slice().unwrap();
            for oy in 0..self.ho {
                let dst = &mut gp[(ci * self.hp + oy * self.stride + ky) * self.wp..][..self.wp];
                let src = &row[oy * self.wo..(oy + 1) * self.wo];
                if self.stride == 1 {
                    for (d, s) in dst[kx..kx + self.wo].iter_mut().zip(src) {
                        *d += s;
                    }
                } else {
                    for (ox, s) in src.iter().enumerate() {
                        dst[ox * self.stride + kx] += s;
                    }
                }
            }
        }
        gp
    }

    fn taps(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.cin).flat_map(move |c| (0..self.kh).flat_map(move |y| (0..self.kw).map(move |x| (c, y, x))))
    }
}

impl Tape {
    /// Cross-correlation of `x: [C_in, H, W]` with `kernel: [C_out, C_in, kh, kw]`,
    /// plus an optional per-channel `bias: [C_out]`.
    pub fn conv2d(&self, x: Var, kernel: Var, bias: Option<Var>, stride: usize, pad: usize, mode: PadMode) -> Result<Var> {
        let g = Geometry::new(&self.shape(x), &self.shape(kernel), stride, pad, mode)?;
        if let Some(b) = bias {
            let bs = self.shape(b);
            if bs != [g.cout] {
                return Err(Error::Shape(format!("conv2d bias {bs:?} for {} output channels", g.cout)));
            }
        }
        let taps = g.cin * g.kh * g.kw;
        let plane = g.ho * g.wo;
        let out = {
            let xv = self.value(x);
            let kv = self.value(kernel);
            let cols = g.im2col(&g.pad_input(xv.as_real()?));
            let k = ArrayView2::from_shape((g.cout, taps), kv.as_real()?).unwrap();
            let mut y = Array2::zeros((g.cout, plane));
            if let Some(b) = bias {
                let bv = self.value(b);
                for (mut row, &bc) in y.rows_mut().into_iter().zip(bv.as_real()?) {
                    row.fill(bc);
                }
            }
            general_mat_mul(1.0, &k, &cols, 1.0, &mut y);
            Tensor::real(&[g.cout, g.ho, g.wo], y.into_raw_vec_and_offset().0)?
        };
        let mut inputs = vec![x, kernel];
        inputs.extend(bias);
        Ok(self.op(
            &inputs,
            out,
            Box::new(move |inp, _, grad| {
                let gout = ArrayView2::from_shape((g.cout, plane), grad.as_real()?).unwrap();
                let k = ArrayView2::from_shape((g.cout, taps), inp[1].as_real()?).unwrap();
                let cols = g.im2col(&g.pad_input(inp[0].as_real()?));
                let gk = gout.dot(&cols.t());
                let gcols = k.t().dot(&gout);
                let gx = g.fold_padded(&g.col2im(&gcols));
                let mut out = vec![
                    Some(Tensor::real(inp[0].shape(), gx)?),
                    Some(Tensor::real(inp[1].shape(), gk.as_standard_layout().iter().copied().collect())?),
                ];
                if inp.len() == 3 {
                    let gb = gout.rows().into_iter().map(|r| r.sum()).collect();
                    out.push(Some(Tensor::real(&[g.cout], gb)?));
                }
                Ok(out)
            }),
        ))
    }

    /// 2x2 mean pooling of `[C, H, W]` with even H and W.
    pub fn down2(&self, x: Var) -> Result<Var> {
        let s = self.shape(x);
        if s.len() != 3 || s[1] % 2 != 0 || s[2] % 2 != 0 {
            return Err(Error::Shape(format!("down2 needs [C, even H, even W], got {s:?}")));
        }
        let (c, h, w) = (s[0], s[1], s[2]);
        let (ho, wo) = (h / 2, w / 2);
        let out = {
            let v = self.value(x);
            let v = v.as_real()?;
            let mut o = vec![0.0; c * ho * wo];
            for ch in 0..c {
                for y in 0..ho {
                    for xx in 0..wo {
                        let at = |dy: usize, dx: usize| v[(ch * h + 2 * y + dy) * w + 2 * xx + dx];
                        o[(ch * ho + y) * wo + xx] = 0.25 * (at(0, 0) + at(0, 1) + at(1, 0) + at(1, 1));
                    }
                }
            }
            Tensor::real(&[c, ho, wo], o)?
        };
        Ok(self.op(
            &[x],
            out,
            Box::new(move |_, _, g| {
                let g = g.as_real()?;
                let mut gx = vec![0.0; c * h * w];
                for ch in 0..c {
                    for y in 0..h {
                        for xx in 0..w {
                            gx[(ch * h + y) * w + xx] = 0.25 * g[(ch * ho + y / 2) * wo + xx / 2];
                        }
                    }
                }
                Ok(vec![Some(Tensor::real(&[c, h, w], gx)?)])
            }),
        ))
    }

    /// Nearest-neighbour 2x upsampling of `[C, H, W]`.
    pub fn up2(&self, x: Var) -> Result<Var> {
        let s = self.shape(x);
        if s.len() != 3 {
            return Err(Error::Shape(format!("up2 needs [C, H, W], got {s:?}")));
        }
        let (c, h, w) = (s[0], s[1], s[2]);
        let (ho, wo) = (2 * h, 2 * w);
        let out = {
            let v = self.value(x);
            let v = v.as_real()?;
            let mut o = vec![0.0; c * ho * wo];
            for ch in 0..c {
                for y in 0..ho {
                    for xx in 0..wo {
                        o[(ch * ho + y) * wo + xx] = v[(ch * h + y / 2) * w + xx / 2];
                    }
                }
            }
            Tensor::real(&[c, ho, wo], o)?
        };
        Ok(self.op(
            &[x],
            out,
            Box::new(move |_, _, g| {
                let g = g.as_real()?;
                let mut gx = vec![0.0; c * h * w];
                for ch in 0..c {
                    for y in 0..ho {
                        for xx in 0..wo {
                            gx[(ch * h + y / 2) * w + xx / 2] += g[(ch * ho + y) * wo + xx];
                        }
                    }
                }
                Ok(vec![Some(Tensor::real(&[c, h, w], gx)?)])
            }),
        ))
    }
}
