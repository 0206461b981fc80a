//! Interface geometry and scalar quantities of interest.

mod contour;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, GridSpec};
use crate::snapshot::read_snapshot;
use crate::state::FieldState;

pub use contour::{extract_level_set, CurveKind, InterfaceCurve};

/// Interface level of the phase field.
pub const INTERFACE_LEVEL: f64 = 0.5;

/// Steps in y smaller than this are treated as flat when locating extrema.
pub const PLATEAU_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QoiOptions {
    pub level: f64,
    /// Resampling spacing in grid cells.
    pub ds_cells: f64,
    /// Apply 5-point box smoothing to resampled vertices.
    pub smooth: bool,
}

impl Default for QoiOptions {
    fn default() -> Self {
        QoiOptions {
            level: INTERFACE_LEVEL,
            ds_cells: 3.0,
            smooth: true,
        }
    }
}

impl QoiOptions {
    /// Resampling spacing in unit-normalised coordinates.
    pub fn ds(&self, nx: usize, ny: usize) -> f64 {
        self.ds_cells / nx.max(ny) as f64
    }
}

/// Interface curves of `state.phi` at `level`.
pub fn extract_interface(state: &FieldState, boundary: Boundary, level: f64) -> Vec<InterfaceCurve> {
    extract_level_set(&state.phi, level, boundary.periodic_y())
}

/// Resample at uniform spacing close to `ds`: consecutive output vertices
/// are equidistant and lie on the input polyline. Open curves keep both end
/// points; loops get `round(L / ds)` vertices starting at the first vertex.
pub fn resample_uniform(curve: &InterfaceCurve, ds: f64) -> Result<InterfaceCurve> {
    if !(ds > 0.0 && ds.is_finite()) {
        return Err(Error::Parameter(format!("ds must be positive, got {ds}")));
    }
    let seg = curve.segment_lengths();
    let total: f64 = seg.iter().sum();
    if curve.len() < 2 || ds > total {
        return Err(Error::DegenerateCurve(format!(
            "length {total} shorter than spacing {ds}"
        )));
    }
    let m = ((total / ds).round() as usize).max(1);
    let walker = ChordWalker { curve, seg: &seg };
    // Chords are never longer than arcs, so `total / m` overshoots.
    let (mut lo, mut hi) = (0.0, total / m as f64);
    for _ in 0..200 {
        let c = 0.5 * (lo + hi);
        if walker.walk(c, m, None) < total {
            lo = c;
        } else {
            hi = c;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let mut out = Vec::with_capacity(m + 1);
    walker.walk(lo, m, Some(&mut out));
    out.truncate(m);
    if !curve.is_cyclic() {
        out.push(*curve.vertices.last().unwrap());
    }
    Ok(InterfaceCurve::new(out, curve.kind))
}

struct ChordWalker<'a> {
    curve: &'a InterfaceCurve,
    seg: &'a [f64],
}

impl ChordWalker<'_> {
    /// Step `m` chords of length `c` from the first vertex and return the arc
    /// position reached, or infinity if the curve runs out first. Loops are
    /// followed into their periodic continuation.
    fn walk(&self, c: f64, m: usize, mut out: Option<&mut Vec<[f64; 2]>>) -> f64 {
        let n_seg = self.seg.len();
        let cyclic = self.curve.is_cyclic();
        let mut p = self.curve.at(0);
        if let Some(o) = out.as_deref_mut() {
            o.push(p);
        }
        let (mut k, mut t, mut arc_k) = (0usize, 0.0f64, 0.0f64);
        for _ in 0..m {
            loop {
                if !cyclic && k >= n_seg || k >= 2 * n_seg + 2 {
                    return f64::INFINITY;
                }
                let a = self.curve.at(k as isize);
                let b = self.curve.at(k as isize + 1);
                let d = [b[0] - a[0], b[1] - a[1]];
                let f = [a[0] - p[0], a[1] - p[1]];
                let qa = d[0] * d[0] + d[1] * d[1];
                let qb = 2.0 * (d[0] * f[0] + d[1] * f[1]);
                let qc = f[0] * f[0] + f[1] * f[1] - c * c;
                let disc = qb * qb - 4.0 * qa * qc;
                if qa > 0.0 && disc >= 0.0 {
                    let root = (-qb + disc.sqrt()) / (2.0 * qa);
                    if root >= t && root <= 1.0 {
                        t = root;
                        p = [a[0] + t * d[0], a[1] + t * d[1]];
                        break;
                    }
                }
                arc_k += self.seg[k % n_seg];
                k += 1;
                t = 0.0;
            }
            if let Some(o) = out.as_deref_mut() {
                o.push(p);
            }
        }
        arc_k + t * self.seg[k % n_seg]
    }
}

/// 5-point moving average of the vertices. Open curves use shrinking
/// symmetric windows and keep their end points.
pub fn smooth_vertices(curve: &InterfaceCurve) -> InterfaceCurve {
    let n = curve.len();
    let v = (0..n)
        .map(|i| {
            let r = if curve.is_cyclic() { 2 } else { 2.min(i).min(n - 1 - i) };
            let mut acc = [0.0, 0.0];
            for d in -(r as isize)..=(r as isize) {
                let p = curve.at(i as isize + d);
                acc[0] += p[0];
                acc[1] += p[1];
            }
            let w = (2 * r + 1) as f64;
            [acc[0] / w, acc[1] / w]
        })
        .collect();
    InterfaceCurve::new(v, curve.kind)
}

/// Signed curvature `(x'y'' - y'x'') / (x'^2 + y'^2)^(3/2)` at every vertex of
/// a uniformly sampled curve, positive where the curve turns left.
pub fn curvature_profile(curve: &InterfaceCurve, smooth: bool) -> Result<Vec<f64>> {
    let n = curve.len();
    if n < 5 {
        return Err(Error::DegenerateCurve(format!("{n} vertices, need at least 5")));
    }
    let smoothed;
    let c = if smooth {
        smoothed = smooth_vertices(curve);
        &smoothed
    } else {
        curve
    };
    let p = |k: usize| c.vertices[k];
    let k_of = |d1: [f64; 2], d2: [f64; 2]| {
        let speed = d1[0] * d1[0] + d1[1] * d1[1];
        (d1[0] * d2[1] - d1[1] * d2[0]) / speed.powf(1.5)
    };
    let central = |i: usize| {
        let (a, b, m) = (c.at(i as isize - 1), c.at(i as isize + 1), c.at(i as isize));
        k_of(
            [(b[0] - a[0]) / 2.0, (b[1] - a[1]) / 2.0],
            [b[0] - 2.0 * m[0] + a[0], b[1] - 2.0 * m[1] + a[1]],
        )
    };
    if c.is_cyclic() {
        return Ok((0..n).map(central).collect());
    }
    let one_sided = |a: [f64; 2], b: [f64; 2], d: [f64; 2], sign: f64| {
        k_of(
            [
                sign * (-3.0 * a[0] + 4.0 * b[0] - d[0]) / 2.0,
                sign * (-3.0 * a[1] + 4.0 * b[1] - d[1]) / 2.0,
            ],
            [a[0] - 2.0 * b[0] + d[0], a[1] - 2.0 * b[1] + d[1]],
        )
    };
    let mut k = Vec::with_capacity(n);
    k.push(one_sided(p(0), p(1), p(2), 1.0));
    k.extend((1..n - 1).map(central));
    k.push(one_sided(p(n - 1), p(n - 2), p(n - 3), -1.0));
    Ok(k)
}

/// Arc-length quadrature weights for the vertices of a uniformly sampled curve.
pub fn arc_weights(curve: &InterfaceCurve) -> Vec<f64> {
    let seg = curve.segment_lengths();
    let n = curve.len();
    (0..n)
        .map(|i| {
            if curve.is_cyclic() {
                0.5 * (seg[(i + n - 1) % n] + seg[i])
            } else {
                let left = if i > 0 { seg[i - 1] } else { 0.0 };
                let right = if i + 1 < n { seg[i] } else { 0.0 };
                0.5 * (left + right)
            }
        })
        .collect()
}

/// Weighted mean and standard deviation of `|k|` pooled over profiles given
/// as (curvature, weight) pairs.
pub fn pooled_abs_stats<'a>(profiles: impl IntoIterator<Item = (&'a [f64], &'a [f64])>) -> Option<(f64, f64)> {
    let (mut w_sum, mut m1, mut m2) = (0.0, 0.0, 0.0);
    let profiles: Vec<_> = profiles.into_iter().collect();
    for (k, w) in &profiles {
        for (ki, wi) in k.iter().zip(w.iter()) {
            w_sum += wi;
            m1 += wi * ki.abs();
        }
    }
    if w_sum <= 0.0 {
        return None;
    }
    let mean = m1 / w_sum;
    for (k, w) in &profiles {
        for (ki, wi) in k.iter().zip(w.iter()) {
            m2 += wi * (ki.abs() - mean).powi(2);
        }
    }
    Some((mean, (m2 / w_sum).sqrt()))
}

/// Resample (and optionally smooth) every curve; curves too short for the
/// spacing are dropped.
pub fn prepare_curves(curves: &[InterfaceCurve], ds: f64, smooth: bool) -> Vec<InterfaceCurve> {
    curves
        .iter()
        .filter_map(|c| resample_uniform(c, ds).ok())
        .map(|c| if smooth { smooth_vertices(&c) } else { c })
        .collect()
}

/// Arc-length weighted mean and standard deviation of `|k|` pooled over all
/// prepared curves. `None` when no curve has enough vertices.
pub fn curvature_stats(prepared: &[InterfaceCurve]) -> Option<(f64, f64)> {
    let profiles: Vec<(Vec<f64>, Vec<f64>)> = prepared
        .iter()
        .filter_map(|c| curvature_profile(c, false).ok().map(|k| (k, arc_weights(c))))
        .collect();
    pooled_abs_stats(profiles.iter().map(|(k, w)| (k.as_slice(), w.as_slice())))
}

/// Total polyline length.
pub fn perimeter(curves: &[InterfaceCurve]) -> f64 {
    curves.iter().map(InterfaceCurve::length).sum()
}

/// Heights of the strict local minima and maxima of y along every curve.
/// A flat run between a rise and a fall contributes its middle vertex once;
/// end points of open curves are never extrema.
pub fn extrema_sets(curves: &[InterfaceCurve]) -> (Vec<f64>, Vec<f64>) {
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    for c in curves {
        let n = c.len();
        if n < 2 {
            continue;
        }
        let steps = if c.is_cyclic() { n } else { n - 1 };
        let sign: Vec<(usize, f64)> = (0..steps)
            .filter_map(|k| {
                let d = c.at(k as isize + 1)[1] - c.at(k as isize)[1];
                (d.abs() > PLATEAU_TOL).then(|| (k, d.signum()))
            })
            .collect();
        let pairs = if c.is_cyclic() { sign.len() } else { sign.len().saturating_sub(1) };
        for p in 0..pairs {
            let (a, sa) = sign[p];
            let (mut b, sb) = sign[(p + 1) % sign.len()];
            if sa == sb {
                continue;
            }
            if b <= a {
                b += n;
            }
            let mid = (a + 1 + (b - a - 1) / 2) % n;
            let y = c.vertices[mid][1];
            let y = if (0.0..=1.0).contains(&y) { y } else { y.rem_euclid(1.0) };
            if sa > 0.0 {
                hi.push(y);
            } else {
                lo.push(y);
            }
        }
    }
    (lo, hi)
}

/// Mean ligament height `E[S_max] - E[S_min]` and maximum penetration depth
/// `1 - min(S_min)`.
pub fn ligament_and_depth(s_min: &[f64], s_max: &[f64]) -> (Option<f64>, Option<f64>) {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mu_d = (!s_min.is_empty() && !s_max.is_empty()).then(|| mean(s_max) - mean(s_min));
    let max_p = s_min
        .iter()
        .copied()
        .reduce(f64::min)
        .map(|m| (1.0 - m).clamp(0.0, 1.0));
    (mu_d, max_p)
}

/// Integrals of phi, cA and cB over the domain, nm^2.
pub fn masses(state: &FieldState, grid: &GridSpec) -> (f64, f64, f64) {
    let a = grid.dx_nm * grid.dx_nm;
    (state.phi.sum() * a, state.ca.sum() * a, state.cb.sum() * a)
}

/// Quantities of interest of one snapshot; `None` marks undefined values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoiRecord {
    pub step: u64,
    pub time_s: f64,
    pub mu_k: Option<f64>,
    pub sigma_k: Option<f64>,
    pub perimeter: f64,
    pub mu_d: Option<f64>,
    pub max_p: Option<f64>,
    pub m_phi: f64,
    pub m_a: f64,
    pub m_b: f64,
}

impl QoiRecord {
    pub const CSV_HEADER: &'static str = "step,time_s,mu_k,sigma_k,perimeter,mu_d,max_p,m_phi,m_A,m_B";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{:e},{},{},{},{},{},{},{},{}",
            self.step,
            self.time_s,
            opt(self.mu_k),
            opt(self.sigma_k),
            self.perimeter,
            opt(self.mu_d),
            opt(self.max_p),
            self.m_phi,
            self.m_a,
            self.m_b
        )
    }
}

pub fn qoi_record(state: &FieldState, grid: &GridSpec, boundary: Boundary, opts: &QoiOptions) -> QoiRecord {
    let curves = extract_interface(state, boundary, opts.level);
    let prepared = prepare_curves(&curves, opts.ds(grid.nx, grid.ny), opts.smooth);
    let stats = curvature_stats(&prepared);
    let (s_min, s_max) = extrema_sets(&prepared);
    let (mu_d, max_p) = ligament_and_depth(&s_min, &s_max);
    let (m_phi, m_a, m_b) = masses(state, grid);
    QoiRecord {
        step: state.step,
        time_s: state.time,
        mu_k: stats.map(|s| s.0),
        sigma_k: stats.map(|s| s.1),
        perimeter: perimeter(&curves),
        mu_d,
        max_p,
        m_phi,
        m_a,
        m_b,
    }
}

/// Records for a sequence of snapshot files, sorted by time.
pub fn qoi_timeseries(paths: &[PathBuf], dx_nm: f64, boundary: Boundary, opts: &QoiOptions) -> Result<Vec<QoiRecord>> {
    let mut records = paths
        .par_iter()
        .map(|path| {
            let s = read_snapshot(path)?;
            let (ny, nx) = s.shape();
            let grid = GridSpec::new(nx, ny, dx_nm).map_err(|e| e.in_file(path))?;
            Ok(qoi_record(&s, &grid, boundary, opts))
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| a.time_s.total_cmp(&b.time_s).then(a.step.cmp(&b.step)));
    Ok(records)
}

pub fn qoi_csv(records: &[QoiRecord]) -> String {
    let mut out = String::from(QoiRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

pub fn write_qoi_csv(path: &Path, records: &[QoiRecord]) -> Result<()> {
    std::fs::write(path, qoi_csv(records)).map_err(|e| Error::io(path, e))
}
