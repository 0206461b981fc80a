//! Marching-squares level-set extraction on cell centres.

use ndarray::Array2;

/// Topology of an extracted curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    /// Both ends lie on a non-periodic boundary.
    Open,
    /// A loop that returns to its start.
    Closed,
    /// A loop that returns to its start translated by one period, e.g. a
    /// front spanning a periodic axis. The vector is the translation.
    Wrapped([f64; 2]),
}

/// Ordered polyline in unit-normalised coordinates. Coordinates are
/// unwrapped along the curve, so they may leave [0, 1] near a periodic seam.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceCurve {
    pub vertices: Vec<[f64; 2]>,
    pub kind: CurveKind,
}

impl InterfaceCurve {
    pub fn new(vertices: Vec<[f64; 2]>, kind: CurveKind) -> Self {
        InterfaceCurve { vertices, kind }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// True for loops, wrapped or not.
    pub fn is_cyclic(&self) -> bool {
        !matches!(self.kind, CurveKind::Open)
    }

    fn shift(&self) -> [f64; 2] {
        match self.kind {
            CurveKind::Wrapped(s) => s,
            _ => [0.0, 0.0],
        }
    }

    /// Vertex `k` with cyclic extension: indices outside `0..len` map onto
    /// the loop translated by whole periods. Open curves must use `0..len`.
    pub fn at(&self, k: isize) -> [f64; 2] {
        let n = self.vertices.len() as isize;
        let q = k.div_euclid(n);
        let v = self.vertices[k.rem_euclid(n) as usize];
        if q == 0 {
            return v;
        }
        let s = self.shift();
        [v[0] + q as f64 * s[0], v[1] + q as f64 * s[1]]
    }

    /// Segment lengths, including the closing segment of a loop.
    pub fn segment_lengths(&self) -> Vec<f64> {
        let n = self.vertices.len();
        let segs = if self.is_cyclic() { n } else { n.saturating_sub(1) };
        (0..segs)
            .map(|k| {
                let a = self.at(k as isize);
                let b = self.at(k as isize + 1);
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .collect()
    }

    pub fn length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// Same curve traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        let kind = match self.kind {
            CurveKind::Wrapped([sx, sy]) => CurveKind::Wrapped([-sx, -sy]),
            k => k,
        };
        InterfaceCurve { vertices: v, kind }
    }
}

struct Segment {
    from: usize,
    to: usize,
    p: [f64; 2],
    q: [f64; 2],
}

/// Extract the `level` set of `field`, sampled at cell centres. Columns are
/// periodic; rows are periodic when `periodic_y`. Curves are oriented with
/// `field > level` on their left, so a counter-clockwise loop encloses a
/// high region.
pub fn extract_level_set(field: &Array2<f64>, level: f64, periodic_y: bool) -> Vec<InterfaceCurve> {
    let (ny, nx) = field.dim();
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    let rows = if periodic_y { ny } else { ny - 1 };
    let h_edge = |i: usize, j: usize| 2 * ((j % ny) * nx + i % nx);
    let v_edge = |i: usize, j: usize| 2 * ((j % ny) * nx + i % nx) + 1;

    let mut segments = Vec::new();
    for j in 0..rows {
        for i in 0..nx {
            let (i1, j1) = ((i + 1) % nx, (j + 1) % ny);
            let v = [field[[j, i]], field[[j, i1]], field[[j1, i1]], field[[j1, i]]];
            let inside = v.map(|x| x > level);
            let mask = inside.iter().enumerate().fold(0u8, |m, (k, &b)| m | ((b as u8) << k));
            if mask == 0 || mask == 15 {
                continue;
            }
            let (x0, y0) = (i as f64 + 0.5, j as f64 + 0.5);
            let frac = |a: f64, b: f64| (level - a) / (b - a);
            let pts = [
                [x0 + frac(v[0], v[1]), y0],
                [x0 + 1.0, y0 + frac(v[1], v[2])],
                [x0 + frac(v[3], v[2]), y0 + 1.0],
                [x0, y0 + frac(v[0], v[3])],
            ];
            let ids = [h_edge(i, j), v_edge(i + 1, j), h_edge(i, j + 1), v_edge(i, j)];
            let exits: Vec<usize> = (0..4).filter(|&k| inside[k] && !inside[(k + 1) % 4]).collect();
            let entries: Vec<usize> = (0..4).filter(|&k| !inside[k] && inside[(k + 1) % 4]).collect();
            let mut push = |a: usize, b: usize| {
                segments.push(Segment {
                    from: ids[a],
                    to: ids[b],
                    p: pts[a],
                    q: pts[b],
                })
            };
            if exits.len() == 1 {
                push(exits[0], entries[0]);
            } else {
                let centre_inside = v.iter().sum::<f64>() / 4.0 > level;
                for &e in &exits {
                    let partner = if centre_inside { (e + 1) % 4 } else { (e + 3) % 4 };
                    push(e, partner);
                }
            }
        }
    }
    chain(segments, nx, ny)
}

fn chain(segments: Vec<Segment>, nx: usize, ny: usize) -> Vec<InterfaceCurve> {
    let n_edges = 2 * nx * ny;
    let mut starting = vec![usize::MAX; n_edges];
    let mut ending = vec![false; n_edges];
    for (k, s) in segments.iter().enumerate() {
        starting[s.from] = k;
        ending[s.to] = true;
    }
    let (wx, wy) = (nx as f64, ny as f64);
    let mut used = vec![false; segments.len()];
    let mut curves = Vec::new();

    let follow = |first: usize, used: &mut Vec<bool>| -> (Vec<[f64; 2]>, [f64; 2], bool) {
        let mut pts = vec![segments[first].p];
        let mut offset = [0.0, 0.0];
        let mut k = first;
        loop {
            used[k] = true;
            let s = &segments[k];
            let end = [s.q[0] + offset[0], s.q[1] + offset[1]];
            pts.push(end);
            let next = starting[s.to];
            if next == usize::MAX {
                return (pts, offset, false);
            }
            let np = segments[next].p;
            offset = [
                ((end[0] - np[0]) / wx).round() * wx,
                ((end[1] - np[1]) / wy).round() * wy,
            ];
            if next == first {
                pts.pop();
                return (pts, offset, true);
            }
            k = next;
        }
    };

    for k in 0..segments.len() {
        if !used[k] && !ending[segments[k].from] {
            let (pts, _, _) = follow(k, &mut used);
            curves.push(finish(pts, None, wx, wy));
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            let (pts, offset, _) = follow(k, &mut used);
            curves.push(finish(pts, Some(offset), wx, wy));
        }
    }
    curves.retain(|c| c.len() >= 3);
    curves
}

fn finish(pts: Vec<[f64; 2]>, loop_offset: Option<[f64; 2]>, wx: f64, wy: f64) -> InterfaceCurve {
    const SAME: f64 = 1e-12;
    let close = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).abs() <= SAME && (a[1] - b[1]).abs() <= SAME;
    let mut v: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for p in pts {
        if v.last().map_or(true, |&l| !close(l, p)) {
            v.push(p);
        }
    }
    let kind = match loop_offset {
        None => CurveKind::Open,
        Some(o) => {
            while v.len() > 1 {
                let first = [v[0][0] + o[0], v[0][1] + o[1]];
                if close(*v.last().unwrap(), first) {
                    v.pop();
                } else {
                    break;
                }
            }
            if o == [0.0, 0.0] {
                CurveKind::Closed
            } else {
                CurveKind::Wrapped([o[0] / wx, o[1] / wy])
            }
        }
    };
    let vertices = v.into_iter().map(|[x, y]| [x / wx, y / wy]).collect();
    InterfaceCurve { vertices, kind }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_field_has_no_curves() {
        let f = Array2::from_elem((8, 8), 1.0);
        assert!(extract_level_set(&f, 0.5, false).is_empty());
        assert!(extract_level_set(&f, 0.5, true).is_empty());
    }

    #[test]
    fn single_high_cell_gives_counter_clockwise_loop() {
        let mut f = Array2::zeros((6, 6));
        f[[2, 3]] = 1.0;
        let c = extract_level_set(&f, 0.5, false);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].kind, CurveKind::Closed);
        assert_eq!(c[0].len(), 4);
        let v = &c[0].vertices;
        let area: f64 = (0..v.len())
            .map(|k| {
                let (a, b) = (v[k], v[(k + 1) % v.len()]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            / 2.0;
        assert!(area > 0.0);
    }

    #[test]
    fn flat_front_wraps_once() {
        let mut f = Array2::zeros((10, 12));
        for j in 0..5 {
            f.row_mut(j).fill(1.0);
        }
        let c = extract_level_set(&f, 0.5, false);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].kind, CurveKind::Wrapped([-1.0, 0.0]));
        assert_eq!(c[0].len(), 12);
        assert!(c[0].vertices.iter().all(|v| (v[1] - 0.5).abs() < 1e-15));
        assert!((c[0].length() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn saddle_follows_cell_mean() {
        let mut f = Array2::zeros((4, 4));
        f[[1, 1]] = 1.0;
        f[[2, 2]] = 1.0;
        let split = extract_level_set(&f, 0.5, false);
        assert_eq!(split.len(), 2);
        f[[1, 2]] = 0.45;
        f[[2, 1]] = 0.45;
        let joined = extract_level_set(&f, 0.5, false);
        assert_eq!(joined.len(), 1);
    }

    #[test]
    fn reversal_flips_wrap() {
        let c = InterfaceCurve::new(vec![[0.0, 0.5], [0.5, 0.5], [0.75, 0.5]], CurveKind::Wrapped([1.0, 0.0]));
        let r = c.reversed();
        assert_eq!(r.kind, CurveKind::Wrapped([-1.0, 0.0]));
        assert!((r.length() - c.length()).abs() < 1e-15);
        assert_eq!(c.at(3), [1.0, 0.5]);
        assert_eq!(c.at(-1), [-0.25, 0.5]);
    }
}
