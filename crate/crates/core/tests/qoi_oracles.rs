use std::f64::consts::{PI, TAU};

use lmd_core::qoi::{
    curvature_profile, curvature_stats, extract_interface, extract_level_set, extrema_sets, ligament_and_depth,
    perimeter, prepare_curves, qoi_record, qoi_timeseries, resample_uniform, CurveKind, InterfaceCurve, QoiOptions,
};
use lmd_core::snapshot::write_snapshot;
use lmd_core::{Boundary, FieldState, GridSpec};
use ndarray::Array2;
use proptest::prelude::*;

fn disk(n: usize, r: f64, centre: (f64, f64)) -> Array2<f64> {
    let w = 1.5 / n as f64;
    Array2::from_shape_fn((n, n), |(j, i)| {
        let x = (i as f64 + 0.5) / n as f64 - centre.0;
        let y = (j as f64 + 0.5) / n as f64 - centre.1;
        0.5 * (1.0 - ((x.hypot(y) - r) / w).tanh())
    })
}

fn front(nx: usize, ny: usize, height: impl Fn(f64) -> f64) -> Array2<f64> {
    let w = 1.5 / ny as f64;
    Array2::from_shape_fn((ny, nx), |(j, i)| {
        let x = (i as f64 + 0.5) / nx as f64;
        let y = (j as f64 + 0.5) / ny as f64;
        0.5 * (1.0 - ((y - height(x)) / w).tanh())
    })
}

fn state(phi: Array2<f64>) -> FieldState {
    let d = phi.dim();
    FieldState::new(phi, Array2::zeros(d), Array2::zeros(d), 0.0, 0).unwrap()
}

#[test]
fn disk_curvature_and_perimeter() {
    let n = 256;
    let r = 0.25;
    let curves = extract_level_set(&disk(n, r, (0.5, 0.5)), 0.5, false);
    assert_eq!(curves.len(), 1);
    assert_eq!(curves[0].kind, CurveKind::Closed);
    let p = perimeter(&curves);
    assert!((p / (TAU * r) - 1.0).abs() < 0.01, "perimeter {p}");
    let opts = QoiOptions::default();
    let prepared = prepare_curves(&curves, opts.ds(n, n), opts.smooth);
    let (mu, sigma) = curvature_stats(&prepared).unwrap();
    assert!((mu * r - 1.0).abs() < 0.02, "mu_k {mu}");
    assert!(sigma < 0.05 * mu, "sigma_k {sigma}");
    let (lo, hi) = extrema_sets(&prepared);
    assert_eq!((lo.len(), hi.len()), (1, 1));
    let ds = opts.ds(n, n);
    assert!((lo[0] - 0.25).abs() < ds && (hi[0] - 0.75).abs() < ds);
}

#[test]
fn disk_vertex_count_follows_spacing() {
    let n = 256;
    let curves = extract_level_set(&disk(n, 0.25, (0.5, 0.5)), 0.5, false);
    let ds = 1.0 / n as f64;
    let c = resample_uniform(&curves[0], ds).unwrap();
    let expected = TAU * 0.25 / ds;
    assert!((c.len() as f64 - expected).abs() < 0.01 * expected);
}

#[test]
fn disk_across_the_seam_matches_centred_disk() {
    let n = 128;
    let r = 0.2;
    let centred = qoi_record(&state(disk(n, r, (0.5, 0.5))), &GridSpec::new(n, n, 0.2).unwrap(), Boundary::Closed, &QoiOptions::default());
    let mut shifted_phi = disk(n, r, (0.5, 0.5));
    for (mut row, src) in shifted_phi.rows_mut().into_iter().zip(disk(n, r, (0.5, 0.5)).rows()) {
        for i in 0..n {
            row[(i + n / 2) % n] = src[i];
        }
    }
    let shifted = qoi_record(&state(shifted_phi), &GridSpec::new(n, n, 0.2).unwrap(), Boundary::Closed, &QoiOptions::default());
    assert!((centred.perimeter - shifted.perimeter).abs() < 1e-12);
    assert!((centred.mu_k.unwrap() - shifted.mu_k.unwrap()).abs() < 1e-3 * centred.mu_k.unwrap());
    assert!((centred.sigma_k.unwrap() - shifted.sigma_k.unwrap()).abs() < 1e-2 * centred.mu_k.unwrap());
}

#[test]
fn flat_front_is_one_wrapped_curve() {
    let phi = Array2::from_shape_fn((64, 32), |(j, _)| if j < 20 { 1.0 } else { 0.0 });
    let curves = extract_level_set(&phi, 0.5, false);
    assert_eq!(curves.len(), 1);
    assert!(matches!(curves[0].kind, CurveKind::Wrapped(_)));
    assert!((perimeter(&curves) - 1.0).abs() < 1e-12);
    let y = curves[0].vertices[0][1];
    assert!((y - 20.0 / 64.0).abs() < 1.0 / 64.0);
    let g = GridSpec::new(32, 64, 0.2).unwrap();
    let rec = qoi_record(&state(phi), &g, Boundary::Reservoir, &QoiOptions::default());
    assert_eq!((rec.mu_d, rec.max_p), (None, None));
    assert!(rec.mu_k.unwrap() < 1e-6);
}

#[test]
fn uniform_field_has_no_interface() {
    let g = GridSpec::new(16, 16, 0.2).unwrap();
    let s = FieldState::uniform(&g, 1.0, 0.3, 0.7);
    assert!(extract_interface(&s, Boundary::Reservoir, 0.5).is_empty());
    let rec = qoi_record(&s, &g, Boundary::Reservoir, &QoiOptions::default());
    assert_eq!(rec.perimeter, 0.0);
    assert_eq!((rec.mu_k, rec.sigma_k, rec.mu_d, rec.max_p), (None, None, None, None));
}

#[test]
fn sine_front_extrema() {
    let (n, m, a, y0) = (256, 3, 0.08, 0.5);
    let phi = front(n, n, |x| y0 + a * (TAU * m as f64 * x).sin());
    let curves = extract_level_set(&phi, 0.5, false);
    assert_eq!(curves.len(), 1);
    let opts = QoiOptions::default();
    let prepared = prepare_curves(&curves, opts.ds(n, n), opts.smooth);
    let (lo, hi) = extrema_sets(&prepared);
    assert_eq!(lo.len(), m);
    assert_eq!(hi.len(), m);
    let tol = opts.ds(n, n);
    assert!(lo.iter().all(|v| (v - (y0 - a)).abs() < tol), "{lo:?}");
    assert!(hi.iter().all(|v| (v - (y0 + a)).abs() < tol), "{hi:?}");
    let (mu_d, max_p) = ligament_and_depth(&lo, &hi);
    assert!((mu_d.unwrap() - 2.0 * a).abs() < 2.0 * tol);
    assert!((max_p.unwrap() - (1.0 - y0 + a)).abs() < tol);
}

fn analytic_circle(r: f64, n: usize) -> InterfaceCurve {
    let v = (0..n)
        .map(|k| {
            let t = TAU * k as f64 / n as f64;
            [0.5 + r * t.cos(), 0.5 + r * t.sin()]
        })
        .collect();
    InterfaceCurve::new(v, CurveKind::Closed)
}

#[test]
fn resampled_length_converges_quadratically() {
    let r = 0.3;
    let fine = analytic_circle(r, 20_000);
    let exact = fine.length();
    let err = |ds: f64| (resample_uniform(&fine, ds).unwrap().length() - exact).abs();
    let (e1, e2) = (err(0.02), err(0.01));
    let order = (e1 / e2).log2();
    assert!((order - 2.0).abs() < 0.2, "order {order}");
}

#[test]
fn pooled_stats_combine_per_curve_stats() {
    let a = analytic_circle(0.1, 300);
    let b = analytic_circle(0.2, 500);
    let (ma, sa) = curvature_stats(&[a.clone()]).unwrap();
    let (mb, sb) = curvature_stats(&[b.clone()]).unwrap();
    let (la, lb) = (a.length(), b.length());
    let (m, s) = curvature_stats(&[a, b]).unwrap();
    let mean = (la * ma + lb * mb) / (la + lb);
    let var = (la * (sa * sa + (ma - mean).powi(2)) + lb * (sb * sb + (mb - mean).powi(2))) / (la + lb);
    assert!((m - mean).abs() < 1e-9 * mean);
    assert!((s - var.sqrt()).abs() < 1e-9 * mean);
}

#[test]
fn timeseries_reads_snapshots_in_time_order() {
    let dir = tempfile::tempdir().unwrap();
    let g = GridSpec::new(32, 32, 0.2).unwrap();
    let mut paths = vec![];
    for (k, r) in [(2u64, 0.3), (1, 0.2), (3, 0.25)] {
        let mut s = state(disk(32, r, (0.5, 0.5)));
        s.step = k;
        s.time = k as f64 * 1e-12;
        let p = dir.path().join(format!("s{k}.pfld"));
        write_snapshot(&s, &p).unwrap();
        paths.push(p);
    }
    let recs = qoi_timeseries(&paths, 0.2, Boundary::Reservoir, &QoiOptions::default()).unwrap();
    assert_eq!(recs.len(), 3);
    assert_eq!(recs.iter().map(|r| r.step).collect::<Vec<_>>(), vec![1, 2, 3]);
    let direct = qoi_record(&state(disk(32, 0.2, (0.5, 0.5))), &g, Boundary::Reservoir, &QoiOptions::default());
    assert_eq!(recs[0].perimeter, direct.perimeter);
    assert_eq!(recs[0].mu_k, direct.mu_k);

    let missing = dir.path().join("missing.pfld");
    let err = qoi_timeseries(&[missing.clone()], 0.2, Boundary::Reservoir, &QoiOptions::default()).unwrap_err();
    assert!(err.to_string().contains("missing.pfld"), "{err}");
    std::fs::write(&missing, b"junk").unwrap();
    let err = qoi_timeseries(&[missing], 0.2, Boundary::Reservoir, &QoiOptions::default()).unwrap_err();
    assert!(err.to_string().contains("missing.pfld"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reversal_flips_curvature(r in 0.05f64..0.4, n in 40usize..200, cx in -1.0f64..1.0) {
        let mut c = analytic_circle(r, n);
        for v in &mut c.vertices {
            v[0] += cx;
        }
        let k = curvature_profile(&c, true).unwrap();
        let mut kr = curvature_profile(&c.reversed(), true).unwrap();
        kr.reverse();
        for (a, b) in k.iter().zip(&kr) {
            prop_assert!((a + b).abs() <= 1e-9 * a.abs().max(1.0));
        }
        let s1 = curvature_stats(&[c.clone()]).unwrap();
        let s2 = curvature_stats(&[c.reversed()]).unwrap();
        prop_assert!((s1.0 - s2.0).abs() <= 1e-9 * s1.0);
    }

    #[test]
    fn translation_leaves_geometry_unchanged(dx in -3.0f64..3.0, dy in -3.0f64..3.0, r in 0.05f64..0.4) {
        let c = analytic_circle(r, 150);
        let mut t = c.clone();
        for v in &mut t.vertices {
            v[0] += dx;
            v[1] += dy;
        }
        prop_assert!((c.length() - t.length()).abs() < 1e-12);
        let (a, b) = (curvature_stats(&[c]).unwrap(), curvature_stats(&[t]).unwrap());
        prop_assert!((a.0 - b.0).abs() < 1e-6 * a.0);
    }

    #[test]
    fn periodic_shift_preserves_closed_mode_qoi(shift_x in 0usize..64, shift_y in 0usize..64, r in 0.1f64..0.3) {
        let n = 64;
        let g = GridSpec::new(n, n, 0.2).unwrap();
        let base = disk(n, r, (0.4, 0.6));
        let shifted = Array2::from_shape_fn((n, n), |(j, i)| base[[(j + n - shift_y) % n, (i + n - shift_x) % n]]);
        let opts = QoiOptions::default();
        let a = qoi_record(&state(base), &g, Boundary::Closed, &opts);
        let b = qoi_record(&state(shifted), &g, Boundary::Closed, &opts);
        prop_assert!((a.perimeter - b.perimeter).abs() < 1e-12);
        prop_assert!((a.m_phi - b.m_phi).abs() < 1e-9 * a.m_phi);
        prop_assert!((a.mu_k.unwrap() - b.mu_k.unwrap()).abs() < 0.02 * a.mu_k.unwrap());
    }

    #[test]
    fn masses_are_additive(split in 1usize..15) {
        let g = GridSpec::new(16, 16, 0.2).unwrap();
        let s = lmd_core::init_state(&g, 0.5, 0.02, split as u64).unwrap();
        let (m, _, _) = lmd_core::qoi::masses(&s, &g);
        let area = 0.2 * 0.2;
        let lower: f64 = s.phi.rows().into_iter().take(split).map(|r| r.sum()).sum::<f64>() * area;
        let upper: f64 = s.phi.rows().into_iter().skip(split).map(|r| r.sum()).sum::<f64>() * area;
        prop_assert!((lower + upper - m).abs() < 1e-9 * m.max(1.0));
    }
}

#[test]
fn circle_has_positive_counter_clockwise_curvature() {
    let k = curvature_profile(&analytic_circle(0.25, 200), false).unwrap();
    assert!(k.iter().all(|&v| (v - 4.0).abs() < 0.01));
    let _ = PI;
}
