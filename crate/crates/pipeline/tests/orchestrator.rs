mod common;

use std::path::PathBuf;

use lmd_autodiff::Tensor;
use lmd_core::qoi::{QoiOptions, QoiRecord};
use lmd_core::solver::{run_hf, Collect, SolverConfig};
use lmd_core::{init_state, Boundary, ModelParams};
use lmd_pipeline::*;
use lmd_uafno::{Model, UafnoConfig};
use proptest::prelude::*;

use common::*;

#[test]
fn dataset_pairs_at_the_leap() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run_000");
    write_run(&run, &[0, 50_000, 100_000]);
    let ds = build_dataset(&[run], 50_000, 0).unwrap();
    assert_eq!(ds.pairs.len(), 2);
    assert_eq!(ds.skipped, 0);
    assert_eq!(ds.pairs.iter().map(|p| p.step).collect::<Vec<_>>(), [0, 50_000]);
}

#[test]
fn leap_beyond_the_run_is_a_dataset_error() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run_000");
    write_run(&run, &[0, 1000, 2000]);
    assert!(matches!(build_dataset(&[run], 5000, 0), Err(Error::Dataset(_))));
}

#[test]
fn pairs_stay_inside_their_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("run_000");
    let b = dir.path().join("run_001");
    write_run(&a, &[0, 1000]);
    write_run(&b, &[2000, 3000]);
    let ds = build_dataset(&[a.clone(), b.clone()], 1000, 0).unwrap();
    assert_eq!(ds.pairs.len(), 2);
    for p in &ds.pairs {
        let run = [&a, &b][p.run];
        assert!(p.input.starts_with(run) && p.target.starts_with(run));
    }
}

#[test]
fn missing_counterparts_are_counted() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run_000");
    write_run(&run, &[0, 1000, 3000]);
    let ds = build_dataset(&[run], 1000, 0).unwrap();
    assert_eq!(ds.pairs.len(), 1);
    assert_eq!(ds.skipped, 1);
}

#[test]
fn min_step_drops_early_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run_000");
    write_run(&run, &[1000, 2000, 3000, 4000]);
    let ds = build_dataset(&[run], 1000, 2000).unwrap();
    assert_eq!(ds.pairs.iter().map(|p| p.step).collect::<Vec<_>>(), [2000, 3000]);
}

#[test]
fn state_tensor_round_trip() {
    let s = init_state(&tiny_grid(), 0.5, 0.02, 3).unwrap();
    let t = state_to_tensor(&s);
    assert_eq!(t.shape(), [3, 16, 16]);
    let back = tensor_to_state(&t, s.time, s.step).unwrap();
    assert!(same_states(&[s], &[back]));
}

fn tiny_train(epochs: usize, lr: f64, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        lr,
        batch_size: 2,
        seed,
        holdout_runs: 0,
    }
}

#[test]
fn zero_learning_rate_keeps_weights() {
    let pairs = random_pairs(4, 1);
    let mut m = Model::build(tiny_model(), 2).unwrap();
    let before = m.params().to_vec();
    let log = train(&mut m, &pairs, &tiny_train(3, 0.0, 5)).unwrap();
    assert_eq!(m.params(), &before[..]);
    let first = log.epoch_loss[0];
    assert!(log.epoch_loss.iter().all(|l| (l - first).abs() <= 1e-15 * first));
}

#[test]
fn training_is_reproducible() {
    let pairs = random_pairs(5, 3);
    let run = |seed| {
        let mut m = Model::build(tiny_model(), 4).unwrap();
        let log = train(&mut m, &pairs, &tiny_train(3, 1e-3, seed)).unwrap();
        (log, m.params().to_vec())
    };
    let (a, wa) = run(9);
    let (b, wb) = run(9);
    assert_eq!(a.step_loss.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.step_loss.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    assert_eq!(wa, wb);
    let (c, _) = run(10);
    assert_ne!(a.step_loss, c.step_loss);
    assert_eq!(a.step_loss.len(), 9);
    assert!(a.loss_csv().starts_with("epoch,mean_mse\n1,"));
    assert_eq!(a.loss_csv().lines().count(), 4);
}

#[test]
fn training_reduces_the_loss() {
    let pairs = random_pairs(2, 5);
    let mut m = Model::build(tiny_model(), 6).unwrap();
    let before = dataset_mse(&m, &pairs).unwrap();
    train(&mut m, &pairs, &tiny_train(30, 1e-3, 0)).unwrap();
    assert!(dataset_mse(&m, &pairs).unwrap() < before);
}

#[test]
fn non_finite_loss_aborts_with_position() {
    let mut pairs = random_pairs(2, 7);
    let mut t = pairs[1].1.as_real().unwrap().to_vec();
    t[0] = f64::NAN;
    pairs[1].1 = Tensor::real(&[3, 16, 16], t).unwrap();
    let mut m = Model::build(tiny_model(), 8).unwrap();
    let cfg = TrainConfig {
        batch_size: 1,
        ..tiny_train(2, 1e-3, 0)
    };
    match train(&mut m, &pairs, &cfg) {
        Err(Error::Diverged { epoch, step, loss }) => {
            assert_eq!(epoch, 1);
            assert!(step == 1 || step == 2);
            assert!(loss.is_nan());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn empty_or_invalid_training_is_rejected() {
    let mut m = Model::build(tiny_model(), 0).unwrap();
    assert!(matches!(train(&mut m, &[], &tiny_train(1, 1e-3, 0)), Err(Error::Dataset(_))));
    let pairs = random_pairs(1, 0);
    assert!(matches!(train(&mut m, &pairs, &tiny_train(0, 1e-3, 0)), Err(Error::Config(_))));
}

fn solver_cfg(cadence: u64) -> SolverConfig {
    SolverConfig {
        snapshot_cadence: cadence,
        ..SolverConfig::default()
    }
}

fn tiny_rollout(schedule: RolloutSchedule, cadence: u64) -> Result<Rollout> {
    let g = tiny_grid();
    let m = Model::build(tiny_model(), 1).unwrap();
    let s0 = init_state(&g, 0.5, 0.02, 1).unwrap();
    rollout_hybrid(s0, &m, &schedule, &g, &ModelParams::default(), &solver_cfg(cadence))
}

#[test]
fn relax_zero_hybrid_equals_auto() {
    let g = tiny_grid();
    let m = Model::build(tiny_model(), 1).unwrap();
    let s0 = init_state(&g, 0.5, 0.02, 1).unwrap();
    let sched = RolloutSchedule {
        n_init: 20,
        leap_steps: 10,
        n_leaps: 3,
        n_relax: 0,
    };
    let p = ModelParams::default();
    let a = rollout_auto(s0.clone(), &m, &sched, &g, &p, &solver_cfg(10)).unwrap();
    let b = rollout_hybrid(s0, &m, &sched, &g, &p, &solver_cfg(10)).unwrap();
    assert!(same_states(&a.snapshots, &b.snapshots));
    assert_eq!(a.snapshots.len(), 2 + 3);
    assert!(a.snapshots.iter().all(|s| s.validate().is_ok()));
}

#[test]
fn auto_rollout_refuses_relaxation() {
    let g = tiny_grid();
    let m = Model::build(tiny_model(), 1).unwrap();
    let s0 = init_state(&g, 0.5, 0.02, 1).unwrap();
    let sched = RolloutSchedule {
        n_relax: 5,
        ..RolloutSchedule::default()
    };
    let r = rollout_auto(s0, &m, &sched, &g, &ModelParams::default(), &SolverConfig::default());
    assert!(matches!(r, Err(Error::Config(_))));
}

#[test]
fn model_and_grid_must_agree() {
    let g = lmd_core::GridSpec::new(32, 32, 0.2).unwrap();
    let m = Model::build(tiny_model(), 1).unwrap();
    let s0 = init_state(&g, 0.5, 0.02, 1).unwrap();
    let r = rollout_auto(s0, &m, &RolloutSchedule::default(), &g, &ModelParams::default(), &SolverConfig::default());
    assert!(matches!(r, Err(Error::Config(_))));
}

#[test]
fn rollout_starts_at_step_zero() {
    let g = tiny_grid();
    let m = Model::build(tiny_model(), 1).unwrap();
    let mut s0 = init_state(&g, 0.5, 0.02, 1).unwrap();
    s0.step = 3;
    let r = rollout_auto(s0, &m, &RolloutSchedule::default(), &g, &ModelParams::default(), &SolverConfig::default());
    assert!(matches!(r, Err(Error::Config(_))));
}

#[test]
fn no_leaps_is_a_plain_hf_run() {
    let sched = RolloutSchedule {
        n_init: 30,
        leap_steps: 10,
        n_leaps: 0,
        n_relax: 0,
    };
    let r = tiny_rollout(sched, 10).unwrap();
    let s0 = init_state(&tiny_grid(), 0.5, 0.02, 1).unwrap();
    let mut sink = Collect::default();
    run_hf(s0, &tiny_grid(), &ModelParams::default(), &solver_cfg(10), 30, &mut sink).unwrap();
    assert!(same_states(&r.snapshots, &sink.snapshots));
    assert_eq!(r.timing.leaps, 0);
    assert_eq!(r.timing.hf_steps, 30);
}

#[test]
fn leap_advances_the_clock() {
    let sched = RolloutSchedule {
        n_init: 0,
        leap_steps: 50,
        n_leaps: 2,
        n_relax: 0,
    };
    let r = tiny_rollout(sched, 10).unwrap();
    let dt = SolverConfig::default().dt_s;
    assert_eq!(r.snapshots.iter().map(|s| s.step).collect::<Vec<_>>(), [50, 100]);
    assert!((r.snapshots[1].time - 100.0 * dt).abs() < 1e-24);
}

#[test]
fn hybrid_timeline_of_the_reference_protocol() {
    let s = RolloutSchedule {
        n_init: 1_000_000,
        leap_steps: 50_000,
        n_leaps: 3,
        n_relax: 10_000,
    };
    let after: Vec<u64> = s.emitted_steps(1000).into_iter().filter(|&k| k > s.n_init).collect();
    assert_eq!(after, [1_050_000, 1_060_000, 1_110_000, 1_120_000, 1_170_000, 1_180_000]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn emitted_steps_follow_the_timeline(
        n_init_k in 0u64..3,
        leap in 1u64..4,
        relax in 0u64..3,
        n_leaps in 0u64..3,
    ) {
        let cadence = 2;
        let sched = RolloutSchedule { n_init: n_init_k * cadence, leap_steps: leap, n_leaps, n_relax: relax };
        let r = tiny_rollout(sched, cadence).unwrap();
        let steps: Vec<u64> = r.snapshots.iter().map(|s| s.step).collect();
        prop_assert_eq!(&steps, &sched.emitted_steps(cadence));
        if n_leaps > 0 {
            prop_assert_eq!(*steps.last().unwrap(), sched.cycle_end(n_leaps));
        }
        prop_assert_eq!(r.timing.hf_steps, sched.hf_steps());
    }

    #[test]
    fn cycle_ends_match_step_counting(n_init in 0u64..10_000, leap in 1u64..5000, relax in 0u64..5000, k in 0u64..20) {
        let sched = RolloutSchedule { n_init, leap_steps: leap, n_leaps: k, n_relax: relax };
        let mut step = 0u64;
        for _ in 0..n_init { step += 1; }
        for _ in 0..k {
            step += leap;
            for _ in 0..relax { step += 1; }
        }
        prop_assert_eq!(sched.cycle_end(k), step);
        prop_assert_eq!(sched.total_steps(), Some(step));
    }
}

fn truth_timeline() -> Vec<lmd_core::FieldState> {
    let g = tiny_grid();
    let s0 = init_state(&g, 0.5, 0.05, 4).unwrap();
    let mut sink = Collect::default();
    run_hf(s0, &g, &ModelParams::default(), &solver_cfg(100), 400, &mut sink).unwrap();
    sink.snapshots
}

#[test]
fn evaluating_truth_against_itself() {
    let t = truth_timeline();
    let ev = evaluate(&t, &t, &tiny_grid(), Boundary::Reservoir, &QoiOptions::default()).unwrap();
    assert_eq!(ev.ac.len(), 4);
    for row in &ev.ac {
        assert!(row.eac.iter().all(|e| e.is_none_or(|v| v == 0.0)));
    }
    assert!(ev.qoi_errors.0.iter().all(|e| e.is_none_or(|v| v == 0.0)));
    let csv = ev.qoi_errors.csv();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header, QOI_COLUMNS);
}

#[test]
fn undefined_qoi_are_marked() {
    let g = tiny_grid();
    let mut liquid = lmd_core::FieldState::uniform(&g, 0.0, 0.0, 0.0);
    liquid.step = 100;
    let ev = evaluate(&[liquid.clone()], &[liquid], &g, Boundary::Reservoir, &QoiOptions::default()).unwrap();
    let row = ev.qoi_errors.csv().lines().nth(1).unwrap().to_string();
    let cells: Vec<&str> = row.split(',').collect();
    assert_eq!(cells[0], "N/A");
    assert_eq!(cells[3], "N/A");
}

#[test]
fn evaluation_uses_common_steps_only() {
    let t = truth_timeline();
    let p: Vec<_> = t.iter().skip(1).cloned().collect();
    let ev = evaluate(&p, &t, &tiny_grid(), Boundary::Reservoir, &QoiOptions::default()).unwrap();
    assert_eq!(ev.ac.iter().map(|r| r.step).collect::<Vec<_>>(), [200, 300, 400]);
    let mut shifted = t.clone();
    shifted.iter_mut().for_each(|s| s.step += 1);
    let e = evaluate(&shifted, &t, &tiny_grid(), Boundary::Reservoir, &QoiOptions::default());
    assert!(matches!(e, Err(Error::Core(lmd_core::Error::Alignment(_)))));
}

fn parse_qoi_csv(text: &str) -> Vec<[Option<f64>; 8]> {
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), QoiRecord::CSV_HEADER);
    lines
        .map(|l| {
            let c: Vec<Option<f64>> = l.split(',').map(|v| v.parse().ok()).collect();
            [c[2], c[3], c[4], c[7], c[8], c[9], c[6], c[5]]
        })
        .collect()
}

#[test]
fn error_table_matches_recomputation_from_the_csvs() {
    let t = truth_timeline();
    let g = tiny_grid();
    let m = Model::build(tiny_model(), 3).unwrap();
    let leap = LeapSpec::new(100, 1e-12).unwrap();
    let pred: Vec<_> = t.iter().map(|s| {
        let mut n = surrogate_leap(&m, s, &leap).unwrap();
        n.step = s.step;
        n
    }).collect();
    let ev = evaluate(&pred, &t, &g, Boundary::Reservoir, &QoiOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    ev.write(dir.path()).unwrap();
    let read = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap();
    let truth = parse_qoi_csv(&read(Evaluation::TRUTH_QOI_FILE));
    let pred = parse_qoi_csv(&read(Evaluation::PRED_QOI_FILE));
    let table = read(Evaluation::QOI_ERRORS_FILE);
    let written: Vec<Option<f64>> = table.lines().nth(1).unwrap().split(',').map(|v| v.parse().ok()).collect();
    for c in 0..8 {
        let (mut num, mut den) = (0.0, 0.0);
        for (a, b) in truth.iter().zip(&pred) {
            if let (Some(x), Some(y)) = (a[c], b[c]) {
                num += (y - x) * (y - x);
                den += x * x;
            }
        }
        let want = (den > 0.0).then(|| (num / den).sqrt());
        match (want, written[c]) {
            (Some(w), Some(v)) => assert!((w - v).abs() <= 1e-12 * w.max(1.0), "{}: {w} vs {v}", QOI_COLUMNS[c]),
            (None, None) => {}
            other => panic!("{}: {other:?}", QOI_COLUMNS[c]),
        }
    }
}

#[test]
fn speedup_with_reference_timings() {
    let r = speedup_report(Timings::reference(), &RolloutSchedule::full_scale()).unwrap();
    assert!((r.per_leap - 11_206.896_551_724_138).abs() < 1e-6);
    assert!((r.per_leap / 11_200.0 - 1.0).abs() < 0.01);
    assert!((r.end_to_end - 6.0).abs() < 0.01);
    assert_eq!(r.end_to_end_limit, 6.0);
    let text = r.to_text();
    assert!(text.contains("per_leap_speedup = 11206.89"));
    assert!(text.lines().all(|l| l.contains(" = ")));
}

#[test]
fn speedup_limits() {
    let s = RolloutSchedule {
        n_relax: 50_000,
        ..RolloutSchedule::full_scale()
    };
    let r = speedup_report(Timings::reference(), &s).unwrap();
    assert!(r.end_to_end < 2.0);
    let free = Timings {
        hf_step_s: 0.026,
        leap_s: 1e-300,
    };
    let r = speedup_report(free, &RolloutSchedule::full_scale()).unwrap();
    assert!((r.end_to_end - 6.0).abs() < 1e-12);
}

#[test]
fn zero_timings_are_rejected() {
    for t in [(0.0, 0.1), (0.1, 0.0), (f64::NAN, 0.1)] {
        let t = Timings {
            hf_step_s: t.0,
            leap_s: t.1,
        };
        assert!(matches!(speedup_report(t, &RolloutSchedule::full_scale()), Err(Error::Measurement(_))));
    }
}

#[test]
fn config_defaults_and_unknown_keys() {
    let c = RunConfig::from_json(r#"{"grid": {"nx": 64}, "rollout": {"n_relax": 1000}}"#).unwrap();
    assert_eq!(c.grid.ny, 64);
    assert_eq!(c.rollout.n_relax, 1000);
    assert_eq!(c.rollout.leap_steps, 1000);
    assert_eq!(c.model, UafnoConfig::desk());
    assert_eq!(c.train.epochs, 20);
    c.validate().unwrap();
    assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
    for bad in [r#"{"gird": {}}"#, r#"{"grid": {"nz": 3}}"#, r#"{"train": {"lr": 1e-4, "momentum": 0.9}}"#] {
        assert!(matches!(RunConfig::from_json(bad), Err(Error::Config(_))), "{bad}");
    }
}

#[test]
fn config_validation() {
    let mut c = RunConfig::default();
    c.grid.nx = 32;
    assert!(c.validate().is_err());
    let mut c = RunConfig::default();
    c.init.solid_fraction = 1.0;
    assert!(matches!(c.validate(), Err(Error::Config(_))));
    let mut c = RunConfig::default();
    c.train.epochs = 0;
    assert!(c.validate().is_err());
    let mut c = RunConfig::default();
    c.override_seed(42);
    assert_eq!((c.init.seed, c.train.seed), (42, 42));
    assert_eq!(c.n_steps(), 20_000);
}

#[test]
fn error_classes_map_to_exit_codes() {
    assert_eq!(Error::Config("x".into()).class().exit_code(), 2);
    let io = Error::Core(lmd_core::Error::InFile {
        path: PathBuf::from("a"),
        source: Box::new(lmd_core::Error::Format {
            field: "magic",
            reason: "bad".into(),
        }),
    });
    assert_eq!(io.class().exit_code(), 3);
    let num = Error::Core(lmd_core::Error::Numeric {
        step: 3,
        what: "phi".into(),
    });
    assert_eq!(num.class().exit_code(), 4);
    assert_eq!(Error::Measurement("t".into()).class().exit_code(), 4);
}
