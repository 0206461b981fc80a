//! One function per `lmd` subcommand. Each validates the configuration,
//! writes it into `out_dir`, then does its work.

use std::path::{Path, PathBuf};

use lmd_core::metrics::{ac_csv, pairwise_discrepancy};
use lmd_core::qoi::{qoi_timeseries, write_qoi_csv, QoiOptions, QoiRecord};
use lmd_core::snapshot::{list_snapshots, read_snapshot, snapshot_file_name, write_snapshot};
use lmd_core::solver::{HfObserver, HfSolver, StepReport};
use lmd_core::{init_state, FieldState};
use lmd_uafno::{load_weights_for, save_weights, Model};

use crate::config::RunConfig;
use crate::dataset::{build_dataset, load_pairs, run_dir_name, run_dirs};
use crate::error::{Error, Result};
use crate::evaluate::{align, evaluate, write_text, Evaluation};
use crate::rollout::{rollout_hybrid, RolloutTiming};
use crate::speedup::{speedup_report, SpeedupReport, Timings};
use crate::train::{train, TrainLog};

pub const STEPS_FILE: &str = "steps.csv";
pub const WEIGHTS_FILE: &str = "model.uafw";
pub const LOSS_FILE: &str = "loss.csv";
pub const ROLLOUT_DIR: &str = "rollout";
pub const TIMING_FILE: &str = "timing.json";
pub const QOI_FILE: &str = "qoi.csv";
pub const PAIRWISE_FILE: &str = "pairwise.csv";
pub const REPORT_FILE: &str = "speedup.txt";

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn prepare(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    cfg.write_resolved()?;
    Ok(())
}

/// Streams snapshots into a directory and keeps the step reports.
struct DirSink<'a> {
    dir: &'a Path,
    reports: Vec<StepReport>,
}

impl HfObserver for DirSink<'_> {
    fn report(&mut self, r: &StepReport) -> lmd_core::Result<()> {
        self.reports.push(r.clone());
        Ok(())
    }

    fn snapshot(&mut self, s: &FieldState) -> lmd_core::Result<()> {
        write_snapshot(s, &self.dir.join(snapshot_file_name(s.step)))
    }
}

fn steps_csv(reports: &[StepReport]) -> String {
    let mut out = format!("{}\n", StepReport::CSV_HEADER);
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Ground-truth HF runs under `out_dir/run_*`, each with its snapshots and
/// a step report CSV. Returns the run directories.
pub fn simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    prepare(cfg)?;
    let grid = cfg.grid_spec()?;
    let solver = HfSolver::new(&grid, &cfg.params, &cfg.solver)?;
    let mut dirs = Vec::new();
    for k in 0..cfg.simulate.n_runs {
        let dir = cfg.paths.out_dir.join(run_dir_name(k));
        create_dir(&dir)?;
        let s0 = init_state(&grid, cfg.init.solid_fraction, cfg.init.noise_amp, cfg.init.seed + k as u64)?;
        let mut sink = DirSink {
            dir: &dir,
            reports: Vec::new(),
        };
        solver.run(s0, cfg.n_steps(), &mut sink)?;
        write_text(&dir.join(STEPS_FILE), &steps_csv(&sink.reports))?;
        dirs.push(dir);
    }
    Ok(dirs)
}

/// Trains a fresh model on the pairs of all non-held-out runs in
/// `data_dir`, starting at the warm-up length.
pub fn train_model(cfg: &RunConfig) -> Result<(Model, TrainLog)> {
    prepare(cfg)?;
    let runs = run_dirs(&cfg.paths.data_dir)?;
    let holdout = cfg.train.holdout_runs;
    if runs.len() <= holdout {
        return Err(Error::Dataset(format!(
            "{} run(s) in {} leave none after holding out {holdout}",
            runs.len(),
            cfg.paths.data_dir.display()
        )));
    }
    let ds = build_dataset(&runs[holdout..], cfg.rollout.leap_steps, cfg.rollout.n_init)?;
    if ds.skipped > 0 {
        eprintln!("warning: {} pair(s) skipped for missing targets", ds.skipped);
    }
    let pairs = load_pairs(&ds)?;
    let mut model = Model::build(cfg.model.clone(), cfg.train.seed)?;
    let log = train(&mut model, &pairs, &cfg.train)?;
    let out = &cfg.paths.out_dir;
    write_text(&out.join(LOSS_FILE), &log.loss_csv())?;
    save_weights(&model, &out.join(WEIGHTS_FILE))?;
    Ok((model, log))
}

/// Roll-out from the initial state of run 0 (the held-out run). Replaces
/// the snapshots under `out_dir/rollout` and records wall times there.
pub fn rollout(cfg: &RunConfig, weights: &Path) -> Result<(PathBuf, RolloutTiming)> {
    prepare(cfg)?;
    let grid = cfg.grid_spec()?;
    let model = load_weights_for(weights, &cfg.model)?;
    let s0 = init_state(&grid, cfg.init.solid_fraction, cfg.init.noise_amp, cfg.init.seed)?;
    let r = rollout_hybrid(s0, &model, &cfg.rollout, &grid, &cfg.params, &cfg.solver)?;
    let dir = cfg.paths.out_dir.join(ROLLOUT_DIR);
    create_dir(&dir)?;
    for (_, stale) in list_snapshots(&dir)? {
        std::fs::remove_file(&stale).map_err(|e| Error::io(&stale, e))?;
    }
    for s in &r.snapshots {
        write_snapshot(s, &dir.join(snapshot_file_name(s.step)))?;
    }
    let timing = serde_json::to_string_pretty(&r.timing).expect("plain data");
    write_text(&dir.join(TIMING_FILE), &timing)?;
    Ok((dir, r.timing))
}

fn snapshot_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let paths: Vec<PathBuf> = list_snapshots(dir)?.into_iter().map(|(_, p)| p).collect();
    if paths.is_empty() {
        return Err(Error::Config(format!("no snapshots in {}", dir.display())));
    }
    Ok(paths)
}

/// QoI time series of a snapshot directory.
pub fn qoi(cfg: &RunConfig, snapshots: &Path) -> Result<Vec<QoiRecord>> {
    prepare(cfg)?;
    let paths = snapshot_paths(snapshots)?;
    let records = qoi_timeseries(&paths, cfg.grid.dx_nm, cfg.solver.boundary, &QoiOptions::default())?;
    write_qoi_csv(&cfg.paths.out_dir.join(QOI_FILE), &records)?;
    Ok(records)
}

fn read_timeline(dir: &Path) -> Result<Vec<FieldState>> {
    snapshot_paths(dir)?.iter().map(|p| Ok(read_snapshot(p)?)).collect()
}

/// Compares a predicted timeline with the first truth directory. With three
/// or more truth directories, also writes the mean pairwise discrepancy
/// among them.
pub fn metrics(cfg: &RunConfig, pred: &Path, truths: &[PathBuf]) -> Result<Evaluation> {
    prepare(cfg)?;
    let Some(first) = truths.first() else {
        return Err(Error::Config("metrics needs at least one truth directory".into()));
    };
    let grid = cfg.grid_spec()?;
    let truth = read_timeline(first)?;
    let ev = evaluate(&read_timeline(pred)?, &truth, &grid, cfg.solver.boundary, &QoiOptions::default())?;
    let out = &cfg.paths.out_dir;
    ev.write(out)?;
    if truths.len() >= 3 {
        let runs = truths.iter().map(|d| read_timeline(d)).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&[FieldState]> = runs.iter().map(Vec::as_slice).collect();
        let rows = pairwise_discrepancy(&align(&refs)?)?;
        write_text(&out.join(PAIRWISE_FILE), &ac_csv(&rows))?;
    }
    Ok(ev)
}

/// Speedup report from a timings file: either [`Timings`] or the
/// [`RolloutTiming`] written by a roll-out.
pub fn report(cfg: &RunConfig, timings: &Path) -> Result<SpeedupReport> {
    prepare(cfg)?;
    let text = std::fs::read_to_string(timings).map_err(|e| Error::io(timings, e))?;
    let t = match serde_json::from_str::<Timings>(&text) {
        Ok(t) => t,
        Err(_) => {
            let r: RolloutTiming = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: not a timings document: {e}", timings.display())))?;
            match (r.hf_step_s(), r.leap_s()) {
                (Some(hf_step_s), Some(leap_s)) => Timings { hf_step_s, leap_s },
                _ => return Err(Error::Measurement("roll-out timed no HF step or no leap".into())),
            }
        }
    };
    let rep = speedup_report(t, &cfg.rollout)?;
    write_text(&cfg.paths.out_dir.join(REPORT_FILE), &rep.to_text())?;
    Ok(rep)
}
