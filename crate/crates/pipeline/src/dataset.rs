use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lmd_autodiff::Tensor;
use lmd_core::snapshot::{list_snapshots, read_snapshot};
use lmd_core::FieldState;

use crate::error::{Error, Result};

/// Stacks (phi, cA, cB) into a `[3, ny, nx]` tensor.
pub fn state_to_tensor(s: &FieldState) -> Tensor {
    let (ny, nx) = s.shape();
    let values = s.fields().iter().flat_map(|f| f.iter().copied()).collect();
    Tensor::real(&[3, ny, nx], values).expect("field sizes agree")
}

/// Inverse of [`state_to_tensor`], stamped with the given clock.
pub fn tensor_to_state(t: &Tensor, time: f64, step: u64) -> Result<FieldState> {
    let &[3, ny, nx] = t.shape() else {
        return Err(Error::Config(format!("expected a [3, ny, nx] tensor, got {:?}", t.shape())));
    };
    let v = t.as_real()?;
    let n = ny * nx;
    let field = |k: usize| ndarray::Array2::from_shape_vec((ny, nx), v[k * n..(k + 1) * n].to_vec()).expect("sized");
    Ok(FieldState::new(field(0), field(1), field(2), time, step)?)
}

/// One training example: the snapshot at `step` and the one `leap` later.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub run: usize,
    pub step: u64,
    pub input: PathBuf,
    pub target: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub pairs: Vec<Pair>,
    /// Inputs whose counterpart should exist inside the run but does not.
    pub skipped: usize,
}

/// Pairs every snapshot at or after `min_step` with the snapshot
/// `leap_steps` later in the same run. Ordered by run, then step.
pub fn build_dataset(runs: &[PathBuf], leap_steps: u64, min_step: u64) -> Result<Dataset> {
    if leap_steps == 0 {
        return Err(Error::Config("leap_steps must be at least 1".into()));
    }
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for (run, dir) in runs.iter().enumerate() {
        let by_step: BTreeMap<u64, PathBuf> = list_snapshots(dir)?.into_iter().map(|(h, p)| (h.step, p)).collect();
        let Some(&last) = by_step.keys().next_back() else {
            continue;
        };
        for (&step, input) in by_step.range(min_step..) {
            match by_step.get(&(step + leap_steps)) {
                Some(target) => pairs.push(Pair {
                    run,
                    step,
                    input: input.clone(),
                    target: target.clone(),
                }),
                None if step + leap_steps <= last => skipped += 1,
                None => {}
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::Dataset(format!(
            "no snapshot pairs {leap_steps} steps apart at or after step {min_step} in {} run(s)",
            runs.len()
        )));
    }
    Ok(Dataset { pairs, skipped })
}

/// Reads every pair into memory as model tensors.
pub fn load_pairs(ds: &Dataset) -> Result<Vec<(Tensor, Tensor)>> {
    ds.pairs
        .iter()
        .map(|p| Ok((load(&p.input)?, load(&p.target)?)))
        .collect()
}

fn load(path: &Path) -> Result<Tensor> {
    Ok(state_to_tensor(&read_snapshot(path)?))
}

/// Run directories (`run_*`) below `root`, in name order.
pub fn run_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(root, e))?.path();
        let is_run = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with("run_"));
        if is_run && path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

pub fn run_dir_name(k: usize) -> String {
    format!("run_{k:03}")
}
