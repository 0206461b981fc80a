use std::path::Path;

use lmd_core::metrics::{ac_csv, qoi_relative_error, timeline_ac_errors, AcErrorRow};
use lmd_core::qoi::{qoi_csv, qoi_record, QoiOptions, QoiRecord};
use lmd_core::{Boundary, FieldState, GridSpec};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Column names of the QoI error table.
pub const QOI_COLUMNS: [&str; 8] = [
    "mean_curvature",
    "curvature_std",
    "perimeter",
    "total_mass",
    "cA_mass",
    "cB_mass",
    "max_penetration_depth",
    "mean_ligament_height",
];

/// A record's values in [`QOI_COLUMNS`] order. Total mass is the solid
/// (phi) mass.
pub fn qoi_columns(r: &QoiRecord) -> [Option<f64>; 8] {
    [
        r.mu_k,
        r.sigma_k,
        Some(r.perimeter),
        Some(r.m_phi),
        Some(r.m_a),
        Some(r.m_b),
        r.max_p,
        r.mu_d,
    ]
}

/// Relative error of each QoI over a timeline; `None` where undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QoiErrors(pub [Option<f64>; 8]);

impl QoiErrors {
    pub fn compute(truth: &[QoiRecord], pred: &[QoiRecord]) -> Result<Self> {
        let mut out = [None; 8];
        for (c, slot) in out.iter_mut().enumerate() {
            let t: Vec<_> = truth.iter().map(|r| qoi_columns(r)[c]).collect();
            let p: Vec<_> = pred.iter().map(|r| qoi_columns(r)[c]).collect();
            *slot = qoi_relative_error(&t, &p)?;
        }
        Ok(QoiErrors(out))
    }

    pub fn csv(&self) -> String {
        let cells: Vec<String> = self
            .0
            .iter()
            .map(|v| v.map(|x| x.to_string()).unwrap_or_else(|| "N/A".into()))
            .collect();
        format!("{}\n{}\n", QOI_COLUMNS.join(","), cells.join(","))
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub ac: Vec<AcErrorRow>,
    pub truth_qoi: Vec<QoiRecord>,
    pub pred_qoi: Vec<QoiRecord>,
    pub qoi_errors: QoiErrors,
}

impl Evaluation {
    pub const AC_FILE: &'static str = "ac_errors.csv";
    pub const QOI_ERRORS_FILE: &'static str = "qoi_errors.csv";
    pub const TRUTH_QOI_FILE: &'static str = "qoi_truth.csv";
    pub const PRED_QOI_FILE: &'static str = "qoi_pred.csv";

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_text(&dir.join(Self::AC_FILE), &ac_csv(&self.ac))?;
        write_text(&dir.join(Self::QOI_ERRORS_FILE), &self.qoi_errors.csv())?;
        write_text(&dir.join(Self::TRUTH_QOI_FILE), &qoi_csv(&self.truth_qoi))?;
        write_text(&dir.join(Self::PRED_QOI_FILE), &qoi_csv(&self.pred_qoi))
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Keeps the snapshots whose step appears in every timeline, in step order.
pub fn align(timelines: &[&[FieldState]]) -> Result<Vec<Vec<FieldState>>> {
    let Some(first) = timelines.first() else {
        return Ok(Vec::new());
    };
    let mut steps: Vec<u64> = first.iter().map(|s| s.step).collect();
    steps.sort_unstable();
    steps.dedup();
    steps.retain(|st| timelines[1..].iter().all(|t| t.iter().any(|s| s.step == *st)));
    if steps.is_empty() {
        return Err(Error::Core(lmd_core::Error::Alignment("the timelines share no step".into())));
    }
    Ok(timelines
        .iter()
        .map(|t| {
            steps
                .iter()
                .map(|st| t.iter().find(|s| s.step == *st).expect("retained").clone())
                .collect()
        })
        .collect())
}

/// Autocorrelation errors per aligned step and the QoI error table.
pub fn evaluate(
    pred: &[FieldState],
    truth: &[FieldState],
    grid: &GridSpec,
    boundary: Boundary,
    opts: &QoiOptions,
) -> Result<Evaluation> {
    let mut aligned = align(&[truth, pred])?;
    let pred = aligned.pop().expect("two timelines");
    let truth = aligned.pop().expect("two timelines");
    let ac = timeline_ac_errors(&truth, &pred)?;
    let records = |t: &[FieldState]| -> Vec<QoiRecord> { t.par_iter().map(|s| qoi_record(s, grid, boundary, opts)).collect() };
    let (truth_qoi, pred_qoi) = (records(&truth), records(&pred));
    let qoi_errors = QoiErrors::compute(&truth_qoi, &pred_qoi)?;
    Ok(Evaluation {
        ac,
        truth_qoi,
        pred_qoi,
        qoi_errors,
    })
}

