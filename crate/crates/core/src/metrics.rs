//! Two-point statistics and error measures between predicted and reference fields.

use std::fmt::Write as _;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{to_complex, Fft2Plan};
use crate::state::FieldState;

/// Periodic two-point autocorrelation `S(r) = (1/N) sum_x u(x) u(x + r)`.
pub fn autocorrelation(u: &Array2<f64>) -> Array2<f64> {
    let (ny, nx) = u.dim();
    let plan = Fft2Plan::new(ny, nx);
    autocorrelation_with(&plan, u)
}

/// [`autocorrelation`] with a reusable transform plan.
pub fn autocorrelation_with(plan: &Fft2Plan, u: &Array2<f64>) -> Array2<f64> {
    let n = u.len() as f64;
    let mut c = to_complex(u);
    plan.forward(&mut c);
    c.mapv_inplace(|z| Complex64::new(z.norm_sqr(), 0.0));
    plan.inverse(&mut c);
    c.mapv(|z| z.re / (n * n))
}

fn l2(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `||S_pred - S_true|| / ||S_true||` over all offsets; `None` when the
/// reference autocorrelation vanishes.
pub fn ac_relative_error(u_true: &Array2<f64>, u_pred: &Array2<f64>) -> Result<Option<f64>> {
    if u_true.dim() != u_pred.dim() {
        return Err(Error::Shape(format!("{:?} vs {:?}", u_true.dim(), u_pred.dim())));
    }
    let (ny, nx) = u_true.dim();
    let plan = Fft2Plan::new(ny, nx);
    Ok(ac_error_with(&plan, u_true, u_pred))
}

fn ac_error_with(plan: &Fft2Plan, u_true: &Array2<f64>, u_pred: &Array2<f64>) -> Option<f64> {
    let st = autocorrelation_with(plan, u_true);
    let sp = autocorrelation_with(plan, u_pred);
    let den = l2(&st);
    (den > 0.0).then(|| l2(&(&sp - &st)) / den)
}

/// Autocorrelation errors of (phi, cA, cB).
pub fn state_ac_errors(truth: &FieldState, pred: &FieldState) -> Result<[Option<f64>; 3]> {
    if truth.shape() != pred.shape() {
        return Err(Error::Shape(format!("{:?} vs {:?}", truth.shape(), pred.shape())));
    }
    let (ny, nx) = truth.shape();
    let plan = Fft2Plan::new(ny, nx);
    let [t0, t1, t2] = truth.fields();
    let [p0, p1, p2] = pred.fields();
    Ok([
        ac_error_with(&plan, t0, p0),
        ac_error_with(&plan, t1, p1),
        ac_error_with(&plan, t2, p2),
    ])
}

/// `||q_pred - q_true|| / ||q_true||` over slots defined in both sequences.
pub fn qoi_relative_error(q_true: &[Option<f64>], q_pred: &[Option<f64>]) -> Result<Option<f64>> {
    if q_true.len() != q_pred.len() {
        return Err(Error::Alignment(format!(
            "sequence lengths {} and {}",
            q_true.len(),
            q_pred.len()
        )));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (t, p) in q_true.iter().zip(q_pred) {
        if let (Some(t), Some(p)) = (t, p) {
            num += (p - t) * (p - t);
            den += t * t;
        }
    }
    Ok((den > 0.0).then(|| (num / den).sqrt()))
}

/// Per-time autocorrelation errors, one row per aligned snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct AcErrorRow {
    pub step: u64,
    pub time_s: f64,
    pub eac: [Option<f64>; 3],
}

impl AcErrorRow {
    pub const CSV_HEADER: &'static str = "step,time_s,eac_phi,eac_cA,eac_cB";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{:e},{},{},{}",
            self.step,
            self.time_s,
            opt(self.eac[0]),
            opt(self.eac[1]),
            opt(self.eac[2])
        )
    }
}

pub fn ac_csv(rows: &[AcErrorRow]) -> String {
    let mut out = String::from(AcErrorRow::CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

fn check_aligned(a: &[FieldState], b: &[FieldState]) -> Result<()> {
    let bad: Vec<String> = a
        .iter()
        .zip(b)
        .filter(|(x, y)| x.step != y.step)
        .map(|(x, y)| format!("{}/{}", x.step, y.step))
        .collect();
    if a.len() != b.len() || !bad.is_empty() {
        return Err(Error::Alignment(format!(
            "lengths {} and {}, mismatched steps [{}]",
            a.len(),
            b.len(),
            bad.join(", ")
        )));
    }
    Ok(())
}

/// Autocorrelation errors of a predicted timeline against the reference one.
pub fn timeline_ac_errors(truth: &[FieldState], pred: &[FieldState]) -> Result<Vec<AcErrorRow>> {
    check_aligned(truth, pred)?;
    truth
        .iter()
        .zip(pred)
        .map(|(t, p)| {
            Ok(AcErrorRow {
                step: t.step,
                time_s: t.time,
                eac: state_ac_errors(t, p)?,
            })
        })
        .collect()
}

/// Mean autocorrelation error over all unordered pairs of runs, per time slot
/// and field. In each pair the run listed first is the reference. Undefined
/// pair errors are left out of the mean.
pub fn pairwise_discrepancy(runs: &[Vec<FieldState>]) -> Result<Vec<AcErrorRow>> {
    if runs.len() < 2 {
        return Err(Error::Parameter(format!("need at least 2 runs, got {}", runs.len())));
    }
    for r in &runs[1..] {
        check_aligned(&runs[0], r)?;
    }
    let mut sums = vec![[(0.0, 0usize); 3]; runs[0].len()];
    for a in 0..runs.len() {
        for b in a + 1..runs.len() {
            for (slot, row) in timeline_ac_errors(&runs[a], &runs[b])?.iter().enumerate() {
                for f in 0..3 {
                    if let Some(e) = row.eac[f] {
                        sums[slot][f].0 += e;
                        sums[slot][f].1 += 1;
                    }
                }
            }
        }
    }
    Ok(runs[0]
        .iter()
        .zip(sums)
        .map(|(s, acc)| AcErrorRow {
            step: s.step,
            time_s: s.time,
            eac: acc.map(|(sum, n)| (n > 0).then(|| sum / n as f64)),
        })
        .collect())
}
