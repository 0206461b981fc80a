//! Central-difference gradient checking.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    /// Finite-difference step.
    pub h: f64,
    /// Probe at most this many degrees of freedom, chosen at random; all when `None`.
    pub max_probes: Option<usize>,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            h: 1e-6,
            max_probes: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub max_rel_err: f64,
    /// `(input, dof)` of the worst probe.
    pub worst: (usize, usize),
    pub probes: usize,
}

/// Compare reverse-mode gradients of `f` against central differences.
///
/// `f` builds any tensor from the inputs; it is reduced to a scalar with a
/// fixed random weighting so that every output entry contributes. Outputs
/// are differenced entry by entry before the weighted reduction, which keeps
/// cancellation at the level of individual entries. Relative
/// errors use `max(|a|, |n|, 1e-3 · max |a|)` as the denominator, where `a` is
/// the analytic and `n` the numeric derivative.
pub fn check_gradients<F>(inputs: &[Tensor], f: F, opts: CheckOptions) -> Result<CheckReport>
where
    F: Fn(&Tape, &[Var]) -> Result<Var>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let output = |tape: &Tape, vars: &[Var]| -> Result<Var> {
        let y = f(tape, vars)?;
        if tape.value(y).is_complex() {
            tape.re_im(y)
        } else {
            Ok(y)
        }
    };
    let values = |vals: &[Tensor]| -> Result<Vec<f64>> {
        let tape = Tape::new();
        let vars: Vec<Var> = vals.iter().map(|t| tape.constant(t.clone())).collect();
        let y = output(&tape, &vars)?;
        let v = tape.value(y).as_real()?.to_vec();
        Ok(v)
    };
    let shape = {
        let tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
        let y = output(&tape, &vars)?;
        tape.shape(y)
    };
    let weights = Tensor::uniform(&shape, 1.0, &mut rng);
    let analytic: Vec<Tensor> = {
        let tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
        let y = output(&tape, &vars)?;
        let w = tape.constant(weights.clone());
        let loss = tape.sum(tape.mul(y, w)?)?;
        let grads = tape.backward(loss)?;
        vars.iter()
            .zip(inputs)
            .map(|(&v, t)| grads.get(v).cloned().unwrap_or_else(|| zero_like(t)))
            .collect()
    };
    let w = weights.as_real()?;

    let total: usize = inputs.iter().map(Tensor::dof).sum();
    if total == 0 {
        return Err(Error::Shape("no degrees of freedom to check".into()));
    }
    let chosen: Vec<usize> = match opts.max_probes {
        Some(k) if k < total => {
            let mut s = sample(&mut rng, total, k).into_vec();
            s.sort_unstable();
            s
        }
        _ => (0..total).collect(),
    };
    let locate = |mut k: usize| {
        for (i, t) in inputs.iter().enumerate() {
            if k < t.dof() {
                return (i, k);
            }
            k -= t.dof();
        }
        unreachable!()
    };
    let mut pairs = Vec::with_capacity(chosen.len());
    let mut vals = inputs.to_vec();
    for &k in &chosen {
        let (i, d) = locate(k);
        let x0 = vals[i].get_dof(d);
        vals[i].set_dof(d, x0 + opts.h);
        let yp = values(&vals)?;
        vals[i].set_dof(d, x0 - opts.h);
        let ym = values(&vals)?;
        vals[i].set_dof(d, x0);
        let diff: f64 = yp.iter().zip(&ym).zip(w).map(|((a, b), w)| w * (a - b)).sum();
        pairs.push(((i, d), analytic[i].get_dof(d), diff / (2.0 * opts.h)));
    }
    let floor = 1e-3 * pairs.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let mut report = CheckReport {
        max_rel_err: 0.0,
        worst: pairs[0].0,
        probes: pairs.len(),
    };
    for (at, a, n) in pairs {
        let den = a.abs().max(n.abs()).max(floor);
        let e = if den == 0.0 { 0.0 } else { (a - n).abs() / den };
        if e > report.max_rel_err || !e.is_finite() {
            report.max_rel_err = e;
            report.worst = at;
        }
    }
    Ok(report)
}

fn zero_like(t: &Tensor) -> Tensor {
    if t.is_complex() {
        Tensor::complex_zeros(t.shape())
    } else {
        Tensor::zeros(t.shape())
    }
}
