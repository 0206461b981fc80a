use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::RolloutSchedule;

/// Measured wall times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timings {
    /// Seconds per HF step.
    pub hf_step_s: f64,
    /// Seconds per surrogate pass.
    pub leap_s: f64,
}

impl Timings {
    /// 0.026 s per HF step and 0.116 s per surrogate pass at 512x512.
    pub fn reference() -> Self {
        Timings {
            hf_step_s: 0.026,
            leap_s: 0.116,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupReport {
    pub timings: Timings,
    pub schedule: RolloutSchedule,
    /// Steps covered by the roll-out.
    pub total_steps: u64,
    pub hf_only_s: f64,
    pub hybrid_s: f64,
    /// HF time for `leap_steps` steps over one surrogate pass.
    pub per_leap: f64,
    /// HF-only time over roll-out time for the whole schedule.
    pub end_to_end: f64,
    /// End-to-end speedup with a free surrogate.
    pub end_to_end_limit: f64,
}

pub fn speedup_report(timings: Timings, schedule: &RolloutSchedule) -> Result<SpeedupReport> {
    schedule.validate()?;
    for (name, t) in [("hf_step_s", timings.hf_step_s), ("leap_s", timings.leap_s)] {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Measurement(format!("{name} must be a positive wall time, got {t}")));
        }
    }
    let total_steps = schedule.total_steps().expect("validated");
    let hf_steps = schedule.hf_steps() as f64;
    let hf_only_s = total_steps as f64 * timings.hf_step_s;
    let hybrid_s = hf_steps * timings.hf_step_s + schedule.n_leaps as f64 * timings.leap_s;
    Ok(SpeedupReport {
        timings,
        schedule: *schedule,
        total_steps,
        hf_only_s,
        hybrid_s,
        per_leap: schedule.leap_steps as f64 * timings.hf_step_s / timings.leap_s,
        end_to_end: hf_only_s / hybrid_s,
        end_to_end_limit: if hf_steps > 0.0 {
            total_steps as f64 / hf_steps
        } else {
            f64::INFINITY
        },
    })
}

impl SpeedupReport {
    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let s = &self.schedule;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("hf_step_s", self.timings.hf_step_s.to_string());
        kv("leap_s", self.timings.leap_s.to_string());
        kv("n_init", s.n_init.to_string());
        kv("leap_steps", s.leap_steps.to_string());
        kv("n_leaps", s.n_leaps.to_string());
        kv("n_relax", s.n_relax.to_string());
        kv("total_steps", self.total_steps.to_string());
        kv("hf_only_s", self.hf_only_s.to_string());
        kv("rollout_s", self.hybrid_s.to_string());
        kv("per_leap_speedup", self.per_leap.to_string());
        kv("end_to_end_speedup", self.end_to_end.to_string());
        kv("end_to_end_speedup_limit", self.end_to_end_limit.to_string());
        out
    }
}
