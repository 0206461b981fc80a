use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How far one surrogate pass jumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeapSpec {
    pub leap_steps: u64,
    /// HF step size, s.
    pub dt_s: f64,
}

impl LeapSpec {
    pub fn new(leap_steps: u64, dt_s: f64) -> Result<Self> {
        if leap_steps == 0 {
            return Err(Error::Config("leap_steps must be at least 1".into()));
        }
        if !(dt_s >= 0.0 && dt_s.is_finite()) {
            return Err(Error::Config(format!("dt must be non-negative, got {dt_s}")));
        }
        Ok(LeapSpec { leap_steps, dt_s })
    }

    pub fn duration_s(&self) -> f64 {
        self.leap_steps as f64 * self.dt_s
    }
}

/// HF warm-up, then `n_leaps` cycles of one surrogate leap followed by
/// `n_relax` HF steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RolloutSchedule {
    pub n_init: u64,
    pub leap_steps: u64,
    pub n_leaps: u64,
    pub n_relax: u64,
}

impl Default for RolloutSchedule {
    fn default() -> Self {
        RolloutSchedule {
            n_init: 10_000,
            leap_steps: 1_000,
            n_leaps: 10,
            n_relax: 0,
        }
    }
}

impl RolloutSchedule {
    /// The full-size protocol: 10^6 warm-up steps and 100 leaps of 50,000.
    pub fn full_scale() -> Self {
        RolloutSchedule {
            n_init: 1_000_000,
            leap_steps: 50_000,
            n_leaps: 100,
            n_relax: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.leap_steps == 0 {
            return Err(Error::Config("leap_steps must be at least 1".into()));
        }
        self.total_steps()
            .map(|_| ())
            .ok_or_else(|| Error::Config("schedule step count overflows".into()))
    }

    pub fn cycle_len(&self) -> u64 {
        self.leap_steps + self.n_relax
    }

    /// Step index at the end of cycle `k` (cycle 0 is the warm-up).
    pub fn cycle_end(&self, k: u64) -> u64 {
        self.n_init + k * self.cycle_len()
    }

    /// Step index right after the leap of cycle `k >= 1`.
    pub fn leap_end(&self, k: u64) -> u64 {
        self.cycle_end(k - 1) + self.leap_steps
    }

    pub fn total_steps(&self) -> Option<u64> {
        self.n_leaps
            .checked_mul(self.cycle_len())
            .and_then(|s| s.checked_add(self.n_init))
    }

    /// Steps integrated by the HF solver.
    pub fn hf_steps(&self) -> u64 {
        self.n_init + self.n_leaps * self.n_relax
    }

    /// Snapshot steps emitted by a roll-out: warm-up snapshots at the
    /// cadence, then the end of each leap and, with relaxation, the end of
    /// each cycle.
    pub fn emitted_steps(&self, cadence: u64) -> Vec<u64> {
        let mut steps: Vec<u64> = (1..=self.n_init / cadence).map(|k| k * cadence).collect();
        for k in 1..=self.n_leaps {
            steps.push(self.leap_end(k));
            if self.n_relax > 0 {
                steps.push(self.cycle_end(k));
            }
        }
        steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_protocol_ends_at_six_million() {
        let s = RolloutSchedule::full_scale();
        assert_eq!(s.total_steps(), Some(6_000_000));
        assert_eq!(s.cycle_end(100), 6_000_000);
        assert_eq!(s.hf_steps(), 1_000_000);
    }

    #[test]
    fn zero_leap_is_rejected() {
        assert!(LeapSpec::new(0, 1e-12).is_err());
        let s = RolloutSchedule {
            leap_steps: 0,
            ..RolloutSchedule::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn no_leaps_emit_warmup_only() {
        let s = RolloutSchedule {
            n_init: 5000,
            n_leaps: 0,
            ..RolloutSchedule::default()
        };
        assert_eq!(s.emitted_steps(1000), [1000, 2000, 3000, 4000, 5000]);
    }
}
