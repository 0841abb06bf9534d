use serde::{Deserialize, Serialize};

use super::SimError;
use crate::runtime::DEFAULT_POLL_HZ;

/// Observation noise. Rates are per poll slot: the interval between two
/// consecutive polls after an announcement. A hit rewrites every frame in
/// the slot, so the poll at its end sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub fp_rate: f64,
    pub fn_rate: f64,
    /// Per frame and channel.
    pub dropout_rate: f64,
    pub seed: u64,
    /// Poll rate the slots follow; match the runtime's.
    #[serde(default = "default_poll_hz")]
    pub poll_hz: u32,
}

fn default_poll_hz() -> u32 {
    DEFAULT_POLL_HZ
}

impl NoiseModel {
    pub fn none(seed: u64) -> Self {
        NoiseModel { fp_rate: 0.0, fn_rate: 0.0, dropout_rate: 0.0, seed, poll_hz: DEFAULT_POLL_HZ }
    }

    pub fn is_silent(&self) -> bool {
        self.fp_rate == 0.0 && self.fn_rate == 0.0 && self.dropout_rate == 0.0
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, r) in [("fp_rate", self.fp_rate), ("fn_rate", self.fn_rate), ("dropout_rate", self.dropout_rate)] {
            if !(0.0..1.0).contains(&r) {
                return Err(SimError::BadNoise(format!("{name} {r} is outside [0, 1)")));
            }
        }
        if !(1..=60).contains(&self.poll_hz) {
            return Err(SimError::BadNoise(format!("poll_hz {} is outside 1..=60", self.poll_hz)));
        }
        Ok(())
    }
}
