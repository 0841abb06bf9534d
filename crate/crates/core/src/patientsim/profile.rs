use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::runtime::{Side, N_JOINTS};
use crate::vocab::{self, JOINTS};

/// Motor constraints of the simulated patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatientProfile {
    /// Joints absent here use [`vocab::full_range`].
    #[serde(default)]
    pub rom_limits: BTreeMap<String, (f64, f64)>,
    pub movement_speed_scale: f64,
    pub affected_side: Side,
}

/// Speed scale standing in for a muscle grade of 3 out of 5.
pub const MRC3_SPEED_SCALE: f64 = 0.6;

impl PatientProfile {
    /// Right-side hemiparesis with the elbow braced to 80..120 degrees.
    pub fn standardized() -> Self {
        let mut rom_limits = BTreeMap::new();
        rom_limits.insert("right_elbow_flexion".to_string(), (80.0, 120.0));
        PatientProfile { rom_limits, movement_speed_scale: MRC3_SPEED_SCALE, affected_side: Side::Right }
    }

    /// Unconstrained profile at full speed.
    pub fn unimpaired() -> Self {
        PatientProfile { rom_limits: BTreeMap::new(), movement_speed_scale: 1.0, affected_side: Side::Right }
    }

    pub fn rom(&self, joint: &str) -> (f64, f64) {
        self.rom_limits.get(joint).copied().unwrap_or_else(|| vocab::full_range(joint))
    }

    pub fn rom_table(&self) -> [(f64, f64); N_JOINTS] {
        let mut t = [(0.0, 0.0); N_JOINTS];
        for (i, j) in JOINTS.iter().enumerate() {
            t[i] = self.rom(j);
        }
        t
    }

    pub fn clamp(&self, joint: &str, deg: f64) -> f64 {
        let (lo, hi) = self.rom(joint);
        deg.clamp(lo, hi)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.movement_speed_scale > 0.0 && self.movement_speed_scale <= 1.0) {
            return Err(SimError::BadProfile(format!(
                "movement_speed_scale {} is outside (0, 1]",
                self.movement_speed_scale
            )));
        }
        for (j, &(lo, hi)) in &self.rom_limits {
            if !vocab::is_joint(j) {
                return Err(SimError::BadProfile(format!("unknown joint `{j}`")));
            }
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(SimError::BadProfile(format!("ROM of `{j}` needs min < max, got ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}
