use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{BehaviorScript, NoiseModel, PatientProfile, SimError, SimulatedPatient, DEFAULT_FRAME_HZ};
use crate::dsl::Program;
use crate::runtime::PoseFrame;
use crate::vocab::JOINTS;

fn default_hz() -> u32 {
    DEFAULT_FRAME_HZ
}

/// Everything needed to replay a simulated session, minus the program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Program the patient follows; sessions may run a different one.
    pub program_id: String,
    pub profile: PatientProfile,
    pub script: BehaviorScript,
    pub noise: NoiseModel,
    #[serde(default = "default_hz")]
    pub frame_hz: u32,
}

impl Scenario {
    pub fn patient(&self, p: &Program) -> Result<SimulatedPatient, SimError> {
        SimulatedPatient::new(p, &self.profile, &self.script, &self.noise, self.frame_hz)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// One row per frame. Object columns follow the first frame's objects.
pub fn frames_to_csv(frames: &[PoseFrame]) -> String {
    let objects: Vec<String> = frames
        .first()
        .map(|f| f.objects.iter().map(|o| o.id.to_string()).collect())
        .unwrap_or_default();
    let mut head = vec!["timestamp".to_string()];
    head.extend(JOINTS.iter().map(|j| j.to_string()));
    for h in ["left_hand", "right_hand"] {
        head.extend(["x", "y", "z"].map(|a| format!("{h}_{a}")));
    }
    for o in &objects {
        head.extend(["x", "y", "z"].map(|a| format!("{o}_{a}")));
        head.push(format!("{o}_held_by"));
    }
    head.extend(JOINTS.iter().map(|j| format!("valid_{j}")));
    head.extend(["valid_left_hand".to_string(), "valid_right_hand".to_string()]);
    head.extend(objects.iter().map(|o| format!("valid_{o}")));
    let mut out = head.join(",");
    out.push('\n');
    for f in frames {
        let mut row: Vec<String> = vec![f.timestamp().to_string()];
        row.extend(f.joints.iter().map(|x| x.to_string()));
        for h in f.hands {
            row.extend(h.iter().map(|x| x.to_string()));
        }
        for o in &objects {
            match f.object(o) {
                Some(s) => {
                    row.extend(s.position.iter().map(|x| x.to_string()));
                    row.push(serde_json::to_value(s.held_by).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default());
                }
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        row.extend(f.joint_valid.iter().map(|v| v.to_string()));
        row.extend(f.hand_valid.iter().map(|v| v.to_string()));
        for o in &objects {
            row.push(f.object(o).map(|s| s.valid.to_string()).unwrap_or_default());
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}
