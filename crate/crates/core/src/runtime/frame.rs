use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::vocab::{self, JOINTS};

/// Time in integer microseconds since session start.
pub type Micros = i64;

pub const MICROS_PER_S: i64 = 1_000_000;

pub fn to_secs(t: Micros) -> f64 {
    t as f64 / MICROS_PER_S as f64
}

pub fn from_secs(s: f64) -> Micros {
    (s * MICROS_PER_S as f64).round() as Micros
}

pub const N_JOINTS: usize = JOINTS.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Holder {
    None,
    Left,
    Right,
}

impl Holder {
    pub fn is_held(self) -> bool {
        self != Holder::None
    }
}

impl From<Side> for Holder {
    fn from(s: Side) -> Self {
        match s {
            Side::Left => Holder::Left,
            Side::Right => Holder::Right,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectState {
    pub id: Arc<str>,
    pub position: [f64; 3],
    pub held_by: Holder,
    pub valid: bool,
}

/// One sensor sample. Validity flags mark per-channel dropout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "FrameWire", try_from = "FrameWire")]
pub struct PoseFrame {
    pub t: Micros,
    /// Degrees, indexed like [`vocab::JOINTS`].
    pub joints: [f64; N_JOINTS],
    pub joint_valid: [bool; N_JOINTS],
    /// Centimetres, indexed by [`Side::index`].
    pub hands: [[f64; 3]; 2],
    pub hand_valid: [bool; 2],
    pub objects: Vec<ObjectState>,
}

impl PoseFrame {
    pub fn object(&self, id: &str) -> Option<&ObjectState> {
        self.objects.iter().find(|o| &*o.id == id)
    }

    pub fn object_mut(&mut self, id: &str) -> Option<&mut ObjectState> {
        self.objects.iter_mut().find(|o| &*o.id == id)
    }

    pub fn joint(&self, name: &str) -> Option<f64> {
        vocab::joint_index(name).map(|i| self.joints[i])
    }

    pub fn timestamp(&self) -> f64 {
        to_secs(self.t)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HandsWire {
    left: [f64; 3],
    right: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ObjectWire {
    position: [f64; 3],
    held_by: Holder,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FrameWire {
    timestamp: f64,
    joint_angles: BTreeMap<String, f64>,
    hand_position: HandsWire,
    #[serde(default)]
    object_states: BTreeMap<String, ObjectWire>,
    #[serde(default)]
    detection_validity: BTreeMap<String, bool>,
}

impl From<PoseFrame> for FrameWire {
    fn from(f: PoseFrame) -> Self {
        let mut validity = BTreeMap::new();
        let mut joint_angles = BTreeMap::new();
        for (i, j) in JOINTS.iter().enumerate() {
            joint_angles.insert(j.to_string(), f.joints[i]);
            validity.insert(j.to_string(), f.joint_valid[i]);
        }
        validity.insert("left_hand".into(), f.hand_valid[0]);
        validity.insert("right_hand".into(), f.hand_valid[1]);
        let mut object_states = BTreeMap::new();
        for o in &f.objects {
            object_states.insert(o.id.to_string(), ObjectWire { position: o.position, held_by: o.held_by });
            validity.insert(o.id.to_string(), o.valid);
        }
        FrameWire {
            timestamp: f.timestamp(),
            joint_angles,
            hand_position: HandsWire { left: f.hands[0], right: f.hands[1] },
            object_states,
            detection_validity: validity,
        }
    }
}

impl TryFrom<FrameWire> for PoseFrame {
    type Error = String;

    fn try_from(w: FrameWire) -> Result<Self, String> {
        let mut joints = [0.0; N_JOINTS];
        for (i, j) in JOINTS.iter().enumerate() {
            joints[i] = *w.joint_angles.get(*j).ok_or_else(|| format!("frame lacks joint `{j}`"))?;
            if !joints[i].is_finite() {
                return Err(format!("joint `{j}` is not finite"));
            }
        }
        if let Some(extra) = w.joint_angles.keys().find(|k| !vocab::is_joint(k)) {
            return Err(format!("unknown joint `{extra}`"));
        }
        let valid = |k: &str| w.detection_validity.get(k).copied().unwrap_or(true);
        let mut joint_valid = [true; N_JOINTS];
        for (i, j) in JOINTS.iter().enumerate() {
            joint_valid[i] = valid(j);
        }
        let objects = w
            .object_states
            .iter()
            .map(|(id, o)| ObjectState { id: Arc::from(id.as_str()), position: o.position, held_by: o.held_by, valid: valid(id) })
            .collect();
        Ok(PoseFrame {
            t: from_secs(w.timestamp),
            joints,
            joint_valid,
            hands: [w.hand_position.left, w.hand_position.right],
            hand_valid: [valid("left_hand"), valid("right_hand")],
            objects,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut joints = [10.0; N_JOINTS];
        joints[2] = 95.5;
        let mut joint_valid = [true; N_JOINTS];
        joint_valid[3] = false;
        let f = PoseFrame {
            t: 1_233_333,
            joints,
            joint_valid,
            hands: [[-20.0, 0.0, 0.0], [20.0, 1.5, 0.0]],
            hand_valid: [true, false],
            objects: vec![ObjectState { id: Arc::from("coin"), position: [1.0, 2.0, 3.0], held_by: Holder::Right, valid: true }],
        };
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"right_elbow_flexion\":95.5"));
        let back: PoseFrame = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }
}
