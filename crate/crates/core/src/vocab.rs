//! Canonical channel names and the defaults shared by the generator, the
//! simulator and the hallucination check.

/// Joint channels carried by every pose frame. Angles are degrees.
pub const JOINTS: [&str; 14] = [
    "right_shoulder_abduction",
    "right_shoulder_flexion",
    "right_elbow_flexion",
    "right_forearm_rotation",
    "right_wrist_flexion",
    "right_finger_spread",
    "right_thumb_opposition",
    "left_shoulder_abduction",
    "left_shoulder_flexion",
    "left_elbow_flexion",
    "left_forearm_rotation",
    "left_wrist_flexion",
    "left_finger_spread",
    "left_thumb_opposition",
];

/// Household objects the worksheets use.
pub const OBJECTS: [&str; 16] = [
    "scoop",
    "apple",
    "lemon",
    "banana",
    "spoon",
    "chopsticks",
    "fork",
    "wallet",
    "coin",
    "orange_cube",
    "blue_cube",
    "green_cube",
    "tongs",
    "yellow_bead",
    "red_bead",
    "blue_bead",
];

/// Fixed locations a hand or object can be brought to.
pub const TARGETS: [&str; 7] = [
    "pink_postit",
    "blue_postit",
    "yellow_postit",
    "table",
    "bowl",
    "container",
    "towel",
];

pub const DEFAULT_RADIUS_CM: f64 = 5.0;
pub const DEFAULT_REST_S: f64 = 2.0;
pub const DEFAULT_TIMEOUT_S: f64 = 20.0;

pub fn is_joint(id: &str) -> bool {
    JOINTS.contains(&id)
}

pub fn joint_index(id: &str) -> Option<usize> {
    JOINTS.iter().position(|j| *j == id)
}

pub fn is_object(id: &str) -> bool {
    OBJECTS.contains(&id)
}

pub fn is_target(id: &str) -> bool {
    TARGETS.contains(&id)
}

/// Band used when a prescription names a joint without giving angles.
pub fn default_band(joint: &str) -> (f64, f64) {
    let base = joint
        .strip_prefix("right_")
        .or_else(|| joint.strip_prefix("left_"))
        .unwrap_or(joint);
    match base {
        "shoulder_abduction" | "shoulder_flexion" => (30.0, 90.0),
        "elbow_flexion" => (80.0, 100.0),
        "forearm_rotation" => (150.0, 180.0),
        "wrist_flexion" => (20.0, 60.0),
        "finger_spread" => (20.0, 40.0),
        "thumb_opposition" => (60.0, 90.0),
        _ => (30.0, 90.0),
    }
}

/// Resting angle of a joint for the simulated patient.
pub fn neutral_angle(joint: &str) -> f64 {
    let base = joint
        .strip_prefix("right_")
        .or_else(|| joint.strip_prefix("left_"))
        .unwrap_or(joint);
    match base {
        "shoulder_abduction" | "shoulder_flexion" => 10.0,
        "elbow_flexion" => 110.0,
        "forearm_rotation" => 90.0,
        "wrist_flexion" => 10.0,
        "finger_spread" => 12.0,
        "thumb_opposition" => 10.0,
        _ => 10.0,
    }
}

/// Anatomical range used when a profile does not restrict a joint.
pub fn full_range(joint: &str) -> (f64, f64) {
    let base = joint
        .strip_prefix("right_")
        .or_else(|| joint.strip_prefix("left_"))
        .unwrap_or(joint);
    match base {
        "shoulder_abduction" | "shoulder_flexion" => (0.0, 180.0),
        "elbow_flexion" => (0.0, 150.0),
        "forearm_rotation" => (0.0, 180.0),
        "wrist_flexion" => (0.0, 90.0),
        "finger_spread" => (0.0, 45.0),
        "thumb_opposition" => (0.0, 90.0),
        _ => (0.0, 180.0),
    }
}
