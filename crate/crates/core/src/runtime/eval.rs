use std::collections::HashMap;

use super::frame::{Micros, PoseFrame};
use super::RuntimeError;
use crate::dsl::{Atom, Predicate, Program, SceneKind};
use crate::vocab;

/// Total joint travel, in degrees, below which a joint counts as at rest.
pub const REST_TRAVEL_DEG: f64 = 2.0;

/// Static target positions taken from a program's scene.
#[derive(Debug, Clone, Default)]
pub struct Scene {
    targets: HashMap<String, [f64; 3]>,
}

impl Scene {
    pub fn of(p: &Program) -> Scene {
        let targets = p
            .scene
            .iter()
            .filter(|d| d.kind == SceneKind::Target)
            .filter_map(|d| d.position.map(|pos| (d.id.clone(), pos)))
            .collect();
        Scene { targets }
    }

    pub fn target(&self, id: &str) -> Result<[f64; 3], RuntimeError> {
        self.targets.get(id).copied().ok_or_else(|| RuntimeError::UnplacedTarget { target: id.to_string() })
    }
}

/// Frames visible to one monitor. `prior` is the last frame at or before
/// `opened_at`; `frames` are the later ones, oldest first, none after `now`.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub opened_at: Micros,
    pub prior: Option<&'a PoseFrame>,
    pub frames: &'a [PoseFrame],
}

impl<'a> Window<'a> {
    fn iter(&self) -> impl DoubleEndedIterator<Item = &'a PoseFrame> + 'a {
        self.prior.into_iter().chain(self.frames.iter())
    }
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Truth of an instantaneous atom in one frame; `None` when its channel is
/// not valid there. Temporal atoms (grasp, release, rest) are rejected.
pub fn atom_in_frame(a: &Atom, f: &PoseFrame, scene: &Scene) -> Result<Option<bool>, RuntimeError> {
    match a {
        Atom::JointAngle { joint, min_deg, max_deg } => {
            let i = joint_idx(joint)?;
            Ok(f.joint_valid[i].then(|| f.joints[i] >= *min_deg && f.joints[i] <= *max_deg))
        }
        Atom::HandAt { target, radius_cm } => {
            let t = scene.target(target)?;
            let mut seen = false;
            for side in 0..2 {
                if f.hand_valid[side] {
                    seen = true;
                    if distance(f.hands[side], t) <= *radius_cm {
                        return Ok(Some(true));
                    }
                }
            }
            Ok(seen.then_some(false))
        }
        Atom::ObjectAt { object, target, radius_cm } => {
            let t = scene.target(target)?;
            let o = f.object(object).ok_or_else(|| missing(object))?;
            Ok(o.valid.then(|| distance(o.position, t) <= *radius_cm))
        }
        Atom::Grasp { .. } | Atom::Release { .. } | Atom::Rest { .. } => {
            unreachable!("temporal atom evaluated per frame")
        }
    }
}

fn joint_idx(joint: &str) -> Result<usize, RuntimeError> {
    vocab::joint_index(joint).ok_or_else(|| missing(joint))
}

fn missing(channel: &str) -> RuntimeError {
    RuntimeError::ChannelMissing { channel: channel.to_string() }
}

fn is_temporal(a: &Atom) -> bool {
    matches!(a, Atom::Grasp { .. } | Atom::Release { .. } | Atom::Rest { .. })
}

/// Observed `held_by` state of an object in each frame where it is valid.
fn held_series<'a>(w: &Window<'a>, object: &str, now: Micros) -> Result<Vec<(Micros, bool)>, RuntimeError> {
    let mut out = Vec::new();
    for f in w.iter().filter(|f| f.t <= now) {
        let o = f.object(object).ok_or_else(|| missing(object))?;
        if o.valid {
            out.push((f.t, o.held_by.is_held()));
        }
    }
    Ok(out)
}

fn rest_at(w: &Window, joint: &str, seconds: f64, now: Micros) -> Result<bool, RuntimeError> {
    let i = joint_idx(joint)?;
    let start = now - super::frame::from_secs(seconds);
    if start < w.opened_at {
        return Ok(false);
    }
    let valid: Vec<&PoseFrame> = w.iter().filter(|f| f.t <= now && f.joint_valid[i]).collect();
    let Some(anchor) = valid.iter().rposition(|f| f.t <= start) else { return Ok(false) };
    let travel: f64 = valid[anchor..].windows(2).map(|p| (p[1].joints[i] - p[0].joints[i]).abs()).sum();
    Ok(travel < REST_TRAVEL_DEG)
}

/// Atom truth at instant `now`.
pub fn eval_atom(a: &Atom, w: &Window, now: Micros, scene: &Scene) -> Result<bool, RuntimeError> {
    match a {
        Atom::Grasp { object } | Atom::Release { object } => {
            let want_held = matches!(a, Atom::Grasp { .. });
            let s = held_series(w, object, now)?;
            Ok(s.windows(2).any(|p| p[0].1 != want_held && p[1].1 == want_held))
        }
        Atom::Rest { joint, seconds } => rest_at(w, joint, *seconds, now),
        _ => {
            for f in w.iter().rev().filter(|f| f.t <= now) {
                if let Some(v) = atom_in_frame(a, f, scene)? {
                    return Ok(v);
                }
            }
            Ok(false)
        }
    }
}

/// Atom truth sampled at each frame where it is observable, up to `now`.
fn series(a: &Atom, w: &Window, now: Micros, scene: &Scene) -> Result<Vec<(Micros, bool)>, RuntimeError> {
    if !is_temporal(a) {
        let mut out = Vec::new();
        for f in w.iter().filter(|f| f.t <= now) {
            if let Some(v) = atom_in_frame(a, f, scene)? {
                out.push((f.t, v));
            }
        }
        return Ok(out);
    }
    let times: Vec<Micros> = w.iter().map(|f| f.t).filter(|&t| t <= now).collect();
    times.into_iter().map(|t| eval_atom(a, w, t, scene).map(|v| (t, v))).collect()
}

fn count_at(a: &Atom, n: u32, w: &Window, now: Micros, scene: &Scene) -> Result<bool, RuntimeError> {
    let edges = match a {
        Atom::Grasp { object } | Atom::Release { object } => {
            let want_held = matches!(a, Atom::Grasp { .. });
            held_series(w, object, now)?
                .windows(2)
                .filter(|p| p[0].1 != want_held && p[1].1 == want_held)
                .count()
        }
        _ => series(a, w, now, scene)?.windows(2).filter(|p| !p[0].1 && p[1].1).count(),
    };
    Ok(edges >= n as usize)
}

/// True iff the atom held at every observation in `[now - seconds, now]`,
/// taking the last observation at or before the interval start as the state
/// at that instant.
fn hold_at(a: &Atom, seconds: f64, w: &Window, now: Micros, scene: &Scene) -> Result<bool, RuntimeError> {
    let start = now - super::frame::from_secs(seconds);
    if start < w.opened_at {
        return Ok(false);
    }
    let s = series(a, w, now, scene)?;
    let Some(anchor) = s.iter().rposition(|&(t, _)| t <= start) else { return Ok(false) };
    Ok(s[anchor..].iter().all(|&(_, v)| v))
}

pub fn eval_predicate(p: &Predicate, w: &Window, now: Micros, scene: &Scene) -> Result<bool, RuntimeError> {
    match p {
        Predicate::Atom(a) => eval_atom(a, w, now, scene),
        Predicate::All(ps) => {
            for c in ps {
                if !eval_predicate(c, w, now, scene)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Predicate::Any(ps) => {
            for c in ps {
                if eval_predicate(c, w, now, scene)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Predicate::Hold { atom, seconds } => hold_at(atom, *seconds, w, now, scene),
        Predicate::Count { atom, n } => count_at(atom, *n, w, now, scene),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::frame::{Holder, ObjectState, N_JOINTS, MICROS_PER_S};
    use std::sync::Arc;

    fn frame(t: f64) -> PoseFrame {
        PoseFrame {
            t: super::super::frame::from_secs(t),
            joints: [10.0; N_JOINTS],
            joint_valid: [true; N_JOINTS],
            hands: [[-30.0, 0.0, 0.0], [30.0, 0.0, 0.0]],
            hand_valid: [true, true],
            objects: vec![ObjectState { id: Arc::from("blue_cube"), position: [0.0; 3], held_by: Holder::None, valid: true }],
        }
    }

    fn scene() -> Scene {
        let p = crate::dsl::parse_program("program \"s\"\nscene target bowl at (0, 40, 0)\nstep 1: say \"x\"\n").unwrap();
        Scene::of(&p)
    }

    fn atom(src: &str) -> Predicate {
        let p = crate::dsl::parse_program(&format!(
            "program \"s\"\nscene target bowl at (0, 40, 0)\nscene object blue_cube\nscene joint right_elbow_flexion\nstep 1: say \"x\" expect within 20s: {src}\n"
        ))
        .unwrap();
        p.steps[0].expect.clone().unwrap().pred
    }

    #[test]
    fn count_grasp_release_grasp() {
        let held = [false, true, false, true];
        let frames: Vec<PoseFrame> = held
            .iter()
            .enumerate()
            .map(|(i, &h)| {
                let mut f = frame(i as f64 + 1.0);
                f.objects[0].held_by = if h { Holder::Right } else { Holder::None };
                f
            })
            .collect();
        let w = Window { opened_at: 0, prior: None, frames: &frames };
        let now = 5 * MICROS_PER_S;
        assert!(eval_predicate(&atom("count(grasp(blue_cube), 2)"), &w, now, &scene()).unwrap());
        assert!(!eval_predicate(&atom("count(grasp(blue_cube), 3)"), &w, now, &scene()).unwrap());
        assert!(eval_predicate(&atom("release(blue_cube)"), &w, now, &scene()).unwrap());
    }

    #[test]
    fn dropout_does_not_fabricate_release() {
        let mut frames = vec![frame(1.0), frame(2.0), frame(3.0)];
        for f in &mut frames {
            f.objects[0].held_by = Holder::Right;
        }
        frames[1].objects[0].held_by = Holder::None;
        frames[1].objects[0].valid = false;
        let w = Window { opened_at: 0, prior: None, frames: &frames };
        assert!(!eval_predicate(&atom("release(blue_cube)"), &w, 3 * MICROS_PER_S, &scene()).unwrap());
    }

    #[test]
    fn latest_valid_frame_is_used() {
        let mut a = frame(1.0);
        a.joints[2] = 90.0;
        let mut b = frame(2.0);
        b.joints[2] = 10.0;
        b.joint_valid[2] = false;
        let frames = [a, b];
        let w = Window { opened_at: 0, prior: None, frames: &frames };
        assert!(eval_predicate(&atom("joint_angle(right_elbow_flexion, 80, 100)"), &w, 2 * MICROS_PER_S, &scene()).unwrap());
    }

    #[test]
    fn hold_requires_full_interval_after_opening() {
        let frames: Vec<PoseFrame> = (1..=40)
            .map(|k| {
                let mut f = frame(k as f64 * 0.1);
                f.hands[1] = [0.0, 40.0, 0.0];
                f
            })
            .collect();
        let w = Window { opened_at: 0, prior: None, frames: &frames };
        let p = atom("hold(hand_at(bowl, 5), 3s)");
        assert!(!eval_predicate(&p, &w, 3_000_000, &scene()).unwrap());
        assert!(eval_predicate(&p, &w, 3_100_000, &scene()).unwrap());
    }

    #[test]
    fn rest_measures_travel() {
        let frames: Vec<PoseFrame> = (0..=30)
            .map(|k| {
                let mut f = frame(k as f64 * 0.1);
                f.joints[2] = if k < 5 { 60.0 + k as f64 * 4.0 } else { 100.0 };
                f
            })
            .collect();
        let w = Window { opened_at: 0, prior: None, frames: &frames };
        let p = atom("rest(right_elbow_flexion, 2s)");
        assert!(!eval_predicate(&p, &w, 2_400_000, &scene()).unwrap());
        assert!(eval_predicate(&p, &w, 2_500_000, &scene()).unwrap());
    }

    #[test]
    fn missing_object_channel() {
        let frames = [frame(1.0)];
        let w = Window { opened_at: 0, prior: None, frames: &frames };
        let p = crate::dsl::Predicate::Atom(Atom::Grasp { object: "coin".into() });
        assert!(matches!(eval_predicate(&p, &w, MICROS_PER_S, &scene()), Err(RuntimeError::ChannelMissing { .. })));
    }
}
