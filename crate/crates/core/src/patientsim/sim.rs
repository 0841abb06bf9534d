use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Behavior, BehaviorScript, NoiseModel, PatientProfile, SimError};
use crate::dsl::{Atom, Predicate, Program, SceneKind};
use crate::runtime::eval::{distance, REST_TRAVEL_DEG};
use crate::runtime::{
    from_secs, to_secs, Cue, FrameSource, Holder, Micros, ObjectState, Phase, PoseFrame, Scene, StepTruth,
    MICROS_PER_S, N_JOINTS,
};
use crate::vocab::{self, JOINTS};

/// How long a reached pose is kept before the patient relaxes back.
pub const DWELL_S: f64 = 1.0;
/// Stopping distance short of a target, as a multiple of its radius.
pub const NEAR_RADIUS_FACTOR: f64 = 1.25;
/// Stopping distance outside an angle band.
pub const NEAR_ANGLE_DEG: f64 = 5.0;
pub const HAND_SPEED_CM_S: f64 = 25.0;
pub const JOINT_SPEED_DEG_S: f64 = 45.0;
pub const FIDGET_AMPLITUDE_DEG: f64 = 8.0;
pub const FIDGET_SPEED_DEG_S: f64 = 30.0;
/// Offset between the last fidgeting sample and the settled angle.
pub const SETTLE_DEG: f64 = 5.0;
/// Displacement a suppressed rest observation adds.
pub const JITTER_DEG: f64 = 3.0;

const HAND_HOME: [[f64; 3]; 2] = [[-20.0, 10.0, 0.0], [20.0, 10.0, 0.0]];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Chan {
    Joint(usize),
    Hand(usize),
    Obj(usize),
    Held(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Val {
    S(f64),
    V([f64; 3]),
    H(Holder),
}

impl Val {
    fn s(self) -> f64 {
        match self {
            Val::S(x) => x,
            _ => unreachable!("scalar track"),
        }
    }

    fn v(self) -> [f64; 3] {
        match self {
            Val::V(x) => x,
            _ => unreachable!("vector track"),
        }
    }

    fn h(self) -> Holder {
        match self {
            Val::H(x) => x,
            _ => unreachable!("holder track"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Key {
    Jump(Micros, Val),
    /// Smooth move from the previous key's value, arriving at this time.
    Ease(Micros, Val),
    /// Triangle wave around `center`, from this time on.
    Fidget { t: Micros, center: f64, amp: f64, speed: f64 },
}

impl Key {
    fn t(&self) -> Micros {
        match *self {
            Key::Jump(t, _) | Key::Ease(t, _) | Key::Fidget { t, .. } => t,
        }
    }
}

fn triangle(center: f64, amp: f64, speed: f64, dt: Micros) -> f64 {
    let p = speed * to_secs(dt) % (4.0 * amp);
    let off = if p < amp {
        p
    } else if p < 3.0 * amp {
        2.0 * amp - p
    } else {
        p - 4.0 * amp
    };
    center + off
}

fn smoothstep(x: f64) -> f64 {
    x * x * (3.0 - 2.0 * x)
}

#[derive(Debug, Clone)]
struct Track {
    keys: Vec<Key>,
}

impl Track {
    fn new(v: Val) -> Self {
        Track { keys: vec![Key::Jump(0, v)] }
    }

    fn key_value(&self, i: usize, t: Micros) -> Val {
        match self.keys[i] {
            Key::Jump(_, v) | Key::Ease(_, v) => v,
            Key::Fidget { t: t0, center, amp, speed } => Val::S(triangle(center, amp, speed, t - t0)),
        }
    }

    fn at(&self, t: Micros) -> Val {
        let i = self.keys.iter().rposition(|k| k.t() <= t).unwrap_or(0);
        let base = self.key_value(i, t);
        if let Some(&Key::Ease(t1, to)) = self.keys.get(i + 1) {
            let t0 = self.keys[i].t();
            if t < t1 && t1 > t0 {
                let from = self.key_value(i, t0);
                let x = smoothstep((t - t0) as f64 / (t1 - t0) as f64);
                return match (from, to) {
                    (Val::S(a), Val::S(b)) => Val::S(a + (b - a) * x),
                    (Val::V(a), Val::V(b)) => Val::V([0, 1, 2].map(|k| a[k] + (b[k] - a[k]) * x)),
                    _ => base,
                };
            }
        }
        base
    }

    /// Drop plans after `t`, holding the value reached at `t`.
    fn cut(&mut self, t: Micros) {
        let v = self.at(t);
        self.keys.retain(|k| k.t() <= t);
        self.keys.push(Key::Jump(t, v));
    }

    fn push(&mut self, k: Key) {
        self.keys.push(k);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Act {
    Quiet,
    FalsePositive,
    FalseNegative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum GoalKind {
    Pose,
    Rest,
}

/// One atom the patient is working on, with what noise writes over it.
#[derive(Debug, Clone)]
struct Goal {
    chan: Chan,
    kind: GoalKind,
    sat_val: Val,
    near_val: Val,
    /// Half-open intervals where the noise-free observation satisfies it.
    sat: Vec<(Micros, Micros)>,
}

impl Goal {
    fn satisfied(&self, t: Micros) -> bool {
        self.sat.iter().any(|&(a, b)| a <= t && t < b)
    }
}

#[derive(Debug, Clone)]
struct Active {
    at: Micros,
    goals: Vec<Goal>,
    slot: i64,
    acts: Vec<Act>,
}

/// Reactive frame source: plans movement for each announced step from the
/// program it was built with and its behavior script.
#[derive(Debug, Clone)]
pub struct SimulatedPatient {
    program: Program,
    scene: Scene,
    profile: PatientProfile,
    rom: [(f64, f64); N_JOINTS],
    script: BehaviorScript,
    noise: NoiseModel,
    hz: i64,
    next_k: i64,
    objects: Vec<Arc<str>>,
    tracks: Vec<Track>,
    active: Option<Active>,
    truth: Vec<StepTruth>,
    noise_rng: ChaCha8Rng,
    drop_rng: ChaCha8Rng,
}

struct Plan {
    goals: Vec<Goal>,
    keys: Vec<(Chan, Key)>,
}

impl SimulatedPatient {
    pub fn new(
        program: &Program,
        profile: &PatientProfile,
        script: &BehaviorScript,
        noise: &NoiseModel,
        hz: u32,
    ) -> Result<Self, SimError> {
        profile.validate()?;
        script.validate()?;
        noise.validate()?;
        if !(1..=60).contains(&hz) {
            return Err(SimError::BadRate(hz));
        }
        let objects: Vec<Arc<str>> = program
            .scene
            .iter()
            .filter(|d| d.kind == SceneKind::Object)
            .map(|d| Arc::from(d.id.as_str()))
            .collect();
        let rom = profile.rom_table();
        let mut tracks = Vec::new();
        for (i, j) in JOINTS.iter().enumerate() {
            tracks.push(Track::new(Val::S(vocab::neutral_angle(j).clamp(rom[i].0, rom[i].1))));
        }
        for h in HAND_HOME {
            tracks.push(Track::new(Val::V(h)));
        }
        for (i, id) in objects.iter().enumerate() {
            let pos = program
                .decl(id)
                .and_then(|d| d.position)
                .unwrap_or([-30.0 + 20.0 * (i % 4) as f64, 20.0, 0.0]);
            tracks.push(Track::new(Val::V(pos)));
            tracks.push(Track::new(Val::H(Holder::None)));
        }
        let mut noise_rng = ChaCha8Rng::seed_from_u64(noise.seed);
        noise_rng.set_stream(1);
        let mut drop_rng = ChaCha8Rng::seed_from_u64(noise.seed);
        drop_rng.set_stream(2);
        let sim = SimulatedPatient {
            program: program.clone(),
            scene: Scene::of(program),
            profile: profile.clone(),
            rom,
            script: script.clone(),
            noise: noise.clone(),
            hz: hz as i64,
            next_k: 0,
            objects,
            tracks,
            active: None,
            truth: Vec::new(),
            noise_rng,
            drop_rng,
        };
        sim.check_feasible()?;
        Ok(sim)
    }

    /// True completion time of every step announced so far.
    pub fn truth(&self) -> &[StepTruth] {
        &self.truth
    }

    pub fn frame_hz(&self) -> u32 {
        self.hz as u32
    }

    fn frame_time(&self, k: i64) -> Micros {
        k * MICROS_PER_S / self.hz
    }

    /// Earliest frame time at or after `x`.
    fn grid_ceil(&self, x: Micros) -> Micros {
        let k = (x.max(0) * self.hz + MICROS_PER_S - 1) / MICROS_PER_S;
        let mut t = self.frame_time(k);
        let mut k = k;
        while t < x {
            k += 1;
            t = self.frame_time(k);
        }
        t
    }

    fn period(&self) -> Micros {
        MICROS_PER_S / self.hz
    }

    fn track_index(&self, c: Chan) -> usize {
        match c {
            Chan::Joint(i) => i,
            Chan::Hand(s) => N_JOINTS + s,
            Chan::Obj(o) => N_JOINTS + 2 + 2 * o,
            Chan::Held(o) => N_JOINTS + 3 + 2 * o,
        }
    }

    fn value(&self, c: Chan, t: Micros) -> Val {
        self.tracks[self.track_index(c)].at(t)
    }

    fn object_index(&self, id: &str) -> Result<usize, String> {
        self.objects.iter().position(|o| &**o == id).ok_or_else(|| format!("object `{id}` is not in the scene"))
    }

    fn joint_index(&self, j: &str) -> Result<usize, String> {
        vocab::joint_index(j).ok_or_else(|| format!("unknown joint `{j}`"))
    }

    fn fidget_speed(&self) -> f64 {
        (FIDGET_SPEED_DEG_S * self.profile.movement_speed_scale).max(12.0)
    }

    fn check_feasible(&self) -> Result<(), SimError> {
        for step in &self.program.steps {
            let Some(exp) = &step.expect else { continue };
            let b = self.script.get(step.index).ok_or(SimError::ScriptMissing { step: step.index })?;
            self.check_pred(&exp.pred, b)
                .map_err(|reason| SimError::Infeasible { step: step.index, reason })?;
        }
        Ok(())
    }

    fn check_pred(&self, p: &Predicate, b: Behavior) -> Result<(), String> {
        match p {
            Predicate::Atom(a) => self.check_atom(a, b, 0.0, None),
            Predicate::Hold { atom, seconds } => self.check_atom(atom, b, *seconds, None),
            Predicate::Count { atom, n } => self.check_atom(atom, b, 0.0, Some(*n)),
            Predicate::All(ps) => ps.iter().try_for_each(|c| self.check_pred(c, b)),
            Predicate::Any(ps) => match b {
                Behavior::CompleteAt { .. } => ps.first().map_or(Ok(()), |c| self.check_pred(c, b)),
                _ => ps.iter().try_for_each(|c| self.check_pred(c, b)),
            },
        }
    }

    fn check_atom(&self, a: &Atom, b: Behavior, lead: f64, reps: Option<u32>) -> Result<(), String> {
        let frame_s = 1.0 / self.hz as f64;
        match a {
            Atom::JointAngle { joint, min_deg, max_deg } => {
                let (rlo, rhi) = self.rom[self.joint_index(joint)?];
                if b.completes() && (max_deg.min(rhi) < min_deg.max(rlo)) {
                    return Err(format!(
                        "band [{min_deg}, {max_deg}] of `{joint}` lies outside its range of motion [{rlo}, {rhi}]"
                    ));
                }
                if min_deg - NEAR_ANGLE_DEG < rlo && max_deg + NEAR_ANGLE_DEG > rhi {
                    return Err(format!("band [{min_deg}, {max_deg}] of `{joint}` leaves no reachable angle outside it"));
                }
            }
            Atom::HandAt { target, .. } => {
                self.scene.target(target).map_err(|e| e.to_string())?;
            }
            Atom::ObjectAt { object, target, .. } => {
                self.object_index(object)?;
                self.scene.target(target).map_err(|e| e.to_string())?;
            }
            Atom::Grasp { object } | Atom::Release { object } => {
                self.object_index(object)?;
            }
            Atom::Rest { joint, seconds } => {
                let (rlo, rhi) = self.rom[self.joint_index(joint)?];
                if rhi - rlo < 2.0 * SETTLE_DEG {
                    return Err(format!("range of `{joint}` is too narrow to tell motion from rest"));
                }
                if self.fidget_speed() * (seconds - 2.0 * frame_s) <= 2.0 * REST_TRAVEL_DEG {
                    return Err(format!("rest of {seconds} s is too short to tell apart from motion at {} Hz", self.hz));
                }
                if reps.is_some() {
                    return Err("counting rest periods is not supported".into());
                }
            }
        }
        if let Behavior::CompleteAt { offset_s } = b {
            let n = reps.unwrap_or(1).max(1) as f64;
            if offset_s < lead + (5.0 * n + 3.0) * frame_s {
                return Err(format!("offset {offset_s} s leaves no time to reach the goal"));
            }
        }
        Ok(())
    }

    fn plan_pred(&self, p: &Predicate, b: Behavior, at: Micros, plan: &mut Plan) -> Option<Micros> {
        match p {
            Predicate::Atom(a) => self.plan_atom(a, b, at, 0.0, None, plan),
            Predicate::Hold { atom, seconds } => self.plan_atom(atom, b, at, *seconds, None, plan),
            Predicate::Count { atom, n } => self.plan_atom(atom, b, at, 0.0, Some(*n), plan),
            Predicate::All(ps) => {
                let mut truth = Some(at);
                for c in ps {
                    let t = self.plan_pred(c, b, at, plan);
                    truth = truth.zip(t).map(|(x, y)| x.max(y));
                }
                truth
            }
            Predicate::Any(ps) => match b {
                Behavior::CompleteAt { .. } => ps.first().and_then(|c| self.plan_pred(c, b, at, plan)),
                _ => {
                    for c in ps {
                        self.plan_pred(c, b, at, plan);
                    }
                    None
                }
            },
        }
    }

    /// Current value, the satisfying value, a near miss, and whether the
    /// current value already satisfies the atom.
    fn pose_goal(&self, a: &Atom, at: Micros) -> (Chan, Val, Val, bool) {
        let side = self.profile.affected_side;
        match a {
            Atom::JointAngle { joint, min_deg, max_deg } => {
                let i = vocab::joint_index(joint).expect("checked");
                let (rlo, rhi) = self.rom[i];
                let x = self.value(Chan::Joint(i), at).s();
                let (lo, hi) = (min_deg.max(rlo), max_deg.min(rhi));
                let sat = if lo <= hi { (lo + hi) / 2.0 } else { ((min_deg + max_deg) / 2.0).clamp(rlo, rhi) };
                let below = (min_deg - NEAR_ANGLE_DEG >= rlo).then_some(min_deg - NEAR_ANGLE_DEG);
                let above = (max_deg + NEAR_ANGLE_DEG <= rhi).then_some(max_deg + NEAR_ANGLE_DEG);
                let near = if x < (min_deg + max_deg) / 2.0 { below.or(above) } else { above.or(below) };
                let near = near.expect("checked");
                (Chan::Joint(i), Val::S(sat), Val::S(near), x >= *min_deg && x <= *max_deg)
            }
            Atom::HandAt { target, radius_cm } => {
                let c = Chan::Hand(side.index());
                let tp = self.scene.target(target).expect("checked");
                let h = self.value(c, at).v();
                (c, Val::V(tp), Val::V(near_point(tp, h, *radius_cm)), distance(h, tp) <= *radius_cm)
            }
            Atom::ObjectAt { object, target, radius_cm } => {
                let c = Chan::Obj(self.object_index(object).expect("checked"));
                let tp = self.scene.target(target).expect("checked");
                let o = self.value(c, at).v();
                (c, Val::V(tp), Val::V(near_point(tp, o, *radius_cm)), distance(o, tp) <= *radius_cm)
            }
            Atom::Grasp { object } | Atom::Release { object } => {
                let c = Chan::Held(self.object_index(object).expect("checked"));
                let held = self.value(c, at).h().is_held();
                let hand = Val::H(Holder::from(side));
                let free = Val::H(Holder::None);
                if matches!(a, Atom::Grasp { .. }) {
                    (c, hand, free, held)
                } else {
                    (c, free, hand, !held)
                }
            }
            Atom::Rest { .. } => unreachable!("rest is planned separately"),
        }
    }

    fn move_time(&self, from: Val, to: Val) -> Micros {
        let scale = self.profile.movement_speed_scale;
        let secs = match (from, to) {
            (Val::S(a), Val::S(b)) => (a - b).abs() / (JOINT_SPEED_DEG_S * scale),
            (Val::V(a), Val::V(b)) => distance(a, b) / (HAND_SPEED_CM_S * scale),
            _ => 0.0,
        };
        from_secs(secs)
    }

    fn plan_atom(&self, a: &Atom, b: Behavior, at: Micros, lead: f64, reps: Option<u32>, plan: &mut Plan) -> Option<Micros> {
        if let Atom::Rest { joint, seconds } = a {
            return self.plan_rest(joint, seconds + lead, b, at, plan);
        }
        let fp = self.period();
        let f1 = self.grid_ceil(at + 1);
        let dwell = from_secs(DWELL_S);
        let (chan, sat_val, near_val, satisfied) = self.pose_goal(a, at);
        let mut goal = Goal { chan, kind: GoalKind::Pose, sat_val, near_val, sat: Vec::new() };
        let mut start = at;
        let mut from = self.value(chan, at);
        if satisfied {
            plan.keys.push((chan, Key::Jump(f1, near_val)));
            start = f1;
            from = near_val;
        }
        let easeable = !matches!(near_val, Val::H(_));
        let travel = self.move_time(from, near_val);
        let truth = match b {
            Behavior::CompleteAt { offset_s } => {
                let target = at + from_secs(offset_s);
                let firsts: Vec<Micros>;
                let truth;
                match reps {
                    Some(n) if n >= 1 => {
                        let n = n as i64;
                        let span = (target - f1 - fp).max(0);
                        let p = (span / n).min(MICROS_PER_S);
                        let half = (p / 2).max(fp);
                        let times: Vec<Micros> = (1..=n).map(|j| self.grid_ceil(target - (n - j) * p)).collect();
                        for (j, &r) in times.iter().enumerate() {
                            let end = if j + 1 == times.len() { r + dwell } else { self.grid_ceil(r + half) };
                            plan.keys.push((chan, Key::Jump(r, sat_val)));
                            plan.keys.push((chan, Key::Jump(end, near_val)));
                            goal.sat.push((r, end));
                        }
                        firsts = times.clone();
                        truth = *times.last().expect("n >= 1");
                    }
                    _ => {
                        let e = self.grid_ceil(target - from_secs(lead));
                        truth = e + from_secs(lead);
                        plan.keys.push((chan, Key::Jump(e, sat_val)));
                        plan.keys.push((chan, Key::Jump(truth + dwell, near_val)));
                        goal.sat.push((e, truth + dwell));
                        firsts = vec![e];
                    }
                }
                if easeable {
                    let arrive = (start + travel.max(fp)).min(firsts[0] - fp).max(start);
                    plan.keys.push((chan, Key::Ease(arrive, near_val)));
                }
                Some(truth)
            }
            Behavior::PartialAttempt { .. } => {
                if easeable {
                    plan.keys.push((chan, Key::Ease(start + travel.max(fp), near_val)));
                }
                None
            }
            Behavior::NoAttempt => None,
        };
        plan.goals.push(goal);
        truth
    }

    fn plan_rest(&self, joint: &str, seconds: f64, b: Behavior, at: Micros, plan: &mut Plan) -> Option<Micros> {
        let i = vocab::joint_index(joint).expect("checked");
        let chan = Chan::Joint(i);
        let (rlo, rhi) = self.rom[i];
        let amp = FIDGET_AMPLITUDE_DEG.min((rhi - rlo) / 2.0 - 0.5);
        let x = self.value(chan, at).s();
        let center = x.clamp(rlo + amp, rhi - amp);
        let speed = self.fidget_speed();
        let fidget = |t| Key::Fidget { t, center, amp, speed };
        plan.keys.push((chan, fidget(at)));
        let mut goal = Goal { chan, kind: GoalKind::Rest, sat_val: Val::S(center), near_val: Val::S(center), sat: Vec::new() };
        let truth = match b {
            Behavior::CompleteAt { offset_s } => {
                let e = self.grid_ceil(at + from_secs(offset_s - seconds));
                let truth = e + from_secs(seconds);
                let last = triangle(center, amp, speed, e - self.period() - at);
                let still = if last + SETTLE_DEG <= rhi { last + SETTLE_DEG } else { last - SETTLE_DEG };
                let resume = truth + from_secs(DWELL_S);
                plan.keys.push((chan, Key::Jump(e, Val::S(still))));
                plan.keys.push((chan, Key::Fidget { t: resume, center, amp, speed }));
                goal.sat.push((truth, resume));
                Some(truth)
            }
            _ => None,
        };
        plan.goals.push(goal);
        truth
    }

    fn announce(&mut self, cue: &Cue) {
        if cue.phase == Phase::Fallback {
            return;
        }
        let at = cue.at;
        for t in &mut self.tracks {
            t.cut(at);
        }
        self.active = None;
        let Some(step) = self.program.steps.iter().find(|s| s.index == cue.step) else { return };
        let Some(exp) = &step.expect else { return };
        let Some(b) = self.script.get(step.index) else { return };
        let mut plan = Plan { goals: Vec::new(), keys: Vec::new() };
        let truth = self.plan_pred(&exp.pred.clone(), b, at, &mut plan);
        let mut keys = plan.keys;
        keys.sort_by_key(|(_, k)| k.t());
        for (c, k) in keys {
            let ti = self.track_index(c);
            self.tracks[ti].push(k);
        }
        for t in &mut self.tracks {
            t.keys.sort_by_key(Key::t);
        }
        self.truth.push(StepTruth { step: step.index, completed_at: truth.map(to_secs) });
        let n = plan.goals.len();
        self.active = Some(Active { at, goals: plan.goals, slot: 0, acts: vec![Act::Quiet; n] });
    }

    fn poll_time(&self, at: Micros, j: i64) -> Micros {
        at + j * MICROS_PER_S / self.noise.poll_hz as i64
    }

    fn render(&mut self, t: Micros) -> PoseFrame {
        let mut joints = [0.0; N_JOINTS];
        for (i, j) in joints.iter_mut().enumerate() {
            *j = self.tracks[i].at(t).s();
        }
        let hands = [self.value(Chan::Hand(0), t).v(), self.value(Chan::Hand(1), t).v()];
        let objects: Vec<ObjectState> = self
            .objects
            .iter()
            .enumerate()
            .map(|(o, id)| ObjectState {
                id: id.clone(),
                position: self.value(Chan::Obj(o), t).v(),
                held_by: self.value(Chan::Held(o), t).h(),
                valid: true,
            })
            .collect();
        let mut f = PoseFrame { t, joints, joint_valid: [true; N_JOINTS], hands, hand_valid: [true; 2], objects };
        self.apply_noise(&mut f);
        for (i, j) in f.joints.iter_mut().enumerate() {
            *j = j.clamp(self.rom[i].0, self.rom[i].1);
        }
        if self.noise.dropout_rate > 0.0 {
            let d = self.noise.dropout_rate;
            for v in f.joint_valid.iter_mut().chain(f.hand_valid.iter_mut()) {
                *v = self.drop_rng.random::<f64>() >= d;
            }
            for o in &mut f.objects {
                o.valid = self.drop_rng.random::<f64>() >= d;
            }
        }
        f
    }

    fn apply_noise(&mut self, f: &mut PoseFrame) {
        if self.noise.fp_rate == 0.0 && self.noise.fn_rate == 0.0 {
            return;
        }
        let Some(act) = self.active.take() else { return };
        let mut act = act;
        let t = f.t;
        if t > act.at {
            let ph = self.noise.poll_hz as i64;
            let j = ((t - act.at) * ph + MICROS_PER_S - 1) / MICROS_PER_S;
            if j != act.slot {
                let end = self.poll_time(act.at, j);
                let k = ((end + 1) * self.hz + MICROS_PER_S - 1) / MICROS_PER_S - 1;
                let last = self.frame_time(k);
                for (g, a) in act.goals.iter().zip(act.acts.iter_mut()) {
                    let u: f64 = self.noise_rng.random();
                    *a = if g.satisfied(last) {
                        if u < self.noise.fn_rate { Act::FalseNegative } else { Act::Quiet }
                    } else if u < self.noise.fp_rate {
                        Act::FalsePositive
                    } else {
                        Act::Quiet
                    };
                }
                act.slot = j;
            }
            let slot_start = self.poll_time(act.at, j - 1);
            for (g, a) in act.goals.iter().zip(act.acts.iter()) {
                let v = match (g.kind, a) {
                    (_, Act::Quiet) => continue,
                    (GoalKind::Pose, Act::FalsePositive) => g.sat_val,
                    (GoalKind::Pose, Act::FalseNegative) => g.near_val,
                    (GoalKind::Rest, Act::FalsePositive) => self.value(g.chan, slot_start),
                    (GoalKind::Rest, Act::FalseNegative) => {
                        let Chan::Joint(i) = g.chan else { unreachable!() };
                        let x = f.joints[i];
                        Val::S(if x + JITTER_DEG <= self.rom[i].1 { x + JITTER_DEG } else { x - JITTER_DEG })
                    }
                };
                write(f, g.chan, v);
            }
        }
        self.active = Some(act);
    }
}

fn write(f: &mut PoseFrame, c: Chan, v: Val) {
    match c {
        Chan::Joint(i) => f.joints[i] = v.s(),
        Chan::Hand(s) => f.hands[s] = v.v(),
        Chan::Obj(o) => f.objects[o].position = v.v(),
        Chan::Held(o) => f.objects[o].held_by = v.h(),
    }
}

/// Point `factor * radius` from `target`, on the side facing `from`.
fn near_point(target: [f64; 3], from: [f64; 3], radius: f64) -> [f64; 3] {
    let d = [from[0] - target[0], from[1] - target[1], from[2] - target[2]];
    let len = distance(from, target);
    let dir = if len < 1e-9 { [0.0, -1.0, 0.0] } else { d.map(|x| x / len) };
    [0, 1, 2].map(|k| target[k] + dir[k] * radius * NEAR_RADIUS_FACTOR)
}

impl FrameSource for SimulatedPatient {
    fn peek_time(&self) -> Option<Micros> {
        Some(self.frame_time(self.next_k))
    }

    fn next_frame(&mut self) -> Option<PoseFrame> {
        let t = self.frame_time(self.next_k);
        self.next_k += 1;
        Some(self.render(t))
    }

    fn on_announce(&mut self, cue: &Cue) {
        self.announce(cue);
    }
}

/// Wraps a source and keeps every frame it hands out.
#[derive(Debug, Clone)]
pub struct Recorder<S> {
    pub inner: S,
    pub frames: Vec<PoseFrame>,
}

impl<S: FrameSource> Recorder<S> {
    pub fn new(inner: S) -> Self {
        Recorder { inner, frames: Vec::new() }
    }
}

impl<S: FrameSource> FrameSource for Recorder<S> {
    fn peek_time(&self) -> Option<Micros> {
        self.inner.peek_time()
    }

    fn next_frame(&mut self) -> Option<PoseFrame> {
        let f = self.inner.next_frame()?;
        self.frames.push(f.clone());
        Some(f)
    }

    fn on_announce(&mut self, cue: &Cue) {
        self.inner.on_announce(cue);
    }
}
