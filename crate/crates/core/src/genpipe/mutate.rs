use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::fidelity::{normalize, similarity, SUBSTITUTION_SIMILARITY};
use super::prescription::Prescription;
use crate::dsl::{Atom, Predicate, Program, SceneDecl, SceneKind};
use crate::vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationKind {
    Omit,
    Duplicate,
    Substitute,
    Reorder,
    HallucinateAtom,
}

impl MutationKind {
    pub const ALL: [MutationKind; 5] = [
        MutationKind::Omit,
        MutationKind::Duplicate,
        MutationKind::Substitute,
        MutationKind::Reorder,
        MutationKind::HallucinateAtom,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MutationKind::Omit => "omit",
            MutationKind::Duplicate => "duplicate",
            MutationKind::Substitute => "substitute",
            MutationKind::Reorder => "reorder",
            MutationKind::HallucinateAtom => "hallucinate-atom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MutationDetail {
    Omit,
    Duplicate { copy_at: u32 },
    Substitute { new_text: String },
    Reorder { moved_to: u32 },
    HallucinateAtom { joint: String },
}

/// Ground truth for one injected defect. Step numbers refer to the
/// original program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationLabel {
    pub program: String,
    pub kind: MutationKind,
    pub seed: u64,
    pub step: u32,
    pub text: String,
    pub detail: MutationDetail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mutation {
    pub program: Program,
    pub label: MutationLabel,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MutationError {
    #[error("cannot apply {kind} to program `{program}`: {reason}")]
    Impossible { kind: &'static str, program: String, reason: String },
}

pub fn mutate_program(p: &Program, kind: MutationKind, seed: u64) -> Result<Mutation, MutationError> {
    mutate_avoiding(p, kind, seed, &BTreeSet::new())
}

/// Like [`mutate_program`], but a hallucinated joint is also kept out of the
/// prescription's vocabulary so the detector can see it.
pub fn mutate_against(rx: &Prescription, p: &Program, kind: MutationKind, seed: u64) -> Result<Mutation, MutationError> {
    mutate_avoiding(p, kind, seed, &rx.vocabulary().joints)
}

fn mutate_avoiding(p: &Program, kind: MutationKind, seed: u64, avoid: &BTreeSet<String>) -> Result<Mutation, MutationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fail = |reason: &str| MutationError::Impossible {
        kind: kind.as_str(),
        program: p.name.clone(),
        reason: reason.to_string(),
    };
    let n = p.steps.len();
    let mut out = p.clone();
    let (step, detail) = match kind {
        MutationKind::Omit => {
            if n < 2 {
                return Err(fail("a program needs at least two steps to lose one"));
            }
            let k = rng.random_range(0..n);
            out.steps.remove(k);
            (k, MutationDetail::Omit)
        }
        MutationKind::Duplicate => {
            let k = rng.random_range(0..n);
            let copy = out.steps[k].clone();
            out.steps.insert(k + 1, copy);
            (k, MutationDetail::Duplicate { copy_at: k as u32 + 2 })
        }
        MutationKind::Reorder => {
            let texts: Vec<String> = p.steps.iter().map(|s| normalize(&s.say)).collect();
            let mut moves: Vec<(usize, usize)> = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    if a != b {
                        let mut t = texts.clone();
                        let x = t.remove(a);
                        t.insert(b, x);
                        if t != texts {
                            moves.push((a, b));
                        }
                    }
                }
            }
            let &(a, b) = moves.choose(&mut rng).ok_or_else(|| fail("no move changes the step order"))?;
            let s = out.steps.remove(a);
            out.steps.insert(b, s);
            (a, MutationDetail::Reorder { moved_to: b as u32 + 1 })
        }
        MutationKind::Substitute => {
            let texts: Vec<String> = p.steps.iter().map(|s| normalize(&s.say)).collect();
            let mut order: Vec<usize> = (0..n).collect();
            shuffle(&mut order, &mut rng);
            let mut found = None;
            'steps: for k in order {
                for _ in 0..32 {
                    let edits = rng.random_range(1..=2);
                    let Some(new) = perturb(&p.steps[k].say, edits, &mut rng) else { continue 'steps };
                    let nn = normalize(&new);
                    let sim = similarity(&texts[k], &nn);
                    if (SUBSTITUTION_SIMILARITY..1.0).contains(&sim) && !texts.iter().any(|t| *t == nn) {
                        found = Some((k, new));
                        break 'steps;
                    }
                }
            }
            let (k, new) = found.ok_or_else(|| fail("no step admits a small enough edit"))?;
            out.steps[k].say = new.clone();
            (k, MutationDetail::Substitute { new_text: new })
        }
        MutationKind::HallucinateAtom => {
            let monitored: Vec<usize> = (0..n).filter(|&i| p.steps[i].expect.is_some()).collect();
            let &k = monitored.choose(&mut rng).ok_or_else(|| fail("no monitored step"))?;
            let joints: Vec<&str> = vocab::JOINTS
                .iter()
                .copied()
                .filter(|j| p.decl(j).is_none() && !avoid.contains(*j))
                .collect();
            let joint = joints.choose(&mut rng).ok_or_else(|| fail("every joint is already in use"))?.to_string();
            let (lo, hi) = vocab::default_band(&joint);
            let e = out.steps[k].expect.as_mut().expect("monitored");
            let orig = std::mem::replace(&mut e.pred, Predicate::All(vec![]));
            e.pred = Predicate::All(vec![
                orig,
                Predicate::Atom(Atom::JointAngle { joint: joint.clone(), min_deg: lo, max_deg: hi }),
            ]);
            out.scene.push(SceneDecl { kind: SceneKind::Joint, id: joint.clone(), position: None });
            (k, MutationDetail::HallucinateAtom { joint })
        }
    };
    for (i, s) in out.steps.iter_mut().enumerate() {
        s.index = i as u32 + 1;
    }
    let label = MutationLabel {
        program: p.name.clone(),
        kind,
        seed,
        step: step as u32 + 1,
        text: p.steps[step].say.clone(),
        detail,
    };
    Ok(Mutation { program: out, label })
}

fn shuffle<T>(v: &mut [T], rng: &mut ChaCha8Rng) {
    use rand::seq::SliceRandom;
    v.shuffle(rng);
}

/// Replace `edits` distinct lowercase letters with other lowercase letters.
fn perturb(s: &str, edits: usize, rng: &mut ChaCha8Rng) -> Option<String> {
    let mut chars: Vec<char> = s.chars().collect();
    let letters: Vec<usize> = (0..chars.len()).filter(|&i| chars[i].is_ascii_lowercase()).collect();
    if letters.len() < edits {
        return None;
    }
    let picks: Vec<usize> = letters.choose_multiple(rng, edits).copied().collect();
    for i in picks {
        let old = chars[i];
        let mut c = old;
        while c == old {
            c = (b'a' + rng.random_range(0..26u8)) as char;
        }
        chars[i] = c;
    }
    Some(chars.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_program;

    fn one_step() -> Program {
        parse_program("program \"p\"\nstep 1: say \"Rest.\"\n").unwrap()
    }

    #[test]
    fn omit_needs_two_steps() {
        assert!(mutate_program(&one_step(), MutationKind::Omit, 1).is_err());
        assert!(mutate_program(&one_step(), MutationKind::Reorder, 1).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let p = parse_program("program \"p\"\nstep 1: say \"Sit down at the table.\"\nstep 2: say \"Lift your arm slowly.\"\nstep 3: say \"Rest your right hand.\"\n").unwrap();
        for kind in [MutationKind::Omit, MutationKind::Duplicate, MutationKind::Substitute, MutationKind::Reorder] {
            let a = mutate_program(&p, kind, 9).unwrap();
            let b = mutate_program(&p, kind, 9).unwrap();
            assert_eq!(a, b);
            assert!(crate::dsl::validate_semantics(&a.program).is_empty());
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in MutationKind::ALL {
            assert_eq!(MutationKind::parse(k.as_str()), Some(k));
        }
    }
}
