use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;

/// What the patient does after one announcement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Behavior {
    /// Satisfy the step's predicate exactly `offset_s` after the announcement.
    CompleteAt { offset_s: f64 },
    /// Move toward the goal and stop just short of it.
    PartialAttempt { fraction: f64 },
    NoAttempt,
}

impl Behavior {
    pub fn completes(&self) -> bool {
        matches!(self, Behavior::CompleteAt { .. })
    }
}

/// Behavior per monitored program step, keyed by step index.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BehaviorScript {
    pub steps: BTreeMap<u32, Behavior>,
}

impl BehaviorScript {
    pub fn get(&self, step: u32) -> Option<Behavior> {
        self.steps.get(&step).copied()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (&step, b) in &self.steps {
            let ok = match *b {
                Behavior::CompleteAt { offset_s } => offset_s.is_finite() && offset_s >= 0.0,
                Behavior::PartialAttempt { fraction } => fraction > 0.0 && fraction < 1.0,
                Behavior::NoAttempt => true,
            };
            if !ok {
                return Err(SimError::BadScript { step, reason: format!("{b:?} is out of range") });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expected {
    ShouldComplete,
    ShouldNotComplete,
}

impl Expected {
    pub fn of(b: &Behavior) -> Expected {
        if b.completes() {
            Expected::ShouldComplete
        } else {
            Expected::ShouldNotComplete
        }
    }
}

pub const OFFSET_RANGE_S: (f64, f64) = (2.0, 8.0);

/// A pre-labelled mix of behaviors for `n` monitored steps in delivery order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrelabelMix {
    pub behaviors: Vec<Behavior>,
    pub labels: Vec<Expected>,
}

impl PrelabelMix {
    pub fn incomplete(&self) -> usize {
        self.labels.iter().filter(|l| **l == Expected::ShouldNotComplete).count()
    }
}

/// Exactly `round(n * fraction)` steps are left incomplete, half of them
/// as no attempt and half as a partial attempt. The rest complete at an
/// offset drawn uniformly from [`OFFSET_RANGE_S`].
pub fn make_prelabel_mix(n: usize, fraction: f64, seed: u64) -> PrelabelMix {
    let fraction = fraction.clamp(0.0, 1.0);
    let incomplete = (n as f64 * fraction).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<usize> = (0..n).collect();
    slots.shuffle(&mut rng);
    let mut kind = vec![0u8; n];
    for (rank, &i) in slots.iter().take(incomplete).enumerate() {
        kind[i] = if rank % 2 == 0 { 1 } else { 2 };
    }
    let behaviors: Vec<Behavior> = kind
        .iter()
        .map(|k| match k {
            1 => Behavior::NoAttempt,
            2 => Behavior::PartialAttempt { fraction: rng.random_range(0.3..0.9) },
            _ => Behavior::CompleteAt { offset_s: rng.random_range(OFFSET_RANGE_S.0..=OFFSET_RANGE_S.1) },
        })
        .collect();
    let labels = behaviors.iter().map(Expected::of).collect();
    PrelabelMix { behaviors, labels }
}
