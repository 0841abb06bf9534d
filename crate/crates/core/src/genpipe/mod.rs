//! From prescription to candidate program, and the checks that decide
//! whether the candidate says what the therapist wrote.

pub mod fidelity;
pub mod generator;
pub mod hallucination;
pub mod mutate;
pub mod prescription;
pub mod prompt;
#[cfg(feature = "remote")]
pub mod remote;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fidelity::{validate_fidelity, FidelityReport, StepVerdict, Verdict};
pub use generator::{faithful_program, generate_program, DeterministicBackend, GeneratorBackend, Provenance, ReplayBackend};
pub use hallucination::{detect_hallucinated_monitors, HallucinationFinding, ReasonCode};
pub use mutate::{mutate_against, mutate_program, Mutation, MutationDetail, MutationError, MutationKind, MutationLabel};
pub use prescription::{Entities, GoalId, Prescription, PrescriptionStep, Threshold, Unit};
pub use prompt::{assemble_prompt, PromptBundle, PromptConfig};
#[cfg(feature = "remote")]
pub use remote::RemoteBackend;

/// One failed call to a remote generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub attempt: u32,
    pub error: String,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("prompt configuration: {0}")]
    Config(String),
    #[error("no replay transcript for prompt {digest} (looked for {path})")]
    TranscriptMissing { digest: String, path: String },
    #[error("generator transport failed after {} attempt(s): {message}", attempts.len())]
    Transport { message: String, attempts: Vec<Attempt> },
    #[error("generator deadline passed after {after_ms} ms")]
    Timeout { after_ms: u64, attempts: Vec<Attempt> },
}
