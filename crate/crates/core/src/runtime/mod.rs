//! Step-by-step delivery of a program against a pose stream.

pub mod clock;
pub mod eval;
pub mod frame;
pub mod pacing;
pub mod session;

use thiserror::Error;

pub use clock::{Clock, VirtualClock};
pub use eval::{eval_predicate, Scene, Window};
pub use frame::{from_secs, to_secs, Holder, Micros, ObjectState, PoseFrame, Side, MICROS_PER_S, N_JOINTS};
pub use pacing::{assess_pacing, pacing_verdict, PacingEntry, PacingVerdict, StepTruth, DELAY_THRESHOLD_S};
pub use session::{
    run_session, Cue, EventKind, FallbackLog, FrameSource, Phase, SessionConfig, SessionEvent, SessionLog, StepLog,
    StepState, VecSource, ANNOUNCE_DWELL_S, DEFAULT_POLL_HZ,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error("frame stream ended at {at} s, before the program finished")]
    Truncated { at: f64, partial: Box<SessionLog> },
    #[error("frames carry no channel `{channel}`")]
    ChannelMissing { channel: String },
    #[error("target `{target}` has no position in the scene")]
    UnplacedTarget { target: String },
    #[error("{0}")]
    BadConfig(String),
}
