//! Clinician-directed exercise intervention programs.
//!
//! The crate is organised around the life of a program:
//!
//! * [`dsl`] parses, validates and prints the intervention-program language.
//! * [`genpipe`] assembles generation prompts, obtains candidate programs from a
//!   pluggable backend and checks them against the prescription they came from.
//! * [`runtime`] executes a program against a stream of pose frames.
//! * [`patientsim`] produces those frames for a simulated standardized patient.
//! * [`evalstats`] turns pre-labelled sessions into accuracy, pacing and
//!   interval estimates.
//! * [`retrofit`] decides whether a prescription fits a fixed exercise
//!   template with parameter slots, and why not when it does not.

pub mod bench;
pub mod dsl;
pub mod evalstats;
pub mod fixtures;
pub mod genpipe;
pub mod patientsim;
pub mod retrofit;
pub mod runtime;
pub mod vocab;
