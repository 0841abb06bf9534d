//! Record store, HTTP service and command line for intervention programs.

pub mod api;
pub mod cli;
pub mod clock;
pub mod error;
pub mod sessions;
pub mod store;
