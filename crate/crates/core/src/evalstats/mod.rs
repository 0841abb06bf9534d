//! Statistics for the pre-labelled evaluation: confusion counts, Wilson
//! intervals, Fisher's exact test and the text report.

mod confusion;
mod fisher;
mod interval;
mod report;

use thiserror::Error;

pub use confusion::{confusion, matrix_of, pair_outcomes, ConfusionMatrix, PreLabel, StepOutcome};
pub use fisher::{fisher_exact_2x2, hypergeometric_tables, TIE_SLACK};
pub use interval::{normal_quantile, wilson_interval};
pub use report::{build_report, Attribution, EvalReport, Metric, PacingSummary};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("{0}")]
    Domain(String),
    #[error("no logged monitored step {step} in session `{session}` for this label")]
    Pairing { session: String, step: u32 },
}
