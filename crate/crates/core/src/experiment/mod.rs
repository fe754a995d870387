//! Rank-by-intensity protocol: random presentation, ranking, confirmation
//! replay in ranked order, optional amendment, and boxplot aggregation.

mod aggregate;
mod battery;
mod session;
mod shuffle;
pub mod store;

pub use aggregate::{aggregate_ranks, quantile_inclusive, BoxStats, RankAggregate, StimulusRanks};
pub use battery::{
    paper_battery, preset, StimulusBattery, PRESET_DURATION, PRESET_FREQUENCY, PRESET_GAP,
    PRESET_REPEATS,
};
pub use session::{
    advance_confirmation, advance_presentation, amend_ranking, create_session, finalize_session,
    submit_ranking, Amendment, Cue, EventKind, ExperimentSession, Phase, SessionEvent,
    SessionRecord,
};
pub use shuffle::{is_permutation, shuffle_order, SplitMix64};
pub use store::{SessionStore, StoreError};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("{path}: {message}")]
    Validation { path: String, message: String },
    #[error("{operation} is not allowed in phase {}", .phase.name())]
    IllegalTransition {
        operation: &'static str,
        phase: Phase,
    },
    #[error("{0}")]
    Domain(String),
}

impl ExperimentError {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        ExperimentError::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Dotted path of the offending input, or the phase for illegal
    /// transitions.
    pub fn path(&self) -> &str {
        match self {
            ExperimentError::Validation { path, .. } => path,
            ExperimentError::IllegalTransition { .. } => "phase",
            ExperimentError::Domain(_) => ".",
        }
    }

    /// Stable machine-readable error class.
    pub fn code(&self) -> &'static str {
        match self {
            ExperimentError::Validation { .. } => "validation",
            ExperimentError::IllegalTransition { .. } => "illegal_transition",
            ExperimentError::Domain(_) => "domain",
        }
    }
}
