use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::shuffle::{is_permutation, shuffle_order};
use super::{ExperimentError, StimulusBattery};

/// Where a session stands in the ranking protocol.
///
/// `Presenting` and `Confirming` count stimuli already played in the
/// current pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case", deny_unknown_fields)]
pub enum Phase {
    Created,
    Presenting { done: usize },
    AwaitingRank,
    Confirming { done: usize },
    AwaitingDecision,
    Finalized,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::Created => "created",
            Phase::Presenting { .. } => "presenting",
            Phase::AwaitingRank => "awaiting_rank",
            Phase::Confirming { .. } => "confirming",
            Phase::AwaitingDecision => "awaiting_decision",
            Phase::Finalized => "finalized",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Amendment {
    pub at: DateTime<Utc>,
    pub previous: Vec<usize>,
    pub ranking: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventKind {
    Created,
    Presented { stimulus: usize },
    Ranked { ranking: Vec<usize> },
    Confirmed { stimulus: usize },
    Amended { ranking: Vec<usize> },
    Finalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub at: DateTime<Utc>,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// One stimulus handed out by a presentation or confirmation pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cue {
    /// 0-based position within the current pass.
    pub position: usize,
    /// Index into the battery.
    pub stimulus: usize,
    pub id: String,
    /// Phase after this cue was issued.
    pub phase: Phase,
}

/// One participant's run through the ranking protocol.
///
/// Rankings list battery indices from perceived strongest (position 0) to
/// weakest. Every mutating method either succeeds or returns an error
/// without touching the session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSession {
    session_id: String,
    participant: String,
    battery: StimulusBattery,
    battery_id: String,
    seed: u64,
    presentation_order: Vec<usize>,
    phase: Phase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ranking: Option<Vec<usize>>,
    amendments: Vec<Amendment>,
    events: Vec<SessionEvent>,
}

/// Immutable result of a finalized session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionRecord {
    pub session_id: String,
    pub participant: String,
    pub battery_id: String,
    pub battery: StimulusBattery,
    pub seed: u64,
    pub presentation_order: Vec<usize>,
    /// Battery indices, strongest first.
    pub ranking: Vec<usize>,
    pub amendments: Vec<Amendment>,
    pub events: Vec<SessionEvent>,
    pub created_at: DateTime<Utc>,
    pub finalized_at: DateTime<Utc>,
}

impl SessionRecord {
    /// 1-based rank (1 = strongest) given to battery index `stimulus`.
    pub fn rank_of(&self, stimulus: usize) -> Option<usize> {
        self.ranking.iter().position(|&s| s == stimulus).map(|p| p + 1)
    }

    pub(crate) fn check_invariants(&self) -> Result<(), ExperimentError> {
        let n = self.battery.len();
        self.battery.validate()?;
        if self.battery_id != self.battery.id() {
            return Err(ExperimentError::validation("battery_id", "does not match battery contents"));
        }
        if !is_permutation(&self.presentation_order, n) {
            return Err(ExperimentError::validation("presentation_order", "not a permutation"));
        }
        if !is_permutation(&self.ranking, n) {
            return Err(ExperimentError::validation("ranking", "not a permutation"));
        }
        Ok(())
    }
}

/// Starts a session: shuffles the presentation order from `seed`.
pub fn create_session(
    battery: StimulusBattery,
    participant: impl Into<String>,
    seed: u64,
) -> Result<ExperimentSession, ExperimentError> {
    ExperimentSession::new(battery, participant, seed)
}

impl ExperimentSession {
    pub fn new(
        battery: StimulusBattery,
        participant: impl Into<String>,
        seed: u64,
    ) -> Result<Self, ExperimentError> {
        Self::with_id(uuid::Uuid::new_v4().simple().to_string(), battery, participant, seed)
    }

    pub fn with_id(
        session_id: impl Into<String>,
        battery: StimulusBattery,
        participant: impl Into<String>,
        seed: u64,
    ) -> Result<Self, ExperimentError> {
        let session_id = session_id.into();
        let participant = participant.into();
        if session_id.is_empty()
            || !session_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(ExperimentError::validation(
                "session_id",
                "must be non-empty ASCII letters, digits, '-' or '_'",
            ));
        }
        if participant.trim().is_empty() {
            return Err(ExperimentError::validation("participant", "label must not be empty"));
        }
        battery.validate()?;
        if battery.len() < 2 {
            return Err(ExperimentError::validation(
                "battery.programs",
                "a ranking session needs at least 2 stimuli",
            ));
        }
        let presentation_order = shuffle_order(battery.len(), seed);
        Ok(ExperimentSession {
            session_id,
            participant,
            battery_id: battery.id(),
            battery,
            seed,
            presentation_order,
            phase: Phase::Created,
            ranking: None,
            amendments: Vec::new(),
            events: vec![SessionEvent {
                at: Utc::now(),
                kind: EventKind::Created,
            }],
        })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn participant(&self) -> &str {
        &self.participant
    }

    pub fn battery(&self) -> &StimulusBattery {
        &self.battery
    }

    pub fn battery_id(&self) -> &str {
        &self.battery_id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn presentation_order(&self) -> &[usize] {
        &self.presentation_order
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn ranking(&self) -> Option<&[usize]> {
        self.ranking.as_deref()
    }

    pub fn amendments(&self) -> &[Amendment] {
        &self.amendments
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.battery.len()
    }

    pub fn is_empty(&self) -> bool {
        self.battery.is_empty()
    }

    fn illegal(&self, operation: &'static str) -> ExperimentError {
        ExperimentError::IllegalTransition {
            operation,
            phase: self.phase,
        }
    }

    fn log(&mut self, kind: EventKind) {
        self.events.push(SessionEvent { at: Utc::now(), kind });
    }

    fn cue(&self, position: usize, stimulus: usize) -> Cue {
        Cue {
            position,
            stimulus,
            id: self.battery.programs[stimulus].id.clone(),
            phase: self.phase,
        }
    }

    /// Next stimulus in presentation order. After the last one the session
    /// awaits a ranking.
    pub fn advance_presentation(&mut self) -> Result<Cue, ExperimentError> {
        let done = match self.phase {
            Phase::Created => 0,
            Phase::Presenting { done } => done,
            _ => return Err(self.illegal("advance_presentation")),
        };
        let stimulus = self.presentation_order[done];
        let done = done + 1;
        self.phase = if done == self.len() {
            Phase::AwaitingRank
        } else {
            Phase::Presenting { done }
        };
        self.log(EventKind::Presented { stimulus });
        Ok(self.cue(done - 1, stimulus))
    }

    fn check_ranking(&self, ranking: &[usize]) -> Result<(), ExperimentError> {
        if is_permutation(ranking, self.len()) {
            Ok(())
        } else {
            Err(ExperimentError::validation(
                "ranking",
                format!(
                    "must list each stimulus index 0..{} exactly once, got {ranking:?}",
                    self.len()
                ),
            ))
        }
    }

    /// Stores the participant's ranking (strongest first) and starts the
    /// confirmation pass.
    pub fn submit_ranking(&mut self, ranking: Vec<usize>) -> Result<(), ExperimentError> {
        if self.phase != Phase::AwaitingRank {
            return Err(self.illegal("submit_ranking"));
        }
        self.check_ranking(&ranking)?;
        self.log(EventKind::Ranked {
            ranking: ranking.clone(),
        });
        self.ranking = Some(ranking);
        self.phase = Phase::Confirming { done: 0 };
        Ok(())
    }

    /// Next stimulus in answered-rank order (strongest first).
    pub fn advance_confirmation(&mut self) -> Result<Cue, ExperimentError> {
        let Phase::Confirming { done } = self.phase else {
            return Err(self.illegal("advance_confirmation"));
        };
        let stimulus = self.ranking.as_ref().expect("ranking present while confirming")[done];
        let done = done + 1;
        self.phase = if done == self.len() {
            Phase::AwaitingDecision
        } else {
            Phase::Confirming { done }
        };
        self.log(EventKind::Confirmed { stimulus });
        Ok(self.cue(done - 1, stimulus))
    }

    /// Replaces the ranking after a confirmation pass and replays it. An
    /// unchanged ranking is still logged.
    pub fn amend_ranking(&mut self, ranking: Vec<usize>) -> Result<(), ExperimentError> {
        if self.phase != Phase::AwaitingDecision {
            return Err(self.illegal("amend_ranking"));
        }
        self.check_ranking(&ranking)?;
        let previous = self.ranking.take().expect("ranking present when awaiting decision");
        let at = Utc::now();
        self.amendments.push(Amendment {
            at,
            previous,
            ranking: ranking.clone(),
        });
        self.events.push(SessionEvent {
            at,
            kind: EventKind::Amended {
                ranking: ranking.clone(),
            },
        });
        self.ranking = Some(ranking);
        self.phase = Phase::Confirming { done: 0 };
        Ok(())
    }

    /// Closes the session and returns its record.
    pub fn finalize(&mut self) -> Result<SessionRecord, ExperimentError> {
        if self.phase != Phase::AwaitingDecision {
            return Err(self.illegal("finalize"));
        }
        self.phase = Phase::Finalized;
        self.log(EventKind::Finalized);
        Ok(self.record().expect("finalized session has a record"))
    }

    /// The record of a finalized session.
    pub fn record(&self) -> Option<SessionRecord> {
        if self.phase != Phase::Finalized {
            return None;
        }
        Some(SessionRecord {
            session_id: self.session_id.clone(),
            participant: self.participant.clone(),
            battery_id: self.battery_id.clone(),
            battery: self.battery.clone(),
            seed: self.seed,
            presentation_order: self.presentation_order.clone(),
            ranking: self.ranking.clone()?,
            amendments: self.amendments.clone(),
            events: self.events.clone(),
            created_at: self.events.first()?.at,
            finalized_at: self.events.last()?.at,
        })
    }

    /// Structural checks for sessions loaded from storage.
    pub(crate) fn check_invariants(&self) -> Result<(), ExperimentError> {
        let n = self.len();
        self.battery.validate()?;
        if n < 2 {
            return Err(ExperimentError::validation("battery.programs", "fewer than 2 stimuli"));
        }
        if self.battery_id != self.battery.id() {
            return Err(ExperimentError::validation("battery_id", "does not match battery contents"));
        }
        if !is_permutation(&self.presentation_order, n) {
            return Err(ExperimentError::validation("presentation_order", "not a permutation"));
        }
        if let Some(r) = &self.ranking {
            if !is_permutation(r, n) {
                return Err(ExperimentError::validation("ranking", "not a permutation"));
            }
        }
        let needs_ranking = matches!(
            self.phase,
            Phase::Confirming { .. } | Phase::AwaitingDecision | Phase::Finalized
        );
        if needs_ranking != self.ranking.is_some() {
            return Err(ExperimentError::validation("ranking", "inconsistent with phase"));
        }
        let counter_ok = match self.phase {
            Phase::Presenting { done } => (1..n).contains(&done),
            Phase::Confirming { done } => done < n,
            _ => true,
        };
        if !counter_ok {
            return Err(ExperimentError::validation("phase", "progress counter out of range"));
        }
        Ok(())
    }
}

/// Free-function forms of the session transitions.
pub fn advance_presentation(session: &mut ExperimentSession) -> Result<Cue, ExperimentError> {
    session.advance_presentation()
}

pub fn submit_ranking(session: &mut ExperimentSession, ranking: Vec<usize>) -> Result<(), ExperimentError> {
    session.submit_ranking(ranking)
}

pub fn advance_confirmation(session: &mut ExperimentSession) -> Result<Cue, ExperimentError> {
    session.advance_confirmation()
}

pub fn amend_ranking(session: &mut ExperimentSession, ranking: Vec<usize>) -> Result<(), ExperimentError> {
    session.amend_ranking(ranking)
}

pub fn finalize_session(session: &mut ExperimentSession) -> Result<SessionRecord, ExperimentError> {
    session.finalize()
}
