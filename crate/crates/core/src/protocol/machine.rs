use crate::game::Query;

use super::ProtocolError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Idle,
    Strategise,
    Query,
    Collect,
    Evaluate,
    Done,
}

impl Phase {
    pub const ALL: [Phase; 6] = [
        Phase::Idle,
        Phase::Strategise,
        Phase::Query,
        Phase::Collect,
        Phase::Evaluate,
        Phase::Done,
    ];

    pub fn can_advance_to(self, next: Phase) -> bool {
        matches!(
            (self, next),
            (Phase::Idle, Phase::Strategise)
                | (Phase::Strategise, Phase::Query)
                | (Phase::Query, Phase::Collect)
                | (Phase::Collect, Phase::Evaluate)
                | (Phase::Evaluate, Phase::Strategise)
                | (Phase::Evaluate, Phase::Done)
        )
    }
}

/// Referee round bookkeeping. A round passes through every phase even when
/// it aborts, so each commenced round reaches `Evaluate` and gets recorded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefereeState {
    phase: Phase,
    round_index: u64,
    pending: Option<Query>,
}

impl Default for RefereeState {
    fn default() -> Self {
        RefereeState {
            phase: Phase::Idle,
            round_index: 0,
            pending: None,
        }
    }
}

impl RefereeState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Index of the current (or last) round; rounds count from 1.
    pub fn round_index(&self) -> u64 {
        self.round_index
    }

    pub fn pending(&self) -> Option<&Query> {
        self.pending.as_ref()
    }

    /// Moves to `next`. Entering `Query` requires the question (if any) being
    /// asked; entering `Strategise` starts a new round. Illegal transitions
    /// leave the state untouched.
    pub fn advance(&mut self, next: Phase, query: Option<Query>) -> Result<(), ProtocolError> {
        if !self.phase.can_advance_to(next) {
            return Err(ProtocolError::IllegalTransition {
                from: self.phase,
                to: next,
            });
        }
        match next {
            Phase::Strategise => self.round_index += 1,
            Phase::Query => self.pending = query,
            Phase::Evaluate | Phase::Done => self.pending = None,
            _ => {}
        }
        self.phase = next;
        Ok(())
    }
}
