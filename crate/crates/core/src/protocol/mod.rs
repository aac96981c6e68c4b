//! Referee, players and entanglement source as message-passing state
//! machines, with an in-process transport and a TCP transport.
//!
//! The only message routes are player to referee and player to source (and
//! back). Players hold no channel to each other.

mod inproc;
mod machine;
mod player;
mod records;
mod referee;
mod run;
mod source;
pub mod tcp;
pub mod wire;

use rand::Rng;
use thiserror::Error;

use crate::game::{GameSize, Query};

pub use inproc::InProcLink;
pub use machine::{Phase, RefereeState};
pub use player::{Player, PlayerConfig, PlayerStrategy};
pub use records::{
    bell_log, binomial_se, round_log, sigma_above_classical, sigma_for, BellRecord, GameStats,
    QueryTally, RoundRecord, StatsError, StrategyTag, BELL_LOG_HEADER, ROUND_LOG_HEADER,
};
pub use referee::{run_referee, LinkError, Mode, RefereeConfig, RefereeLink, RefereeReport};
pub use run::{run_bell_rounds, run_game, GameConfig, RunReport, Transport};
pub use source::{Source, SourceConfig, SourceOutput};
pub use wire::{Kind, Role, WireError, WireMessage, PROTOCOL_VERSION};

/// Default per-round timeout.
pub const DEFAULT_TIMEOUT: std::time::Duration = std::time::Duration::from_secs(5);

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("illegal referee transition {from:?} -> {to:?}")]
    IllegalTransition { from: Phase, to: Phase },
    #[error("message route {from:?} -> {to:?} is not allowed")]
    ForbiddenRoute { from: Endpoint, to: Endpoint },
    #[error("{from} sent round {got} while round {current} is in progress")]
    RoundAhead { from: Role, got: u64, current: u64 },
    #[error("unexpected message from {from:?}: {line}")]
    Unexpected { from: Endpoint, line: String },
    #[error("role `{0}` is already registered")]
    DuplicateRole(Role),
    #[error("handshake rejected: {0}")]
    Rejected(String),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl ProtocolError {
    pub(crate) fn unexpected(from: Endpoint, msg: &WireMessage) -> Self {
        ProtocolError::Unexpected {
            from,
            line: msg.encode(),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        ProtocolError::Io {
            context: context.into(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Endpoint {
    Referee,
    Player(Role),
    Source,
}

/// The allowed set: a player on one side and the referee or the source on
/// the other.
pub fn route_allowed(from: Endpoint, to: Endpoint) -> bool {
    matches!(
        (from, to),
        (Endpoint::Player(_), Endpoint::Referee)
            | (Endpoint::Referee, Endpoint::Player(_))
            | (Endpoint::Player(_), Endpoint::Source)
            | (Endpoint::Source, Endpoint::Player(_))
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub from: Endpoint,
    pub to: Endpoint,
    pub msg: WireMessage,
}

impl Envelope {
    /// Builds an envelope, refusing routes outside the allowed set.
    pub fn new(from: Endpoint, to: Endpoint, msg: WireMessage) -> Result<Self, ProtocolError> {
        if !route_allowed(from, to) {
            return Err(ProtocolError::ForbiddenRoute { from, to });
        }
        Ok(Envelope { from, to, msg })
    }
}

/// One of the `2n` queries, uniformly.
pub fn draw_query<R: Rng + ?Sized>(rng: &mut R, n: GameSize) -> Query {
    let i = rng.random_range(0..n.query_count());
    let j = (i / 2) as u32;
    let q = if i % 2 == 0 {
        Query::same(n, j)
    } else {
        Query::adjacent(n, j)
    };
    q.expect("index below 2n maps to a valid query")
}
