//! Simulator for the odd-cycle nonlocal game.
//!
//! A referee asks two isolated players to color the vertices of an odd cycle.
//! Players either share a classical coloring or measure halves of an
//! entangled qubit pair; the crate provides exact values for both, a
//! referee/player/source protocol with in-process and TCP transports, the
//! associated Bell test, and graph-theoretic bounds on the game value.

pub mod bell;
pub mod game;
pub mod graph;
pub mod protocol;
pub mod quantum;
pub mod seed;

pub use game::{
    brute_force_optimum, enumerate_queries, omega_c, parity_strategy, strategy_win_probability,
    wins, ClassicalStrategy, GameError, GameSize, Query, QueryKind, WinProbability,
};
pub use quantum::{omega_q, NoiseModel, OutcomePair, TwoQubitState};
pub use protocol::{run_game, GameConfig, GameStats, PlayerStrategy, RoundRecord, Transport};
pub use bell::{estimate_omega, nonlocal_content, run_bell_test, BellEstimate, SettingCounts};
