use std::time::Duration;

use crate::game::GameSize;
use crate::quantum::{NoiseModel, DEFAULT_PHASE_TABLE};

use super::{
    run_referee, tcp, GameStats, InProcLink, Mode, Player, PlayerConfig, PlayerStrategy,
    ProtocolError, RefereeConfig, RefereeReport, Role, RoundRecord, Source, SourceConfig,
    StrategyTag, DEFAULT_TIMEOUT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    /// All four parties in one thread.
    InProcess,
    /// Four threads talking TCP on the loopback interface.
    TcpLocal,
}

#[derive(Debug, Clone)]
pub struct GameConfig {
    pub n: GameSize,
    pub rounds: u64,
    pub strategy: PlayerStrategy,
    pub noise: NoiseModel,
    pub seed: u64,
    pub correct_herald: bool,
    pub phase_table: [f64; 4],
    pub timeout: Duration,
    pub source_fail_at: Option<u64>,
}

impl GameConfig {
    pub fn new(n: GameSize, rounds: u64, strategy: PlayerStrategy, seed: u64) -> Self {
        GameConfig {
            n,
            rounds,
            strategy,
            noise: NoiseModel::IDEAL,
            seed,
            correct_herald: true,
            phase_table: DEFAULT_PHASE_TABLE,
            timeout: DEFAULT_TIMEOUT,
            source_fail_at: None,
        }
    }

    pub fn strategy_tag(&self) -> StrategyTag {
        match self.strategy {
            PlayerStrategy::Classical(_) => StrategyTag::Classical,
            PlayerStrategy::Quantum => StrategyTag::Quantum,
        }
    }

    pub fn referee(&self, mode: Mode) -> RefereeConfig {
        RefereeConfig {
            n: self.n,
            rounds: self.rounds,
            mode,
            seed: self.seed,
            timeout: self.timeout,
            strategy_tag: self.strategy_tag(),
        }
    }

    pub fn player(&self, role: Role) -> PlayerConfig {
        PlayerConfig {
            role,
            n: self.n,
            strategy: self.strategy.clone(),
            seed: self.seed,
            correct_herald: self.correct_herald,
        }
    }

    /// `None` for classical play, which needs no source.
    pub fn source(&self) -> Option<SourceConfig> {
        (self.strategy == PlayerStrategy::Quantum).then_some(SourceConfig {
            n: self.n,
            noise: self.noise,
            seed: self.seed,
            phase_table: self.phase_table,
            fail_at_round: self.source_fail_at,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub stats: GameStats,
    pub report: RefereeReport,
}

impl RunReport {
    pub fn records(&self) -> &[RoundRecord] {
        &self.report.games
    }
}

fn run(cfg: &GameConfig, mode: Mode, transport: Transport) -> Result<RefereeReport, ProtocolError> {
    match transport {
        Transport::InProcess => {
            let mut link = InProcLink::new(
                Player::new(cfg.player(Role::Alice)),
                Player::new(cfg.player(Role::Bob)),
                cfg.source().map(Source::new),
            );
            run_referee(&mut link, &cfg.referee(mode))
        }
        Transport::TcpLocal => tcp::run_local(cfg, mode),
    }
}

/// Plays `cfg.rounds` rounds of the game and summarizes them.
pub fn run_game(cfg: &GameConfig, transport: Transport) -> Result<RunReport, ProtocolError> {
    let report = run(cfg, Mode::Game, transport)?;
    Ok(RunReport {
        stats: GameStats::from_records(cfg.n, &report.games),
        report,
    })
}

/// Bell-test rounds: each player draws its own setting uniformly.
pub fn run_bell_rounds(cfg: &GameConfig, transport: Transport) -> Result<RefereeReport, ProtocolError> {
    run(cfg, Mode::Bell, transport)
}
