use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::game::GameSize;
use crate::quantum::{
    sample_measurement, setting_angles, HeraldPattern, NoiseModel, RoundSetup,
    DEFAULT_PHASE_TABLE,
};
use crate::seed::{component_rng, SeedLabel};

use super::{Endpoint, Kind, ProtocolError, Role, WireMessage};

#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    pub n: GameSize,
    pub noise: NoiseModel,
    pub seed: u64,
    pub phase_table: [f64; 4],
    /// Fault injection: the source loses its state once both queries of this
    /// round have arrived, as if the service had been restarted.
    pub fail_at_round: Option<u64>,
}

impl SourceConfig {
    pub fn new(n: GameSize, noise: NoiseModel, seed: u64) -> Self {
        SourceConfig {
            n,
            noise,
            seed,
            phase_table: DEFAULT_PHASE_TABLE,
            fail_at_round: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceOutput {
    Send(Role, WireMessage),
    /// Drop every connection and all round state.
    Reset,
}

/// Trusted holder of the entangled pair. Each player sees only its own
/// measured bit.
///
/// Every message a player sends here gets exactly one reply, except
/// `finish`. A reply without a bit tells the player its round was lost.
#[derive(Debug, Clone)]
pub struct Source {
    cfg: SourceConfig,
    rng: ChaCha8Rng,
    round: u64,
    gamma: Option<u8>,
    ready: [bool; 2],
    queries: [Option<(Option<u8>, u32)>; 2],
    waiting: [bool; 2],
    finished: [bool; 2],
}

fn abort(role: Role, round: u64) -> SourceOutput {
    SourceOutput::Send(role, WireMessage::new(Kind::Response, round).role(role))
}

impl Source {
    pub fn new(cfg: SourceConfig) -> Self {
        Source {
            rng: component_rng(cfg.seed, SeedLabel::Source),
            cfg,
            round: 0,
            gamma: None,
            ready: [false; 2],
            queries: [None; 2],
            waiting: [false; 2],
            finished: [false; 2],
        }
    }

    pub fn is_finished(&self) -> bool {
        self.finished == [true; 2]
    }

    fn clear_round(&mut self) {
        self.gamma = None;
        self.ready = [false; 2];
        self.queries = [None; 2];
        self.waiting = [false; 2];
    }

    /// Forgets everything a restart would lose. The random stream carries on.
    pub fn reset(&mut self) {
        self.clear_round();
        self.finished = [false; 2];
    }

    pub fn handle(&mut self, from: Role, msg: WireMessage) -> Result<Vec<SourceOutput>, ProtocolError> {
        let i = from.index();
        match msg.kind {
            Kind::Hello => Ok(vec![SourceOutput::Send(
                from,
                WireMessage::new(Kind::Hello, 0).role(from),
            )]),
            Kind::Finish => {
                self.finished[i] = true;
                Ok(Vec::new())
            }
            Kind::EventReady => {
                let r = msg.round;
                if r < self.round {
                    return Ok(vec![abort(from, r)]);
                }
                let mut out = Vec::new();
                if r > self.round {
                    for role in [Role::Alice, Role::Bob] {
                        if self.waiting[role.index()] {
                            out.push(abort(role, self.round));
                        }
                    }
                    self.clear_round();
                    self.round = r;
                }
                if self.ready[i] {
                    return Err(ProtocolError::unexpected(Endpoint::Player(from), &msg));
                }
                self.ready[i] = true;
                self.waiting[i] = true;
                if self.ready == [true; 2] {
                    let gamma = self.rng.random_range(0..4u8);
                    self.gamma = Some(gamma);
                    self.waiting = [false; 2];
                    for role in [Role::Alice, Role::Bob] {
                        out.push(SourceOutput::Send(
                            role,
                            WireMessage::new(Kind::EventReady, r).role(role).gamma(gamma),
                        ));
                    }
                }
                Ok(out)
            }
            Kind::Query => {
                let r = msg.round;
                let Some(gamma) = self.gamma.filter(|_| r == self.round) else {
                    return Ok(vec![abort(from, r)]);
                };
                let vertex = msg
                    .vertex
                    .filter(|&v| v < self.cfg.n.get())
                    .ok_or_else(|| ProtocolError::unexpected(Endpoint::Player(from), &msg))?;
                if self.queries[i].is_some() {
                    return Err(ProtocolError::unexpected(Endpoint::Player(from), &msg));
                }
                self.queries[i] = Some((msg.gamma, vertex));
                self.waiting[i] = true;
                let (Some((_, x)), Some((bob_gamma, y))) = (self.queries[0], self.queries[1]) else {
                    return Ok(Vec::new());
                };
                if self.cfg.fail_at_round == Some(r) {
                    self.cfg.fail_at_round = None;
                    self.reset();
                    return Ok(vec![SourceOutput::Reset]);
                }
                let table = self.cfg.phase_table;
                let pattern = |g: u8| HeraldPattern::new(g, table).expect("gamma is at most 3");
                let setup = RoundSetup {
                    herald: pattern(gamma),
                    correction: bob_gamma.map(pattern),
                    angles: setting_angles(self.cfg.n, x, y),
                    noise: self.cfg.noise,
                };
                let (m_a, m_b) = sample_measurement(&mut self.rng, &setup);
                self.clear_round();
                Ok(vec![
                    SourceOutput::Send(
                        Role::Alice,
                        WireMessage::new(Kind::Response, r).role(Role::Alice).bit(m_a),
                    ),
                    SourceOutput::Send(
                        Role::Bob,
                        WireMessage::new(Kind::Response, r).role(Role::Bob).bit(m_b),
                    ),
                ])
            }
            Kind::Response | Kind::RoundResult => {
                Err(ProtocolError::unexpected(Endpoint::Player(from), &msg))
            }
        }
    }
}
