use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::game::{ClassicalStrategy, GameSize};
use crate::seed::{component_rng, SeedLabel};

use super::{Endpoint, Envelope, Kind, ProtocolError, Role, WireMessage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlayerStrategy {
    Classical(ClassicalStrategy),
    Quantum,
}

#[derive(Debug, Clone)]
pub struct PlayerConfig {
    pub role: Role,
    pub n: GameSize,
    pub strategy: PlayerStrategy,
    /// Run seed; the player's own stream picks Bell-test settings.
    pub seed: u64,
    /// Bob reports the herald to the source so it applies his phase gate.
    pub correct_herald: bool,
}

/// A player as a pure state machine. Inputs come from the referee or the
/// source, outputs are envelopes the transport delivers.
#[derive(Debug, Clone)]
pub struct Player {
    cfg: PlayerConfig,
    rng: ChaCha8Rng,
    round: u64,
    gamma: Option<u8>,
    vertex: Option<u32>,
    awaiting: Option<Kind>,
    finished: bool,
}

impl Player {
    pub fn new(cfg: PlayerConfig) -> Self {
        let label = match cfg.role {
            Role::Alice => SeedLabel::Alice,
            Role::Bob => SeedLabel::Bob,
        };
        Player {
            rng: component_rng(cfg.seed, label),
            cfg,
            round: 0,
            gamma: None,
            vertex: None,
            awaiting: None,
            finished: false,
        }
    }

    pub fn role(&self) -> Role {
        self.cfg.role
    }

    pub fn is_quantum(&self) -> bool {
        self.cfg.strategy == PlayerStrategy::Quantum
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Whether a source reply is outstanding.
    pub fn awaiting_source(&self) -> bool {
        self.awaiting.is_some()
    }

    fn me(&self) -> Endpoint {
        Endpoint::Player(self.cfg.role)
    }

    fn send_referee(&self, msg: WireMessage) -> Result<Vec<Envelope>, ProtocolError> {
        Ok(vec![Envelope::new(self.me(), Endpoint::Referee, msg)?])
    }

    fn send_source(&mut self, msg: WireMessage) -> Result<Vec<Envelope>, ProtocolError> {
        if msg.kind != Kind::Finish {
            self.awaiting = Some(msg.kind);
        }
        Ok(vec![Envelope::new(self.me(), Endpoint::Source, msg)?])
    }

    fn reply(&self, kind: Kind) -> WireMessage {
        WireMessage::new(kind, self.round).role(self.cfg.role)
    }

    fn color(&self, c: &ClassicalStrategy, v: u32) -> u8 {
        match self.cfg.role {
            Role::Alice => c.color_a()[v as usize],
            Role::Bob => c.color_b()[v as usize],
        }
    }

    pub fn on_referee(&mut self, msg: WireMessage) -> Result<Vec<Envelope>, ProtocolError> {
        match msg.kind {
            Kind::Hello | Kind::RoundResult => Ok(Vec::new()),
            Kind::EventReady => {
                self.round = msg.round;
                self.gamma = None;
                self.vertex = None;
                self.awaiting = None;
                match self.cfg.strategy {
                    PlayerStrategy::Classical(_) => self.send_referee(self.reply(Kind::EventReady)),
                    PlayerStrategy::Quantum => self.send_source(self.reply(Kind::EventReady)),
                }
            }
            Kind::Query => {
                if msg.round != self.round {
                    return Err(ProtocolError::unexpected(Endpoint::Referee, &msg));
                }
                let v = match msg.vertex {
                    Some(v) if v < self.cfg.n.get() => v,
                    Some(_) => return Err(ProtocolError::unexpected(Endpoint::Referee, &msg)),
                    None => self.rng.random_range(0..self.cfg.n.get()),
                };
                self.vertex = Some(v);
                match &self.cfg.strategy {
                    PlayerStrategy::Classical(c) => {
                        let bit = self.color(c, v);
                        self.send_referee(self.reply(Kind::Response).vertex(v).bit(bit))
                    }
                    PlayerStrategy::Quantum => {
                        let mut q = self.reply(Kind::Query);
                        if self.cfg.role == Role::Bob && self.cfg.correct_herald {
                            q.gamma = self.gamma;
                        }
                        self.send_source(q.vertex(v))
                    }
                }
            }
            Kind::Finish => {
                self.finished = true;
                if self.is_quantum() {
                    self.send_source(WireMessage::new(Kind::Finish, msg.round).role(self.cfg.role))
                } else {
                    Ok(Vec::new())
                }
            }
            Kind::Response => Err(ProtocolError::unexpected(Endpoint::Referee, &msg)),
        }
    }

    pub fn on_source(&mut self, msg: WireMessage) -> Result<Vec<Envelope>, ProtocolError> {
        if msg.kind == Kind::Hello || msg.round != self.round {
            return Ok(Vec::new());
        }
        match (self.awaiting, msg.kind) {
            (Some(Kind::EventReady), Kind::EventReady) => {
                self.awaiting = None;
                self.gamma = msg.gamma;
                let mut out = self.reply(Kind::EventReady);
                out.gamma = msg.gamma;
                self.send_referee(out)
            }
            (Some(_), Kind::Response) if msg.bit.is_none() => Ok(self.abort()),
            (Some(Kind::Query), Kind::Response) => {
                self.awaiting = None;
                let m = msg.bit.expect("checked above");
                let bit = match self.cfg.role {
                    Role::Alice => 1 - m,
                    Role::Bob => m,
                };
                let mut out = self.reply(Kind::Response);
                out.vertex = self.vertex;
                self.send_referee(out.bit(bit))
            }
            _ => Err(ProtocolError::unexpected(Endpoint::Source, &msg)),
        }
    }

    /// The source went away. A pending round is reported to the referee as
    /// aborted: a response without a bit.
    pub fn on_source_lost(&mut self) -> Vec<Envelope> {
        if self.awaiting.is_some() {
            self.abort()
        } else {
            Vec::new()
        }
    }

    fn abort(&mut self) -> Vec<Envelope> {
        self.awaiting = None;
        vec![Envelope::new(self.me(), Endpoint::Referee, self.reply(Kind::Response))
            .expect("player to referee is allowed")]
    }
}
