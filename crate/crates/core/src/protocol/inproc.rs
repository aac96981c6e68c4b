use std::collections::VecDeque;
use std::time::Instant;

use super::{
    Endpoint, Envelope, LinkError, Player, ProtocolError, RefereeLink, Role, Source,
    SourceOutput, WireMessage,
};

/// Single-threaded transport: the referee's sends are pumped through the
/// players and the source until nothing is left in flight. Every envelope
/// passes the route check.
pub struct InProcLink {
    players: [Player; 2],
    source: Option<Source>,
    inbox: [VecDeque<WireMessage>; 2],
    resets: u64,
}

impl InProcLink {
    pub fn new(alice: Player, bob: Player, source: Option<Source>) -> Self {
        assert_eq!(alice.role(), Role::Alice);
        assert_eq!(bob.role(), Role::Bob);
        InProcLink {
            players: [alice, bob],
            source,
            inbox: [VecDeque::new(), VecDeque::new()],
            resets: 0,
        }
    }

    /// Times the source lost its state.
    pub fn resets(&self) -> u64 {
        self.resets
    }

    fn source_lost(&mut self, queue: &mut VecDeque<Envelope>) {
        self.resets += 1;
        if let Some(s) = self.source.as_mut() {
            s.reset();
        }
        for p in &mut self.players {
            queue.extend(p.on_source_lost());
        }
    }

    fn pump(&mut self, first: Envelope) -> Result<(), ProtocolError> {
        let mut queue = VecDeque::from([first]);
        while let Some(env) = queue.pop_front() {
            let env = Envelope::new(env.from, env.to, env.msg)?;
            match env.to {
                Endpoint::Referee => {
                    let Endpoint::Player(role) = env.from else {
                        unreachable!("route check")
                    };
                    self.inbox[role.index()].push_back(env.msg);
                }
                Endpoint::Player(role) => {
                    let p = &mut self.players[role.index()];
                    let out = if env.from == Endpoint::Referee {
                        p.on_referee(env.msg)?
                    } else {
                        p.on_source(env.msg)?
                    };
                    queue.extend(out);
                }
                Endpoint::Source => {
                    let Endpoint::Player(role) = env.from else {
                        unreachable!("route check")
                    };
                    let Some(source) = self.source.as_mut() else {
                        queue.extend(self.players[role.index()].on_source_lost());
                        continue;
                    };
                    match source.handle(role, env.msg) {
                        Ok(out) => {
                            for o in out {
                                match o {
                                    SourceOutput::Send(to, msg) => queue.push_back(Envelope::new(
                                        Endpoint::Source,
                                        Endpoint::Player(to),
                                        msg,
                                    )?),
                                    SourceOutput::Reset => self.source_lost(&mut queue),
                                }
                            }
                        }
                        Err(_) => self.source_lost(&mut queue),
                    }
                }
            }
        }
        Ok(())
    }
}

impl RefereeLink for InProcLink {
    fn send(&mut self, to: Role, msg: WireMessage) -> Result<(), LinkError> {
        let env = Envelope::new(Endpoint::Referee, Endpoint::Player(to), msg)
            .expect("referee to player is allowed");
        self.pump(env)
            .map_err(|e| LinkError::Closed(format!("{to} failed: {e}")))
    }

    /// Everything in flight has already been delivered, so an empty inbox
    /// means the message will never come.
    fn recv(&mut self, from: Role, _deadline: Instant) -> Result<WireMessage, LinkError> {
        self.inbox[from.index()].pop_front().ok_or(LinkError::Timeout)
    }
}
