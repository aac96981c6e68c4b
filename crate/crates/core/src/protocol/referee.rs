use std::time::{Duration, Instant};

use crate::game::{wins, GameSize, Query};
use crate::quantum::OutcomePair;
use crate::seed::{component_rng, SeedLabel};

use super::{
    draw_query, BellRecord, Endpoint, Kind, Phase, ProtocolError, RefereeState, Role,
    RoundRecord, StrategyTag, WireError, WireMessage,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// The referee draws one of the `2n` queries each round.
    Game,
    /// Players pick their own settings; the referee only paces rounds.
    Bell,
}

#[derive(Debug, Clone)]
pub struct RefereeConfig {
    pub n: GameSize,
    pub rounds: u64,
    pub mode: Mode,
    pub seed: u64,
    pub timeout: Duration,
    pub strategy_tag: StrategyTag,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkError {
    Timeout,
    Closed(String),
    Wire(WireError),
}

/// The referee's two player connections.
pub trait RefereeLink {
    fn send(&mut self, to: Role, msg: WireMessage) -> Result<(), LinkError>;
    /// Next message from `from`, or `Timeout` once `deadline` passes.
    fn recv(&mut self, from: Role, deadline: Instant) -> Result<WireMessage, LinkError>;
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RefereeReport {
    pub games: Vec<RoundRecord>,
    pub bell: Vec<BellRecord>,
    /// Rounds for which entanglement generation was started.
    pub commenced: u64,
    /// Set when a player connection dropped and the run stopped early.
    pub aborted: Option<String>,
}

impl RefereeReport {
    pub fn recorded(&self) -> u64 {
        (self.games.len() + self.bell.len()) as u64
    }

    pub fn incomplete(&self) -> u64 {
        let g = self.games.iter().filter(|r| !r.is_complete()).count();
        let b = self.bell.iter().filter(|r| !r.is_complete()).count();
        (g + b) as u64
    }
}

enum Collected {
    Both([WireMessage; 2]),
    Missing,
    Closed(String),
}

fn collect_one<L: RefereeLink>(
    link: &mut L,
    role: Role,
    round: u64,
    expect: Kind,
    deadline: Instant,
) -> Result<Result<Option<WireMessage>, String>, ProtocolError> {
    loop {
        let msg = match link.recv(role, deadline) {
            Ok(m) => m,
            Err(LinkError::Timeout) => return Ok(Ok(None)),
            Err(LinkError::Closed(why)) => return Ok(Err(why)),
            Err(LinkError::Wire(e)) => return Err(e.into()),
        };
        let from = Endpoint::Player(role);
        if msg.role.is_some_and(|r| r != role) {
            return Err(ProtocolError::unexpected(from, &msg));
        }
        if msg.round < round {
            continue;
        }
        if msg.round > round {
            return Err(ProtocolError::RoundAhead {
                from: role,
                got: msg.round,
                current: round,
            });
        }
        if msg.kind == Kind::Response && msg.bit.is_none() {
            return Ok(Ok(None));
        }
        if msg.kind != expect {
            return Err(ProtocolError::unexpected(from, &msg));
        }
        return Ok(Ok(Some(msg)));
    }
}

fn exchange<L: RefereeLink>(
    link: &mut L,
    round: u64,
    out: [WireMessage; 2],
    expect: Kind,
    deadline: Instant,
) -> Result<Collected, ProtocolError> {
    for (role, msg) in [Role::Alice, Role::Bob].into_iter().zip(out) {
        if let Err(e) = link.send(role, msg) {
            return Ok(Collected::Closed(describe(role, e)));
        }
    }
    let mut got = [None, None];
    for role in [Role::Alice, Role::Bob] {
        match collect_one(link, role, round, expect, deadline)? {
            Ok(m) => got[role.index()] = m,
            Err(why) => return Ok(Collected::Closed(format!("{role}: {why}"))),
        }
    }
    Ok(match got {
        [Some(a), Some(b)] => Collected::Both([a, b]),
        _ => Collected::Missing,
    })
}

fn describe(role: Role, e: LinkError) -> String {
    match e {
        LinkError::Closed(why) => format!("{role}: {why}"),
        other => format!("{role}: {other:?}"),
    }
}

struct RoundData {
    gamma: Option<u8>,
    settings: Option<(u32, u32)>,
    outputs: Option<OutcomePair>,
    closed: Option<String>,
}

fn play_round<L: RefereeLink>(
    link: &mut L,
    cfg: &RefereeConfig,
    state: &mut RefereeState,
    query: Option<Query>,
    timeout: Duration,
) -> Result<RoundData, ProtocolError> {
    let r = state.round_index();
    let deadline = Instant::now() + timeout;
    let mut data = RoundData {
        gamma: None,
        settings: None,
        outputs: None,
        closed: None,
    };
    let ready = WireMessage::new(Kind::EventReady, r);
    let ready = exchange(link, r, [ready, ready], Kind::EventReady, deadline)?;
    state.advance(Phase::Query, query)?;
    let mut responses = None;
    match ready {
        Collected::Both([a, _]) => {
            data.gamma = a.gamma;
            let mut qa = WireMessage::new(Kind::Query, r);
            let mut qb = qa;
            if let Some(q) = query {
                qa.vertex = Some(q.s());
                qb.vertex = Some(q.t());
            }
            state.advance(Phase::Collect, None)?;
            match exchange(link, r, [qa, qb], Kind::Response, deadline)? {
                Collected::Both(m) => responses = Some((m, [qa.vertex, qb.vertex])),
                Collected::Missing => {}
                Collected::Closed(why) => data.closed = Some(why),
            }
        }
        Collected::Missing => state.advance(Phase::Collect, None)?,
        Collected::Closed(why) => {
            data.closed = Some(why);
            state.advance(Phase::Collect, None)?;
        }
    }
    if let Some(([a, b], asked)) = responses {
        for (role, m, v) in [(Role::Alice, a, asked[0]), (Role::Bob, b, asked[1])] {
            if m.vertex.is_none() || (v.is_some() && m.vertex != v) {
                return Err(ProtocolError::unexpected(Endpoint::Player(role), &m));
            }
        }
        data.settings = a.vertex.zip(b.vertex);
        data.outputs = Some(OutcomePair {
            a: a.bit.expect("complete response"),
            b: b.bit.expect("complete response"),
        });
    }
    if cfg.mode == Mode::Bell && data.settings.is_none() {
        data.outputs = None;
    }
    state.advance(Phase::Evaluate, None)?;
    Ok(data)
}

/// Runs the full game over `link`. Every commenced round produces exactly one
/// record; a round that times out or loses its source is recorded without
/// outputs and counted as lost.
pub fn run_referee<L: RefereeLink>(
    link: &mut L,
    cfg: &RefereeConfig,
) -> Result<RefereeReport, ProtocolError> {
    let mut rng = component_rng(cfg.seed, SeedLabel::Referee);
    let mut state = RefereeState::new();
    let mut report = RefereeReport::default();
    for _ in 0..cfg.rounds {
        state.advance(Phase::Strategise, None)?;
        report.commenced += 1;
        let r = state.round_index();
        let query = match cfg.mode {
            Mode::Game => Some(draw_query(&mut rng, cfg.n)),
            Mode::Bell => None,
        };
        let data = play_round(link, cfg, &mut state, query, cfg.timeout)?;
        let mut result = WireMessage::new(Kind::RoundResult, r);
        match query {
            Some(query) => {
                let won = data.outputs.is_some_and(|o| wins(&query, o.a, o.b));
                if data.outputs.is_some() {
                    result.won = Some(won);
                }
                report.games.push(RoundRecord {
                    round: r,
                    gamma: data.gamma,
                    query,
                    outputs: data.outputs,
                    won,
                    strategy_tag: cfg.strategy_tag,
                });
            }
            None => report.bell.push(BellRecord {
                round: r,
                gamma: data.gamma,
                settings: data.settings,
                outputs: data.outputs,
            }),
        }
        if let Some(why) = data.closed {
            report.aborted = Some(why);
            break;
        }
        for role in [Role::Alice, Role::Bob] {
            if let Err(e) = link.send(role, result) {
                report.aborted = Some(describe(role, e));
            }
        }
        if report.aborted.is_some() {
            break;
        }
    }
    if state.phase() == Phase::Evaluate {
        state.advance(Phase::Done, None)?;
    }
    let finish = WireMessage::new(Kind::Finish, state.round_index());
    for role in [Role::Alice, Role::Bob] {
        let _ = link.send(role, finish);
    }
    Ok(report)
}
