//! TCP transport: one line-delimited connection per player to the referee
//! and, in quantum mode, one per player to the source.

use std::collections::VecDeque;
use std::io::{self, BufRead, BufReader, ErrorKind, Write};
use std::net::{Shutdown, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use super::{
    run_referee, Endpoint, Envelope, Kind, LinkError, Mode, Player, PlayerConfig,
    ProtocolError, RefereeConfig, RefereeLink, RefereeReport, Role, Source, SourceConfig,
    SourceOutput, WireError, WireMessage,
};

const MAX_LINE: usize = 4096;
pub const HELLO_TIMEOUT: Duration = Duration::from_secs(5);
/// How long the referee waits for both players to register.
pub const REGISTRATION_TIMEOUT: Duration = Duration::from_secs(30);
/// How long a player keeps retrying a peer it has not reached yet.
pub const STARTUP_PATIENCE: Duration = Duration::from_secs(10);
const POLL: Duration = Duration::from_millis(2);

/// A connection read line by line. A read that times out keeps the partial
/// line for the next call.
pub struct LineConn {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    partial: Vec<u8>,
}

impl LineConn {
    pub fn new(stream: TcpStream) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        stream.set_nonblocking(false)?;
        let writer = stream.try_clone()?;
        Ok(LineConn {
            reader: BufReader::new(stream),
            writer,
            partial: Vec::new(),
        })
    }

    pub fn connect(addr: &str) -> Result<Self, ProtocolError> {
        let stream = addr
            .to_socket_addrs()
            .and_then(|mut a| {
                a.next()
                    .ok_or_else(|| io::Error::new(ErrorKind::NotFound, "no address"))
            })
            .and_then(TcpStream::connect)
            .map_err(|e| ProtocolError::io(format!("connect to {addr}"), e))?;
        LineConn::new(stream).map_err(|e| ProtocolError::io(format!("connect to {addr}"), e))
    }

    /// Keeps trying until `patience` has passed, for peers still starting up.
    pub fn connect_retry(addr: &str, patience: Duration) -> Result<Self, ProtocolError> {
        let start = Instant::now();
        loop {
            match Self::connect(addr) {
                Err(ProtocolError::Io { source, .. })
                    if source.kind() == ErrorKind::ConnectionRefused && start.elapsed() < patience =>
                {
                    thread::sleep(Duration::from_millis(20));
                }
                other => return other,
            }
        }
    }

    pub fn send(&mut self, msg: &WireMessage) -> io::Result<()> {
        let mut line = msg.encode();
        line.push('\n');
        self.writer.write_all(line.as_bytes())
    }

    /// Next message; `None` timeout blocks indefinitely.
    pub fn recv(&mut self, timeout: Option<Duration>) -> Result<WireMessage, LinkError> {
        self.reader
            .get_ref()
            .set_read_timeout(timeout)
            .map_err(|e| LinkError::Closed(e.to_string()))?;
        match self.reader.read_until(b'\n', &mut self.partial) {
            Ok(_) if self.partial.last() == Some(&b'\n') => {
                let line = std::mem::take(&mut self.partial);
                let text = String::from_utf8_lossy(&line);
                WireMessage::decode(text.trim_end_matches('\n')).map_err(LinkError::Wire)
            }
            Ok(_) => Err(LinkError::Closed("connection closed".into())),
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                if self.partial.len() > MAX_LINE {
                    return Err(LinkError::Wire(WireError::Malformed("line too long".into())));
                }
                Err(LinkError::Timeout)
            }
            Err(e) => Err(LinkError::Closed(e.to_string())),
        }
    }

    pub fn shutdown(&self) {
        let _ = self.writer.shutdown(Shutdown::Both);
    }
}

fn reject(conn: &mut LineConn) {
    let _ = conn.send(&WireMessage::new(Kind::Finish, 0));
    conn.shutdown();
}

/// Reads a hello and returns the role it claims. Anything else is refused.
fn read_hello(conn: &mut LineConn) -> Option<Role> {
    match conn.recv(Some(HELLO_TIMEOUT)) {
        Ok(m) if m.kind == Kind::Hello => m.role,
        _ => None,
    }
}

/// Referee side of both player connections.
pub struct TcpLink {
    conns: [LineConn; 2],
}

impl RefereeLink for TcpLink {
    fn send(&mut self, to: Role, msg: WireMessage) -> Result<(), LinkError> {
        self.conns[to.index()]
            .send(&msg)
            .map_err(|e| LinkError::Closed(e.to_string()))
    }

    fn recv(&mut self, from: Role, deadline: Instant) -> Result<WireMessage, LinkError> {
        let left = deadline
            .saturating_duration_since(Instant::now())
            .max(Duration::from_millis(1));
        self.conns[from.index()].recv(Some(left))
    }
}

/// Accepts the two players, rejecting malformed hellos, version mismatches
/// and a second claim on a taken role, then runs the game.
pub fn serve_referee(listener: TcpListener, cfg: &RefereeConfig) -> Result<RefereeReport, ProtocolError> {
    let mut slots: [Option<LineConn>; 2] = [None, None];
    let start = Instant::now();
    listener
        .set_nonblocking(true)
        .map_err(|e| ProtocolError::io("referee listener", e))?;
    while slots.iter().any(Option::is_none) {
        let stream = match listener.accept() {
            Ok((s, _)) => s,
            Err(e) if e.kind() == ErrorKind::WouldBlock => {
                if start.elapsed() > REGISTRATION_TIMEOUT {
                    return Err(ProtocolError::Rejected("players did not register in time".into()));
                }
                thread::sleep(POLL);
                continue;
            }
            Err(e) => return Err(ProtocolError::io("referee accept", e)),
        };
        let Ok(mut conn) = LineConn::new(stream) else {
            continue;
        };
        match read_hello(&mut conn) {
            Some(role) if slots[role.index()].is_none() => {
                if conn.send(&WireMessage::new(Kind::Hello, 0).role(role)).is_ok() {
                    slots[role.index()] = Some(conn);
                }
            }
            _ => reject(&mut conn),
        }
    }
    let [Some(a), Some(b)] = slots else {
        unreachable!("loop exits with both slots filled")
    };
    let mut link = TcpLink { conns: [a, b] };
    run_referee(&mut link, cfg)
}

fn handshake(conn: &mut LineConn, role: Role, peer: &str) -> Result<(), ProtocolError> {
    conn.send(&WireMessage::new(Kind::Hello, 0).role(role))
        .map_err(|e| ProtocolError::io(format!("hello to {peer}"), e))?;
    match conn.recv(Some(HELLO_TIMEOUT)) {
        Ok(m) if m.kind == Kind::Hello && m.role == Some(role) => Ok(()),
        Ok(m) => Err(ProtocolError::Rejected(format!("{peer} answered `{}`", m.encode()))),
        Err(e) => Err(ProtocolError::Rejected(format!("{peer}: {e:?}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PlayerSummary {
    /// Rounds this player reported as lost because the source went away.
    pub source_losses: u64,
}

/// Runs one player until the referee finishes or hangs up. The source
/// connection is opened lazily and reopened after a loss.
pub fn connect_player(
    referee: &str,
    source: Option<&str>,
    cfg: PlayerConfig,
    source_timeout: Duration,
) -> Result<PlayerSummary, ProtocolError> {
    let role = cfg.role;
    let mut rc = LineConn::connect_retry(referee, STARTUP_PATIENCE)?;
    handshake(&mut rc, role, referee)?;
    let mut player = Player::new(cfg);
    let mut src: Option<LineConn> = None;
    let mut src_seen = false;
    let mut summary = PlayerSummary::default();
    while !player.is_finished() {
        let msg = match rc.recv(None) {
            Ok(m) => m,
            Err(LinkError::Wire(e)) => return Err(e.into()),
            Err(_) => break,
        };
        let mut queue: VecDeque<Envelope> = player.on_referee(msg)?.into();
        while let Some(env) = queue.pop_front() {
            match env.to {
                Endpoint::Referee => {
                    if rc.send(&env.msg).is_err() {
                        return Ok(summary);
                    }
                }
                Endpoint::Source => {
                    if src.is_none() {
                        let patience = if src_seen { Duration::ZERO } else { STARTUP_PATIENCE };
                        src = source.and_then(|addr| {
                            let mut c = LineConn::connect_retry(addr, patience).ok()?;
                            handshake(&mut c, role, addr).ok()?;
                            Some(c)
                        });
                        src_seen |= src.is_some();
                    }
                    let reply = src.as_mut().map(|c| {
                        c.send(&env.msg).map_err(|_| LinkError::Timeout)?;
                        if env.msg.kind == Kind::Finish {
                            return Ok(None);
                        }
                        c.recv(Some(source_timeout)).map(Some)
                    });
                    match reply {
                        Some(Ok(None)) => {}
                        Some(Ok(Some(m))) => queue.extend(player.on_source(m)?),
                        _ => {
                            if let Some(c) = src.take() {
                                c.shutdown();
                            }
                            if player.awaiting_source() {
                                summary.source_losses += 1;
                            }
                            queue.extend(player.on_source_lost());
                        }
                    }
                }
                Endpoint::Player(_) => unreachable!("route check"),
            }
        }
    }
    if let Some(c) = src {
        c.shutdown();
    }
    Ok(summary)
}

enum SourceEvent {
    Connected(u64, Role, LineConn),
    Line(u64, Result<WireMessage, LinkError>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SourceSummary {
    pub resets: u64,
}

/// Runs the entanglement source until both players send `finish`.
pub fn serve_source(listener: TcpListener, cfg: SourceConfig) -> Result<SourceSummary, ProtocolError> {
    let (tx, rx) = mpsc::channel();
    let stop = Arc::new(AtomicBool::new(false));
    listener
        .set_nonblocking(true)
        .map_err(|e| ProtocolError::io("source listener", e))?;
    let acceptor = {
        let stop = Arc::clone(&stop);
        thread::spawn(move || accept_loop(listener, tx, stop))
    };
    let mut source = Source::new(cfg);
    let mut conns: [Option<(u64, LineConn)>; 2] = [None, None];
    let mut summary = SourceSummary::default();
    while let Ok(ev) = rx.recv() {
        match ev {
            SourceEvent::Connected(id, role, mut conn) => {
                if conns[role.index()].is_some() {
                    reject(&mut conn);
                } else if conn.send(&WireMessage::new(Kind::Hello, 0).role(role)).is_ok() {
                    conns[role.index()] = Some((id, conn));
                }
            }
            SourceEvent::Line(id, line) => {
                let Some(role) = [Role::Alice, Role::Bob]
                    .into_iter()
                    .find(|r| conns[r.index()].as_ref().is_some_and(|(i, _)| *i == id))
                else {
                    continue;
                };
                let out = match line.map_err(|_| ()).and_then(|m| source.handle(role, m).map_err(|_| ())) {
                    Ok(out) => out,
                    Err(()) => {
                        if let Some((_, c)) = conns[role.index()].take() {
                            c.shutdown();
                        }
                        continue;
                    }
                };
                for o in out {
                    match o {
                        SourceOutput::Send(to, msg) => {
                            let slot = &mut conns[to.index()];
                            if slot.as_mut().is_some_and(|(_, c)| c.send(&msg).is_err()) {
                                *slot = None;
                            }
                        }
                        SourceOutput::Reset => {
                            summary.resets += 1;
                            for slot in &mut conns {
                                if let Some((_, c)) = slot.take() {
                                    c.shutdown();
                                }
                            }
                        }
                    }
                }
                if source.is_finished() {
                    break;
                }
            }
        }
    }
    stop.store(true, Ordering::Relaxed);
    let _ = acceptor.join();
    Ok(summary)
}

fn accept_loop(listener: TcpListener, tx: mpsc::Sender<SourceEvent>, stop: Arc<AtomicBool>) {
    let mut next_id = 0u64;
    while !stop.load(Ordering::Relaxed) {
        let stream = match listener.accept() {
            Ok((s, _)) => s,
            Err(e) if e.kind() == ErrorKind::WouldBlock => {
                thread::sleep(POLL);
                continue;
            }
            Err(_) => return,
        };
        next_id += 1;
        let id = next_id;
        let tx = tx.clone();
        thread::spawn(move || {
            let Ok(mut conn) = LineConn::new(stream) else {
                return;
            };
            let Some(role) = read_hello(&mut conn) else {
                reject(&mut conn);
                return;
            };
            let Ok(reader) = conn.reader.get_ref().try_clone().and_then(LineConn::new) else {
                return;
            };
            let mut reader = reader;
            if tx.send(SourceEvent::Connected(id, role, conn)).is_err() {
                return;
            }
            loop {
                let msg = reader.recv(None);
                let closed = matches!(msg, Err(LinkError::Closed(_)));
                if tx.send(SourceEvent::Line(id, msg)).is_err() || closed {
                    return;
                }
            }
        });
    }
}

/// Referee, both players and (for quantum play) the source as threads on the
/// loopback interface.
pub fn run_local(cfg: &super::GameConfig, mode: Mode) -> Result<RefereeReport, ProtocolError> {
    let bind = |what: &str| {
        TcpListener::bind("127.0.0.1:0").map_err(|e| ProtocolError::io(format!("bind {what}"), e))
    };
    let referee = bind("referee")?;
    let referee_addr = referee
        .local_addr()
        .map_err(|e| ProtocolError::io("referee address", e))?
        .to_string();
    let source = match cfg.source() {
        Some(scfg) => {
            let l = bind("source")?;
            let addr = l
                .local_addr()
                .map_err(|e| ProtocolError::io("source address", e))?
                .to_string();
            Some((addr, thread::spawn(move || serve_source(l, scfg))))
        }
        None => None,
    };
    let source_addr = source.as_ref().map(|(a, _)| a.clone());
    let players: Vec<_> = [Role::Alice, Role::Bob]
        .into_iter()
        .map(|role| {
            let pcfg = cfg.player(role);
            let raddr = referee_addr.clone();
            let saddr = source_addr.clone();
            let timeout = cfg.timeout * 2;
            thread::spawn(move || connect_player(&raddr, saddr.as_deref(), pcfg, timeout))
        })
        .collect();
    let report = serve_referee(referee, &cfg.referee(mode));
    for p in players {
        p.join().expect("player thread panicked")?;
    }
    if let Some((_, handle)) = source {
        handle.join().expect("source thread panicked")?;
    }
    report
}
