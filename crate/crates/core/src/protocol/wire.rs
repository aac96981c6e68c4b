//! Line-delimited text messages exchanged between referee, players and the
//! entanglement source.
//!
//! Grammar (one message per line, keys in this fixed order):
//!
//! ```text
//! v=1 kind=<hello|event_ready|query|response|round_result|finish> round=<uint>
//!     [role=<alice|bob>] [gamma=<0..3>] [vertex=<uint>] [bit=<0|1>] [won=<0|1>]
//! ```

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("protocol version {0} not supported (expected {PROTOCOL_VERSION})")]
    Version(String),
    #[error("missing field `{0}`")]
    Missing(&'static str),
    #[error("unknown or out-of-order key `{0}`")]
    UnexpectedKey(String),
    #[error("malformed token `{0}`")]
    Malformed(String),
    #[error("invalid value `{value}` for `{key}`")]
    Value { key: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Hello,
    EventReady,
    Query,
    Response,
    RoundResult,
    Finish,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Hello => "hello",
            Kind::EventReady => "event_ready",
            Kind::Query => "query",
            Kind::Response => "response",
            Kind::RoundResult => "round_result",
            Kind::Finish => "finish",
        }
    }
}

impl FromStr for Kind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "hello" => Kind::Hello,
            "event_ready" => Kind::EventReady,
            "query" => Kind::Query,
            "response" => Kind::Response,
            "round_result" => Kind::RoundResult,
            "finish" => Kind::Finish,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Alice,
    Bob,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Alice => "alice",
            Role::Bob => "bob",
        }
    }

    pub fn other(self) -> Role {
        match self {
            Role::Alice => Role::Bob,
            Role::Bob => Role::Alice,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Role::Alice => 0,
            Role::Bob => 1,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "alice" => Ok(Role::Alice),
            "bob" => Ok(Role::Bob),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WireMessage {
    pub kind: Kind,
    pub round: u64,
    pub role: Option<Role>,
    pub gamma: Option<u8>,
    pub vertex: Option<u32>,
    pub bit: Option<u8>,
    pub won: Option<bool>,
}

impl WireMessage {
    pub fn new(kind: Kind, round: u64) -> Self {
        WireMessage {
            kind,
            round,
            role: None,
            gamma: None,
            vertex: None,
            bit: None,
            won: None,
        }
    }

    pub fn role(mut self, role: Role) -> Self {
        self.role = Some(role);
        self
    }

    pub fn gamma(mut self, gamma: u8) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn vertex(mut self, vertex: u32) -> Self {
        self.vertex = Some(vertex);
        self
    }

    pub fn bit(mut self, bit: u8) -> Self {
        self.bit = Some(bit);
        self
    }

    pub fn won(mut self, won: bool) -> Self {
        self.won = Some(won);
        self
    }

    /// Encoded line without the trailing newline.
    pub fn encode(&self) -> String {
        self.to_string()
    }

    pub fn decode(line: &str) -> Result<Self, WireError> {
        line.parse()
    }
}

impl fmt::Display for WireMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "v={PROTOCOL_VERSION} kind={} round={}",
            self.kind.as_str(),
            self.round
        )?;
        if let Some(r) = self.role {
            write!(f, " role={r}")?;
        }
        if let Some(g) = self.gamma {
            write!(f, " gamma={g}")?;
        }
        if let Some(v) = self.vertex {
            write!(f, " vertex={v}")?;
        }
        if let Some(b) = self.bit {
            write!(f, " bit={b}")?;
        }
        if let Some(w) = self.won {
            write!(f, " won={}", u8::from(w))?;
        }
        Ok(())
    }
}

const OPTIONAL_KEYS: [&str; 5] = ["role", "gamma", "vertex", "bit", "won"];

fn split_token(token: &str) -> Result<(&str, &str), WireError> {
    token
        .split_once('=')
        .filter(|(k, v)| !k.is_empty() && !v.is_empty())
        .ok_or_else(|| WireError::Malformed(token.to_string()))
}

fn value_err(key: &'static str, value: &str) -> WireError {
    WireError::Value {
        key,
        value: value.to_string(),
    }
}

/// Unsigned decimal without sign or leading `+`.
fn parse_uint<T: FromStr>(key: &'static str, value: &str) -> Result<T, WireError> {
    if !value.bytes().all(|b| b.is_ascii_digit()) {
        return Err(value_err(key, value));
    }
    value.parse().map_err(|_| value_err(key, value))
}

fn parse_bit(key: &'static str, value: &str) -> Result<u8, WireError> {
    match value {
        "0" => Ok(0),
        "1" => Ok(1),
        _ => Err(value_err(key, value)),
    }
}

impl FromStr for WireMessage {
    type Err = WireError;

    fn from_str(line: &str) -> Result<Self, WireError> {
        let line = line.strip_suffix('\n').unwrap_or(line);
        let mut tokens = line.split(' ');

        let (k, v) = split_token(tokens.next().ok_or(WireError::Missing("v"))?)?;
        if k != "v" {
            return Err(WireError::Missing("v"));
        }
        if v != PROTOCOL_VERSION.to_string() {
            return Err(WireError::Version(v.to_string()));
        }
        let (k, v) = split_token(tokens.next().ok_or(WireError::Missing("kind"))?)?;
        if k != "kind" {
            return Err(WireError::Missing("kind"));
        }
        let kind = v.parse().map_err(|_| value_err("kind", v))?;
        let (k, v) = split_token(tokens.next().ok_or(WireError::Missing("round"))?)?;
        if k != "round" {
            return Err(WireError::Missing("round"));
        }
        let mut msg = WireMessage::new(kind, parse_uint("round", v)?);

        let mut next_key = 0;
        for token in tokens {
            let (k, v) = split_token(token)?;
            let pos = OPTIONAL_KEYS[next_key..]
                .iter()
                .position(|&key| key == k)
                .ok_or_else(|| WireError::UnexpectedKey(k.to_string()))?;
            next_key += pos + 1;
            match k {
                "role" => msg.role = Some(v.parse().map_err(|_| value_err("role", v))?),
                "gamma" => {
                    let g: u8 = parse_uint("gamma", v)?;
                    if g > 3 {
                        return Err(value_err("gamma", v));
                    }
                    msg.gamma = Some(g);
                }
                "vertex" => msg.vertex = Some(parse_uint("vertex", v)?),
                "bit" => msg.bit = Some(parse_bit("bit", v)?),
                "won" => msg.won = Some(parse_bit("won", v)? == 1),
                _ => unreachable!("key filtered above"),
            }
        }
        Ok(msg)
    }
}
