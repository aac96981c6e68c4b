use std::fmt::Write as _;

use thiserror::Error;

use crate::game::{enumerate_queries, omega_c, GameSize, Query};
use crate::quantum::OutcomePair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyTag {
    Classical,
    Quantum,
}

impl StrategyTag {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyTag::Classical => "classical",
            StrategyTag::Quantum => "quantum",
        }
    }
}

pub const ROUND_LOG_HEADER: &str = "round,strategy,gamma,s,t,kind,a,b,won";
pub const BELL_LOG_HEADER: &str = "round,x,y,a,b";

/// One commenced game round. `outputs` is `None` when the round aborted
/// (timeout or source failure); such rounds count as losses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: u64,
    pub gamma: Option<u8>,
    pub query: Query,
    pub outputs: Option<OutcomePair>,
    pub won: bool,
    pub strategy_tag: StrategyTag,
}

impl RoundRecord {
    pub fn is_complete(&self) -> bool {
        self.outputs.is_some()
    }

    /// `round,strategy,gamma,s,t,kind,a,b,won`; absent values are `-`.
    pub fn log_line(&self) -> String {
        let dash = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.round,
            self.strategy_tag.as_str(),
            dash(self.gamma.map(|g| g.to_string())),
            self.query.s(),
            self.query.t(),
            self.query.kind().as_str(),
            dash(self.outputs.map(|o| o.a.to_string())),
            dash(self.outputs.map(|o| o.b.to_string())),
            u8::from(self.won)
        )
    }
}

/// One commenced Bell-test round. Settings are chosen by the players.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BellRecord {
    pub round: u64,
    pub gamma: Option<u8>,
    pub settings: Option<(u32, u32)>,
    pub outputs: Option<OutcomePair>,
}

impl BellRecord {
    pub fn is_complete(&self) -> bool {
        self.settings.is_some() && self.outputs.is_some()
    }

    /// `round,x,y,a,b`; absent values are `-`.
    pub fn log_line(&self) -> String {
        let dash = |v: Option<u32>| v.map_or_else(|| "-".to_string(), |x| x.to_string());
        format!(
            "{},{},{},{},{}",
            self.round,
            dash(self.settings.map(|s| s.0)),
            dash(self.settings.map(|s| s.1)),
            dash(self.outputs.map(|o| o.a as u32)),
            dash(self.outputs.map(|o| o.b as u32)),
        )
    }
}

pub fn round_log(records: &[RoundRecord]) -> String {
    let mut out = String::from(ROUND_LOG_HEADER);
    out.push('\n');
    for r in records {
        writeln!(out, "{}", r.log_line()).expect("writing to a String");
    }
    out
}

pub fn bell_log(records: &[BellRecord]) -> String {
    let mut out = String::from(BELL_LOG_HEADER);
    out.push('\n');
    for r in records {
        writeln!(out, "{}", r.log_line()).expect("writing to a String");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("no rounds were played")]
    NoRounds,
    #[error("standard error is zero; the significance is undefined")]
    ZeroError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryTally {
    pub query: Query,
    pub count: u64,
    pub wins: u64,
}

/// Summary of a game run. Incomplete rounds stay in the denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct GameStats {
    pub n: GameSize,
    pub total_rounds: u64,
    pub wins: u64,
    pub incomplete: u64,
    /// `None` for an empty run.
    pub omega_hat: Option<f64>,
    pub std_error: Option<f64>,
    /// Indexed in canonical query order.
    pub per_query: Vec<QueryTally>,
}

impl GameStats {
    pub fn from_records(n: GameSize, records: &[RoundRecord]) -> Self {
        let mut per_query: Vec<QueryTally> = enumerate_queries(n)
            .into_iter()
            .map(|query| QueryTally {
                query,
                count: 0,
                wins: 0,
            })
            .collect();
        let mut wins = 0;
        let mut incomplete = 0;
        for r in records {
            let slot = &mut per_query[r.query.canonical_index()];
            slot.count += 1;
            if r.won {
                slot.wins += 1;
                wins += 1;
            }
            if !r.is_complete() {
                incomplete += 1;
            }
        }
        let total = records.len() as u64;
        let (omega_hat, std_error) = if total == 0 {
            (None, None)
        } else {
            let p = wins as f64 / total as f64;
            (Some(p), Some(binomial_se(p, total)))
        };
        GameStats {
            n,
            total_rounds: total,
            wins,
            incomplete,
            omega_hat,
            std_error,
            per_query,
        }
    }

    pub fn sigma_above_classical(&self) -> Result<f64, StatsError> {
        let (Some(p), Some(se)) = (self.omega_hat, self.std_error) else {
            return Err(StatsError::NoRounds);
        };
        sigma_above_classical(p, se, self.n)
    }
}

/// `sqrt(p (1-p) / trials)`.
pub fn binomial_se(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// `(ω̂ - ω_c) / SE`.
pub fn sigma_above_classical(omega_hat: f64, std_error: f64, n: GameSize) -> Result<f64, StatsError> {
    let excess = omega_hat - omega_c(n);
    if excess == 0.0 {
        return Ok(0.0);
    }
    if std_error == 0.0 {
        return Err(StatsError::ZeroError);
    }
    Ok(excess / std_error)
}

/// Significance for a win rate observed over `rounds` trials with the
/// binomial standard error.
pub fn sigma_for(omega_hat: f64, rounds: u64, n: GameSize) -> Result<f64, StatsError> {
    if rounds == 0 {
        return Err(StatsError::NoRounds);
    }
    sigma_above_classical(omega_hat, binomial_se(omega_hat, rounds), n)
}
