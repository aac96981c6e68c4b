//! The odd-cycle game: queries, the winning condition, and deterministic
//! (coloring) strategies together with an exhaustive classical oracle.

use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

/// Largest cycle size accepted by [`brute_force_optimum`].
pub const BRUTE_FORCE_CAP: u32 = 9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("invalid game size {0}: n must be odd and at least 3")]
    InvalidSize(u32),
    #[error("strategy covers {got} vertices but the cycle has {expected}")]
    StrategyLength { expected: usize, got: usize },
    #[error("coloring entry at vertex {vertex} is {value}, expected a bit")]
    NotABit { vertex: usize, value: u8 },
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: u32, n: u32 },
    #[error("({s}, {t}) is not a same or adjacent vertex pair for n = {n}")]
    InvalidQuery { s: u32, t: u32, n: u32 },
    #[error("brute-force search refused for n = {n}: cap is n <= {cap}")]
    BruteForceCap { n: u32, cap: u32 },
}

/// Number of cycle vertices. Always odd and at least 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GameSize(u32);

impl GameSize {
    pub fn new(n: u32) -> Result<Self, GameError> {
        if n < 3 || n.is_multiple_of(2) {
            return Err(GameError::InvalidSize(n));
        }
        Ok(GameSize(n))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Number of distinct queries, `2n`.
    pub fn query_count(self) -> usize {
        2 * self.0 as usize
    }

    /// Iterator over all odd sizes in `[lo, hi]`.
    pub fn odd_range(lo: u32, hi: u32) -> impl Iterator<Item = GameSize> {
        (lo.max(3)..=hi).filter(|n| n % 2 == 1).map(GameSize)
    }
}

impl fmt::Display for GameSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QueryKind {
    Same,
    Adjacent,
}

impl QueryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryKind::Same => "same",
            QueryKind::Adjacent => "adjacent",
        }
    }
}

/// A referee question: Alice is asked about vertex `s`, Bob about `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Query {
    s: u32,
    t: u32,
    kind: QueryKind,
}

impl Query {
    pub fn same(n: GameSize, j: u32) -> Result<Self, GameError> {
        check_vertex(n, j)?;
        Ok(Query {
            s: j,
            t: j,
            kind: QueryKind::Same,
        })
    }

    pub fn adjacent(n: GameSize, j: u32) -> Result<Self, GameError> {
        check_vertex(n, j)?;
        Ok(Query {
            s: j,
            t: (j + 1) % n.get(),
            kind: QueryKind::Adjacent,
        })
    }

    /// Builds the query for an `(s, t)` pair, inferring its kind.
    pub fn from_pair(n: GameSize, s: u32, t: u32) -> Result<Self, GameError> {
        check_vertex(n, s)?;
        check_vertex(n, t)?;
        if s == t {
            Query::same(n, s)
        } else if t == (s + 1) % n.get() {
            Query::adjacent(n, s)
        } else {
            Err(GameError::InvalidQuery { s, t, n: n.get() })
        }
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn kind(&self) -> QueryKind {
        self.kind
    }

    /// Position of this query in [`enumerate_queries`] order.
    pub fn canonical_index(&self) -> usize {
        2 * self.s as usize
            + match self.kind {
                QueryKind::Same => 0,
                QueryKind::Adjacent => 1,
            }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.s, self.t)
    }
}

fn check_vertex(n: GameSize, v: u32) -> Result<(), GameError> {
    if v >= n.get() {
        return Err(GameError::VertexOutOfRange { vertex: v, n: n.get() });
    }
    Ok(())
}

/// All `2n` queries in canonical order: ascending `j`, `Same` before `Adjacent`.
pub fn enumerate_queries(n: GameSize) -> Vec<Query> {
    (0..n.get())
        .flat_map(|j| {
            [
                Query {
                    s: j,
                    t: j,
                    kind: QueryKind::Same,
                },
                Query {
                    s: j,
                    t: (j + 1) % n.get(),
                    kind: QueryKind::Adjacent,
                },
            ]
        })
        .collect()
}

/// Winning condition: equal answers on the same vertex, different answers on
/// adjacent vertices.
pub fn wins(q: &Query, a: u8, b: u8) -> bool {
    match q.kind {
        QueryKind::Same => a == b,
        QueryKind::Adjacent => a != b,
    }
}

/// A deterministic pair of vertex colorings agreed before the game.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClassicalStrategy {
    color_a: Vec<u8>,
    color_b: Vec<u8>,
}

impl ClassicalStrategy {
    pub fn new(color_a: Vec<u8>, color_b: Vec<u8>) -> Result<Self, GameError> {
        if color_a.len() != color_b.len() {
            return Err(GameError::StrategyLength {
                expected: color_a.len(),
                got: color_b.len(),
            });
        }
        for (vertex, &value) in color_a.iter().chain(color_b.iter()).enumerate() {
            if value > 1 {
                return Err(GameError::NotABit {
                    vertex: vertex % color_a.len(),
                    value,
                });
            }
        }
        Ok(ClassicalStrategy { color_a, color_b })
    }

    pub fn color_a(&self) -> &[u8] {
        &self.color_a
    }

    pub fn color_b(&self) -> &[u8] {
        &self.color_b
    }

    pub fn len(&self) -> usize {
        self.color_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.color_a.is_empty()
    }

    /// Outputs for a query, `(a, b)`.
    pub fn answer(&self, q: &Query) -> (u8, u8) {
        (self.color_a[q.s as usize], self.color_b[q.t as usize])
    }
}

/// The alternating coloring `v mod 2`, shared by both players. It fails only
/// on the edge `(n-1, 0)` where two vertices of color 0 meet.
pub fn parity_strategy(n: GameSize) -> ClassicalStrategy {
    let coloring: Vec<u8> = (0..n.get()).map(|v| (v % 2) as u8).collect();
    ClassicalStrategy {
        color_a: coloring.clone(),
        color_b: coloring,
    }
}

/// Exact winning probability as a rational with its real rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WinProbability(Ratio<u64>);

impl WinProbability {
    pub fn new(wins: u64, total: u64) -> Self {
        assert!(total > 0 && wins <= total, "win probability out of range");
        WinProbability(Ratio::new(wins, total))
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }

    pub fn value(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl fmt::Display for WinProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

fn count_wins(strategy: &ClassicalStrategy, n: GameSize) -> u64 {
    enumerate_queries(n)
        .iter()
        .filter(|q| {
            let (a, b) = strategy.answer(q);
            wins(q, a, b)
        })
        .count() as u64
}

/// Exact average over the `2n` uniformly drawn queries.
pub fn strategy_win_probability(
    strategy: &ClassicalStrategy,
    n: GameSize,
) -> Result<WinProbability, GameError> {
    if strategy.len() != n.get() as usize {
        return Err(GameError::StrategyLength {
            expected: n.get() as usize,
            got: strategy.len(),
        });
    }
    Ok(WinProbability::new(
        count_wins(strategy, n),
        n.query_count() as u64,
    ))
}

/// Exhaustive search over all `2^(2n)` deterministic strategy pairs.
///
/// Candidates are visited in lexicographic order of the bit strings
/// `(colorA, colorB)` and only strict improvements replace the incumbent, so
/// the returned witness is the lexicographically smallest optimum.
pub fn brute_force_optimum(
    n: GameSize,
) -> Result<(WinProbability, ClassicalStrategy), GameError> {
    if n.get() > BRUTE_FORCE_CAP {
        return Err(GameError::BruteForceCap {
            n: n.get(),
            cap: BRUTE_FORCE_CAP,
        });
    }
    let size = n.get() as usize;
    let queries = enumerate_queries(n);
    // Vertex 0 sits in the most significant bit so that counting upward walks
    // the colorings in lexicographic order.
    let bit = |code: u32, v: u32| ((code >> (n.get() - 1 - v)) & 1) as u8;

    let mut best: Option<(u64, u32, u32)> = None;
    for code_a in 0..(1u32 << size) {
        for code_b in 0..(1u32 << size) {
            let w = queries
                .iter()
                .filter(|q| wins(q, bit(code_a, q.s), bit(code_b, q.t)))
                .count() as u64;
            if best.is_none_or(|(bw, _, _)| w > bw) {
                best = Some((w, code_a, code_b));
            }
        }
    }
    let (w, code_a, code_b) = best.expect("at least one strategy");
    let decode = |code| (0..n.get()).map(|v| bit(code, v)).collect::<Vec<_>>();
    let strategy = ClassicalStrategy {
        color_a: decode(code_a),
        color_b: decode(code_b),
    };
    Ok((WinProbability::new(w, n.query_count() as u64), strategy))
}

/// Classical value of the game, `1 - 1/(2n)`.
pub fn omega_c(n: GameSize) -> f64 {
    1.0 - 1.0 / (2.0 * n.get() as f64)
}

/// [`omega_c`] as an exact rational.
pub fn omega_c_exact(n: GameSize) -> Ratio<u64> {
    let total = n.query_count() as u64;
    Ratio::new(total - 1, total)
}
