//! Exclusivity graph of the odd-cycle Bell expression and the three graph
//! numbers that bound its classical, quantum and nonsignaling values.

mod bounds;
mod iso;
pub mod lp;
mod mis;
mod theta;

use std::fmt::Write as _;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::game::GameSize;

pub use bounds::{bounds_report, BoundsReport, BOUNDS_CSV_HEADER, COMPUTED_CAP};
pub use iso::{verify_is_mobius, verify_is_mobius_ladder, Invariant, MobiusCheck};
pub use lp::{lp_solve, Constraint, LinearProgram, LpError, LpSolution, Relation, VarBound};
pub use mis::{independence_number, IndependentSet, MIS_CAP};
pub use theta::{fractional_packing, lovasz_theta_circulant, theta_lp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("Möbius ladder needs an even order of at least 6, got {0}")]
    InvalidLadderOrder(usize),
    #[error("graph has {got} vertices, exact search is capped at {cap}")]
    TooLarge { got: usize, cap: usize },
    #[error("triangle {0:?} found; edge constraints alone would not cover every clique")]
    Triangle([usize; 3]),
    #[error("graph has no circulant descriptor")]
    NotCirculant,
    #[error("invalid connection set element {d} for order {order}")]
    InvalidConnection { d: usize, order: usize },
    #[error("exclusivity graph is not the Möbius ladder: {0}")]
    NotMobius(Invariant),
    #[error("sandwich alpha <= theta <= alpha* violated: {alpha} / {theta} / {alpha_star}")]
    Sandwich {
        alpha: usize,
        theta: f64,
        alpha_star: f64,
    },
    #[error("theta/(2n) = {theta_value} does not saturate the quantum value {omega_q}")]
    NotSaturated { theta_value: f64, omega_q: f64 },
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Event `(a, b | x, y)`: outputs `a, b` on settings `x, y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub a: u8,
    pub b: u8,
    pub x: u32,
    pub y: u32,
}

impl Event {
    /// Mutually exclusive: a shared setting on one side with differing
    /// outputs there.
    pub fn excludes(&self, other: &Event) -> bool {
        (self.x == other.x && self.a != other.a) || (self.y == other.y && self.b != other.b)
    }
}

/// Simple undirected graph with an optional circulant description
/// `(N, S)`, where `S` lists connection distances `d <= N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExclusivityGraph {
    events: Vec<Event>,
    adjacency: Vec<Vec<bool>>,
    circulant: Option<(usize, Vec<usize>)>,
}

impl ExclusivityGraph {
    /// Graph on `order` vertices from an edge list. Self-loops are ignored.
    pub fn from_edges(order: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![vec![false; order]; order];
        for &(u, v) in edges {
            if u != v {
                adjacency[u][v] = true;
                adjacency[v][u] = true;
            }
        }
        ExclusivityGraph {
            events: Vec::new(),
            adjacency,
            circulant: None,
        }
    }

    /// Circulant graph `C_N(S)`: `i ~ i ± d` for each `d` in `S`.
    pub fn circulant(order: usize, connections: &[usize]) -> Result<Self, GraphError> {
        let mut set: Vec<usize> = Vec::new();
        for &d in connections {
            if d == 0 || d >= order {
                return Err(GraphError::InvalidConnection { d, order });
            }
            let d = d.min(order - d);
            if !set.contains(&d) {
                set.push(d);
            }
        }
        set.sort_unstable();
        let mut edges = Vec::new();
        for i in 0..order {
            for &d in &set {
                edges.push((i, (i + d) % order));
            }
        }
        let mut g = Self::from_edges(order, &edges);
        g.circulant = Some((order, set));
        Ok(g)
    }

    pub fn order(&self) -> usize {
        self.adjacency.len()
    }

    pub fn size(&self) -> usize {
        self.adjacency
            .iter()
            .map(|r| r.iter().filter(|&&b| b).count())
            .sum::<usize>()
            / 2
    }

    /// Events labelling the vertices; empty for graphs not built from events.
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn adjacency(&self) -> &[Vec<bool>] {
        &self.adjacency
    }

    pub fn circulant_descriptor(&self) -> Option<(usize, &[usize])> {
        self.circulant.as_ref().map(|(n, s)| (*n, s.as_slice()))
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adjacency[u][v]
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v]
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(u, _)| u)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).count()
    }

    /// Common degree if every vertex has the same one.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree(0);
        (1..self.order()).all(|v| self.degree(v) == d).then_some(d)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.order() {
            for v in (u + 1)..self.order() {
                if self.adjacency[u][v] {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// First triangle `u < v < w` in lexicographic order.
    pub fn find_triangle(&self) -> Option<[usize; 3]> {
        let n = self.order();
        for u in 0..n {
            for v in (u + 1)..n {
                if !self.adjacency[u][v] {
                    continue;
                }
                for w in (v + 1)..n {
                    if self.adjacency[u][w] && self.adjacency[v][w] {
                        return Some([u, v, w]);
                    }
                }
            }
        }
        None
    }

    /// Adjacency eigenvalues in ascending order.
    pub fn spectrum(&self) -> Vec<f64> {
        let n = self.order();
        let m = DMatrix::from_fn(n, n, |i, j| if self.adjacency[i][j] { 1.0 } else { 0.0 });
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `u v` per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}").expect("writing to a String");
        }
        out
    }
}

/// Exclusivity graph of the `4n` winning events of the odd-cycle expression.
///
/// Vertex order, for each `j` ascending: `(0,0|j,j)`, `(1,1|j,j)`,
/// `(0,1|j,j+1)`, `(1,0|j,j+1)`.
pub fn exclusivity_graph(n: GameSize) -> ExclusivityGraph {
    let nn = n.get();
    let events: Vec<Event> = (0..nn)
        .flat_map(|j| {
            let k = (j + 1) % nn;
            [
                Event { a: 0, b: 0, x: j, y: j },
                Event { a: 1, b: 1, x: j, y: j },
                Event { a: 0, b: 1, x: j, y: k },
                Event { a: 1, b: 0, x: j, y: k },
            ]
        })
        .collect();
    let adjacency = events
        .iter()
        .enumerate()
        .map(|(i, e)| {
            events
                .iter()
                .enumerate()
                .map(|(j, f)| i != j && e.excludes(f))
                .collect()
        })
        .collect();
    ExclusivityGraph {
        events,
        adjacency,
        circulant: None,
    }
}

/// Möbius ladder `M_N = C_N(1, N/2)`.
pub fn mobius_ladder(order: usize) -> Result<ExclusivityGraph, GraphError> {
    if order < 6 || order % 2 == 1 {
        return Err(GraphError::InvalidLadderOrder(order));
    }
    ExclusivityGraph::circulant(order, &[1, order / 2])
}
