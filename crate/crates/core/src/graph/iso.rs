use std::fmt;

use super::{mobius_ladder, ExclusivityGraph};
use crate::game::GameSize;

const SPECTRUM_TOL: f64 = 1e-9;

/// The first invariant on which a graph and the target ladder disagree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Invariant {
    Order { expected: usize, got: usize },
    Size { expected: usize, got: usize },
    Regularity,
    Spectrum { index: usize, expected: f64, got: f64 },
    /// Invariants agree but no ladder traversal exists.
    NoLadderTraversal,
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Invariant::Order { expected, got } => write!(f, "order {got}, expected {expected}"),
            Invariant::Size { expected, got } => write!(f, "size {got}, expected {expected}"),
            Invariant::Regularity => write!(f, "not 3-regular"),
            Invariant::Spectrum {
                index,
                expected,
                got,
            } => write!(f, "eigenvalue #{index} is {got}, expected {expected}"),
            Invariant::NoLadderTraversal => write!(f, "no rung-by-rung traversal"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MobiusCheck {
    /// `witness[v]` is the ladder vertex that `v` maps to; every edge has
    /// been checked to land on a ladder edge.
    Isomorphic { witness: Vec<usize> },
    NotIsomorphic(Invariant),
}

impl MobiusCheck {
    pub fn is_isomorphic(&self) -> bool {
        matches!(self, MobiusCheck::Isomorphic { .. })
    }

    pub fn witness(&self) -> Option<&[usize]> {
        match self {
            MobiusCheck::Isomorphic { witness } => Some(witness),
            MobiusCheck::NotIsomorphic(_) => None,
        }
    }
}

/// Checks `g` against `M_{4n}`.
pub fn verify_is_mobius(g: &ExclusivityGraph, n: GameSize) -> MobiusCheck {
    verify_is_mobius_ladder(g, 4 * n.get() as usize)
}

/// Screens order, size, regularity and spectrum, then walks the graph rung
/// by rung to build an explicit bijection onto `M_order`.
///
/// The ladder `M_N` with `h = N/2` has rungs `(k, k+h)` joined by rails
/// `k ~ k+1`, and the last rung closes onto the first with a twist. The
/// traversal picks an edge at vertex 0 as rung 0 and repeatedly extends by an
/// adjacent, unvisited rung until all `h` rungs are placed and the twisted
/// closure holds.
pub fn verify_is_mobius_ladder(g: &ExclusivityGraph, order: usize) -> MobiusCheck {
    let target = match mobius_ladder(order) {
        Ok(t) => t,
        Err(_) => {
            return MobiusCheck::NotIsomorphic(Invariant::Order {
                expected: order,
                got: g.order(),
            })
        }
    };
    if g.order() != order {
        return MobiusCheck::NotIsomorphic(Invariant::Order {
            expected: order,
            got: g.order(),
        });
    }
    if g.size() != target.size() {
        return MobiusCheck::NotIsomorphic(Invariant::Size {
            expected: target.size(),
            got: g.size(),
        });
    }
    if g.regular_degree() != Some(3) {
        return MobiusCheck::NotIsomorphic(Invariant::Regularity);
    }
    for (index, (got, expected)) in g.spectrum().iter().zip(target.spectrum()).enumerate() {
        if (got - expected).abs() > SPECTRUM_TOL {
            return MobiusCheck::NotIsomorphic(Invariant::Spectrum {
                index,
                expected,
                got: *got,
            });
        }
    }

    let h = order / 2;
    for first in g.neighbors(0).collect::<Vec<_>>() {
        let mut rungs = vec![(0, first)];
        let mut used = vec![false; order];
        used[0] = true;
        used[first] = true;
        if extend(g, h, &mut rungs, &mut used) {
            let mut witness = vec![0; order];
            for (k, &(top, bottom)) in rungs.iter().enumerate() {
                witness[top] = k;
                witness[bottom] = k + h;
            }
            if g.edges()
                .iter()
                .all(|&(u, v)| target.adjacent(witness[u], witness[v]))
            {
                return MobiusCheck::Isomorphic { witness };
            }
        }
    }
    MobiusCheck::NotIsomorphic(Invariant::NoLadderTraversal)
}

fn extend(
    g: &ExclusivityGraph,
    h: usize,
    rungs: &mut Vec<(usize, usize)>,
    used: &mut [bool],
) -> bool {
    let (top, bottom) = *rungs.last().expect("rung 0 is seeded");
    if rungs.len() == h {
        let (top0, bottom0) = rungs[0];
        return g.adjacent(top, bottom0) && g.adjacent(bottom, top0);
    }
    let tops: Vec<usize> = g.neighbors(top).filter(|&u| !used[u]).collect();
    let bottoms: Vec<usize> = g.neighbors(bottom).filter(|&u| !used[u]).collect();
    for &t in &tops {
        for &b in &bottoms {
            if t != b && g.adjacent(t, b) {
                used[t] = true;
                used[b] = true;
                rungs.push((t, b));
                if extend(g, h, rungs, used) {
                    return true;
                }
                rungs.pop();
                used[t] = false;
                used[b] = false;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::exclusivity_graph;

    #[test]
    fn exclusivity_graphs_are_mobius_ladders() {
        for n in [3, 5, 7, 9, 11, 13] {
            let n = GameSize::new(n).unwrap();
            let g = exclusivity_graph(n);
            let check = verify_is_mobius(&g, n);
            let w = check.witness().expect("isomorphic");
            let mut sorted = w.to_vec();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..g.order()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn ladder_is_isomorphic_to_itself() {
        let m = mobius_ladder(20).unwrap();
        assert!(verify_is_mobius_ladder(&m, 20).is_isomorphic());
    }

    #[test]
    fn cycle_is_rejected() {
        let c12 = ExclusivityGraph::circulant(12, &[1]).unwrap();
        assert!(matches!(
            verify_is_mobius_ladder(&c12, 12),
            MobiusCheck::NotIsomorphic(Invariant::Size { expected: 18, got: 12 })
        ));
        // the spectral screen alone also separates them
        let (a, b) = (c12.spectrum(), mobius_ladder(12).unwrap().spectrum());
        assert!(a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 1e-6));
    }

    #[test]
    fn prism_is_rejected_by_spectrum() {
        // hexagonal prism: cubic on 12 vertices, 18 edges, but planar
        let mut edges = Vec::new();
        for i in 0..6 {
            edges.push((i, (i + 1) % 6));
            edges.push((6 + i, 6 + (i + 1) % 6));
            edges.push((i, i + 6));
        }
        let prism = ExclusivityGraph::from_edges(12, &edges);
        assert!(matches!(
            verify_is_mobius_ladder(&prism, 12),
            MobiusCheck::NotIsomorphic(Invariant::Spectrum { .. })
        ));
    }
}
