use super::{ExclusivityGraph, GraphError};

/// Largest graph accepted by the exact search (one `u64` bitset per vertex).
pub const MIS_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndependentSet {
    pub size: usize,
    pub vertices: Vec<usize>,
}

struct Search {
    adj: Vec<u64>,
    best: u64,
    best_size: u32,
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

impl Search {
    fn degree(&self, v: usize, rest: u64) -> u32 {
        (self.adj[v] & rest).count_ones()
    }

    /// Greedy clique cover of `rest`, taking vertices by descending degree.
    /// Each clique holds at most one vertex of any independent set, so the
    /// cover size bounds what `rest` can still contribute.
    fn clique_cover_bound(&self, rest: u64) -> u32 {
        let mut order: Vec<usize> = bits(rest).collect();
        order.sort_by_key(|&v| std::cmp::Reverse(self.degree(v, rest)));
        let mut uncovered = rest;
        let mut cliques = 0;
        for v in order {
            if uncovered >> v & 1 == 0 {
                continue;
            }
            let mut clique = 1u64 << v;
            let mut candidates = self.adj[v] & uncovered;
            while candidates != 0 {
                let u = candidates.trailing_zeros() as usize;
                clique |= 1 << u;
                candidates &= self.adj[u] & !(1u64 << u);
            }
            uncovered &= !clique;
            cliques += 1;
        }
        cliques
    }

    fn branch(&mut self, chosen: u64, mut rest: u64) {
        let mut chosen = chosen;
        // Vertices of degree at most one can always be taken.
        loop {
            let Some(v) = bits(rest).find(|&v| self.degree(v, rest) <= 1) else {
                break;
            };
            chosen |= 1 << v;
            rest &= !(1u64 << v) & !self.adj[v];
        }
        let size = chosen.count_ones();
        if rest == 0 {
            if size > self.best_size {
                self.best_size = size;
                self.best = chosen;
            }
            return;
        }
        if size + self.clique_cover_bound(rest) <= self.best_size {
            return;
        }
        let v = bits(rest)
            .max_by_key(|&v| self.degree(v, rest))
            .expect("rest is non-empty");
        self.branch(chosen | 1 << v, rest & !(1u64 << v) & !self.adj[v]);
        self.branch(chosen, rest & !(1u64 << v));
    }
}

/// Exact independence number by branch and bound: branch on a maximum-degree
/// vertex, prune with a greedy clique cover.
pub fn independence_number(g: &ExclusivityGraph) -> Result<IndependentSet, GraphError> {
    let n = g.order();
    if n > MIS_CAP {
        return Err(GraphError::TooLarge { got: n, cap: MIS_CAP });
    }
    if n == 0 {
        return Ok(IndependentSet {
            size: 0,
            vertices: Vec::new(),
        });
    }
    let adj = (0..n)
        .map(|v| g.neighbors(v).fold(0u64, |m, u| m | 1 << u))
        .collect();
    let mut search = Search {
        adj,
        best: 0,
        best_size: 0,
    };
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    search.branch(0, all);
    Ok(IndependentSet {
        size: search.best_size as usize,
        vertices: bits(search.best).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameSize;
    use crate::graph::{exclusivity_graph, mobius_ladder};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn is_independent(g: &ExclusivityGraph, set: &[usize]) -> bool {
        set.iter()
            .all(|&u| set.iter().all(|&v| u == v || !g.adjacent(u, v)))
    }

    fn exhaustive(g: &ExclusivityGraph) -> usize {
        let n = g.order();
        let adj: Vec<u32> = (0..n)
            .map(|v| g.neighbors(v).fold(0u32, |m, u| m | 1 << u))
            .collect();
        (0u32..(1 << n))
            .filter(|&m| (0..n).all(|i| m >> i & 1 == 0 || adj[i] & m == 0))
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap()
    }

    #[test]
    fn ladder_values() {
        let m12 = mobius_ladder(12).unwrap();
        let s = independence_number(&m12).unwrap();
        assert_eq!(s.size, 5);
        assert!(is_independent(&m12, &s.vertices));
        assert_eq!(independence_number(&mobius_ladder(20).unwrap()).unwrap().size, 9);
        let empty = ExclusivityGraph::from_edges(4, &[]);
        assert_eq!(independence_number(&empty).unwrap().size, 4);
    }

    #[test]
    fn exclusivity_graph_values() {
        for n in [3u32, 5, 7, 9, 11, 13] {
            let g = exclusivity_graph(GameSize::new(n).unwrap());
            let s = independence_number(&g).unwrap();
            assert_eq!(s.size, 2 * n as usize - 1);
            assert!(is_independent(&g, &s.vertices));
        }
    }

    #[test]
    fn agrees_with_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..40 {
            let n = rng.random_range(1..=20);
            let p = rng.random_range(0.05..0.7);
            let edges: Vec<_> = (0..n)
                .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
                .filter(|_| rng.random::<f64>() < p)
                .collect();
            let g = ExclusivityGraph::from_edges(n, &edges);
            let s = independence_number(&g).unwrap();
            assert_eq!(s.size, exhaustive(&g));
            assert_eq!(s.vertices.len(), s.size);
            assert!(is_independent(&g, &s.vertices));
        }
    }

    #[test]
    fn refuses_large_graphs() {
        let big = mobius_ladder(66).unwrap();
        assert_eq!(
            independence_number(&big),
            Err(GraphError::TooLarge { got: 66, cap: 64 })
        );
    }
}
