use std::f64::consts::PI;

use super::lp::{lp_solve, LinearProgram, Relation};
use super::{ExclusivityGraph, GraphError};

/// Fractional packing number with edge (and singleton) clique constraints.
///
/// Only valid when edges are the maximal cliques, so a triangle is refused.
pub fn fractional_packing(g: &ExclusivityGraph) -> Result<f64, GraphError> {
    if let Some(t) = g.find_triangle() {
        return Err(GraphError::Triangle(t));
    }
    let n = g.order();
    let mut lp = LinearProgram::maximize(vec![1.0; n]);
    for (u, v) in g.edges() {
        let mut row = vec![0.0; n];
        row[u] = 1.0;
        row[v] = 1.0;
        lp = lp.subject_to(row, Relation::Le, 1.0);
    }
    for v in (0..n).filter(|&v| g.degree(v) == 0) {
        let mut row = vec![0.0; n];
        row[v] = 1.0;
        lp = lp.subject_to(row, Relation::Le, 1.0);
    }
    Ok(lp_solve(&lp)?.value)
}

/// Distances `d` in `1..=N/2` whose coefficient is free (not an edge).
fn free_distances(order: usize, connections: &[usize]) -> Result<Vec<usize>, GraphError> {
    let mut blocked = vec![false; order / 2 + 1];
    for &d in connections {
        if d == 0 || d >= order {
            return Err(GraphError::InvalidConnection { d, order });
        }
        blocked[d.min(order - d)] = true;
    }
    Ok((1..=order / 2).filter(|&d| !blocked[d]).collect())
}

fn multiplicity(order: usize, d: usize) -> f64 {
    if 2 * d == order {
        1.0
    } else {
        2.0
    }
}

/// Symmetry-reduced theta program for the circulant `C_N(S)`.
///
/// Averaging a feasible theta matrix over the cyclic shifts keeps it
/// feasible with the same objective, so it suffices to search circulant
/// symmetric matrices. With first row `c`, `c_0 = 1/N` fixes the trace and
/// `c_d = 0` on edges; the eigenvalues are the real DFT values
/// `Σ_d c_d cos(2πkd/N)`. Variables here are `y_d = N c_d` for the free
/// distances, so `ϑ = 1 + Σ_d m_d y_d` with `m_d` the number of row entries
/// sharing distance `d`.
pub fn theta_lp(order: usize, connections: &[usize]) -> Result<(LinearProgram, Vec<usize>), GraphError> {
    let free = free_distances(order, connections)?;
    let objective: Vec<f64> = free.iter().map(|&d| multiplicity(order, d)).collect();
    let mut lp = LinearProgram::maximize(objective).free();
    // eigenvalues k and N-k coincide
    for k in 0..=order / 2 {
        let row = free
            .iter()
            .map(|&d| {
                let arg = 2.0 * PI * ((k * d) % order) as f64 / order as f64;
                multiplicity(order, d) * arg.cos()
            })
            .collect();
        lp = lp.subject_to(row, Relation::Ge, -1.0);
    }
    Ok((lp, free))
}

/// Lovász number of a circulant graph via [`theta_lp`].
pub fn lovasz_theta_circulant(order: usize, connections: &[usize]) -> Result<f64, GraphError> {
    let (lp, free) = theta_lp(order, connections)?;
    if free.is_empty() {
        return Ok(1.0);
    }
    Ok(1.0 + lp_solve(&lp)?.value)
}
