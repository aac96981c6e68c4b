//! Dense two-phase simplex for the small programs in this crate (a few
//! hundred rows and columns at most).

use thiserror::Error;

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots tolerated under Dantzig's rule before
/// switching to Bland's rule for the rest of the phase.
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("constraint {row} has {got} coefficients, expected {expected}")]
    Dimension {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("simplex exceeded {0} pivots")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Constraint {
            coeffs,
            relation,
            rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarBound {
    NonNegative,
    Free,
}

/// `maximize objective · x` subject to the constraints and variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<VarBound>,
}

impl LinearProgram {
    /// All variables non-negative.
    pub fn maximize(objective: Vec<f64>) -> Self {
        let bounds = vec![VarBound::NonNegative; objective.len()];
        LinearProgram {
            objective,
            constraints: Vec::new(),
            bounds,
        }
    }

    pub fn free(mut self) -> Self {
        self.bounds.iter_mut().for_each(|b| *b = VarBound::Free);
        self
    }

    pub fn subject_to(mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        self.constraints.push(Constraint::new(coeffs, relation, rhs));
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
    pivots: usize,
    max_pivots: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            self.obj
                .iter_mut()
                .zip(&pivot_row)
                .for_each(|(v, p)| *v -= f * p);
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs simplex iterations over the columns in `allowed` until optimal.
    fn optimize(&mut self, allowed: &[bool]) -> Result<(), LpError> {
        let mut streak = 0;
        let mut bland = false;
        loop {
            if self.pivots >= self.max_pivots {
                return Err(LpError::IterationLimit(self.max_pivots));
            }
            let entering = if bland {
                (0..self.width).find(|&j| allowed[j] && self.obj[j] < -COST_TOL)
            } else {
                (0..self.width)
                    .filter(|&j| allowed[j] && self.obj[j] < -COST_TOL)
                    .min_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]))
            };
            let Some(c) = entering else {
                return Ok(());
            };
            // ratio test; ties go to the smallest basic index (Bland)
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - FEAS_TOL
                                || (ratio <= lratio + FEAS_TOL && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(LpError::Unbounded);
            };
            if ratio.abs() <= FEAS_TOL {
                streak += 1;
                if streak > DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                streak = 0;
            }
            self.pivot(r, c);
        }
    }
}

/// Solves the program, returning the optimum and a primal point attaining it.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let nv = lp.num_vars();
    for (row, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.len() != nv {
            return Err(LpError::Dimension {
                row,
                expected: nv,
                got: c.coeffs.len(),
            });
        }
    }
    // Column map: each original variable owns one column, free variables a
    // second (negative part) column.
    let mut neg_col = vec![None; nv];
    let mut ncols = nv;
    for (j, b) in lp.bounds.iter().enumerate() {
        if *b == VarBound::Free {
            neg_col[j] = Some(ncols);
            ncols += 1;
        }
    }
    let structural = ncols;
    let m = lp.constraints.len();
    let slack_count = lp
        .constraints
        .iter()
        .filter(|c| c.relation != Relation::Eq)
        .count();
    let first_slack = structural;
    let first_art = structural + slack_count;

    // Normalize to non-negative right-hand sides.
    let mut rows_spec = Vec::with_capacity(m);
    for c in &lp.constraints {
        let (sign, relation) = if c.rhs < 0.0 {
            (
                -1.0,
                match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                },
            )
        } else {
            (1.0, c.relation)
        };
        rows_spec.push((sign, relation));
    }
    let art_count = rows_spec
        .iter()
        .filter(|(_, r)| *r != Relation::Le)
        .count();
    let width = first_art + art_count;

    let mut rows = vec![vec![0.0; width + 1]; m];
    let mut basis = vec![0; m];
    let mut slack = first_slack;
    let mut art = first_art;
    for (i, (c, &(sign, relation))) in lp.constraints.iter().zip(&rows_spec).enumerate() {
        let row = &mut rows[i];
        for j in 0..nv {
            row[j] = sign * c.coeffs[j];
            if let Some(nc) = neg_col[j] {
                row[nc] = -sign * c.coeffs[j];
            }
        }
        row[width] = sign * c.rhs;
        let original_has_slack = c.relation != Relation::Eq;
        match relation {
            Relation::Le => {
                row[slack] = 1.0;
                basis[i] = slack;
            }
            Relation::Ge => {
                row[slack] = -1.0;
                row[art] = 1.0;
                basis[i] = art;
                art += 1;
            }
            Relation::Eq => {
                row[art] = 1.0;
                basis[i] = art;
                art += 1;
            }
        }
        if original_has_slack {
            slack += 1;
        }
    }

    let max_pivots = 50 * (width + m + 10);
    let mut t = Tableau {
        rows,
        obj: vec![0.0; width + 1],
        basis,
        width,
        pivots: 0,
        max_pivots,
    };

    // Phase 1: maximize -(sum of artificials).
    if art_count > 0 {
        for j in first_art..width {
            t.obj[j] = 1.0;
        }
        for r in 0..m {
            if t.basis[r] >= first_art {
                let row = t.rows[r].clone();
                t.obj.iter_mut().zip(&row).for_each(|(v, a)| *v -= a);
            }
        }
        let allowed = vec![true; width];
        t.optimize(&allowed)?;
        if -t.obj[width] > FEAS_TOL * (1.0 + max_abs_rhs(lp)) {
            return Err(LpError::Infeasible);
        }
        // Drive zero-level artificials out of the basis; rows where that is
        // impossible are redundant and get dropped.
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= first_art {
                match (0..first_art).find(|&j| t.rows[r][j].abs() > 1e-9) {
                    Some(c) => {
                        t.pivot(r, c);
                        r += 1;
                    }
                    None => {
                        t.rows.remove(r);
                        t.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
    }

    // Phase 2 with the real objective; artificial columns are frozen out.
    t.obj.iter_mut().for_each(|v| *v = 0.0);
    for (j, (&c, neg)) in lp.objective.iter().zip(&neg_col).enumerate() {
        t.obj[j] = -c;
        if let Some(nc) = *neg {
            t.obj[nc] = c;
        }
    }
    for r in 0..t.rows.len() {
        let b = t.basis[r];
        let f = t.obj[b];
        if f != 0.0 {
            let row = t.rows[r].clone();
            t.obj.iter_mut().zip(&row).for_each(|(v, a)| *v -= f * a);
        }
    }
    let allowed: Vec<bool> = (0..width).map(|j| j < first_art).collect();
    t.optimize(&allowed)?;

    let mut cols = vec![0.0; width];
    for (r, &b) in t.basis.iter().enumerate() {
        cols[b] = t.rhs(r);
    }
    let x: Vec<f64> = (0..nv)
        .map(|j| cols[j] - neg_col[j].map_or(0.0, |nc| cols[nc]))
        .collect();
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { value, x })
}

fn max_abs_rhs(lp: &LinearProgram) -> f64 {
    lp.constraints
        .iter()
        .map(|c| c.rhs.abs())
        .fold(0.0, f64::max)
}

/// Largest constraint violation of `x`, zero when feasible.
pub fn max_violation(lp: &LinearProgram, x: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, b) in lp.bounds.iter().enumerate() {
        if *b == VarBound::NonNegative {
            worst = worst.max(-x[j]);
        }
    }
    for c in &lp.constraints {
        let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        let v = match c.relation {
            Relation::Le => lhs - c.rhs,
            Relation::Ge => c.rhs - lhs,
            Relation::Eq => (lhs - c.rhs).abs(),
        };
        worst = worst.max(v);
    }
    worst
}
