use std::f64::consts::PI;
use std::fmt;

use super::{
    exclusivity_graph, fractional_packing, independence_number, lovasz_theta_circulant,
    verify_is_mobius, GraphError, MobiusCheck,
};
use crate::game::GameSize;
use crate::quantum::omega_q;

/// Largest `n` for which the report is computed rather than taken from the
/// closed forms.
pub const COMPUTED_CAP: u32 = 13;

const SANDWICH_TOL: f64 = 1e-7;
const SATURATION_TOL: f64 = 1e-6;

pub const BOUNDS_CSV_HEADER: &str = "n,alpha,theta,alpha_star,omega_c,omega_q_upper,omega_ns";

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub n: GameSize,
    pub alpha: usize,
    pub alpha_star: f64,
    pub theta: f64,
    pub omega_c: f64,
    pub omega_q_upper: f64,
    pub omega_ns: f64,
    /// False when the numbers come from the closed forms.
    pub computed: bool,
}

impl BoundsReport {
    fn assemble(n: GameSize, alpha: usize, theta: f64, alpha_star: f64, computed: bool) -> Self {
        let events = 2.0 * n.get() as f64;
        BoundsReport {
            n,
            alpha,
            alpha_star,
            theta,
            omega_c: alpha as f64 / events,
            omega_q_upper: theta / events,
            omega_ns: alpha_star / events,
            computed,
        }
    }

    /// `α = 2n-1`, `ϑ = n(1 + cos(π/2n))`, `α* = 2n`.
    pub fn closed_form(n: GameSize) -> Self {
        let nf = n.get() as f64;
        Self::assemble(
            n,
            2 * n.get() as usize - 1,
            nf * (1.0 + (PI / (2.0 * nf)).cos()),
            2.0 * nf,
            false,
        )
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.9},{:.9},{:.9},{:.9},{:.9}",
            self.n, self.alpha, self.theta, self.alpha_star, self.omega_c, self.omega_q_upper, self.omega_ns
        )
    }
}

impl fmt::Display for BoundsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:>4} {:>6} {:>12.6} {:>10.6} {:>9.6} {:>9.6} {:>9.6}{}",
            self.n,
            self.alpha,
            self.theta,
            self.alpha_star,
            self.omega_c,
            self.omega_q_upper,
            self.omega_ns,
            if self.computed { "" } else { "  (closed form)" }
        )
    }
}

/// Computes α, ϑ and α* of the exclusivity graph and checks the sandwich and
/// that `ϑ/(2n)` meets the entangled strategy's value.
pub fn bounds_report(n: GameSize) -> Result<BoundsReport, GraphError> {
    let g = exclusivity_graph(n);
    let order = g.order();
    if let MobiusCheck::NotIsomorphic(inv) = verify_is_mobius(&g, n) {
        return Err(GraphError::NotMobius(inv));
    }
    let alpha = independence_number(&g)?.size;
    let alpha_star = fractional_packing(&g)?;
    // The isomorphism lets ϑ be computed on the circulant form.
    let theta = lovasz_theta_circulant(order, &[1, order / 2])?;
    if !(alpha as f64 <= theta + SANDWICH_TOL && theta <= alpha_star + SANDWICH_TOL) {
        return Err(GraphError::Sandwich {
            alpha,
            theta,
            alpha_star,
        });
    }
    let report = BoundsReport::assemble(n, alpha, theta, alpha_star, true);
    if (report.omega_q_upper - omega_q(n)).abs() >= SATURATION_TOL {
        return Err(GraphError::NotSaturated {
            theta_value: report.omega_q_upper,
            omega_q: omega_q(n),
        });
    }
    Ok(report)
}
