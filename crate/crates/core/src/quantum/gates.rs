use std::f64::consts::FRAC_PI_2;

use nalgebra::Matrix2;
use num_complex::Complex64;

pub type Matrix2c = Matrix2<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn pauli_x() -> Matrix2c {
    Matrix2c::new(c(0.0), c(1.0), c(1.0), c(0.0))
}

pub fn pauli_y() -> Matrix2c {
    Matrix2c::new(c(0.0), -I, I, c(0.0))
}

pub fn pauli_z() -> Matrix2c {
    Matrix2c::new(c(1.0), c(0.0), c(0.0), c(-1.0))
}

/// `cos(θ/2) I - i sin(θ/2) Y`.
pub fn ry(theta: f64) -> Matrix2c {
    let (s, co) = (theta / 2.0).sin_cos();
    Matrix2c::identity() * c(co) - pauli_y() * (I * s)
}

/// Rotation by `theta` about the equatorial axis at azimuth `phi`,
/// `exp(-i θ/2 (cos φ X + sin φ Y))`. Azimuth 0 is the X axis.
pub fn equatorial_rotation(phi: f64, theta: f64) -> Matrix2c {
    let (s, co) = (theta / 2.0).sin_cos();
    let axis = pauli_x() * c(phi.cos()) + pauli_y() * c(phi.sin());
    Matrix2c::identity() * c(co) - axis * (I * s)
}

/// `exp(-i θ/2 Z)`.
pub fn rz(theta: f64) -> Matrix2c {
    let h = theta / 2.0;
    Matrix2c::new(
        Complex64::from_polar(1.0, -h),
        c(0.0),
        c(0.0),
        Complex64::from_polar(1.0, h),
    )
}

/// Two resonant π/2 pulses realizing a y-rotation through a laser phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    /// π/2 about X; swaps the Z and Y axes.
    pub first: Matrix2c,
    /// π/2 about the equatorial axis at azimuth `π - θ`.
    pub second: Matrix2c,
}

impl PulseSequence {
    /// The net unitary, `second · first`.
    pub fn composed(&self) -> Matrix2c {
        self.second * self.first
    }
}

/// Compiles the query-dependent rotation into a fixed-duration pulse pair.
///
/// The composed unitary equals `rz(-θ) · ry(θ)`: a diagonal phase after the
/// target rotation, invisible to a Z-basis measurement.
pub fn compile_pulse_sequence(theta: f64) -> PulseSequence {
    PulseSequence {
        first: equatorial_rotation(0.0, FRAC_PI_2),
        second: equatorial_rotation(std::f64::consts::PI - theta, FRAC_PI_2),
    }
}

/// Z-basis outcome probabilities `(P(0), P(1))` of `u |psi>`.
pub fn z_statistics(u: &Matrix2c, psi: &nalgebra::Vector2<Complex64>) -> (f64, f64) {
    let out = u * psi;
    (out[0].norm_sqr(), out[1].norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn unitarity_error(u: &Matrix2c) -> f64 {
        (u.adjoint() * u - Matrix2c::identity()).camax()
    }

    #[test]
    fn ry_reference_values() {
        assert!((ry(0.0) - Matrix2c::identity()).camax() < 1e-15);
        assert!((ry(PI) - pauli_y() * (-I)).camax() < 1e-15);
        let half = ry(FRAC_PI_2);
        let expect = Matrix2c::new(
            c(FRAC_1_SQRT_2),
            c(-FRAC_1_SQRT_2),
            c(FRAC_1_SQRT_2),
            c(FRAC_1_SQRT_2),
        );
        assert!((half - expect).camax() < 1e-15);
        for k in 0..50 {
            assert!(unitarity_error(&ry(0.37 * k as f64)) < 1e-14);
        }
    }

    #[test]
    fn pulse_pair_is_ry_followed_by_z_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let theta = rng.random_range(-4.0 * PI..4.0 * PI);
            let seq = compile_pulse_sequence(theta);
            assert!(unitarity_error(&seq.composed()) < 1e-14);
            let expect = rz(-theta) * ry(theta);
            assert!((seq.composed() - expect).camax() < 1e-14);
        }
    }

    #[test]
    fn pulse_pair_is_not_ry_up_to_global_phase() {
        let theta = 1.0;
        let m = compile_pulse_sequence(theta).composed() * ry(theta).adjoint();
        // A global phase would make m a multiple of the identity.
        assert!((m[(0, 0)] - m[(1, 1)]).norm() > 0.1);
    }

    #[test]
    fn pulse_pair_z_statistics_at_quarter_turn() {
        let zero = Vector2::new(c(1.0), c(0.0));
        let (p0, p1) = z_statistics(&compile_pulse_sequence(FRAC_PI_2).composed(), &zero);
        let c2 = (PI / 4.0).cos().powi(2);
        assert!((p0 - c2).abs() < 1e-12 && (p1 - (1.0 - c2)).abs() < 1e-12);
        let one = Vector2::new(c(0.0), c(1.0));
        for psi in [zero, one] {
            let a = z_statistics(&compile_pulse_sequence(0.0).composed(), &psi);
            let b = z_statistics(&ry(0.0), &psi);
            assert!((a.0 - b.0).abs() < 1e-12);
        }
    }
}
