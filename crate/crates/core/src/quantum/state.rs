use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use super::{Matrix2c, QuantumError};

pub type Matrix4c = Matrix4<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

/// Two-qubit density matrix over `|00>, |01>, |10>, |11>`; Alice is the first
/// tensor factor, Bob the second.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    rho: Matrix4c,
}

impl TwoQubitState {
    /// Validates Hermiticity, unit trace and positivity before wrapping.
    pub fn from_matrix(rho: Matrix4c) -> Result<Self, QuantumError> {
        let state = TwoQubitState { rho };
        state.validate()?;
        Ok(state)
    }

    /// `|psi><psi|` for a normalized pure state.
    pub fn from_pure(psi: &Vector4<Complex64>) -> Result<Self, QuantumError> {
        Self::from_matrix(psi * psi.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        TwoQubitState {
            rho: Matrix4c::identity() * Complex64::new(0.25, 0.0),
        }
    }

    /// Wraps a matrix produced by trace-preserving operations on valid states.
    pub(crate) fn from_trusted(rho: Matrix4c) -> Self {
        let state = TwoQubitState { rho };
        debug_assert!(state.validate().is_ok(), "{:?}", state.validate());
        state
    }

    pub fn rho(&self) -> &Matrix4c {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }

    /// `<psi| rho |psi>` for a pure target state.
    pub fn fidelity_with_pure(&self, psi: &Vector4<Complex64>) -> f64 {
        (psi.adjoint() * self.rho * psi)[(0, 0)].re
    }

    pub fn eigenvalues(&self) -> Vector4<f64> {
        self.rho.symmetric_eigenvalues()
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        let herm = (self.rho - self.rho.adjoint()).camax();
        if herm > HERMITIAN_TOL {
            return Err(QuantumError::NotHermitian(herm));
        }
        let tr = self.rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(QuantumError::BadTrace(tr.re));
        }
        let min = self.eigenvalues().min();
        if min < -PSD_TOL {
            return Err(QuantumError::NotPositive(min));
        }
        Ok(())
    }

    /// Conjugation by `ua ⊗ ub`.
    pub fn apply_local(&self, ua: &Matrix2c, ub: &Matrix2c) -> Self {
        let u: Matrix4c = ua.kronecker(ub);
        TwoQubitState::from_trusted(u * self.rho * u.adjoint())
    }

    /// Largest elementwise modulus of the difference.
    pub fn distance_max(&self, other: &TwoQubitState) -> f64 {
        (self.rho - other.rho).camax()
    }
}
