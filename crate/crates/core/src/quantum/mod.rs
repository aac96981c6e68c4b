//! Exact density-matrix simulation of the entangled strategy.
//!
//! The pipeline for one round is: heralded Bell pair, Werner noise, Bob's
//! phase correction, the query-dependent y-rotations, a Z-basis measurement,
//! symmetric readout flips, and finally Alice's output inversion.

mod gates;
mod state;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::Vector4;
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::game::{wins, GameSize, Query};

pub use gates::{
    compile_pulse_sequence, equatorial_rotation, pauli_x, pauli_y, pauli_z, ry, rz,
    z_statistics, Matrix2c, PulseSequence,
};
pub use state::{Matrix4c, TwoQubitState, HERMITIAN_TOL, PSD_TOL, TRACE_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("herald pattern {0} outside 0..=3")]
    InvalidHerald(u8),
    #[error("herald phase {0} outside [0, 2π)")]
    InvalidPhase(f64),
    #[error("visibility {0} outside [0, 1]")]
    InvalidVisibility(f64),
    #[error("readout error {0} outside [0, 0.5)")]
    InvalidReadoutError(f64),
}

/// Phases attached to the four detector coincidence patterns.
pub const DEFAULT_PHASE_TABLE: [f64; 4] = [0.0, PI / 2.0, PI, 3.0 * PI / 2.0];

/// Which coincidence event announced the pair, and the phase it imprints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeraldPattern {
    gamma: u8,
    phase_table: [f64; 4],
}

impl HeraldPattern {
    pub fn new(gamma: u8, phase_table: [f64; 4]) -> Result<Self, QuantumError> {
        if gamma > 3 {
            return Err(QuantumError::InvalidHerald(gamma));
        }
        if let Some(&bad) = phase_table
            .iter()
            .find(|p| !(0.0..2.0 * PI).contains(*p))
        {
            return Err(QuantumError::InvalidPhase(bad));
        }
        Ok(HeraldPattern { gamma, phase_table })
    }

    pub fn with_default_table(gamma: u8) -> Result<Self, QuantumError> {
        Self::new(gamma, DEFAULT_PHASE_TABLE)
    }

    pub fn gamma(&self) -> u8 {
        self.gamma
    }

    pub fn phase(&self) -> f64 {
        self.phase_table[self.gamma as usize]
    }
}

/// Werner visibility plus a symmetric per-qubit readout flip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    visibility: f64,
    readout_error: f64,
}

impl NoiseModel {
    pub const IDEAL: NoiseModel = NoiseModel {
        visibility: 1.0,
        readout_error: 0.0,
    };

    pub fn new(visibility: f64, readout_error: f64) -> Result<Self, QuantumError> {
        if !(0.0..=1.0).contains(&visibility) {
            return Err(QuantumError::InvalidVisibility(visibility));
        }
        if !(0.0..0.5).contains(&readout_error) {
            return Err(QuantumError::InvalidReadoutError(readout_error));
        }
        Ok(NoiseModel {
            visibility,
            readout_error,
        })
    }

    pub fn werner(visibility: f64) -> Result<Self, QuantumError> {
        Self::new(visibility, 0.0)
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    pub fn readout_error(&self) -> f64 {
        self.readout_error
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::IDEAL
    }
}

/// Rotation angles for one round: Alice's `α_s`, Bob's `β_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementAngles {
    pub alpha_s: f64,
    pub beta_t: f64,
}

/// Output bits reported to the referee (Alice's already inverted).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OutcomePair {
    pub a: u8,
    pub b: u8,
}

/// Born probabilities of the raw Z outcomes, indexed by `2·m_A + m_B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeDistribution(pub [f64; 4]);

impl OutcomeDistribution {
    pub fn prob(&self, m_a: u8, m_b: u8) -> f64 {
        self.0[2 * m_a as usize + m_b as usize]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Each bit flips independently with probability `eps`.
    pub fn with_readout_error(&self, eps: f64) -> Self {
        if eps == 0.0 {
            return *self;
        }
        let flip = |x: usize, y: usize| if x == y { 1.0 - eps } else { eps };
        let mut out = [0.0; 4];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = (0..4)
                .map(|j| flip(i >> 1, j >> 1) * flip(i & 1, j & 1) * self.0[j])
                .sum();
        }
        OutcomeDistribution(out)
    }

    /// Inverse-CDF draw of `(m_A, m_B)` from a uniform variate in `[0, 1)`.
    pub fn draw(&self, u: f64) -> (u8, u8) {
        let mut acc = 0.0;
        for (i, p) in self.0.iter().enumerate() {
            acc += p;
            if u < acc {
                return ((i >> 1) as u8, (i & 1) as u8);
            }
        }
        // u landed in rounding slack at the top; take the last populated cell
        let i = self.0.iter().rposition(|&p| p > 0.0).unwrap_or(3);
        ((i >> 1) as u8, (i & 1) as u8)
    }
}

/// `(|01> + e^{iθ}|10>)/√2`.
pub fn bell_vector(theta: f64) -> Vector4<Complex64> {
    Vector4::new(
        Complex64::new(0.0, 0.0),
        Complex64::new(FRAC_1_SQRT_2, 0.0),
        Complex64::from_polar(FRAC_1_SQRT_2, theta),
        Complex64::new(0.0, 0.0),
    )
}

pub fn bell_state(theta: f64) -> TwoQubitState {
    let psi = bell_vector(theta);
    TwoQubitState::from_trusted(psi * psi.adjoint())
}

/// Bob's phase gate removing the herald phase: `diag(e^{-iϑ/2}, e^{iϑ/2})` on
/// his qubit in the `|0>, |1>` basis.
pub fn phase_correction(state: &TwoQubitState, herald: &HeraldPattern) -> TwoQubitState {
    state.apply_local(&Matrix2c::identity(), &rz(herald.phase()))
}

/// Alice's angle `α_s = π s (n-1)/n - π/(2n)`.
pub fn alice_angle(n: GameSize, s: u32) -> f64 {
    let n = n.get() as f64;
    PI * s as f64 * (n - 1.0) / n - PI / (2.0 * n)
}

/// Bob's angle `β_t = -π t (n-1)/n`.
pub fn bob_angle(n: GameSize, t: u32) -> f64 {
    let n = n.get() as f64;
    -PI * t as f64 * (n - 1.0) / n
}

pub fn angles(n: GameSize, q: &Query) -> MeasurementAngles {
    setting_angles(n, q.s(), q.t())
}

/// Angles for an arbitrary setting pair, as used in the Bell test.
pub fn setting_angles(n: GameSize, x: u32, y: u32) -> MeasurementAngles {
    MeasurementAngles {
        alpha_s: alice_angle(n, x),
        beta_t: bob_angle(n, y),
    }
}

pub fn apply_strategy(state: &TwoQubitState, m: &MeasurementAngles) -> TwoQubitState {
    state.apply_local(&ry(m.alpha_s), &ry(m.beta_t))
}

/// Z⊗Z Born probabilities, the diagonal of `rho`.
pub fn outcome_distribution(state: &TwoQubitState) -> Result<OutcomeDistribution, QuantumError> {
    let mut p = [0.0; 4];
    for (i, slot) in p.iter_mut().enumerate() {
        let d = state.rho()[(i, i)].re;
        if d < -PSD_TOL {
            return Err(QuantumError::NotPositive(d));
        }
        *slot = d.max(0.0);
    }
    Ok(OutcomeDistribution(p))
}

/// Alice flips her measured bit; Bob reports his unchanged.
pub fn to_outputs(m_a: u8, m_b: u8) -> OutcomePair {
    OutcomePair { a: 1 - m_a, b: m_b }
}

/// Werner mixing `V·rho + (1-V)·I/4`. Readout flips act at measurement time.
pub fn apply_noise(state: &TwoQubitState, noise: &NoiseModel) -> TwoQubitState {
    let v = noise.visibility;
    if v == 1.0 {
        return state.clone();
    }
    TwoQubitState::from_trusted(
        state.rho() * Complex64::new(v, 0.0)
            + TwoQubitState::maximally_mixed().rho() * Complex64::new(1.0 - v, 0.0),
    )
}

/// Everything the source needs to prepare and measure one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundSetup {
    pub herald: HeraldPattern,
    /// Herald Bob corrects for, if any. Matching `herald` cancels its phase.
    pub correction: Option<HeraldPattern>,
    pub angles: MeasurementAngles,
    pub noise: NoiseModel,
}

/// Distribution of the raw measured bits, readout error included.
pub fn round_distribution(setup: &RoundSetup) -> OutcomeDistribution {
    let mut state = apply_noise(&bell_state(setup.herald.phase()), &setup.noise);
    if let Some(h) = &setup.correction {
        state = phase_correction(&state, h);
    }
    let measured = apply_strategy(&state, &setup.angles);
    outcome_distribution(&measured)
        .expect("unitary evolution of a valid state stays positive")
        .with_readout_error(setup.noise.readout_error)
}

/// Exact probability that the outputs satisfy the winning condition.
pub fn win_probability_from(q: &Query, dist: &OutcomeDistribution) -> f64 {
    let mut w = 0.0;
    for m_a in 0..2 {
        for m_b in 0..2 {
            let out = to_outputs(m_a, m_b);
            if wins(q, out.a, out.b) {
                w += dist.prob(m_a, m_b);
            }
        }
    }
    w
}

/// Full pipeline starting from the ideal `Ψ⁺` (herald phase 0).
pub fn win_probability_exact(n: GameSize, q: &Query, noise: &NoiseModel) -> f64 {
    let ideal = HeraldPattern::with_default_table(0).expect("γ = 0 is valid");
    let setup = RoundSetup {
        herald: ideal,
        correction: Some(ideal),
        angles: angles(n, q),
        noise: *noise,
    };
    win_probability_from(q, &round_distribution(&setup))
}

/// Same pipeline for an arbitrary herald, with the correction optionally
/// switched off.
pub fn win_probability_heralded(
    n: GameSize,
    q: &Query,
    noise: &NoiseModel,
    herald: HeraldPattern,
    corrected: bool,
) -> f64 {
    let setup = RoundSetup {
        herald,
        correction: corrected.then_some(herald),
        angles: angles(n, q),
        noise: *noise,
    };
    win_probability_from(q, &round_distribution(&setup))
}

/// Quantum value `cos²(π/(4n))`.
pub fn omega_q(n: GameSize) -> f64 {
    (PI / (4.0 * n.get() as f64)).cos().powi(2)
}

/// Raw measurement bits for one setup, readout flips included.
pub fn sample_measurement<R: Rng + ?Sized>(rng: &mut R, setup: &RoundSetup) -> (u8, u8) {
    round_distribution(setup).draw(rng.random::<f64>())
}

/// Monte Carlo realization of one ideal-herald round.
pub fn sample_round<R: Rng + ?Sized>(
    rng: &mut R,
    n: GameSize,
    q: &Query,
    noise: &NoiseModel,
) -> OutcomePair {
    let ideal = HeraldPattern::with_default_table(0).expect("γ = 0 is valid");
    let setup = RoundSetup {
        herald: ideal,
        correction: Some(ideal),
        angles: angles(n, q),
        noise: *noise,
    };
    let (m_a, m_b) = sample_measurement(rng, &setup);
    to_outputs(m_a, m_b)
}
