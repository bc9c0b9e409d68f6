//! Werner and Bell-diagonal pair states.
//!
//! Bell-basis ordering is fixed crate-wide: index `2 * bit + phase`, so
//!
//! | index | state | bit | phase |
//! |-------|-------|-----|-------|
//! | 0     | Φ⁺    | 0   | 0     |
//! | 1     | Φ⁻    | 0   | 1     |
//! | 2     | Ψ⁺    | 1   | 0     |
//! | 3     | Ψ⁻    | 1   | 1     |
//!
//! Φ⁺ is the target state. Pauli errors compose by XOR of indices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack for round-off in coefficients and normalization.
pub const COEFF_TOL: f64 = 1e-12;

/// Bell-basis labels in crate order.
pub const BELL_LABELS: [&str; 4] = ["phi+", "phi-", "psi+", "psi-"];

/// A Werner pair: Φ⁺ with weight `fidelity`, the rest spread evenly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WernerState {
    fidelity: f64,
}

impl WernerState {
    pub fn new(fidelity: f64) -> Result<Self> {
        if !(0.25..=1.0).contains(&fidelity) || fidelity.is_nan() {
            return Err(Error::Domain(format!(
                "Werner fidelity {fidelity} outside [1/4, 1]"
            )));
        }
        Ok(Self { fidelity })
    }

    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }

    /// Werner parameter `(4F - 1) / 3`, the weight of Φ⁺ against `I/4`.
    pub fn werner_parameter(&self) -> f64 {
        (4.0 * self.fidelity - 1.0) / 3.0
    }

    pub fn to_bell_diagonal(&self) -> BellDiagonalState {
        let off = (1.0 - self.fidelity) / 3.0;
        BellDiagonalState {
            coeffs: [self.fidelity, off, off, off],
        }
    }
}

/// Four Bell-basis probabilities, target first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellDiagonalState {
    coeffs: [f64; 4],
}

impl BellDiagonalState {
    /// Validates and cleans up coefficients. Entries in `[-1e-12, 0)` are
    /// clamped to zero and the vector renormalized.
    pub fn new(coeffs: [f64; 4]) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite() || *c < -COEFF_TOL) {
            return Err(Error::Domain(format!(
                "Bell coefficients {coeffs:?} contain a negative or non-finite entry"
            )));
        }
        let sum: f64 = coeffs.iter().sum();
        if (sum - 1.0).abs() > COEFF_TOL {
            return Err(Error::Domain(format!(
                "Bell coefficients {coeffs:?} sum to {sum}, not 1"
            )));
        }
        Ok(Self::clamped(coeffs))
    }

    /// Normalizes an arbitrary nonnegative weight vector.
    pub fn from_weights(weights: [f64; 4]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if sum.is_nan() || sum <= 0.0 || weights.iter().any(|w| *w < -COEFF_TOL * sum) {
            return Err(Error::Domain(format!(
                "weights {weights:?} cannot be normalized"
            )));
        }
        Ok(Self::clamped(weights.map(|w| w / sum)))
    }

    /// Trusted construction from arithmetic that already preserves the
    /// simplex up to round-off.
    pub(crate) fn clamped(coeffs: [f64; 4]) -> Self {
        let mut c = coeffs.map(|x| if x < 0.0 { 0.0 } else { x });
        let sum: f64 = c.iter().sum();
        if sum != 1.0 {
            for x in &mut c {
                *x /= sum;
            }
        }
        Self { coeffs: c }
    }

    pub fn perfect() -> Self {
        Self {
            coeffs: [1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn coeffs(&self) -> [f64; 4] {
        self.coeffs
    }

    pub fn fidelity(&self) -> f64 {
        self.coeffs[0]
    }

    /// Depolarization: keep the target weight, share the rest evenly.
    pub fn twirl(&self) -> WernerState {
        WernerState {
            fidelity: self.coeffs[0],
        }
    }

    /// Distribution of the error among the three non-target states, or
    /// `None` for a (numerically) pure target state.
    pub fn error_profile(&self) -> Option<[f64; 3]> {
        let err: f64 = self.coeffs[1..].iter().sum();
        if err <= 1e-15 {
            return None;
        }
        Some([
            self.coeffs[1] / err,
            self.coeffs[2] / err,
            self.coeffs[3] / err,
        ])
    }

    /// State with target weight `fidelity` and the given error profile.
    pub fn with_profile(fidelity: f64, profile: [f64; 3]) -> Result<Self> {
        WernerState::new(fidelity)?;
        let err = 1.0 - fidelity;
        Self::new([
            fidelity,
            err * profile[0],
            err * profile[1],
            err * profile[2],
        ])
    }
}

impl From<WernerState> for BellDiagonalState {
    fn from(w: WernerState) -> Self {
        w.to_bell_diagonal()
    }
}

pub fn werner_from_fidelity(fidelity: f64) -> Result<WernerState> {
    WernerState::new(fidelity)
}

pub fn twirl(state: &BellDiagonalState) -> WernerState {
    state.twirl()
}

pub fn fidelity_of(state: &BellDiagonalState) -> f64 {
    state.fidelity()
}
