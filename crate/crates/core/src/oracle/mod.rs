//! Exact density-matrix oracle for the connection and purification
//! circuits, built from the imperfect one-qubit, two-qubit and readout
//! models in [`density`].

pub mod circuits;
pub mod density;
pub mod equivalence;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use circuits::{oracle_connect, oracle_connect_raw, oracle_purify, OracleOptions};
pub use density::{
    apply_noisy_one_qubit, apply_noisy_two_qubit, noisy_measure, noisy_measure_in, Basis,
    DensityMatrix, MeasurementBranch,
};
pub use equivalence::{run_equivalence, CheckGrid, EquivalenceReport};

/// Reliabilities of one-qubit gates (`p1`), two-qubit gates (`p2`) and the
/// readout quality `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub p1: f64,
    pub p2: f64,
    pub eta: f64,
}

impl NoiseParams {
    pub fn new(p1: f64, p2: f64, eta: f64) -> Result<Self> {
        let n = Self { p1, p2, eta };
        n.validate()?;
        Ok(n)
    }

    pub fn perfect() -> Self {
        Self {
            p1: 1.0,
            p2: 1.0,
            eta: 1.0,
        }
    }

    /// All three parameters equal to `q`.
    pub fn uniform(q: f64) -> Result<Self> {
        Self::new(q, q, q)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, v: f64, range: &str| Error::Config {
            field: field.into(),
            reason: format!("{v} outside {range}"),
        };
        if !(0.0..=1.0).contains(&self.p1) {
            return Err(bad("p1", self.p1, "[0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.p2) {
            return Err(bad("p2", self.p2, "[0, 1]"));
        }
        if !(0.5..=1.0).contains(&self.eta) {
            return Err(bad("eta", self.eta, "[1/2, 1]"));
        }
        Ok(())
    }

    /// Per-connection shrink factor of the Werner parameter,
    /// `p1 p2 (4η² - 1) / 3`.
    pub fn connection_factor(&self) -> f64 {
        self.p1 * self.p2 * (4.0 * self.eta * self.eta - 1.0) / 3.0
    }

    /// Componentwise `>=`.
    pub fn dominates(&self, other: &NoiseParams) -> bool {
        self.p1 >= other.p1 && self.p2 >= other.p2 && self.eta >= other.eta
    }
}

/// Two-pair recurrence purification protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Bilateral CNOT on depolarized (Werner) pairs.
    Bennett,
    /// Opposite π/2 rotations, then bilateral CNOT; no depolarization.
    Deutsch,
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Protocol::Bennett => "bennett",
            Protocol::Deutsch => "deutsch",
        })
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bennett" | "a" => Ok(Protocol::Bennett),
            "deutsch" | "b" => Ok(Protocol::Deutsch),
            other => Err(Error::Config {
                field: "protocol".into(),
                reason: format!("unknown protocol `{other}` (bennett|deutsch)"),
            }),
        }
    }
}
