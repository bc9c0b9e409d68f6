use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong between a pair state and a repeater report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("qubit index {index} out of range for a {qubits}-qubit register")]
    QubitIndex { index: usize, qubits: usize },

    #[error("invalid noise regime: normalization {0} is not positive")]
    InvalidNoiseRegime(f64),

    #[error("degenerate post-selection: success probability {0:e} below 1e-15")]
    DegeneratePostSelection(f64),

    #[error("purification impossible: the map never rises above the diagonal on [0.251, 0.999]")]
    PurificationImpossible,

    #[error("below purification threshold: connected fidelity {connected} does not exceed F_min {f_min}")]
    BelowThreshold { connected: f64, f_min: f64 },

    #[error("working fidelity {f_work} unreachable: purification saturates at {limit}")]
    WorkingFidelityUnreachable { f_work: f64, limit: f64 },

    #[error("staircase exceeded {0} purification steps")]
    StepCap(usize),

    #[error("aux-pair purification impossible: limit {limit} with aux fidelity {aux} does not exceed {f_work}")]
    AuxPairImpossible { aux: f64, limit: f64, f_work: f64 },

    #[error("nesting level {level}: {source}")]
    AtLevel { level: usize, source: Box<Error> },

    #[error("no feasible working fidelity in grid [{lo}, {hi}]{interval}")]
    NoFeasiblePoint { lo: f64, hi: f64, interval: String },

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },
}

impl Error {
    pub(crate) fn at_level(level: usize, err: Error) -> Error {
        Error::AtLevel {
            level,
            source: Box::new(err),
        }
    }

    /// Strips level context.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLevel { source, .. } => source.root(),
            other => other,
        }
    }

    /// Threshold and condition violations, as opposed to bad input.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self.root(),
            Error::PurificationImpossible
                | Error::BelowThreshold { .. }
                | Error::WorkingFidelityUnreachable { .. }
                | Error::StepCap(_)
                | Error::AuxPairImpossible { .. }
                | Error::NoFeasiblePoint { .. }
                | Error::InvalidNoiseRegime(_)
                | Error::DegeneratePostSelection(_)
        )
    }
}
