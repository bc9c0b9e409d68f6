//! Fidelity and resource model of a nested entanglement-purification
//! quantum repeater.
//!
//! Pairs are Bell-diagonal states ([`state`]). Connection and purification
//! have closed-form maps ([`maps`]) that are checked against an exact
//! density-matrix simulation of the underlying circuits ([`oracle`]).
//! [`protocol`] strings the maps into repeater schemes and accounts for
//! resources and time; [`cli`] exposes everything on the command line.

pub mod cli;
pub mod error;
pub mod maps;
pub mod oracle;
pub mod protocol;
pub mod state;

pub use error::{Error, Result};
pub use maps::{
    aux_limit, bennett_fixed_points, connect_chain, connect_l, connect_pair, fixed_points,
    purify_bell, purify_bennett, purify_deutsch, purify_step, purify_with_aux, staircase,
    staircase_from, werner_map, FixedPoints, PurifyOutcome, StaircaseTrace,
};
pub use oracle::{NoiseParams, Protocol};
pub use protocol::{
    optimize_working_fidelity, simulate, simulate_nested, simulate_scheme_c, ElementaryProfile,
    ProtocolConfig, RepeaterReport, Scheme, SweepOptions, TimingModel,
};
pub use state::{BellDiagonalState, WernerState};
