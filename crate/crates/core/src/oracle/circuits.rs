//! Four-qubit circuits for one connection and one purification round.

use std::f64::consts::FRAC_PI_2;

use super::density::{
    gates, measurement_branch, noisy_gate, partial_trace, trace, Basis, CMatrix, DensityMatrix, C64,
};
use super::{NoiseParams, Protocol};
use crate::error::{Error, Result};
use crate::state::BellDiagonalState;

/// Switches for effects the closed-form maps leave out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleOptions {
    /// Apply the one-qubit noise model to the purification rotations.
    pub rotation_noise: bool,
}

/// Entanglement swapping of `A–B1` with `B2–C` at the middle node.
///
/// Register order is `A, B1, B2, C`. The Bell measurement is a noisy CNOT
/// `B1 → B2` followed by noisy readout of `B1` in the X basis and `B2` in the
/// Z basis. The outcome-dependent Pauli correction is applied to `C` as a
/// noisy one-qubit operation on every branch, identity included.
pub fn oracle_connect_raw(
    pair_ab: &BellDiagonalState,
    pair_bc: &BellDiagonalState,
    noise: &NoiseParams,
) -> Result<BellDiagonalState> {
    noise.validate()?;
    let rho = DensityMatrix::from_bell_diagonal(pair_ab)
        .tensor(&DensityMatrix::from_bell_diagonal(pair_bc))?
        .into_matrix();
    let rho = noisy_gate(&rho, &gates::cnot(), &[1, 2], noise.p2)?;

    let mut total = CMatrix::zeros(16, 16);
    for x in 0..2u8 {
        let after_x = measurement_branch(&rho, 1, noise.eta, x, Basis::X)?;
        for z in 0..2u8 {
            let branch = measurement_branch(&after_x, 2, noise.eta, z, Basis::Z)?;
            let mut fix = gates::identity();
            if z == 1 {
                fix = gates::pauli_x() * fix;
            }
            if x == 1 {
                fix = gates::pauli_z() * fix;
            }
            total += noisy_gate(&branch, &fix, &[3], noise.p1)?;
        }
    }
    let ac = partial_trace(&total, &[1, 2])?;
    DensityMatrix::new(ac)?.to_bell_diagonal()
}

/// [`oracle_connect_raw`] followed by depolarization to Werner form.
pub fn oracle_connect(
    pair_ab: &BellDiagonalState,
    pair_bc: &BellDiagonalState,
    noise: &NoiseParams,
) -> Result<BellDiagonalState> {
    Ok(oracle_connect_raw(pair_ab, pair_bc, noise)?.twirl().into())
}

/// One purification round on pairs `(A1, B1)` (kept) and `(A2, B2)`
/// (measured). Returns the probability that the two readings coincide and
/// the normalized kept pair.
pub fn oracle_purify(
    pair1: &BellDiagonalState,
    pair2: &BellDiagonalState,
    noise: &NoiseParams,
    protocol: Protocol,
    options: OracleOptions,
) -> Result<(f64, BellDiagonalState)> {
    noise.validate()?;
    // register: A1, B1, A2, B2
    let mut rho = DensityMatrix::from_bell_diagonal(pair1)
        .tensor(&DensityMatrix::from_bell_diagonal(pair2))?
        .into_matrix();

    if protocol == Protocol::Deutsch {
        let p1 = if options.rotation_noise { noise.p1 } else { 1.0 };
        let alice = gates::rx(FRAC_PI_2);
        let bob = gates::rx(-FRAC_PI_2);
        for (gate, q) in [(&alice, 0), (&bob, 1), (&alice, 2), (&bob, 3)] {
            rho = noisy_gate(&rho, gate, &[q], p1)?;
        }
    }
    rho = noisy_gate(&rho, &gates::cnot(), &[0, 2], noise.p2)?;
    rho = noisy_gate(&rho, &gates::cnot(), &[1, 3], noise.p2)?;

    let mut kept = CMatrix::zeros(16, 16);
    for outcome in 0..2u8 {
        let a = measurement_branch(&rho, 2, noise.eta, outcome, Basis::Z)?;
        kept += measurement_branch(&a, 3, noise.eta, outcome, Basis::Z)?;
    }
    let p_succ = trace(&kept);
    if p_succ.is_nan() || p_succ < 1e-15 {
        return Err(Error::DegeneratePostSelection(p_succ));
    }
    let pair = partial_trace(&kept, &[2, 3])? * C64::new(1.0 / p_succ, 0.0);
    let out = DensityMatrix::new(pair)?.to_bell_diagonal()?;
    Ok((p_succ, out))
}
