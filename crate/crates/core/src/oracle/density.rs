//! Dense density matrices on up to four qubits and the imperfect
//! operation/measurement models acting on them.
//!
//! Qubit 0 is the most significant bit of a basis index.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::state::BellDiagonalState;

pub use nalgebra::Complex;
pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub const MAX_QUBITS: usize = 4;
/// Tolerance on Hermiticity, trace and eigenvalues of a density matrix.
pub const STATE_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Ideal single-qubit gates.
pub mod gates {
    use super::*;

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }

    pub fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn pauli_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    pub fn hadamard() -> CMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[c(h), c(h), c(h), c(-h)])
    }

    /// `exp(-i θ X / 2)`.
    pub fn rx(theta: f64) -> CMatrix {
        let (s, co) = (theta / 2.0).sin_cos();
        let mis = C64::new(0.0, -s);
        CMatrix::from_row_slice(2, 2, &[c(co), mis, mis, c(co)])
    }

    /// Control is the first (more significant) qubit.
    pub fn cnot() -> CMatrix {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 1)] = ONE;
        m[(2, 3)] = ONE;
        m[(3, 2)] = ONE;
        m
    }
}

/// Computational (`Z`) or Hadamard-rotated (`X`) readout basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Z,
    X,
}

fn qubits_of(m: &CMatrix) -> Result<usize> {
    let dim = m.nrows();
    if m.ncols() != dim || !dim.is_power_of_two() || dim < 2 {
        return Err(Error::Domain(format!(
            "matrix of shape {}x{} is not a qubit operator",
            dim,
            m.ncols()
        )));
    }
    let k = dim.trailing_zeros() as usize;
    if k > MAX_QUBITS {
        return Err(Error::Domain(format!("{k} qubits exceeds the {MAX_QUBITS}-qubit limit")));
    }
    Ok(k)
}

fn bit_mask(qubits: usize, q: usize) -> usize {
    1 << (qubits - 1 - q)
}

fn check_targets(qubits: usize, targets: &[usize]) -> Result<()> {
    for (i, &t) in targets.iter().enumerate() {
        if t >= qubits {
            return Err(Error::QubitIndex { index: t, qubits });
        }
        if targets[..i].contains(&t) {
            return Err(Error::Domain(format!("repeated qubit index {t}")));
        }
    }
    Ok(())
}

/// Packs the bits of `index` at `targets` into a gate-local index, first
/// target most significant.
fn local_index(qubits: usize, targets: &[usize], index: usize) -> usize {
    targets.iter().fold(0, |acc, &t| {
        (acc << 1) | usize::from(index & bit_mask(qubits, t) != 0)
    })
}

fn target_mask(qubits: usize, targets: &[usize]) -> usize {
    targets.iter().map(|&t| bit_mask(qubits, t)).sum()
}

/// Lifts a gate on `targets` to the full register.
pub fn embed(gate: &CMatrix, qubits: usize, targets: &[usize]) -> Result<CMatrix> {
    check_targets(qubits, targets)?;
    if gate.nrows() != 1 << targets.len() || gate.ncols() != gate.nrows() {
        return Err(Error::Domain(format!(
            "gate of size {} does not act on {} qubits",
            gate.nrows(),
            targets.len()
        )));
    }
    let dim = 1 << qubits;
    let rest = !target_mask(qubits, targets);
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        if i & rest != j & rest {
            ZERO
        } else {
            gate[(local_index(qubits, targets, i), local_index(qubits, targets, j))]
        }
    }))
}

/// `U ρ U†` for a gate on `targets`.
pub fn apply_unitary(rho: &CMatrix, gate: &CMatrix, targets: &[usize]) -> Result<CMatrix> {
    let qubits = qubits_of(rho)?;
    let u = embed(gate, qubits, targets)?;
    Ok(&u * rho * u.adjoint())
}

/// `tr_S{ρ} ⊗ I_S`, with the unnormalized identity on `S = targets`.
pub fn partial_trace_embed(rho: &CMatrix, targets: &[usize]) -> Result<CMatrix> {
    let qubits = qubits_of(rho)?;
    check_targets(qubits, targets)?;
    let dim = 1 << qubits;
    let mask = target_mask(qubits, targets);
    // every assignment of the traced bits, spread to their register positions
    let fills: Vec<usize> = (0..dim).filter(|i| i & !mask == 0).collect();
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        if i & mask != j & mask {
            return ZERO;
        }
        let (ib, jb) = (i & !mask, j & !mask);
        fills.iter().map(|f| rho[(ib | f, jb | f)]).sum()
    }))
}

/// Reduced operator on the qubits not in `traced`, keeping their order.
pub fn partial_trace(rho: &CMatrix, traced: &[usize]) -> Result<CMatrix> {
    let qubits = qubits_of(rho)?;
    check_targets(qubits, traced)?;
    let kept: Vec<usize> = (0..qubits).filter(|q| !traced.contains(q)).collect();
    let dim = 1 << qubits;
    let rdim = 1 << kept.len();
    let mut out = CMatrix::zeros(rdim, rdim);
    for i in 0..dim {
        for j in 0..dim {
            let mask = target_mask(qubits, traced);
            if i & mask != j & mask {
                continue;
            }
            let (ri, rj) = (local_index(qubits, &kept, i), local_index(qubits, &kept, j));
            out[(ri, rj)] += rho[(i, j)];
        }
    }
    Ok(out)
}

/// `p ρ_ideal + (1-p)/2^m tr_S{ρ} ⊗ I_S` for a gate on the `m` qubits `S`.
pub fn noisy_gate(rho: &CMatrix, gate: &CMatrix, targets: &[usize], p: f64) -> Result<CMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("gate reliability {p} outside [0, 1]")));
    }
    let ideal = apply_unitary(rho, gate, targets)?;
    if p == 1.0 {
        return Ok(ideal);
    }
    let mixed = partial_trace_embed(rho, targets)?;
    let weight = (1.0 - p) / f64::from(1u32 << targets.len());
    Ok(ideal * c(p) + mixed * c(weight))
}

/// POVM element of the imperfect readout for apparatus outcome `outcome`.
pub fn povm_element(eta: f64, outcome: u8, basis: Basis) -> CMatrix {
    let (w0, w1) = if outcome == 0 { (eta, 1.0 - eta) } else { (1.0 - eta, eta) };
    let z = CMatrix::from_row_slice(2, 2, &[c(w0), ZERO, ZERO, c(w1)]);
    match basis {
        Basis::Z => z,
        Basis::X => {
            let h = gates::hadamard();
            &h * z * &h
        }
    }
}

/// Unnormalized post-measurement operator `K ρ K†` with `K = √P`.
pub fn measurement_branch(
    rho: &CMatrix,
    target: usize,
    eta: f64,
    outcome: u8,
    basis: Basis,
) -> Result<CMatrix> {
    let (w0, w1) = if outcome == 0 { (eta, 1.0 - eta) } else { (1.0 - eta, eta) };
    let mut kraus = CMatrix::from_row_slice(2, 2, &[c(w0.sqrt()), ZERO, ZERO, c(w1.sqrt())]);
    if basis == Basis::X {
        let h = gates::hadamard();
        kraus = &h * kraus * &h;
    }
    apply_unitary(rho, &kraus, &[target])
}

pub fn trace(m: &CMatrix) -> f64 {
    m.trace().re
}

/// Smallest eigenvalue of the Hermitian part.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let herm = (m + m.adjoint()) * c(0.5);
    SymmetricEigen::new(herm)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Bell-basis kets in crate order.
pub fn bell_ket(index: usize) -> [C64; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match index {
        0 => [c(h), ZERO, ZERO, c(h)],
        1 => [c(h), ZERO, ZERO, c(-h)],
        2 => [ZERO, c(h), c(h), ZERO],
        3 => [ZERO, c(h), c(-h), ZERO],
        _ => panic!("Bell index {index} out of range"),
    }
}

/// A validated density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let qubits = qubits_of(&m)?;
        let herm_err = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_err > STATE_TOL {
            return Err(Error::Domain(format!("not Hermitian (deviation {herm_err:e})")));
        }
        let tr = trace(&m);
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::Domain(format!("trace {tr} is not 1")));
        }
        let min = min_eigenvalue(&m);
        if min < -STATE_TOL {
            return Err(Error::Domain(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { qubits, m })
    }

    /// `|ψ⟩⟨ψ|` for a normalized ket.
    pub fn pure(ket: &[C64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(ket);
        Self::new(&v * v.adjoint())
    }

    pub fn basis_state(qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << qubits;
        let mut m = CMatrix::zeros(dim, dim);
        if index >= dim {
            return Err(Error::Domain(format!("basis index {index} >= {dim}")));
        }
        m[(index, index)] = ONE;
        Self::new(m)
    }

    pub fn maximally_mixed(qubits: usize) -> Result<Self> {
        let dim = 1usize << qubits;
        Self::new(CMatrix::identity(dim, dim) * c(1.0 / dim as f64))
    }

    pub fn from_bell_diagonal(state: &BellDiagonalState) -> Self {
        let mut m = CMatrix::zeros(4, 4);
        for (k, w) in state.coeffs().iter().enumerate() {
            let v = nalgebra::DVector::from_column_slice(&bell_ket(k));
            m += &v * v.adjoint() * c(*w);
        }
        Self { qubits: 2, m }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        let qubits = self.qubits + other.qubits;
        if qubits > MAX_QUBITS {
            return Err(Error::Domain(format!("{qubits} qubits exceeds the {MAX_QUBITS}-qubit limit")));
        }
        Ok(Self {
            qubits,
            m: self.m.kronecker(&other.m),
        })
    }

    /// Diagonal of a two-qubit state in the Bell basis.
    pub fn bell_coefficients(&self) -> Result<[f64; 4]> {
        if self.qubits != 2 {
            return Err(Error::Domain(format!(
                "Bell coefficients need 2 qubits, have {}",
                self.qubits
            )));
        }
        Ok(std::array::from_fn(|k| {
            let v = nalgebra::DVector::from_column_slice(&bell_ket(k));
            (v.adjoint() * &self.m * &v)[(0, 0)].re
        }))
    }

    pub fn to_bell_diagonal(&self) -> Result<BellDiagonalState> {
        BellDiagonalState::new(self.bell_coefficients()?)
    }

    pub fn probability_of(&self, index: usize) -> f64 {
        self.m[(index, index)].re
    }
}

/// One apparatus reading of [`noisy_measure`].
#[derive(Debug, Clone)]
pub struct MeasurementBranch {
    pub outcome: u8,
    pub probability: f64,
    pub state: DensityMatrix,
}

pub fn apply_noisy_one_qubit(
    rho: &DensityMatrix,
    ideal_unitary: &CMatrix,
    target: usize,
    p1: f64,
) -> Result<DensityMatrix> {
    check_targets(rho.qubits, &[target])?;
    DensityMatrix::new(noisy_gate(&rho.m, ideal_unitary, &[target], p1)?)
}

pub fn apply_noisy_two_qubit(
    rho: &DensityMatrix,
    ideal_unitary: &CMatrix,
    targets: (usize, usize),
    p2: f64,
) -> Result<DensityMatrix> {
    DensityMatrix::new(noisy_gate(&rho.m, ideal_unitary, &[targets.0, targets.1], p2)?)
}

/// Imperfect computational-basis readout of one qubit. Branches with
/// probability below 1e-15 are dropped.
pub fn noisy_measure(rho: &DensityMatrix, target: usize, eta: f64) -> Result<Vec<MeasurementBranch>> {
    noisy_measure_in(rho, target, eta, Basis::Z)
}

pub fn noisy_measure_in(
    rho: &DensityMatrix,
    target: usize,
    eta: f64,
    basis: Basis,
) -> Result<Vec<MeasurementBranch>> {
    if !(0.5..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("measurement quality {eta} outside [1/2, 1]")));
    }
    check_targets(rho.qubits, &[target])?;
    let mut out = Vec::with_capacity(2);
    for outcome in 0..2u8 {
        let branch = measurement_branch(&rho.m, target, eta, outcome, basis)?;
        let probability = trace(&branch);
        if probability < 1e-15 {
            continue;
        }
        let state = DensityMatrix::new(branch * c(1.0 / probability))?;
        out.push(MeasurementBranch {
            outcome,
            probability,
            state,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() <= tol)
    }

    #[test]
    fn perfect_one_qubit_gate_is_ideal() {
        let rho = DensityMatrix::basis_state(2, 0).unwrap();
        let out = apply_noisy_one_qubit(&rho, &gates::pauli_x(), 1, 1.0).unwrap();
        assert_eq!(out.probability_of(1), 1.0);
    }

    #[test]
    fn fully_noisy_one_qubit_gate_mixes_target() {
        // |01><01| on qubits (0,1); p1 = 0 on qubit 1
        let rho = DensityMatrix::basis_state(2, 1).unwrap();
        let out = apply_noisy_one_qubit(&rho, &gates::hadamard(), 1, 0.0).unwrap();
        let expect = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.5),
            c(0.5),
            ZERO,
            ZERO,
        ]));
        assert!(close(out.matrix(), &expect, 1e-15));
    }

    #[test]
    fn slightly_noisy_identity_on_zero() {
        let rho = DensityMatrix::basis_state(1, 0).unwrap();
        let out = apply_noisy_one_qubit(&rho, &gates::identity(), 0, 0.995).unwrap();
        assert!((out.probability_of(0) - 0.9975).abs() < 1e-15);
        assert!((out.probability_of(1) - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn two_qubit_noise_limits() {
        let rho = DensityMatrix::basis_state(3, 0b100).unwrap();
        let ideal = apply_noisy_two_qubit(&rho, &gates::cnot(), (0, 2), 1.0).unwrap();
        assert_eq!(ideal.probability_of(0b101), 1.0);
        let mixed = apply_noisy_two_qubit(&rho, &gates::cnot(), (0, 2), 0.0).unwrap();
        // qubits 0 and 2 maximally mixed, qubit 1 stays |0>
        for idx in [0b000, 0b001, 0b100, 0b101] {
            assert!((mixed.probability_of(idx) - 0.25).abs() < 1e-15);
        }
        let reduced = partial_trace(mixed.matrix(), &[0, 2]).unwrap();
        assert!((reduced[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn index_errors() {
        let rho = DensityMatrix::basis_state(2, 0).unwrap();
        assert!(matches!(
            apply_noisy_one_qubit(&rho, &gates::pauli_x(), 2, 1.0),
            Err(Error::QubitIndex { index: 2, qubits: 2 })
        ));
        assert!(apply_noisy_two_qubit(&rho, &gates::cnot(), (1, 1), 1.0).is_err());
        assert!(noisy_measure(&rho, 5, 1.0).is_err());
    }

    #[test]
    fn measurement_examples() {
        let zero = DensityMatrix::basis_state(1, 0).unwrap();
        let b = noisy_measure(&zero, 0, 1.0).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!((b[0].outcome, b[0].probability), (0, 1.0));

        let b = noisy_measure(&zero, 0, 0.995).unwrap();
        let wrong = b.iter().find(|x| x.outcome == 1).unwrap();
        assert!((wrong.probability - 0.005).abs() < 1e-15);

        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        for eta in [0.5, 0.8, 1.0] {
            for br in noisy_measure(&mixed, 0, eta).unwrap() {
                assert!((br.probability - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn povm_is_complete() {
        for eta in [0.5, 0.7, 0.995, 1.0] {
            for basis in [Basis::Z, Basis::X] {
                let sum = povm_element(eta, 0, basis) + povm_element(eta, 1, basis);
                assert!(close(&sum, &CMatrix::identity(2, 2), 1e-15));
            }
            // exact in the computational basis
            let sum = povm_element(eta, 0, Basis::Z) + povm_element(eta, 1, Basis::Z);
            assert_eq!(sum, CMatrix::identity(2, 2));
        }
    }

    #[test]
    fn x_basis_reads_plus_state() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::pure(&[c(h), c(h)]).unwrap();
        let b = noisy_measure_in(&plus, 0, 1.0, Basis::X).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].outcome, 0);
    }

    #[test]
    fn bell_round_trip() {
        let s = BellDiagonalState::new([0.7, 0.1, 0.15, 0.05]).unwrap();
        let dm = DensityMatrix::from_bell_diagonal(&s);
        DensityMatrix::new(dm.matrix().clone()).unwrap();
        let back = dm.bell_coefficients().unwrap();
        for (a, b) in back.iter().zip(s.coeffs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn partial_trace_of_product() {
        let a = DensityMatrix::basis_state(1, 1).unwrap();
        let b = DensityMatrix::maximally_mixed(1).unwrap();
        let ab = a.tensor(&b).unwrap();
        let ra = partial_trace(ab.matrix(), &[1]).unwrap();
        assert!(close(&ra, a.matrix(), 1e-15));
        let rb = partial_trace(ab.matrix(), &[0]).unwrap();
        assert!(close(&rb, b.matrix(), 1e-15));
    }

    #[test]
    fn rejects_invalid_matrices() {
        let mut m = CMatrix::identity(2, 2) * c(0.5);
        m[(0, 1)] = c(0.1);
        assert!(DensityMatrix::new(m).is_err());
        assert!(DensityMatrix::new(CMatrix::identity(2, 2)).is_err());
        let neg = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.5), c(-0.5)]));
        assert!(DensityMatrix::new(neg).is_err());
        assert!(DensityMatrix::maximally_mixed(3)
            .unwrap()
            .tensor(&DensityMatrix::maximally_mixed(2).unwrap())
            .is_err());
    }
}
