//! Grid comparison of the closed-form maps against the oracle circuits.

use rayon::prelude::*;
use serde::Serialize;

use super::circuits::{oracle_connect, oracle_connect_raw, oracle_purify, OracleOptions};
use super::{NoiseParams, Protocol};
use crate::error::Result;
use crate::maps::{connect_l, connect_pair, purify_bennett, purify_deutsch};
use crate::state::{BellDiagonalState, WernerState};

pub const DEFAULT_FIDELITIES: [f64; 4] = [0.55, 0.7, 0.85, 0.97];
pub const DEFAULT_NOISE_LEVELS: [f64; 4] = [1.0, 0.995, 0.99, 0.97];
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Off-target splits used for the non-Werner cases.
const PROFILE_A: [f64; 3] = [0.5, 0.3, 0.2];
const PROFILE_B: [f64; 3] = [0.15, 0.25, 0.6];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckGrid {
    pub fidelities: Vec<f64>,
    /// Each of `p1`, `p2`, `eta` ranges over these values independently.
    pub noise_levels: Vec<f64>,
}

impl Default for CheckGrid {
    fn default() -> Self {
        Self {
            fidelities: DEFAULT_FIDELITIES.to_vec(),
            noise_levels: DEFAULT_NOISE_LEVELS.to_vec(),
        }
    }
}

impl CheckGrid {
    pub fn noise_points(&self) -> Vec<NoiseParams> {
        let v = &self.noise_levels;
        let mut out = Vec::with_capacity(v.len().pow(3));
        for &p1 in v {
            for &p2 in v {
                for &eta in v {
                    out.push(NoiseParams { p1, p2, eta });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub max_deviation: f64,
    pub worst_fidelity: f64,
    pub worst_noise: NoiseParams,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub tolerance: f64,
    pub checks: Vec<CheckResult>,
    /// Largest fidelity shift of a Deutsch round when the rotations carry
    /// one-qubit noise. Informational; the closed forms leave it out.
    pub rotation_noise_shift: f64,
}

impl EquivalenceReport {
    pub fn max_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.max_deviation).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.max_deviation <= self.tolerance)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_NAMES: [&str; 6] = [
    "connect_werner",
    "connect_bell",
    "bennett_fidelity",
    "bennett_p_succ",
    "deutsch_state",
    "deutsch_p_succ",
];

fn max_abs(a: [f64; 4], b: [f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Deviations for one grid point, in [`CHECK_NAMES`] order, plus the
/// rotation-noise shift. `perturb` is added to every closed-form value.
fn point(f: f64, noise: &NoiseParams, perturb: f64) -> Result<([f64; 6], f64)> {
    let w: BellDiagonalState = WernerState::new(f)?.into();
    let s1 = BellDiagonalState::with_profile(f, PROFILE_A)?;
    let s2 = BellDiagonalState::with_profile((1.0 + f) / 2.0, PROFILE_B)?;

    let conn = (connect_l(f, 2, noise)? + perturb - oracle_connect(&w, &w, noise)?.fidelity()).abs();
    let conn_bell = max_abs(
        connect_pair(&s1, &s2, noise).coeffs().map(|x| x + perturb),
        oracle_connect_raw(&s1, &s2, noise)?.coeffs(),
    );

    let closed = purify_bennett(f, noise)?;
    let (p_oracle, out_oracle) = oracle_purify(&w, &w, noise, Protocol::Bennett, OracleOptions::default())?;
    let b_fid = (closed.out_fidelity + perturb - out_oracle.fidelity()).abs();
    let b_p = (closed.p_succ + perturb - p_oracle).abs();

    let mut d_state = 0.0f64;
    let mut d_p = 0.0f64;
    let mut shift = 0.0f64;
    for (x, y) in [(&w, &w), (&s1, &s2), (&s2, &s1)] {
        let (o, s) = purify_deutsch(x, y, noise)?;
        let (p, r) = oracle_purify(x, y, noise, Protocol::Deutsch, OracleOptions::default())?;
        d_state = d_state.max(max_abs(s.coeffs().map(|c| c + perturb), r.coeffs()));
        d_p = d_p.max((o.p_succ + perturb - p).abs());
        let noisy = OracleOptions { rotation_noise: true };
        let (_, rn) = oracle_purify(x, y, noise, Protocol::Deutsch, noisy)?;
        shift = shift.max((rn.fidelity() - s.fidelity()).abs());
    }
    Ok(([conn, conn_bell, b_fid, b_p, d_state, d_p], shift))
}

/// Runs every check on every grid point.
pub fn run_equivalence(grid: &CheckGrid, tolerance: f64, perturb: f64) -> Result<EquivalenceReport> {
    let cases: Vec<(f64, NoiseParams)> = grid
        .fidelities
        .iter()
        .flat_map(|&f| grid.noise_points().into_iter().map(move |n| (f, n)))
        .collect();
    let results: Vec<([f64; 6], f64)> = cases
        .par_iter()
        .map(|(f, n)| point(*f, n, perturb))
        .collect::<Result<_>>()?;

    let mut checks: Vec<CheckResult> = CHECK_NAMES
        .iter()
        .map(|&name| CheckResult {
            name,
            cases: cases.len(),
            max_deviation: 0.0,
            worst_fidelity: f64::NAN,
            worst_noise: NoiseParams::perfect(),
        })
        .collect();
    let mut shift = 0.0f64;
    for ((f, n), (devs, s)) in cases.iter().zip(&results) {
        shift = shift.max(*s);
        for (c, &d) in checks.iter_mut().zip(devs) {
            // the first maximum in grid order wins
            if d > c.max_deviation || c.worst_fidelity.is_nan() {
                c.max_deviation = d;
                c.worst_fidelity = *f;
                c.worst_noise = *n;
            }
        }
    }
    Ok(EquivalenceReport {
        tolerance,
        checks,
        rotation_noise_shift: shift,
    })
}
