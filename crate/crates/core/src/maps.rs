//! Closed-form fidelity maps for connection and purification, their fixed
//! points, and the connect-then-purify staircase of one nesting level.
//!
//! Two representations run side by side. Werner pairs go through the scalar
//! formulas ([`connect_l`], [`purify_bennett`]). Bell-diagonal pairs go
//! through coefficient propagation ([`connect_pair`], [`purify_bell`]), where
//! every Pauli error is an XOR on the Bell index (see [`crate::state`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{NoiseParams, Protocol};
use crate::state::{BellDiagonalState, WernerState};

/// Maximum purification steps in one staircase.
pub const STEP_CAP: usize = 10_000;

const SCAN_LO: f64 = 0.251;
const SCAN_HI: f64 = 0.999;
const SCAN_STEP: f64 = 1e-3;
const BISECT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurifyOutcome {
    pub out_fidelity: f64,
    /// Probability that the two readings coincide; also the normalization
    /// of the output state.
    pub p_succ: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoints {
    /// Repeller: below it purification lowers the fidelity.
    pub f_min: f64,
    /// Attractor: the best fidelity purification can reach.
    pub f_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaircaseStep {
    pub fidelity: f64,
    pub p_succ: f64,
}

/// One nesting level: connection followed by repeated purification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseTrace {
    pub connected: BellDiagonalState,
    pub steps: Vec<StaircaseStep>,
    pub m_max: usize,
    /// Average number of parallel copies `M = Π 2 / p_succ`.
    pub copies: f64,
    pub output: BellDiagonalState,
}

fn check_fidelity(f: f64) -> Result<()> {
    WernerState::new(f).map(|_| ())
}

/// Fidelity after connecting `l` Werner pairs of fidelity `f`:
/// `1/4 + 3/4 (p1 p2 (4η²-1)/3)^(l-1) ((4f-1)/3)^l`.
pub fn connect_l(f: f64, l: u32, noise: &NoiseParams) -> Result<f64> {
    check_fidelity(f)?;
    noise.validate()?;
    if l < 1 {
        return Err(Error::Domain(format!("cannot connect {l} pairs")));
    }
    if l == 1 {
        return Ok(f);
    }
    let w = (4.0 * f - 1.0) / 3.0;
    let shrink = noise.connection_factor().powi(l as i32 - 1) * w.powi(l as i32);
    Ok(0.25 + 0.75 * shrink)
}

/// Swapping two Bell-diagonal pairs.
///
/// Ideal swapping XORs the Bell indices. A wrong X-basis reading leaves a
/// phase error, a wrong Z-basis reading a bit error. The noisy CNOT
/// depolarizes the result with probability `1 - p2`, the noisy correction
/// with probability `1 - p1`.
pub fn connect_pair(
    s1: &BellDiagonalState,
    s2: &BellDiagonalState,
    noise: &NoiseParams,
) -> BellDiagonalState {
    let (a, b) = (s1.coeffs(), s2.coeffs());
    let mut ideal = [0.0; 4];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            ideal[i ^ j] += x * y;
        }
    }
    let eta = noise.eta;
    let mut read = [0.0; 4];
    for (k, w) in ideal.iter().enumerate() {
        for flip in 0..4usize {
            let wrong = ((flip & 1) + (flip >> 1)) as i32;
            let pr = eta.powi(2 - wrong) * (1.0 - eta).powi(wrong);
            read[k ^ flip] += pr * w;
        }
    }
    let depol = |c: [f64; 4], p: f64| c.map(|x| p * x + (1.0 - p) / 4.0);
    BellDiagonalState::clamped(depol(depol(read, noise.p2), noise.p1))
}

/// Connects `l` copies of `s` in a chain.
pub fn connect_chain(s: &BellDiagonalState, l: u32, noise: &NoiseParams) -> Result<BellDiagonalState> {
    noise.validate()?;
    if l < 1 {
        return Err(Error::Domain(format!("cannot connect {l} pairs")));
    }
    let mut out = *s;
    for _ in 1..l {
        out = connect_pair(&out, s, noise);
    }
    Ok(out)
}

/// Noisy recurrence purification of two Werner pairs of fidelity `f`.
///
/// `p_succ` is the probability of coinciding readings; the normalization
/// of the closed form is that probability divided by `p2²`.
pub fn purify_bennett(f: f64, noise: &NoiseParams) -> Result<PurifyOutcome> {
    check_fidelity(f)?;
    noise.validate()?;
    let NoiseParams { p2, eta, .. } = *noise;
    let q = (1.0 - f) / 3.0;
    let same = eta * eta + (1.0 - eta) * (1.0 - eta);
    let differ = 2.0 * eta * (1.0 - eta);
    let cross = f * q + q * q;
    let even = f * f + 2.0 / 3.0 * f * (1.0 - f) + 5.0 / 9.0 * (1.0 - f) * (1.0 - f);

    if p2 == 0.0 {
        // both sides fully depolarized
        return Ok(PurifyOutcome {
            out_fidelity: 0.25,
            p_succ: 0.5,
        });
    }
    let g = (1.0 - p2 * p2) / (8.0 * p2 * p2);
    let num = (f * f + q * q) * same + cross * differ + g;
    let den = even * same + cross * 4.0 * differ + 4.0 * g;
    if den.is_nan() || den <= 0.0 {
        return Err(Error::InvalidNoiseRegime(den));
    }
    Ok(PurifyOutcome {
        out_fidelity: num / den,
        p_succ: p2 * p2 * den,
    })
}

/// Bell-index propagation of one purification round.
///
/// `s1` is kept, `s2` measured. For Deutsch, optional one-qubit noise on the
/// four rotations, then the rotations themselves, which exchange Φ⁻ and Ψ⁻.
/// The bilateral CNOT adds the target phase to the source and the source bit
/// to the target; the readings then see the target bit through the readout
/// noise. Any CNOT failure leaves a uniformly mixed register.
pub fn purify_bell(
    s1: &BellDiagonalState,
    s2: &BellDiagonalState,
    noise: &NoiseParams,
    protocol: Protocol,
    rotation_noise: bool,
) -> Result<(PurifyOutcome, BellDiagonalState)> {
    noise.validate()?;
    let (mut a, mut b) = (s1.coeffs(), s2.coeffs());
    if protocol == Protocol::Deutsch {
        if rotation_noise {
            let keep = noise.p1 * noise.p1;
            let depol = |c: [f64; 4]| c.map(|x| keep * x + (1.0 - keep) / 4.0);
            a = depol(a);
            b = depol(b);
        }
        a.swap(1, 3);
        b.swap(1, 3);
    }
    let eta = noise.eta;
    let coincide = [eta * eta + (1.0 - eta) * (1.0 - eta), 2.0 * eta * (1.0 - eta)];
    let p2sq = noise.p2 * noise.p2;
    let mut w = [(1.0 - p2sq) / 8.0; 4];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            let source = (i & 2) | ((i ^ j) & 1);
            let parity = ((i ^ j) >> 1) & 1;
            w[source] += p2sq * x * y * coincide[parity];
        }
    }
    let p_succ: f64 = w.iter().sum();
    if p_succ.is_nan() || p_succ < 1e-15 {
        return Err(Error::DegeneratePostSelection(p_succ));
    }
    let out = BellDiagonalState::clamped(w.map(|x| x / p_succ));
    Ok((
        PurifyOutcome {
            out_fidelity: out.fidelity(),
            p_succ,
        },
        out,
    ))
}

/// Noisy Deutsch round. The rotations are treated as noiseless, matching
/// the closed form for the bilateral-CNOT round.
pub fn purify_deutsch(
    s1: &BellDiagonalState,
    s2: &BellDiagonalState,
    noise: &NoiseParams,
) -> Result<(PurifyOutcome, BellDiagonalState)> {
    purify_bell(s1, s2, noise, Protocol::Deutsch, false)
}

/// One round where the measured pair is a fixed auxiliary pair.
/// Bennett depolarizes inputs and output; Deutsch keeps full coefficients.
pub fn purify_with_aux(
    target: &BellDiagonalState,
    aux: &BellDiagonalState,
    noise: &NoiseParams,
    protocol: Protocol,
) -> Result<(PurifyOutcome, BellDiagonalState)> {
    match protocol {
        Protocol::Bennett => {
            let t: BellDiagonalState = target.twirl().into();
            let x: BellDiagonalState = aux.twirl().into();
            let (o, s) = purify_bell(&t, &x, noise, protocol, false)?;
            Ok((o, s.twirl().into()))
        }
        Protocol::Deutsch => purify_bell(target, aux, noise, protocol, false),
    }
}

/// One symmetric staircase step on two copies of `s`.
pub fn purify_step(
    s: &BellDiagonalState,
    noise: &NoiseParams,
    protocol: Protocol,
) -> Result<(PurifyOutcome, BellDiagonalState)> {
    match protocol {
        Protocol::Bennett => {
            let o = purify_bennett(s.fidelity(), noise)?;
            Ok((o, WernerState::new(o.out_fidelity.clamp(0.25, 1.0))?.into()))
        }
        Protocol::Deutsch => purify_deutsch(s, s, noise),
    }
}

/// The purification map restricted to Werner inputs, as a scalar function.
pub fn werner_map(noise: NoiseParams, protocol: Protocol) -> impl Fn(f64) -> f64 {
    move |f| {
        let s: BellDiagonalState = match WernerState::new(f) {
            Ok(w) => w.into(),
            Err(_) => return f64::NAN,
        };
        purify_step(&s, &noise, protocol)
            .map(|(o, _)| o.out_fidelity)
            .unwrap_or(f64::NAN)
    }
}

fn bisect(g: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut g_lo = g(lo);
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return mid;
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A sign change of `map(F) - F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub fidelity: f64,
    /// The map rises above the diagonal past this point.
    pub upward: bool,
}

/// All sign changes of `map(F) - F` on the scan grid `[0.251, 0.999]`,
/// refined by bisection.
pub fn diagonal_crossings(map: &dyn Fn(f64) -> f64) -> Vec<Crossing> {
    let g = |f: f64| map(f) - f;
    let n = ((SCAN_HI - SCAN_LO) / SCAN_STEP).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| SCAN_LO + k as f64 * SCAN_STEP).collect();
    let mut out = Vec::new();
    for pair in grid.windows(2) {
        let (a, b) = (g(pair[0]), g(pair[1]));
        if a.is_nan() || b.is_nan() {
            continue;
        }
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            out.push(Crossing {
                fidelity: bisect(&g, pair[0], pair[1]),
                upward: a < 0.0,
            });
        }
    }
    out
}

/// Lower repeller and upper attractor of a one-parameter fidelity map.
///
/// If the map stays above the diagonal up to the end of the scan and fixes
/// `F = 1`, the attractor is 1.
pub fn fixed_points(map: &dyn Fn(f64) -> f64) -> Result<FixedPoints> {
    let crossings = diagonal_crossings(map);
    let g = |f: f64| map(f) - f;
    let f_min = match crossings.iter().find(|c| c.upward) {
        Some(c) => c.fidelity,
        None if g(SCAN_LO) > 0.0 => 0.25,
        None => return Err(Error::PurificationImpossible),
    };
    let f_max = match crossings.iter().find(|c| !c.upward && c.fidelity > f_min) {
        Some(c) => c.fidelity,
        None if g(SCAN_HI) > 0.0 && (map(1.0) - 1.0).abs() <= 1e-12 => 1.0,
        None => return Err(Error::PurificationImpossible),
    };
    Ok(FixedPoints { f_min, f_max })
}

pub fn bennett_fixed_points(noise: &NoiseParams) -> Result<FixedPoints> {
    fixed_points(&werner_map(*noise, Protocol::Bennett))
}

/// Best fidelity reached by repeatedly purifying a stored pair (initially a
/// copy of `aux`) against fresh copies of `aux`. Deutsch rounds can settle
/// into a period-two cycle; the larger value is returned.
pub fn aux_limit(aux: &BellDiagonalState, noise: &NoiseParams, protocol: Protocol) -> Result<f64> {
    let mut hist = vec![*aux];
    for _ in 0..100_000 {
        let last = hist[hist.len() - 1];
        let (_, next) = purify_with_aux(&last, aux, noise, protocol)?;
        hist.push(next);
        let n = hist.len();
        if n >= 3 {
            let d = hist[n - 1]
                .coeffs()
                .iter()
                .zip(hist[n - 3].coeffs())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            if d < 1e-15 {
                return Ok(hist[n - 1].fidelity().max(hist[n - 2].fidelity()));
            }
        }
        if n > 4 {
            hist.remove(0);
        }
    }
    let n = hist.len();
    Ok(hist[n - 1].fidelity().max(hist[n - 2].fidelity()))
}

/// Staircase from a Werner pair at the working fidelity.
pub fn staircase(f_work: f64, l: u32, noise: &NoiseParams, protocol: Protocol) -> Result<StaircaseTrace> {
    let start: BellDiagonalState = WernerState::new(f_work)?.into();
    staircase_from(&start, f_work, l, noise, protocol)
}

/// Connects `l` copies of `input`, then purifies symmetric pairs until the
/// fidelity reaches `f_work`. The first step at or above `f_work` ends the
/// level; overshoot is kept.
///
/// Bennett works on Werner pairs throughout. Deutsch carries the full
/// Bell-diagonal coefficients through connection and purification.
pub fn staircase_from(
    input: &BellDiagonalState,
    f_work: f64,
    l: u32,
    noise: &NoiseParams,
    protocol: Protocol,
) -> Result<StaircaseTrace> {
    check_fidelity(f_work)?;
    noise.validate()?;
    let connected: BellDiagonalState = match protocol {
        Protocol::Bennett => WernerState::new(connect_l(input.fidelity(), l, noise)?)?.into(),
        Protocol::Deutsch => connect_chain(input, l, noise)?,
    };

    let mut trace = StaircaseTrace {
        connected,
        steps: Vec::new(),
        m_max: 0,
        copies: 1.0,
        output: connected,
    };
    if connected.fidelity() >= f_work {
        return Ok(trace);
    }

    let f_min_of = || {
        fixed_points(&werner_map(*noise, protocol))
            .map(|f| f.f_min)
            .unwrap_or(f64::NAN)
    };
    if protocol == Protocol::Bennett {
        let fp = fixed_points(&werner_map(*noise, protocol)).map_err(|_| Error::BelowThreshold {
            connected: connected.fidelity(),
            f_min: f64::NAN,
        })?;
        if connected.fidelity() <= fp.f_min {
            return Err(Error::BelowThreshold {
                connected: connected.fidelity(),
                f_min: fp.f_min,
            });
        }
        if f_work > fp.f_max {
            return Err(Error::WorkingFidelityUnreachable {
                f_work,
                limit: fp.f_max,
            });
        }
    }

    let mut state = connected;
    while state.fidelity() < f_work {
        if trace.steps.len() >= STEP_CAP {
            return Err(Error::StepCap(STEP_CAP));
        }
        let (outcome, next) = purify_step(&state, noise, protocol)?;
        if next.fidelity() <= state.fidelity() {
            return Err(if trace.steps.is_empty() {
                Error::BelowThreshold {
                    connected: connected.fidelity(),
                    f_min: f_min_of(),
                }
            } else {
                Error::WorkingFidelityUnreachable {
                    f_work,
                    limit: state.fidelity(),
                }
            });
        }
        trace.copies *= 2.0 / outcome.p_succ;
        trace.steps.push(StaircaseStep {
            fidelity: next.fidelity(),
            p_succ: outcome.p_succ,
        });
        state = next;
    }
    trace.m_max = trace.steps.len();
    trace.output = state;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(q: f64) -> NoiseParams {
        NoiseParams::uniform(q).unwrap()
    }

    fn werner(f: f64) -> BellDiagonalState {
        WernerState::new(f).unwrap().into()
    }

    #[test]
    fn connect_l_single_pair_is_identity() {
        for f in [0.25, 0.5, 0.77, 1.0] {
            assert_eq!(connect_l(f, 1, &noise(0.9)).unwrap(), f);
        }
    }

    #[test]
    fn deutsch_gains_from_the_second_round_on() {
        // on Werner inputs the rotations only swap two equal weights
        let n = NoiseParams::perfect();
        let w = werner(0.9);
        let (_, d1) = purify_deutsch(&w, &w, &n).unwrap();
        let b1 = purify_bennett(0.9, &n).unwrap().out_fidelity;
        assert!((d1.fidelity() - b1).abs() < 1e-15);
        let (_, d2) = purify_deutsch(&d1, &d1, &n).unwrap();
        let b2 = purify_bennett(b1, &n).unwrap().out_fidelity;
        assert!(d2.fidelity() > b2 + 1e-3, "{} vs {b2}", d2.fidelity());
    }

    #[test]
    fn connect_l_perfect() {
        for l in 1..6 {
            assert_eq!(connect_l(1.0, l, &NoiseParams::perfect()).unwrap(), 1.0);
        }
    }

    #[test]
    fn connect_l_errors() {
        assert!(matches!(connect_l(0.9, 0, &noise(0.99)), Err(Error::Domain(_))));
        assert!(connect_l(0.2, 2, &noise(0.99)).is_err());
    }

    #[test]
    fn connect_l_pinned_value() {
        // 1/4 + 3/4 * (0.995^2 (4 * 0.995^2 - 1) / 3) * (2.8 / 3)^2
        let v = connect_l(0.95, 2, &noise(0.995)).unwrap();
        assert!((v - 0.888_213_676_1).abs() < 1e-12, "{v}");
    }

    #[test]
    fn chain_matches_scalar_formula_on_werner() {
        let n = NoiseParams::new(0.99, 0.97, 0.995).unwrap();
        for f in [0.4, 0.8, 0.97] {
            for l in 1..3 {
                let chain = connect_chain(&werner(f), l, &n).unwrap();
                assert!((chain.fidelity() - connect_l(f, l, &n).unwrap()).abs() < 1e-14);
            }
            // longer chains agree once every intermediate pair is depolarized
            let mut out = werner(f);
            for l in 2..6 {
                out = connect_pair(&out, &werner(f), &n).twirl().into();
                assert!((out.fidelity() - connect_l(f, l, &n).unwrap()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn bennett_perfect_fixed_points() {
        let o = purify_bennett(1.0, &NoiseParams::perfect()).unwrap();
        assert_eq!((o.out_fidelity, o.p_succ), (1.0, 1.0));
        let o = purify_bennett(0.5, &NoiseParams::perfect()).unwrap();
        assert!((o.out_fidelity - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bennett_p2_zero_limit() {
        let n = NoiseParams::new(1.0, 0.0, 1.0).unwrap();
        let o = purify_bennett(0.9, &n).unwrap();
        let (b, _) = purify_bell(&werner(0.9), &werner(0.9), &n, Protocol::Bennett, false).unwrap();
        assert!((o.out_fidelity - b.out_fidelity).abs() < 1e-15);
        assert!((o.p_succ - b.p_succ).abs() < 1e-15);
    }

    #[test]
    fn bell_propagation_matches_closed_form_on_werner() {
        for f in [0.3, 0.55, 0.8, 0.99] {
            for n in [noise(1.0), noise(0.97), NoiseParams::new(0.9, 0.95, 0.9).unwrap()] {
                let a = purify_bennett(f, &n).unwrap();
                let (b, _) = purify_bell(&werner(f), &werner(f), &n, Protocol::Bennett, false).unwrap();
                assert!((a.out_fidelity - b.out_fidelity).abs() < 1e-14);
                assert!((a.p_succ - b.p_succ).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn noiseless_deutsch_recursion() {
        // A' = (A²+D²)/K, B' = 2AD/K, C' = (B²+C²)/K, D' = 2BC/K
        let s = BellDiagonalState::new([0.7, 0.1, 0.15, 0.05]).unwrap();
        let [a, b, c, d] = s.coeffs();
        let k = (a + d).powi(2) + (b + c).powi(2);
        let expect = [(a * a + d * d) / k, 2.0 * a * d / k, (b * b + c * c) / k, 2.0 * b * c / k];
        let (o, out) = purify_deutsch(&s, &s, &NoiseParams::perfect()).unwrap();
        assert!((o.p_succ - k).abs() < 1e-15);
        for (x, y) in out.coeffs().iter().zip(expect) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn deutsch_werner_f08_pinned() {
        // A = 0.8, B = C = D = 1/15; K = (0.8 + 1/15)^2 + (2/15)^2 = 0.76888...
        let (o, _) = purify_deutsch(&werner(0.8), &werner(0.8), &NoiseParams::perfect()).unwrap();
        let k = (0.8f64 + 1.0 / 15.0).powi(2) + (2.0f64 / 15.0).powi(2);
        let a = (0.64 + 1.0 / 225.0) / k;
        assert!((o.out_fidelity - a).abs() < 1e-15);
        assert!((o.out_fidelity - 0.838_150_289_017_341).abs() < 1e-12);
    }

    #[test]
    fn aux_equal_to_target_is_symmetric_step() {
        let s = BellDiagonalState::new([0.85, 0.08, 0.04, 0.03]).unwrap();
        let n = noise(0.99);
        let (a, sa) = purify_with_aux(&s, &s, &n, Protocol::Deutsch).unwrap();
        let (b, sb) = purify_deutsch(&s, &s, &n).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        let w = werner(0.85);
        let (a, _) = purify_with_aux(&w, &w, &n, Protocol::Bennett).unwrap();
        let b = purify_bennett(0.85, &n).unwrap();
        assert!((a.out_fidelity - b.out_fidelity).abs() < 1e-14);
    }

    #[test]
    fn perfect_aux_never_hurts() {
        for f in [0.3, 0.5, 0.7, 0.95] {
            for p in [Protocol::Bennett, Protocol::Deutsch] {
                let (o, _) =
                    purify_with_aux(&werner(f), &BellDiagonalState::perfect(), &NoiseParams::perfect(), p)
                        .unwrap();
                assert!(o.out_fidelity >= f - 1e-15);
            }
        }
    }

    #[test]
    fn noiseless_bennett_fixed_points() {
        let fp = bennett_fixed_points(&NoiseParams::perfect()).unwrap();
        assert!((fp.f_min - 0.5).abs() < 1e-10);
        assert_eq!(fp.f_max, 1.0);
    }

    #[test]
    fn two_qubit_errors_give_two_fixed_points() {
        let n = NoiseParams::new(1.0, 0.97, 1.0).unwrap();
        let fp = bennett_fixed_points(&n).unwrap();
        assert!(0.5 < fp.f_min && fp.f_min < fp.f_max && fp.f_max < 1.0, "{fp:?}");
        assert_eq!(diagonal_crossings(&werner_map(n, Protocol::Bennett)).len(), 2);
    }

    #[test]
    fn impossible_purification() {
        let n = NoiseParams::new(1.0, 0.8, 1.0).unwrap();
        assert_eq!(bennett_fixed_points(&n), Err(Error::PurificationImpossible));
    }

    #[test]
    fn staircase_perfect_is_empty() {
        let t = staircase(1.0, 2, &NoiseParams::perfect(), Protocol::Bennett).unwrap();
        assert_eq!((t.m_max, t.copies), (0, 1.0));
    }

    #[test]
    fn staircase_invariants() {
        for p in [Protocol::Bennett, Protocol::Deutsch] {
            let t = staircase(0.94, 2, &noise(0.995), p).unwrap();
            assert!(t.m_max > 0);
            assert!(t.output.fidelity() >= 0.94);
            let mut last = t.connected.fidelity();
            for s in &t.steps {
                assert!(s.fidelity > last);
                last = s.fidelity;
            }
            assert!(t.copies >= 2f64.powi(t.m_max as i32));
        }
    }

    #[test]
    fn staircase_errors() {
        // connection drops the pair under the repeller
        let err = staircase(0.6, 3, &noise(0.995), Protocol::Bennett).unwrap_err();
        assert!(matches!(err, Error::BelowThreshold { .. }), "{err}");
        let err = staircase(0.995, 2, &noise(0.995), Protocol::Bennett).unwrap_err();
        assert!(matches!(err, Error::WorkingFidelityUnreachable { .. }), "{err}");
        let err = staircase(0.999, 2, &noise(0.99), Protocol::Deutsch).unwrap_err();
        assert!(matches!(err, Error::WorkingFidelityUnreachable { .. }), "{err}");
    }
}
