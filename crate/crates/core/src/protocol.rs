//! The nested repeater: `n = log_L N` levels of connection and
//! purification, resource accounting and a timing model.
//!
//! Schemes A and B purify with `M` parallel copies per segment (Bennett and
//! Deutsch rounds respectively). Scheme C purifies a stored pair against a
//! freshly re-created auxiliary pair, trading parallel resources for time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{
    aux_limit, connect_chain, connect_l, fixed_points, purify_with_aux, staircase_from, werner_map,
    StaircaseTrace, STEP_CAP,
};
use crate::oracle::{NoiseParams, Protocol};
use crate::state::{BellDiagonalState, WernerState};

/// Upper bound on warm-up levels when locating the stationary error profile.
pub const PROFILE_MAX_LEVELS: usize = 5_000;
const PROFILE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Nested, Bennett purification with parallel copies.
    A,
    /// Nested, Deutsch purification with parallel copies.
    B,
    /// Nested, purification against a repeatedly created auxiliary pair.
    C,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(Scheme::A),
            "B" => Ok(Scheme::B),
            "C" => Ok(Scheme::C),
            other => Err(Error::Config {
                field: "scheme".into(),
                reason: format!("unknown scheme `{other}` (A|B|C)"),
            }),
        }
    }
}

/// Error distribution of the elementary pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementaryProfile {
    /// Depolarized: the error is shared evenly by the three wrong Bell states.
    Werner,
    /// The error split that the configured protocol settles into after many
    /// nesting levels, at fidelity `f_init`. Werner for Bennett.
    Stationary,
}

impl std::str::FromStr for ElementaryProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "werner" => Ok(Self::Werner),
            "stationary" => Ok(Self::Stationary),
            other => Err(Error::Config {
                field: "elementary".into(),
                reason: format!("unknown profile `{other}` (werner|stationary)"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingModel {
    /// Seconds per local operation and measurement.
    pub tau_op: f64,
    /// Seconds to create one elementary pair.
    pub tau_pair: f64,
    /// Kilometres per segment.
    pub segment_km: f64,
    /// Classical signal speed in km/s.
    pub signal_speed: f64,
}

impl Default for TimingModel {
    fn default() -> Self {
        Self {
            tau_op: 1e-5,
            tau_pair: 3e-4,
            segment_km: 10.0,
            signal_speed: 2e5,
        }
    }
}

impl TimingModel {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("tau_op", self.tau_op),
            ("tau_pair", self.tau_pair),
            ("segment_km", self.segment_km),
            ("signal_speed", self.signal_speed),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config {
                    field: field.into(),
                    reason: format!("{v} is not strictly positive"),
                });
            }
        }
        Ok(())
    }

    /// One-way classical signalling across `span` segments.
    pub fn comm_time(&self, span: f64) -> f64 {
        span * self.segment_km / self.signal_speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub segments: u64,
    pub branching: u32,
    pub scheme: Scheme,
    /// Purification used by scheme C.
    pub aux_protocol: Protocol,
    pub f_init: f64,
    pub f_work: f64,
    pub noise: NoiseParams,
    pub timing: TimingModel,
    pub elementary: ElementaryProfile,
}

impl ProtocolConfig {
    pub fn new(scheme: Scheme, segments: u64, branching: u32, f_work: f64, noise: NoiseParams) -> Self {
        Self {
            segments,
            branching,
            scheme,
            aux_protocol: Protocol::Deutsch,
            f_init: f_work,
            f_work,
            noise,
            timing: TimingModel::default(),
            elementary: ElementaryProfile::Stationary,
        }
    }

    pub fn protocol(&self) -> Protocol {
        match self.scheme {
            Scheme::A => Protocol::Bennett,
            Scheme::B => Protocol::Deutsch,
            Scheme::C => self.aux_protocol,
        }
    }

    /// Checks every field and returns the number of nesting levels.
    pub fn validate(&self) -> Result<u32> {
        if self.branching < 2 {
            return Err(Error::Config {
                field: "L".into(),
                reason: format!("branching factor {} must be at least 2", self.branching),
            });
        }
        let levels = nesting_levels(self.segments, self.branching).ok_or_else(|| Error::Config {
            field: "N".into(),
            reason: format!(
                "{} segments is not a positive power of L = {}",
                self.segments, self.branching
            ),
        })?;
        for (field, v) in [("f_init", self.f_init), ("f_work", self.f_work)] {
            if !(0.25..=1.0).contains(&v) {
                return Err(Error::Config {
                    field: field.into(),
                    reason: format!("{v} outside [1/4, 1]"),
                });
            }
        }
        self.noise.validate()?;
        self.timing.validate()?;
        Ok(levels)
    }
}

/// `n` with `segments = branching^n`, `n >= 1`.
pub fn nesting_levels(segments: u64, branching: u32) -> Option<u32> {
    let b = u64::from(branching);
    if b < 2 || segments < b {
        return None;
    }
    let (mut n, mut span) = (0, 1u64);
    while span < segments {
        span = span.checked_mul(b)?;
        n += 1;
    }
    (span == segments).then_some(n)
}

/// Error profile the nested protocol converges to, starting from Werner
/// pairs at `f_init` and restoring `f_work` on every level.
pub fn stationary_profile(
    f_init: f64,
    f_work: f64,
    branching: u32,
    noise: &NoiseParams,
    protocol: Protocol,
) -> Result<[f64; 3]> {
    let uniform = [1.0 / 3.0; 3];
    let mut state: BellDiagonalState = WernerState::new(f_init)?.into();
    let mut prev: Option<[f64; 3]> = None;
    for _ in 0..PROFILE_MAX_LEVELS {
        state = staircase_from(&state, f_work, branching, noise, protocol)?.output;
        let Some(p) = state.error_profile() else {
            return Ok(prev.unwrap_or(uniform));
        };
        if let Some(q) = prev {
            if p.iter().zip(q).all(|(a, b)| (a - b).abs() < PROFILE_TOL) {
                return Ok(p);
            }
        }
        prev = Some(p);
    }
    Ok(prev.unwrap_or(uniform))
}

/// Elementary pair state at `f_init` under the configured profile.
pub fn elementary_state(config: &ProtocolConfig) -> Result<BellDiagonalState> {
    let werner: BellDiagonalState = WernerState::new(config.f_init)?.into();
    if config.f_init == 1.0
        || config.elementary == ElementaryProfile::Werner
        || config.protocol() == Protocol::Bennett
    {
        return Ok(werner);
    }
    let profile = stationary_profile(
        config.f_init,
        config.f_work,
        config.branching,
        &config.noise,
        config.protocol(),
    )?;
    BellDiagonalState::with_profile(config.f_init, profile)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: u32,
    /// Segments spanned by a pair at this level, `L^k`.
    pub span: u64,
    pub connected_fidelity: f64,
    pub purified_fidelity: f64,
    pub m_max: usize,
    /// `M_k` for schemes A/B; expected number of purification rounds
    /// attempted for scheme C.
    pub copies: f64,
    pub p_succ: Vec<f64>,
    /// Scheme C: best fidelity reachable with this level's auxiliary pair.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aux_limit: Option<f64>,
    /// Time by which one pair of this level is ready.
    pub time: f64,
    pub state: BellDiagonalState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeaterReport {
    pub scheme: Scheme,
    pub protocol: Protocol,
    pub segments: u64,
    pub branching: u32,
    pub levels: u32,
    pub f_work: f64,
    pub elementary: BellDiagonalState,
    pub records: Vec<LevelRecord>,
    /// Schemes A/B: `Π M_k`. Scheme C: particles per connection point.
    pub total_resources: f64,
    /// Schemes A/B: elementary pairs consumed, `R = Π L M_k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_pairs: Option<f64>,
    /// Schemes A/B: geometric mean of `M_k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_copies: Option<f64>,
    /// Schemes A/B: `N^(log_L M̄ + 1)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_law_resources: Option<f64>,
    /// Scheme C: particles at the two end nodes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end_node_particles: Option<f64>,
    pub total_time: f64,
    pub achieved_final_fidelity: f64,
}

impl RepeaterReport {
    pub fn summary(&self) -> String {
        format!(
            "scheme {:?} ({}) N={} L={} resources={:.6e} time={:.6e} s final_fidelity={:.6}",
            self.scheme,
            self.protocol,
            self.segments,
            self.branching,
            self.total_resources,
            self.total_time,
            self.achieved_final_fidelity
        )
    }
}

/// Success probabilities of every purification round, per level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRounds {
    pub p_succ: Vec<f64>,
}

/// Cumulative time at which one pair of each level is ready, and the total.
///
/// Pairs of one level are built in parallel on all segments. A connection
/// costs `τ_op` plus signalling across the new span. Schemes A/B purify their
/// copies in parallel, so each round adds `τ_op` plus signalling. Scheme C
/// rounds are sequential: each needs a fresh auxiliary pair, and a failed
/// round destroys the stored pair, so the expected time is
/// `E_j = (E_{j-1} + build + τ_op + comm) / p_j` starting from `E_0 = build`.
pub fn compute_time(config: &ProtocolConfig, levels: &[LevelRounds]) -> (f64, Vec<f64>) {
    let t = &config.timing;
    let mut ready = t.tau_pair;
    let mut per_level = Vec::with_capacity(levels.len());
    let mut span = 1.0;
    for rounds in levels {
        span *= f64::from(config.branching);
        let comm = t.comm_time(span);
        let build = ready + t.tau_op + comm;
        ready = match config.scheme {
            Scheme::A | Scheme::B => build + rounds.p_succ.len() as f64 * (t.tau_op + comm),
            Scheme::C => rounds
                .p_succ
                .iter()
                .fold(build, |e, p| (e + build + t.tau_op + comm) / p),
        };
        per_level.push(ready);
    }
    (ready, per_level)
}

/// Schemes A and B.
pub fn simulate_nested(config: &ProtocolConfig) -> Result<RepeaterReport> {
    let n = config.validate()?;
    if config.scheme == Scheme::C {
        return simulate_scheme_c(config);
    }
    let protocol = config.protocol();
    let elementary = elementary_state(config)?;
    let mut state = elementary;
    let mut traces: Vec<StaircaseTrace> = Vec::with_capacity(n as usize);
    for k in 1..=n {
        let trace = staircase_from(&state, config.f_work, config.branching, &config.noise, protocol)
            .map_err(|e| Error::at_level(k as usize, e))?;
        state = trace.output;
        traces.push(trace);
    }
    let rounds: Vec<LevelRounds> = traces
        .iter()
        .map(|t| LevelRounds {
            p_succ: t.steps.iter().map(|s| s.p_succ).collect(),
        })
        .collect();
    let (total_time, times) = compute_time(config, &rounds);

    let l = f64::from(config.branching);
    let mut span = 1u64;
    let records: Vec<LevelRecord> = traces
        .iter()
        .zip(&rounds)
        .zip(&times)
        .enumerate()
        .map(|(i, ((t, r), time))| {
            span *= u64::from(config.branching);
            LevelRecord {
                level: i as u32 + 1,
                span,
                connected_fidelity: t.connected.fidelity(),
                purified_fidelity: t.output.fidelity(),
                m_max: t.m_max,
                copies: t.copies,
                p_succ: r.p_succ.clone(),
                aux_limit: None,
                time: *time,
                state: t.output,
            }
        })
        .collect();

    let product: f64 = records.iter().map(|r| r.copies).product();
    let mean = product.powf(1.0 / f64::from(n));
    let segments = config.segments as f64;
    Ok(RepeaterReport {
        scheme: config.scheme,
        protocol,
        segments: config.segments,
        branching: config.branching,
        levels: n,
        f_work: config.f_work,
        elementary,
        total_resources: product,
        total_pairs: Some(records.iter().map(|r| l * r.copies).product()),
        mean_copies: Some(mean),
        power_law_resources: Some(segments.powf(mean.ln() / l.ln() + 1.0)),
        end_node_particles: None,
        total_time,
        achieved_final_fidelity: state.fidelity(),
        records,
    })
}

/// Scheme C: at each level the first connected pair is stored, then
/// purified against fresh connected pairs of the same quality until it
/// reaches the working fidelity.
pub fn simulate_scheme_c(config: &ProtocolConfig) -> Result<RepeaterReport> {
    let n = config.validate()?;
    let protocol = config.protocol();
    let noise = &config.noise;
    let elementary = elementary_state(config)?;
    let mut state = elementary;
    let mut rounds = Vec::with_capacity(n as usize);
    let mut partial = Vec::with_capacity(n as usize);
    for k in 1..=n {
        let at = |e| Error::at_level(k as usize, e);
        let aux: BellDiagonalState = match protocol {
            Protocol::Bennett => {
                WernerState::new(connect_l(state.fidelity(), config.branching, noise).map_err(at)?)
                    .map_err(at)?
                    .into()
            }
            Protocol::Deutsch => connect_chain(&state, config.branching, noise).map_err(at)?,
        };
        let mut stored = aux;
        let mut p_succ = Vec::new();
        let mut limit = None;
        if stored.fidelity() < config.f_work {
            let lim = aux_limit(&aux, noise, protocol).map_err(at)?;
            limit = Some(lim);
            if lim <= config.f_work {
                return Err(at(Error::AuxPairImpossible {
                    aux: aux.fidelity(),
                    limit: lim,
                    f_work: config.f_work,
                }));
            }
            while stored.fidelity() < config.f_work {
                if p_succ.len() >= STEP_CAP {
                    return Err(at(Error::StepCap(STEP_CAP)));
                }
                let (o, next) = purify_with_aux(&stored, &aux, noise, protocol).map_err(at)?;
                p_succ.push(o.p_succ);
                stored = next;
            }
        }
        partial.push((aux.fidelity(), stored, limit));
        rounds.push(LevelRounds { p_succ });
        state = stored;
    }
    let (total_time, times) = compute_time(config, &rounds);

    let mut span = 1u64;
    let records = partial
        .into_iter()
        .zip(&rounds)
        .zip(times)
        .enumerate()
        .map(|(i, (((aux_f, stored, limit), r), time))| {
            span *= u64::from(config.branching);
            // expected rounds attempted, counting restarts after failures
            let attempts = r.p_succ.iter().fold(0.0, |e, p| (e + 1.0) / p);
            LevelRecord {
                level: i as u32 + 1,
                span,
                connected_fidelity: aux_f,
                purified_fidelity: stored.fidelity(),
                m_max: r.p_succ.len(),
                copies: attempts,
                p_succ: r.p_succ.clone(),
                aux_limit: limit,
                time,
                state: stored,
            }
        })
        .collect();

    Ok(RepeaterReport {
        scheme: config.scheme,
        protocol,
        segments: config.segments,
        branching: config.branching,
        levels: n,
        f_work: config.f_work,
        elementary,
        records,
        // one string particle plus one storage particle per level at which
        // the node is a pair end; interior nodes are ends on at most n-1 levels
        total_resources: f64::from(n),
        total_pairs: None,
        mean_copies: None,
        power_law_resources: None,
        end_node_particles: Some(f64::from(n) + 1.0),
        total_time,
        achieved_final_fidelity: state.fidelity(),
    })
}

/// Runs whichever simulation the scheme calls for.
pub fn simulate(config: &ProtocolConfig) -> Result<RepeaterReport> {
    match config.scheme {
        Scheme::A | Scheme::B => simulate_nested(config),
        Scheme::C => simulate_scheme_c(config),
    }
}

/// One point of the `M` versus working-fidelity curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub f_work: f64,
    /// Geometric mean of `M_k` over the averaged levels.
    pub copies: f64,
    /// Arithmetic mean of the fidelity restored at the end of each level.
    pub mean_fidelity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Nesting levels averaged over.
    pub levels: u32,
    pub elementary: ElementaryProfile,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            levels: 10,
            elementary: ElementaryProfile::Stationary,
        }
    }
}

/// Level-averaged `M` at one working fidelity (elementary pairs at `f_work`).
pub fn level_averaged_copies(
    f_work: f64,
    branching: u32,
    noise: &NoiseParams,
    protocol: Protocol,
    options: SweepOptions,
) -> Result<CurvePoint> {
    let scheme = match protocol {
        Protocol::Bennett => Scheme::A,
        Protocol::Deutsch => Scheme::B,
    };
    let segments = u64::from(branching)
        .checked_pow(options.levels)
        .ok_or_else(|| Error::Domain(format!("L^{} overflows", options.levels)))?;
    let mut config = ProtocolConfig::new(scheme, segments, branching, f_work, *noise);
    config.elementary = options.elementary;
    let report = simulate_nested(&config)?;
    let mean_fidelity =
        report.records.iter().map(|r| r.purified_fidelity).sum::<f64>() / report.records.len() as f64;
    Ok(CurvePoint {
        f_work,
        copies: report.mean_copies.unwrap_or(f64::NAN),
        mean_fidelity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkingFidelityOptimum {
    pub f_opt: f64,
    pub m_min: f64,
    pub curve: Vec<CurvePoint>,
}

/// Evaluates `M` over `grid`, skipping infeasible points, and picks the
/// first minimizer in grid order.
pub fn optimize_working_fidelity(
    branching: u32,
    noise: &NoiseParams,
    protocol: Protocol,
    grid: &[f64],
    options: SweepOptions,
) -> Result<WorkingFidelityOptimum> {
    noise.validate()?;
    let curve: Vec<CurvePoint> = grid
        .par_iter()
        .map(|&f| level_averaged_copies(f, branching, noise, protocol, options).ok())
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let Some(best) = curve
        .iter()
        .copied()
        .reduce(|a, b| if b.copies < a.copies { b } else { a })
    else {
        let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let interval = match fixed_points(&werner_map(*noise, protocol)) {
            Ok(fp) => format!("; purification interval is ({}, {})", fp.f_min, fp.f_max),
            Err(_) => "; purification is impossible at this noise".to_string(),
        };
        return Err(Error::NoFeasiblePoint { lo, hi, interval });
    };
    Ok(WorkingFidelityOptimum {
        f_opt: best.f_work,
        m_min: best.copies,
        curve,
    })
}
