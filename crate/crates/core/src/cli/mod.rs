//! Command-line front end.
//!
//! Parameters come from an optional TOML file and from flags; flags win.
//! Curves and sweeps are written as TSV (or JSON), repeater reports as JSON
//! (or a per-level TSV). Floats always carry 17 significant digits.

pub mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::maps::{connect_l, diagonal_crossings, fixed_points, purify_bennett, purify_step, werner_map};
use crate::oracle::equivalence::{run_equivalence, CheckGrid, DEFAULT_TOLERANCE};
use crate::oracle::{NoiseParams, Protocol};
use crate::protocol::{
    optimize_working_fidelity, simulate, ElementaryProfile, ProtocolConfig, Scheme, SweepOptions,
    TimingModel,
};
use crate::state::WernerState;
use output::{write_json, Cell, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] Error),

    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },

    #[error("{path}: {reason}")]
    ConfigFile { path: String, reason: String },

    #[error("oracle check failed: max deviation {max:e} exceeds {tolerance:e}")]
    CheckFailed { max: f64, tolerance: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) if e.is_infeasible() => EXIT_INFEASIBLE,
            CliError::Model(
                Error::InvalidNoiseRegime(_) | Error::DegeneratePostSelection(_) | Error::AtLevel { .. },
            ) => EXIT_INFEASIBLE,
            CliError::Model(_) | CliError::ConfigFile { .. } => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::CheckFailed { .. } => EXIT_CHECK_FAILED,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Tsv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "qrepeater", version, about = "Nested entanglement-purification repeater model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub params: Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Fidelity after connecting L pairs, over a grid of input fidelities.
    ConnectCurve,
    /// One purification round on Werner pairs: output fidelity and success probability.
    PurifyCurve,
    /// Level-averaged copies M versus working fidelity, per noise level.
    SweepM,
    /// Full repeater simulation for one scheme.
    Repeater,
    /// Compare the closed-form maps with the density-matrix oracle.
    OracleCheck,
    /// Lower and upper fixed points of the purification map.
    FixedPoints,
}

/// Every tunable. All optional here so a config file can fill the gaps.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Params {
    /// TOML file with any of these options (kebab-case keys).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Repeater scheme: A (Bennett), B (Deutsch) or C (auxiliary pair).
    #[arg(long, global = true)]
    pub scheme: Option<Scheme>,

    /// Purification protocol for curves, sweeps and scheme C.
    #[arg(long, global = true)]
    pub protocol: Option<Protocol>,

    /// Number of elementary segments, a power of L.
    #[arg(long = "N", global = true)]
    #[serde(alias = "N", alias = "segments")]
    pub n: Option<u64>,

    /// Pairs connected per nesting level.
    #[arg(long = "L", global = true)]
    #[serde(alias = "L", alias = "branching")]
    pub l: Option<u32>,

    /// Sets p1, p2 and eta together.
    #[arg(long, global = true)]
    pub noise: Option<f64>,

    /// One-qubit gate reliability.
    #[arg(long, global = true)]
    pub p1: Option<f64>,

    /// Two-qubit gate reliability.
    #[arg(long, global = true)]
    pub p2: Option<f64>,

    /// Readout quality.
    #[arg(long, global = true)]
    pub eta: Option<f64>,

    /// Comma-separated noise levels (each sets p1 = p2 = eta).
    #[arg(long, global = true, value_delimiter = ',')]
    pub noise_list: Option<Vec<f64>>,

    /// Fidelity of elementary pairs (defaults to the working fidelity).
    #[arg(long, global = true)]
    pub f_init: Option<f64>,

    /// Fidelity restored at the end of every level.
    #[arg(long, global = true)]
    pub f_work: Option<f64>,

    /// Error split of elementary pairs: werner or stationary.
    #[arg(long, global = true)]
    pub elementary: Option<ElementaryProfile>,

    /// Nesting levels averaged over in sweep-m.
    #[arg(long, global = true)]
    pub levels: Option<u32>,

    /// Seconds per local operation.
    #[arg(long, global = true)]
    pub tau_op: Option<f64>,

    /// Seconds per elementary pair.
    #[arg(long, global = true)]
    pub tau_pair: Option<f64>,

    /// Segment length in km.
    #[arg(long, global = true)]
    pub segment_km: Option<f64>,

    /// Classical signal speed in km/s.
    #[arg(long, global = true)]
    pub signal_speed: Option<f64>,

    /// Fidelity grid: start:stop:step (inclusive) or a comma list.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid: Option<String>,

    /// Output file (stdout if absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true)]
    pub format: Option<Format>,

    /// Test hook: offset added to every closed-form value in oracle-check.
    #[arg(long, global = true, hide = true)]
    #[serde(skip)]
    pub perturb: Option<f64>,
}

macro_rules! prefer {
    ($a:ident, $b:ident; $($f:ident),*) => {
        Params { $($f: $a.$f.or($b.$f),)* }
    };
}

impl Params {
    /// Flags in `self` override `file`.
    pub fn over(self, file: Params) -> Params {
        let a = self;
        let b = file;
        prefer!(a, b; config, scheme, protocol, n, l, noise, p1, p2, eta, noise_list, f_init,
            f_work, elementary, levels, tau_op, tau_pair, segment_km, signal_speed, grid, out,
            format, perturb)
    }

    pub fn load(path: &Path) -> CliResult<Params> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::ConfigFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    fn noise_params(&self) -> CliResult<NoiseParams> {
        let base = self.noise.unwrap_or(0.995);
        let n = NoiseParams {
            p1: self.p1.unwrap_or(base),
            p2: self.p2.unwrap_or(base),
            eta: self.eta.unwrap_or(base),
        };
        if let Some(v) = self.noise {
            if !(0.5..=1.0).contains(&v) {
                return Err(config_err("noise", format!("{v} outside [1/2, 1]")));
            }
        }
        n.validate()?;
        Ok(n)
    }

    fn branching(&self, default: u32) -> CliResult<u32> {
        let l = self.l.unwrap_or(default);
        if l < 1 {
            return Err(config_err("L", "must be at least 1".into()));
        }
        Ok(l)
    }

    fn fidelity(&self, field: &str, v: Option<f64>, default: f64) -> CliResult<f64> {
        let v = v.unwrap_or(default);
        if !(0.25..=1.0).contains(&v) {
            return Err(config_err(field, format!("{v} outside [1/4, 1]")));
        }
        Ok(v)
    }

    fn grid(&self, default: &str) -> CliResult<Vec<f64>> {
        let g = parse_grid(self.grid.as_deref().unwrap_or(default))?;
        if let Some(bad) = g.iter().find(|f| !(0.25..=1.0).contains(*f)) {
            return Err(config_err("grid", format!("fidelity {bad} outside [1/4, 1]")));
        }
        Ok(g)
    }

    fn protocol(&self) -> Protocol {
        self.protocol.unwrap_or(Protocol::Bennett)
    }

    fn protocol_config(&self) -> CliResult<ProtocolConfig> {
        let scheme = self.scheme.unwrap_or(Scheme::B);
        let fixed = match scheme {
            Scheme::A => Some(Protocol::Bennett),
            Scheme::B => Some(Protocol::Deutsch),
            Scheme::C => None,
        };
        if let (Some(want), Some(given)) = (fixed, self.protocol) {
            if want != given {
                return Err(config_err(
                    "protocol",
                    format!("scheme {scheme:?} always uses {want}, got {given}"),
                ));
            }
        }
        let f_work = self.fidelity("f_work", self.f_work, 0.96)?;
        let defaults = TimingModel::default();
        let config = ProtocolConfig {
            segments: self.n.unwrap_or(128),
            branching: self.branching(2)?,
            scheme,
            aux_protocol: self.protocol.unwrap_or(Protocol::Deutsch),
            f_init: self.fidelity("f_init", self.f_init, f_work)?,
            f_work,
            noise: self.noise_params()?,
            timing: TimingModel {
                tau_op: self.tau_op.unwrap_or(defaults.tau_op),
                tau_pair: self.tau_pair.unwrap_or(defaults.tau_pair),
                segment_km: self.segment_km.unwrap_or(defaults.segment_km),
                signal_speed: self.signal_speed.unwrap_or(defaults.signal_speed),
            },
            elementary: self.elementary.unwrap_or(ElementaryProfile::Stationary),
        };
        config.validate()?;
        Ok(config)
    }

    fn noise_list(&self) -> CliResult<Vec<NoiseParams>> {
        match &self.noise_list {
            None => Ok(vec![self.noise_params()?]),
            Some(list) if list.is_empty() => Err(config_err("noise_list", "empty".into())),
            Some(list) => list
                .iter()
                .map(|&q| {
                    NoiseParams::uniform(q)
                        .map_err(|_| config_err("noise_list", format!("{q} outside [1/2, 1]")))
                })
                .collect(),
        }
    }
}

fn config_err(field: &str, reason: String) -> CliError {
    CliError::Model(Error::Config {
        field: field.into(),
        reason,
    })
}

/// `start:stop:step` with `stop` included (up to rounding), or `a,b,c`.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = |reason: String| config_err("grid", reason);
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("`{s}` is not a number")))
    };
    let out: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [a, b, s] = parts[..] else {
            return Err(bad(format!("`{spec}` is not start:stop:step")));
        };
        let (start, stop, step) = (num(a)?, num(b)?, num(s)?);
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad(format!("`{spec}` needs step > 0 and stop >= start")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        if count > 10_000_000 {
            return Err(bad(format!("`{spec}` has too many points")));
        }
        // round away accumulated binary noise so grid values print cleanly
        (0..=count)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else {
        spec.split(',').map(num).collect::<CliResult<_>>()?
    };
    if out.is_empty() {
        return Err(bad("empty grid".into()));
    }
    Ok(out)
}

fn noise_note(n: &NoiseParams) -> String {
    format!("p1={} p2={} eta={}", n.p1, n.p2, n.eta)
}

fn connect_curve(p: &Params) -> CliResult<Table> {
    let l = p.branching(2)?;
    let noise = p.noise_params()?;
    let grid = p.grid("0.25:1:0.005")?;
    let mut t = Table::new("connect-curve", &["F", "F_L"]);
    t.note(format!("L={l} {}", noise_note(&noise)));
    t.note("fidelities are dimensionless");
    for f in grid {
        t.push(vec![Cell::Real(f), Cell::Real(connect_l(f, l, &noise)?)]);
    }
    Ok(t)
}

fn purify_curve(p: &Params) -> CliResult<Table> {
    let noise = p.noise_params()?;
    let protocol = p.protocol();
    let grid = p.grid("0.25:1:0.005")?;
    let mut t = Table::new("purify-curve", &["F", "F_out", "p_succ", "norm"]);
    t.note(format!("protocol={protocol} {}", noise_note(&noise)));
    t.note("symmetric round on two Werner pairs; norm = p_succ / p2^2");
    for f in grid {
        let o = match protocol {
            Protocol::Bennett => purify_bennett(f, &noise)?,
            Protocol::Deutsch => purify_step(&WernerState::new(f)?.into(), &noise, protocol)?.0,
        };
        let norm = if noise.p2 > 0.0 {
            o.p_succ / (noise.p2 * noise.p2)
        } else {
            f64::NAN
        };
        t.push(vec![
            Cell::Real(f),
            Cell::Real(o.out_fidelity),
            Cell::Real(o.p_succ),
            Cell::Real(norm),
        ]);
    }
    Ok(t)
}

fn sweep_m(p: &Params) -> CliResult<Table> {
    let l = p.branching(2)?;
    let protocol = p.protocol();
    let grid = p.grid("0.8:0.998:0.002")?;
    let options = SweepOptions {
        levels: p.levels.unwrap_or(10),
        elementary: p.elementary.unwrap_or(ElementaryProfile::Stationary),
    };
    if options.levels == 0 {
        return Err(config_err("levels", "must be at least 1".into()));
    }
    let noises = p.noise_list()?;
    let mut t = Table::new("sweep-m", &["p1", "p2", "eta", "F_work", "M", "F_mean"]);
    t.note(format!(
        "protocol={protocol} L={l} levels={} elementary={:?}; M is the geometric mean over levels",
        options.levels, options.elementary
    ));
    let sweeps: Vec<_> = noises
        .par_iter()
        .map(|n| optimize_working_fidelity(l, n, protocol, &grid, options))
        .collect();
    if sweeps.iter().all(|s| s.is_err()) {
        let first = sweeps.into_iter().find_map(|s| s.err()).expect("non-empty noise list");
        return Err(first.into());
    }
    for (n, sweep) in noises.iter().zip(sweeps) {
        match sweep {
            Ok(opt) => {
                t.note(format!("{}: M_min={} at F_work={}", noise_note(n), opt.m_min, opt.f_opt));
                for c in &opt.curve {
                    t.push(vec![
                        Cell::Real(n.p1),
                        Cell::Real(n.p2),
                        Cell::Real(n.eta),
                        Cell::Real(c.f_work),
                        Cell::Real(c.copies),
                        Cell::Real(c.mean_fidelity),
                    ]);
                }
            }
            Err(e) => t.note(format!("{}: {e}", noise_note(n))),
        }
    }
    Ok(t)
}

fn fixed_points_table(p: &Params) -> CliResult<Table> {
    let protocol = p.protocol();
    let mut t = Table::new("fixed-points", &["p1", "p2", "eta", "F_min", "F_max", "crossings"]);
    t.note(format!("protocol={protocol}; symmetric round on Werner pairs"));
    for n in p.noise_list()? {
        let map = werner_map(n, protocol);
        let fp = fixed_points(&map)?;
        t.push(vec![
            Cell::Real(n.p1),
            Cell::Real(n.p2),
            Cell::Real(n.eta),
            Cell::Real(fp.f_min),
            Cell::Real(fp.f_max),
            Cell::Int(diagonal_crossings(&map).len() as u64),
        ]);
    }
    Ok(t)
}

fn repeater(p: &Params, format: Format, w: &mut dyn Write) -> CliResult<String> {
    let config = p.protocol_config()?;
    let report = simulate(&config)?;
    let io = |source| CliError::Io {
        path: out_name(p),
        source,
    };
    match format {
        Format::Json => write_json(&serde_json::json!({"config": config, "report": report}), w).map_err(io)?,
        Format::Tsv => {
            let mut t = Table::new(
                "repeater",
                &[
                    "level",
                    "span",
                    "F_connected",
                    "F_purified",
                    "steps",
                    "M",
                    "aux_limit",
                    "time_s",
                ],
            );
            t.note(report.summary());
            for r in &report.records {
                t.push(vec![
                    Cell::Int(u64::from(r.level)),
                    Cell::Int(r.span),
                    Cell::Real(r.connected_fidelity),
                    Cell::Real(r.purified_fidelity),
                    Cell::Int(r.m_max as u64),
                    Cell::Real(r.copies),
                    Cell::Real(r.aux_limit.unwrap_or(f64::NAN)),
                    Cell::Real(r.time),
                ]);
            }
            t.write_tsv(w).map_err(io)?;
        }
    }
    Ok(report.summary())
}

fn oracle_check(p: &Params) -> CliResult<(Table, bool, f64)> {
    let mut grid = CheckGrid::default();
    if let Some(g) = &p.grid {
        grid.fidelities = parse_grid(g)?;
    }
    if let Some(list) = &p.noise_list {
        if let Some(bad) = list.iter().find(|q| !(0.5..=1.0).contains(*q)) {
            return Err(config_err("noise_list", format!("{bad} outside [1/2, 1]")));
        }
        grid.noise_levels = list.clone();
    }
    let report = run_equivalence(&grid, DEFAULT_TOLERANCE, p.perturb.unwrap_or(0.0))?;
    let mut t = Table::new(
        "oracle-check",
        &["check", "cases", "max_deviation", "worst_F", "worst_p1", "worst_p2", "worst_eta", "pass"],
    );
    t.note(format!("tolerance={:e}", report.tolerance));
    t.note(format!(
        "rotation noise (excluded from the closed forms) shifts Deutsch fidelities by up to {}",
        output::fmt_f64(report.rotation_noise_shift)
    ));
    t.note("check names: 0=connect_werner 1=connect_bell 2=bennett_fidelity 3=bennett_p_succ 4=deutsch_state 5=deutsch_p_succ");
    for (i, c) in report.checks.iter().enumerate() {
        t.push(vec![
            Cell::Int(i as u64),
            Cell::Int(c.cases as u64),
            Cell::Real(c.max_deviation),
            Cell::Real(c.worst_fidelity),
            Cell::Real(c.worst_noise.p1),
            Cell::Real(c.worst_noise.p2),
            Cell::Real(c.worst_noise.eta),
            Cell::Int(u64::from(c.max_deviation <= report.tolerance)),
        ]);
    }
    Ok((t, report.passed(), report.max_deviation()))
}

fn out_name(p: &Params) -> String {
    p.out
        .as_ref()
        .map(|o| o.display().to_string())
        .unwrap_or_else(|| "<stdout>".into())
}

fn emit(table: &Table, format: Format, p: &Params, w: &mut dyn Write) -> CliResult<()> {
    let r = match format {
        Format::Tsv => table.write_tsv(w),
        Format::Json => write_json(table, w),
    };
    r.map_err(|source| CliError::Io {
        path: out_name(p),
        source,
    })
}

/// Runs one command, writing the data product to `--out` or `stdout` and
/// messages to `stderr`. Returns the exit status.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match execute(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<i32> {
    let flags = cli.params;
    let params = match &flags.config {
        Some(path) => {
            let file = Params::load(path)?;
            flags.clone().over(file)
        }
        None => flags,
    };
    let format = params.format.unwrap_or(match cli.command {
        Command::Repeater => Format::Json,
        _ => Format::Tsv,
    });

    // validate and compute before touching the output file
    let mut buf = Vec::new();
    let mut code = EXIT_OK;
    let mut message = None;
    match cli.command {
        Command::ConnectCurve => emit(&connect_curve(&params)?, format, &params, &mut buf)?,
        Command::PurifyCurve => emit(&purify_curve(&params)?, format, &params, &mut buf)?,
        Command::SweepM => emit(&sweep_m(&params)?, format, &params, &mut buf)?,
        Command::FixedPoints => emit(&fixed_points_table(&params)?, format, &params, &mut buf)?,
        Command::Repeater => message = Some(repeater(&params, format, &mut buf)?),
        Command::OracleCheck => {
            let (table, passed, max) = oracle_check(&params)?;
            emit(&table, format, &params, &mut buf)?;
            if !passed {
                code = EXIT_CHECK_FAILED;
                message = Some(CliError::CheckFailed {
                    max,
                    tolerance: DEFAULT_TOLERANCE,
                }
                .to_string());
            } else {
                message = Some(format!("oracle check passed: max deviation {max:e}"));
            }
        }
    }

    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CliError::Io { path, source }
    };
    match &params.out {
        Some(path) => {
            let file = File::create(path).map_err(io(path))?;
            let mut w = BufWriter::new(file);
            w.write_all(&buf).map_err(io(path))?;
            w.flush().map_err(io(path))?;
        }
        None => stdout.write_all(&buf).map_err(io(Path::new("<stdout>")))?,
    }
    if let Some(m) = message {
        let _ = writeln!(stderr, "{m}");
    }
    Ok(code)
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let cli = Cli::parse();
    run(cli, &mut io::stdout().lock(), &mut io::stderr().lock())
}
