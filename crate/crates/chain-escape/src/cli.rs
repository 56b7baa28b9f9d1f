//! Batch command-line front end.
//!
//! Five subcommands (`equilibrium`, `evolve`, `energy-scan`, `asymptotics`,
//! `escape`) share one flat key=value configuration: keys may come from an
//! optional `--config` file and are overridden by `--key value` flags.
//! Outputs are plain CSV tables (or a JSON state file for `evolve`) written
//! atomically, with every float printed in shortest round-trip form so that
//! identical configurations reproduce identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asymptotics;
use crate::energy;
use crate::equilibrium;
use crate::integrator::{self, BoundaryPolicy};
use crate::model::{LatticeParams, LatticeState};
use crate::spectral;
use crate::{ChainError, Result};

pub const CSV_VERSION: &str = "chain-escape v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Equilibrium,
    Evolve,
    EnergyScan,
    Asymptotics,
    Escape,
}

impl Subcommand {
    fn parse(word: &str) -> Result<Self> {
        match word {
            "equilibrium" => Ok(Self::Equilibrium),
            "evolve" => Ok(Self::Evolve),
            "energy-scan" => Ok(Self::EnergyScan),
            "asymptotics" => Ok(Self::Asymptotics),
            "escape" => Ok(Self::Escape),
            other => Err(ChainError::InvalidConfiguration(format!(
                "unknown subcommand '{other}'; expected one of \
                 equilibrium, evolve, energy-scan, asymptotics, escape"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Equilibrium => "equilibrium",
            Self::Evolve => "evolve",
            Self::EnergyScan => "energy-scan",
            Self::Asymptotics => "asymptotics",
            Self::Escape => "escape",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialCondition {
    Zero,
    Equilibrium,
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Spectral,
    Verlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// A fully resolved run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: LatticeParams,
    pub ic: InitialCondition,
    pub method: Method,
    pub half_width: i64,
    pub t_end: f64,
    pub dt: f64,
    /// Whether `dt` was given explicitly rather than derived from the
    /// stability bound; a state file restating the parameters re-derives
    /// an implicit `dt`.
    pub dt_explicit: bool,
    pub stride: usize,
    /// Escape / scan window half-width `N`.
    pub window_n: i64,
    pub output: PathBuf,
    pub format: OutputFormat,
}

const KEYS: &[&str] = &[
    "a", "omega", "omega0", "f", "ic", "method", "half-width", "t-end", "dt", "stride",
    "window-n", "output", "format",
];

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value.parse().map_err(|_| {
        ChainError::InvalidConfiguration(format!("{key} expects a number, got '{value}'"))
    })
}

fn parse_int<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| {
        ChainError::InvalidConfiguration(format!("{key} expects an integer, got '{value}'"))
    })
}

/// Key=value pairs accumulated from the config file and then the flags.
#[derive(Debug, Default)]
struct Settings {
    entries: Vec<(String, String)>,
}

impl Settings {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(ChainError::InvalidConfiguration(format!(
                "unknown key '{key}'; known keys: {}",
                KEYS.join(", ")
            )));
        }
        // last write wins, so flags appended after the file override it
        self.entries.retain(|(k, _)| k != key);
        self.entries.push((key.to_string(), value.to_string()));
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn load_config_file(path: &Path, settings: &mut Settings) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ChainError::InvalidConfiguration(format!(
                "{}:{}: expected key=value, got '{line}'",
                path.display(),
                lineno + 1
            ))
        })?;
        settings.set(key.trim(), value.trim())?;
    }
    Ok(())
}

/// Parses `<subcommand> [--config FILE] [--key value]...` into a validated
/// [`RunConfig`]. Flags override file values; unknown keys are rejected;
/// every reported violation names the invariant it breaks.
pub fn parse_config(args: &[String]) -> Result<(Subcommand, RunConfig)> {
    let mut iter = args.iter();
    let sub = Subcommand::parse(iter.next().map(String::as_str).ok_or_else(|| {
        ChainError::InvalidConfiguration(
            "missing subcommand; expected one of \
             equilibrium, evolve, energy-scan, asymptotics, escape"
                .into(),
        )
    })?)?;

    // collect flags, reading --config files as they appear so that later
    // flags override the file contents
    let mut settings = Settings::default();
    let mut flag_pairs: Vec<(String, String)> = Vec::new();
    while let Some(arg) = iter.next() {
        let key = arg.strip_prefix("--").ok_or_else(|| {
            ChainError::InvalidConfiguration(format!("expected --key, got '{arg}'"))
        })?;
        let value = iter.next().ok_or_else(|| {
            ChainError::InvalidConfiguration(format!("flag --{key} is missing its value"))
        })?;
        if key == "config" {
            load_config_file(Path::new(value), &mut settings)?;
        } else {
            flag_pairs.push((key.to_string(), value.clone()));
        }
    }
    for (key, value) in &flag_pairs {
        settings.set(key, value)?;
    }

    let params = LatticeParams::new(
        settings.get("a").map_or(Ok(1.0), |v| parse_f64("a", v))?,
        settings.get("omega").map_or(Ok(1.0), |v| parse_f64("omega", v))?,
        settings.get("omega0").map_or(Ok(1.0), |v| parse_f64("omega0", v))?,
        settings.get("f").map_or(Ok(1.0), |v| parse_f64("f", v))?,
    )?;

    let ic = match settings.get("ic") {
        None | Some("zero") => InitialCondition::Zero,
        Some("equilibrium") => InitialCondition::Equilibrium,
        Some(given) => match given.strip_prefix("file:") {
            Some(path) if !path.is_empty() => InitialCondition::File(PathBuf::from(path)),
            _ => {
                return Err(ChainError::InvalidConfiguration(format!(
                    "ic must be zero, equilibrium or file:PATH, got '{given}'"
                )))
            }
        },
    };

    let method = match settings.get("method") {
        None | Some("spectral") => Method::Spectral,
        Some("verlet") => Method::Verlet,
        Some(other) => {
            return Err(ChainError::InvalidConfiguration(format!(
                "method must be spectral or verlet, got '{other}'"
            )))
        }
    };

    let format = match settings.get("format") {
        None | Some("csv") => OutputFormat::Csv,
        Some("json") => OutputFormat::Json,
        Some(other) => {
            return Err(ChainError::InvalidConfiguration(format!(
                "format must be csv or json, got '{other}'"
            )))
        }
    };

    let half_width: i64 = settings
        .get("half-width")
        .map_or(Ok(512), |v| parse_int("half-width", v))?;
    let t_end: f64 = settings.get("t-end").map_or(Ok(200.0), |v| parse_f64("t-end", v))?;
    let dt_explicit = settings.get("dt").is_some();
    let dt: f64 = settings
        .get("dt")
        .map_or(Ok(integrator::default_dt(&params)), |v| parse_f64("dt", v))?;
    let stride: usize = settings.get("stride").map_or(Ok(10), |v| parse_int("stride", v))?;
    let window_n: i64 = settings
        .get("window-n")
        .map_or(Ok(10), |v| parse_int("window-n", v))?;
    let output = settings.get("output").map(PathBuf::from).unwrap_or_else(|| {
        let ext = match format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        };
        PathBuf::from(format!("{}.{ext}", sub.name()))
    });

    let config = RunConfig {
        params,
        ic,
        method,
        half_width,
        t_end,
        dt,
        dt_explicit,
        stride,
        window_n,
        output,
        format,
    };
    validate(sub, &config)?;
    Ok((sub, config))
}

fn validate(sub: Subcommand, config: &RunConfig) -> Result<()> {
    if config.half_width < 1 {
        return Err(ChainError::InvalidConfiguration(format!(
            "half-width must be at least 1, got {}",
            config.half_width
        )));
    }
    if !config.t_end.is_finite() || config.t_end < 0.0 {
        return Err(ChainError::InvalidConfiguration(format!(
            "t-end must be finite and non-negative, got {}",
            config.t_end
        )));
    }
    if config.stride == 0 {
        return Err(ChainError::InvalidConfiguration(
            "stride must be at least 1".into(),
        ));
    }
    if config.window_n < 0 {
        return Err(ChainError::InvalidConfiguration(format!(
            "window-n must be non-negative, got {}",
            config.window_n
        )));
    }
    // group-speed padding: keep the escape window causally clean
    let padding = config.window_n + (config.params.omega * config.t_end).ceil() as i64 + 8;
    if config.half_width < padding {
        return Err(ChainError::InvalidConfiguration(format!(
            "half-width must be at least window-n + ceil(omega * t-end) + 8 = {padding}, got {}",
            config.half_width
        )));
    }
    if config.method == Method::Verlet {
        let limit = integrator::stability_limit(&config.params);
        if !config.dt.is_finite() || config.dt <= 0.0 || config.dt >= limit {
            return Err(ChainError::InvalidConfiguration(format!(
                "method verlet requires 0 < dt < 2 / omega_max = {limit}, got {}",
                config.dt
            )));
        }
    }
    if config.format == OutputFormat::Json && sub != Subcommand::Evolve {
        return Err(ChainError::InvalidConfiguration(format!(
            "format json is only available for evolve (it emits the final state file); \
             {} emits csv",
            sub.name()
        )));
    }
    Ok(())
}

/// JSON state file schema.
#[derive(Debug, Serialize, Deserialize)]
struct StateFile {
    lo: i64,
    hi: i64,
    t: f64,
    q: Vec<f64>,
    v: Vec<f64>,
    params: LatticeParams,
}

fn load_state_file(path: &Path) -> Result<(LatticeState, LatticeParams)> {
    let text = std::fs::read_to_string(path)?;
    let file: StateFile = serde_json::from_str(&text)?;
    let params = LatticeParams::new(file.params.a, file.params.omega, file.params.omega0, file.params.f)?;
    Ok((LatticeState::new(file.lo, file.hi, file.t, file.q, file.v)?, params))
}

fn state_file_json(state: &LatticeState, params: &LatticeParams) -> Result<String> {
    let file = StateFile {
        lo: state.lo,
        hi: state.hi,
        t: state.t,
        q: state.q.clone(),
        v: state.v.clone(),
        params: *params,
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

/// Writes through a temp file plus rename so readers never see a torn file.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_header(sub: Subcommand, columns: &str) -> String {
    format!("# {CSV_VERSION} {}\n{columns}\n", sub.name())
}

/// Power-of-two node count with at least four nodes per window site.
fn spectral_nodes(width: usize) -> usize {
    (4 * width).next_power_of_two()
}

/// Resolved run inputs: the effective configuration (a state file may
/// restate the parameters and bring its own window) plus the initial
/// state, with the run invariants re-validated against both.
fn resolve(config: &RunConfig) -> Result<(RunConfig, LatticeState)> {
    let (params, initial) = match &config.ic {
        InitialCondition::Zero => (config.params, LatticeState::zero(config.half_width)),
        InitialCondition::Equilibrium => {
            let prof = equilibrium::profile(
                &config.params,
                -config.half_width,
                config.half_width,
                None,
            )?;
            let width = prof.displacements.len();
            (
                config.params,
                LatticeState::new(
                    -config.half_width,
                    config.half_width,
                    0.0,
                    prof.displacements,
                    vec![0.0; width],
                )?,
            )
        }
        InitialCondition::File(path) => load_state_file(path).map(|(s, p)| (p, s))?,
    };
    let mut effective = config.clone();
    if params != config.params {
        effective.params = params;
        if !config.dt_explicit {
            effective.dt = integrator::default_dt(&params);
        }
    }
    revalidate_for_state(&effective, &params, &initial)?;
    Ok((effective, initial))
}

/// Sample times for the closed-form solver: the cadence a default-step
/// Verlet run would have, `stride * 0.1 / omega_max`, plus the endpoint.
fn sample_times(params: &LatticeParams, t_end: f64, stride: usize) -> Vec<f64> {
    let step = stride as f64 * integrator::default_dt(params);
    let mut times = Vec::new();
    let mut i = 0u64;
    loop {
        let t = i as f64 * step;
        if t >= t_end {
            break;
        }
        times.push(t);
        i += 1;
    }
    times.push(t_end);
    times
}

/// Closed-form states at the given times on `[out_lo, out_hi]`, reusing one
/// forward transform.
fn spectral_series(
    params: &LatticeParams,
    initial: &LatticeState,
    times: &[f64],
    out_lo: i64,
    out_hi: i64,
) -> Result<Vec<LatticeState>> {
    let profile = equilibrium::profile(params, initial.lo, initial.hi, None)?;
    let homogeneous = LatticeState {
        lo: initial.lo,
        hi: initial.hi,
        t: initial.t,
        q: initial
            .q
            .iter()
            .zip(&profile.displacements)
            .map(|(q, xi)| q - xi)
            .collect(),
        v: initial.v.clone(),
    };
    let transformed = spectral::forward_transform(&homogeneous, spectral_nodes(initial.width()))?;
    times
        .iter()
        .map(|&t| {
            let advanced = spectral::evolve(&transformed, params, t);
            let radiated = spectral::inverse_transform(&advanced, out_lo, out_hi)?;
            LatticeState::new(
                out_lo,
                out_hi,
                initial.t + t,
                radiated
                    .q
                    .iter()
                    .enumerate()
                    .map(|(i, z)| {
                        profile
                            .displacement_at(out_lo + i as i64)
                            .expect("output window inside the profile window")
                            + z
                    })
                    .collect(),
                radiated.v,
            )
        })
        .collect()
}

/// States at the sample times, by the configured method.
fn evolve_states(
    params: &LatticeParams,
    config: &RunConfig,
    initial: &LatticeState,
    out_lo: i64,
    out_hi: i64,
) -> Result<Vec<LatticeState>> {
    match config.method {
        Method::Spectral => spectral_series(
            params,
            initial,
            &sample_times(params, config.t_end, config.stride),
            out_lo,
            out_hi,
        ),
        Method::Verlet => {
            let boundary = BoundaryPolicy::default_for(params);
            let traj = integrator::evolve_verlet(
                params,
                initial,
                config.t_end,
                config.dt,
                config.stride,
                &boundary,
            )?;
            traj.samples
                .iter()
                .map(|s| {
                    let q = (out_lo..=out_hi)
                        .map(|k| s.q_at(k).expect("output window inside the run window"))
                        .collect();
                    let v = (out_lo..=out_hi)
                        .map(|k| s.v_at(k).expect("output window inside the run window"))
                        .collect();
                    LatticeState::new(out_lo, out_hi, s.t, q, v)
                })
                .collect()
        }
    }
}

fn run_equilibrium(config: &RunConfig) -> Result<String> {
    let prof = equilibrium::profile(&config.params, -config.half_width, config.half_width, None)?;
    let residuals = prof.residuals()?;
    let mut out = csv_header(Subcommand::Equilibrium, "k,xi,residual");
    for (i, k) in (prof.lo..=prof.hi).enumerate() {
        writeln!(out, "{k},{},{}", prof.displacements[i], residuals[i]).expect("string write");
    }
    Ok(out)
}

fn run_evolve(config: &RunConfig) -> Result<String> {
    let (config, initial) = resolve(config)?;
    let params = config.params;
    let states = evolve_states(&params, &config, &initial, initial.lo, initial.hi)?;
    match config.format {
        OutputFormat::Json => {
            let last = states.last().expect("at least the initial sample");
            state_file_json(last, &params)
        }
        OutputFormat::Csv => {
            let mut out = csv_header(Subcommand::Evolve, "t,k,q,v");
            for s in &states {
                for (i, k) in (s.lo..=s.hi).enumerate() {
                    writeln!(out, "{},{k},{},{}", s.t, s.q[i], s.v[i]).expect("string write");
                }
            }
            Ok(out)
        }
    }
}

fn run_energy_scan(config: &RunConfig) -> Result<String> {
    let (config, initial) = resolve(config)?;
    let params = config.params;
    let n = config.window_n;
    let states = evolve_states(&params, &config, &initial, -(n + 1), n + 1)?;
    let boundary = BoundaryPolicy::default_for(&params);
    let mut out = csv_header(Subcommand::EnergyScan, "t,k,T_k,U_k,H_k");
    for s in &states {
        let report = energy::energy_report(&params, s, (-n, n), n, &boundary)?;
        for e in &report.per_particle {
            writeln!(out, "{},{},{},{},{}", s.t, e.site, e.kinetic, e.potential, e.total)
                .expect("string write");
        }
    }
    Ok(out)
}

fn run_escape(config: &RunConfig) -> Result<String> {
    let (config, initial) = resolve(config)?;
    let params = config.params;
    let states = evolve_states(&params, &config, &initial, initial.lo, initial.hi)?;
    let boundary = BoundaryPolicy::default_for(&params);
    let rows = energy::escape_series_from_states(&params, &states, &boundary, config.window_n)?;
    let mut out = csv_header(Subcommand::Escape, "t,H_window,tail,H_total,H_hom");
    for r in &rows {
        writeln!(out, "{},{},{},{},{}", r.t, r.window, r.tail, r.total, r.homogeneous)
            .expect("string write");
    }
    Ok(out)
}

fn run_asymptotics(config: &RunConfig) -> Result<String> {
    let (config, initial) = resolve(config)?;
    let params = config.params;
    let profile = equilibrium::profile(&params, initial.lo, initial.hi, None)?;
    let homogeneous = LatticeState {
        lo: initial.lo,
        hi: initial.hi,
        t: initial.t,
        q: initial
            .q
            .iter()
            .zip(&profile.displacements)
            .map(|(q, xi)| q - xi)
            .collect(),
        v: initial.v.clone(),
    };
    // the expansion only makes sense well after the initial transient
    let earliest = 10.0 / params.omega0;
    let times: Vec<f64> = sample_times(&params, config.t_end, config.stride)
        .into_iter()
        .filter(|&t| t >= earliest)
        .collect();
    let scan = asymptotics::residual_scan(
        &params,
        &homogeneous,
        0,
        &times,
        spectral_nodes(initial.width()),
    )?;
    let mut out = csv_header(Subcommand::Asymptotics, "t,zeta_exact,zeta_pred,scaled_residual");
    for s in &scan {
        writeln!(out, "{},{},{},{}", s.t, s.exact, s.predicted, s.scaled_residual)
            .expect("string write");
    }
    Ok(out)
}

/// The run invariants against the effective parameters and the actual
/// initial window (which a state file chooses, not the flags).
fn revalidate_for_state(
    config: &RunConfig,
    params: &LatticeParams,
    initial: &LatticeState,
) -> Result<()> {
    let effective_half = (-initial.lo).min(initial.hi);
    let padding = config.window_n + (params.omega * config.t_end).ceil() as i64 + 8;
    if effective_half < padding {
        return Err(ChainError::InvalidConfiguration(format!(
            "run window half-width must be at least \
             window-n + ceil(omega * t-end) + 8 = {padding}, got {effective_half}"
        )));
    }
    if config.method == Method::Verlet {
        let limit = integrator::stability_limit(params);
        if !config.dt.is_finite() || config.dt <= 0.0 || config.dt >= limit {
            return Err(ChainError::InvalidConfiguration(format!(
                "method verlet requires 0 < dt < 2 / omega_max = {limit}, got {}",
                config.dt
            )));
        }
    }
    Ok(())
}

/// Executes a parsed run and writes its output file; returns the path.
pub fn run(sub: Subcommand, config: &RunConfig) -> Result<PathBuf> {
    let contents = match sub {
        Subcommand::Equilibrium => run_equilibrium(config)?,
        Subcommand::Evolve => run_evolve(config)?,
        Subcommand::EnergyScan => run_energy_scan(config)?,
        Subcommand::Asymptotics => run_asymptotics(config)?,
        Subcommand::Escape => run_escape(config)?,
    };
    write_atomic(&config.output, &contents)?;
    Ok(config.output.clone())
}

/// Caps rayon's pool from `CHAIN_ESCAPE_THREADS`; `0` or unset means auto.
pub fn init_thread_pool_from_env() {
    if let Ok(value) = std::env::var("CHAIN_ESCAPE_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n > 0 {
                // keeps the first pool if one was already built
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

const USAGE: &str = "usage: chain-escape <subcommand> [--config FILE] [--key value]...

subcommands:
  equilibrium   static profile: k, xi, residual
  evolve        trajectory samples: t, k, q, v (csv) or the final state (json)
  energy-scan   per-particle energies: t, k, T_k, U_k, H_k
  asymptotics   band-edge prediction at site 0: t, zeta_exact, zeta_pred, scaled_residual
  escape        windowed energy and escaped tail: t, H_window, tail, H_total, H_hom

keys (defaults):
  a (1)  omega (1)  omega0 (1)  f (1)
  ic (zero | equilibrium | file:PATH)
  method (spectral | verlet)
  half-width (512)  t-end (200)  dt (0.1 / omega_max)  stride (10)
  window-n (10)  output (<subcommand>.csv)  format (csv | json)
";

/// Entry point behind `main`: parses, runs, reports a one-line error on
/// stderr, and returns the exit status.
pub fn main_entry(args: &[String]) -> i32 {
    if args.first().map(String::as_str) == Some("--help")
        || args.first().map(String::as_str) == Some("help")
    {
        print!("{USAGE}");
        return 0;
    }
    init_thread_pool_from_env();
    match parse_config(args) {
        Err(err) => {
            eprintln!("error: {}", one_line(&err));
            2
        }
        Ok((sub, config)) => match run(sub, &config) {
            Ok(_) => 0,
            Err(err) => {
                eprintln!("error: {}", one_line(&err));
                1
            }
        },
    }
}

fn one_line(err: &ChainError) -> String {
    err.to_string().replace('\n', " ")
}
