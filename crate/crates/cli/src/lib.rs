//! Experiment runner: parses an experiment description, runs seeded trial
//! batches and writes per-trial CSV rows plus a JSON summary.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use scatter_core::analysis::{
    check_lemma_bounds, estimate, run_batch, LemmaReport, Method, MAX_EXACT_BALLS, MAX_EXACT_BINS,
};
use scatter_core::geometry::{Configuration, Point};
use scatter_core::protocols::{parse_protocol, DestinationFunction, DEFAULT_SCRIPT_N};
use scatter_core::scheduler::{
    validate, DetectionMode, InitialConfig, SchedulerPolicy, SimOptions,
};
use serde_json::{json, Value};
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
/// Runtime failure, or a lemma check that did not pass.
pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_TIMEOUT: u8 = 3;

/// Column order of the per-trial CSV.
pub const CSV_HEADER: [&str; 9] = [
    "protocol",
    "n",
    "mode",
    "policy",
    "seed",
    "rounds",
    "total_bits",
    "max_per_robot_bits",
    "timed_out",
];

#[derive(Parser, Debug)]
#[command(
    name = "scatter",
    version,
    about = "Randomized robot scattering experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Run trial batches and write CSV rows and a JSON summary.
    Run(RunArgs),
    /// Check the max-load bounds on every (n, k) up to the given limits.
    LemmaReport(LemmaArgs),
}

/// Every field is optional here so a config file can supply it; flags win.
#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    /// File of key=value lines using the flag names as keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub protocol: Option<String>,
    /// Comma-separated robot counts.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long = "script-n")]
    pub script_n: Option<String>,
    #[arg(long = "max-rounds")]
    pub max_rounds: Option<String>,
    /// gathered, grid:<side> or file:<path>
    #[arg(long)]
    pub init: Option<String>,
    /// CSV destination; the summary goes to `<out>.summary.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct LemmaArgs {
    #[arg(long = "max-n")]
    pub max_n: usize,
    #[arg(long = "max-k")]
    pub max_k: u64,
    /// JSON destination; printed after the table when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InitSpec {
    Gathered,
    Grid(u64),
    File(PathBuf),
}

impl FromStr for InitSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "gathered" {
            return Ok(InitSpec::Gathered);
        }
        if let Some(side) = s.strip_prefix("grid:") {
            return match side.parse::<u64>() {
                Ok(v) if v >= 1 => Ok(InitSpec::Grid(v)),
                _ => Err(format!("bad grid side {side:?}")),
            };
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(InitSpec::File(PathBuf::from(path)));
        }
        Err(format!(
            "expected gathered, grid:<side> or file:<path>, got {s:?}"
        ))
    }
}

/// A validated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub protocol: String,
    pub n: Vec<usize>,
    pub mode: DetectionMode,
    pub policy: SchedulerPolicy,
    pub trials: u64,
    pub master_seed: u64,
    pub script_n: u64,
    pub max_rounds: Option<u64>,
    pub init: InitSpec,
    pub out: Option<PathBuf>,
}

fn read_config_file(path: &Path) -> Result<RunArgs, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
    let mut args = RunArgs::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::new("config", format!("line {}: expected key=value", lineno + 1))
        })?;
        let value = Some(value.trim().to_string());
        match key.trim().replace('_', "-").as_str() {
            "protocol" => args.protocol = value,
            "n" => args.n = value,
            "mode" => args.mode = value,
            "policy" => args.policy = value,
            "trials" => args.trials = value,
            "seed" => args.seed = value,
            "script-n" => args.script_n = value,
            "max-rounds" => args.max_rounds = value,
            "init" => args.init = value,
            "out" => args.out = value.map(PathBuf::from),
            other => return Err(ConfigError::new("config", format!("unknown key {other:?}"))),
        }
    }
    Ok(args)
}

fn merge(flags: RunArgs, file: RunArgs) -> RunArgs {
    RunArgs {
        config: None,
        protocol: flags.protocol.or(file.protocol),
        n: flags.n.or(file.n),
        mode: flags.mode.or(file.mode),
        policy: flags.policy.or(file.policy),
        trials: flags.trials.or(file.trials),
        seed: flags.seed.or(file.seed),
        script_n: flags.script_n.or(file.script_n),
        max_rounds: flags.max_rounds.or(file.max_rounds),
        init: flags.init.or(file.init),
        out: flags.out.or(file.out),
    }
}

fn parse_field<V: FromStr>(field: &str, raw: Option<&str>, default: V) -> Result<V, ConfigError>
where
    V::Err: std::fmt::Display,
{
    match raw {
        None => Ok(default),
        Some(s) => s
            .trim()
            .parse()
            .map_err(|e| ConfigError::new(field, format!("{e}"))),
    }
}

impl ExperimentSpec {
    /// Merges flags over the optional config file and validates the result,
    /// including protocol/mode compatibility.
    pub fn resolve(args: RunArgs) -> Result<Self, ConfigError> {
        let args = match &args.config {
            Some(path) => {
                let file = read_config_file(path)?;
                merge(args, file)
            }
            None => args,
        };
        let protocol = args
            .protocol
            .clone()
            .ok_or_else(|| ConfigError::new("protocol", "missing"))?;
        let n_raw = args
            .n
            .as_deref()
            .ok_or_else(|| ConfigError::new("n", "missing"))?;
        let n = n_raw
            .split(',')
            .map(|s| match s.trim().parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v),
                _ => Err(ConfigError::new("n", format!("bad robot count {s:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mode = parse_field("mode", args.mode.as_deref(), DetectionMode::None)?;
        let policy = parse_field("policy", args.policy.as_deref(), SchedulerPolicy::Fsync)?;
        let trials = parse_field("trials", args.trials.as_deref(), 1u64)?;
        if trials == 0 {
            return Err(ConfigError::new("trials", "must be at least 1"));
        }
        let master_seed = parse_field("seed", args.seed.as_deref(), 0u64)?;
        let script_n = parse_field("script-n", args.script_n.as_deref(), DEFAULT_SCRIPT_N)?;
        if script_n == 0 {
            return Err(ConfigError::new("script-n", "must be at least 1"));
        }
        let max_rounds = match args.max_rounds.as_deref() {
            None => None,
            Some(s) => Some(parse_field("max-rounds", Some(s), 0u64)?),
        };
        let init = parse_field("init", args.init.as_deref(), InitSpec::Gathered)?;
        let spec = ExperimentSpec {
            protocol,
            n,
            mode,
            policy,
            trials,
            master_seed,
            script_n,
            max_rounds,
            init,
            out: args.out,
        };
        let proto = spec.protocol_impl()?;
        validate(proto.as_ref(), spec.mode).map_err(|e| ConfigError::new("mode", e.to_string()))?;
        Ok(spec)
    }

    pub fn protocol_impl(&self) -> Result<Box<dyn DestinationFunction<BigRational>>, ConfigError> {
        parse_protocol(&self.protocol, self.script_n)
            .map_err(|e| ConfigError::new("protocol", e.to_string()))
    }

    fn initial_config(&self) -> Result<InitialConfig<BigRational>, ConfigError> {
        Ok(match &self.init {
            InitSpec::Gathered => InitialConfig::Gathered,
            InitSpec::Grid(side) => InitialConfig::Grid { side: *side },
            InitSpec::File(path) => InitialConfig::Fixed(read_positions(path)?),
        })
    }
}

/// Reads one `x y` pair per line; coordinates are integers or fractions `p/q`.
pub fn read_positions(path: &Path) -> Result<Configuration<BigRational>, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::new("init", format!("{}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let coords: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        let bad = || {
            ConfigError::new(
                "init",
                format!("line {}: expected two coordinates", lineno + 1),
            )
        };
        if coords.len() != 2 {
            return Err(bad());
        }
        let x = coords[0].parse::<BigRational>().map_err(|_| bad())?;
        let y = coords[1].parse::<BigRational>().map_err(|_| bad())?;
        points.push(Point::new(x, y));
    }
    Configuration::new(points).map_err(|e| ConfigError::new("init", e.to_string()))
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("output: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

/// Result of [`run`]: the JSON summary and whether any trial timed out.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub summary: Value,
    pub any_timeout: bool,
}

impl RunOutcome {
    pub fn exit_code(&self) -> u8 {
        if self.any_timeout {
            EXIT_TIMEOUT
        } else {
            EXIT_OK
        }
    }
}

fn summary_entry(spec: &ExperimentSpec, batch: &scatter_core::analysis::TrialBatch) -> Value {
    let timed_out = batch.records.iter().filter(|r| r.timed_out).count();
    let mut entry = json!({
        "protocol": batch.protocol,
        "n": batch.n,
        "mode": batch.mode.label(),
        "policy": batch.policy.to_string(),
        "master_seed": spec.master_seed,
        "trials": batch.records.len(),
        "timed_out": timed_out,
    });
    let fields = match estimate(batch) {
        Ok(e) => json!({
            "mean_rounds": e.mean_rounds,
            "mean_bits": e.mean_bits,
            "ci95_rounds": [e.ci95_rounds.0, e.ci95_rounds.1],
            "ci95_bits": [e.ci95_bits.0, e.ci95_bits.1],
            "max_b": e.max_b,
            "estimate_error": Value::Null,
        }),
        Err(err) => json!({
            "mean_rounds": Value::Null,
            "mean_bits": Value::Null,
            "ci95_rounds": Value::Null,
            "ci95_bits": Value::Null,
            "max_b": Value::Null,
            "estimate_error": err.to_string(),
        }),
    };
    if let (Value::Object(a), Value::Object(b)) = (&mut entry, fields) {
        a.extend(b);
    }
    entry
}

/// Runs every batch of `spec`, writing CSV rows to `csv_out` in trial order.
/// Rows of finished batches are flushed before a later batch fails.
pub fn run<W: Write>(spec: &ExperimentSpec, csv_out: W) -> Result<RunOutcome, RunError> {
    let protocol = spec.protocol_impl()?;
    let init = spec.initial_config()?;
    let opts = SimOptions::<BigRational>::new(spec.mode, spec.policy);
    let mut writer = csv::Writer::from_writer(csv_out);
    writer.write_record(CSV_HEADER)?;
    let mut batches = Vec::new();
    let mut any_timeout = false;
    for &n in &spec.n {
        let batch = run_batch(
            protocol.as_ref(),
            n,
            &init,
            &opts,
            spec.trials,
            spec.master_seed,
            spec.max_rounds,
        )
        .map_err(|e| RunError::Simulation(format!("n = {n}: {e}")));
        let batch = match batch {
            Ok(b) => b,
            Err(e) => {
                writer.flush()?;
                return Err(e);
            }
        };
        let mode = spec.mode.label();
        let policy = spec.policy.to_string();
        for r in &batch.records {
            any_timeout |= r.timed_out;
            writer.write_record([
                batch.protocol.as_str(),
                &n.to_string(),
                mode,
                &policy,
                &r.seed.to_string(),
                &r.rounds_used.to_string(),
                &r.total_bits.to_string(),
                &r.max_per_robot_bits.to_string(),
                &r.timed_out.to_string(),
            ])?;
        }
        writer.flush()?;
        batches.push(summary_entry(spec, &batch));
    }
    Ok(RunOutcome {
        summary: json!({ "batches": batches }),
        any_timeout,
    })
}

fn summary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".summary.json");
    PathBuf::from(s)
}

/// Runs `spec`, sending CSV to `--out` (or stdout) and the summary to
/// `<out>.summary.json` (or stderr). Returns the process exit code.
pub fn run_to_files(spec: &ExperimentSpec) -> Result<u8, RunError> {
    let outcome = match &spec.out {
        Some(path) => {
            let file = fs::File::create(path)?;
            let outcome = run(spec, io::BufWriter::new(file))?;
            fs::write(
                summary_path(path),
                serde_json::to_string_pretty(&outcome.summary).unwrap() + "\n",
            )?;
            outcome
        }
        None => {
            let outcome = run(spec, io::stdout().lock())?;
            eprintln!(
                "{}",
                serde_json::to_string_pretty(&outcome.summary).unwrap()
            );
            outcome
        }
    };
    Ok(outcome.exit_code())
}

/// Rendered output of [`lemma_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct LemmaOutput {
    pub table: String,
    pub json: Value,
    pub all_pass: bool,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into())
}

/// Runs the bound checks for every `1 ≤ n ≤ max_n`, `1 ≤ k ≤ max_k`. Only the
/// exact oracle is used, so output is deterministic.
pub fn lemma_report(max_n: usize, max_k: u64) -> Result<LemmaOutput, ConfigError> {
    if max_n == 0 || max_n > MAX_EXACT_BALLS {
        return Err(ConfigError::new(
            "max-n",
            format!("must be in 1..={MAX_EXACT_BALLS}"),
        ));
    }
    if max_k == 0 || max_k > MAX_EXACT_BINS {
        return Err(ConfigError::new(
            "max-k",
            format!("must be in 1..={MAX_EXACT_BINS}"),
        ));
    }
    let mut table = format!(
        "{:>3} {:>7} {:<28} {:>8} {:>10} {:>10} {:>8}\n",
        "n", "k", "check", "method", "prob", "bound", "verdict"
    );
    let mut cells = Vec::new();
    let mut all_pass = true;
    for n in 1..=max_n {
        for k in 1..=max_k {
            let report: LemmaReport = check_lemma_bounds(n, k);
            all_pass &= report.all_applicable_pass();
            for r in &report.results {
                let method = match r.method {
                    Some(Method::Exact) => "exact",
                    Some(Method::MonteCarlo { .. }) => "mc",
                    None => "-",
                };
                table.push_str(&format!(
                    "{:>3} {:>7} {:<28} {:>8} {:>10} {:>10} {:>8}\n",
                    n,
                    k,
                    r.check.label(),
                    method,
                    fmt_opt(r.probability),
                    fmt_opt(r.bound),
                    r.verdict
                ));
                cells.push(json!({
                    "n": n,
                    "k": k,
                    "check": r.check.label(),
                    "method": method,
                    "exact": r.exact.as_ref().map(|q| q.to_string()),
                    "probability": r.probability,
                    "bound": r.bound,
                    "verdict": r.verdict.to_string(),
                }));
            }
        }
    }
    let json = json!({ "max_n": max_n, "max_k": max_k, "all_pass": all_pass, "cells": cells });
    Ok(LemmaOutput {
        table,
        json,
        all_pass,
    })
}

/// Executes a parsed command line and returns the exit code.
pub fn dispatch(cli: Cli) -> u8 {
    match cli.command {
        Command::Run(args) => {
            let spec = match ExperimentSpec::resolve(args) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return EXIT_CONFIG;
                }
            };
            match run_to_files(&spec) {
                Ok(code) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Command::LemmaReport(args) => match lemma_report(args.max_n, args.max_k) {
            Ok(out) => {
                print!("{}", out.table);
                let json = serde_json::to_string_pretty(&out.json).unwrap() + "\n";
                let written = match &args.out {
                    Some(path) => fs::write(path, json),
                    None => {
                        println!();
                        io::stdout().write_all(json.as_bytes())
                    }
                };
                if let Err(e) = written {
                    eprintln!("error: {e}");
                    return EXIT_RUNTIME;
                }
                if out.all_pass {
                    EXIT_OK
                } else {
                    EXIT_RUNTIME
                }
            }
            Err(e) => {
                eprintln!("config error: {e}");
                EXIT_CONFIG
            }
        },
    }
}
