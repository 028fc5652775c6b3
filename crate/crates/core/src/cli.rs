//! Command-line front end: `build`, `figure1`, `figure2`, `instance`, `verify`.
//!
//! Every option can also come from a flat `key = value` config file given by
//! `--config`; flags win over the file. Exit codes: 0 success, 2 bad input or
//! build failure, 3 failed verification.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::builder::run;
use crate::error::Error;
use crate::exponents::ExponentSpec;
use crate::instance::{
    build_instance, positivity_certificate, verify_optimality, Diagnostics, InstanceConfig, OptimalityReport,
    PositivityCertificate, VerifyOptions,
};
use crate::precision::exact_decimal;
use crate::sequence::ChatterSequence;
use crate::series::{eval_at_log_z, verify_sign_pattern};
use crate::spectral::{terminal_datum_w, uniform_grid};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_VERIFICATION: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "chattering", version, about = "Chattering bang-bang controls for the heat equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the block-harmonic construction and write the sequence as JSON.
    Build(Options),
    /// Rescaled partial sums and probe-point dots as CSV.
    Figure1(Options),
    /// The terminal datum w on a uniform grid as CSV.
    Figure2(Options),
    /// Assemble and verify the control problem instance.
    Instance(Options),
    /// Check a sequence's invariants and sign patterns.
    Verify(Options),
}

#[derive(Debug, Default, Clone, Args)]
pub struct Options {
    /// Flat key = value file supplying defaults for every option below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub z1: Option<f64>,
    /// `squares`, `linear`, or `polynomial:c0,c1,...`.
    #[arg(long)]
    pub exponents: Option<String>,
    /// Number of iterations.
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Truncation level.
    #[arg(long = "L")]
    pub level: Option<usize>,
    /// Comma-separated truncation levels for figure1.
    #[arg(long)]
    pub levels: Option<String>,
    /// Final time.
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub precision_bits: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sequence JSON to read instead of building one.
    #[arg(long)]
    pub sequence: Option<PathBuf>,
    /// Seed for the random controls of the variational check.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Curve samples for figure1.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Grid points for figure2.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub t_grid: Option<usize>,
    #[arg(long)]
    pub control_samples: Option<usize>,
    #[arg(long)]
    pub root_sampling: Option<usize>,
    #[arg(long)]
    pub mode_tolerance: Option<f64>,
    /// Where instance writes its verification report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// CSV copy of the probe table printed by build.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Skip the Crank-Nicolson cross-check in instance.
    #[arg(long)]
    pub no_oracle: bool,
}

const CONFIG_KEYS: &[&str] = &[
    "z1",
    "exponents",
    "K",
    "L",
    "levels",
    "T",
    "precision_bits",
    "out",
    "sequence",
    "seed",
    "samples",
    "grid",
    "t_grid",
    "control_samples",
    "root_sampling",
    "mode_tolerance",
    "report",
    "table",
    "no_oracle",
];

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn verification(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_VERIFICATION,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::input(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses a flat config file: `key = value` lines, `#` comments.
pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::input(format!("config line {}: expected key = value", no + 1)));
        };
        let key = key.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(CliError::input(format!("config line {}: unknown key {key:?}", no + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

/// Options merged with the config file.
struct Settings {
    opts: Options,
    file: BTreeMap<String, String>,
}

impl Settings {
    fn new(opts: Options) -> CliResult<Self> {
        let file = match &opts.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        Ok(Settings { opts, file })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::input(format!("config key {key}: {e}"))),
            None => Ok(None),
        }
    }

    fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    fn path(&self, flag: &Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.clone().or_else(|| self.file.get(key).map(PathBuf::from))
    }

    fn exponents(&self) -> CliResult<ExponentSpec> {
        let s = self.or(self.opts.exponents.clone(), "exponents", "squares".to_string())?;
        Ok(s.parse()?)
    }

    fn precision_bits(&self) -> CliResult<usize> {
        self.or(self.opts.precision_bits, "precision_bits", crate::precision::DEFAULT_PRECISION_BITS)
    }

    /// Reads `--sequence` if given, otherwise runs the construction.
    fn sequence(&self) -> CliResult<ChatterSequence> {
        match self.path(&self.opts.sequence, "sequence") {
            Some(path) => read_sequence(&path),
            None => self.build(),
        }
    }

    fn build(&self) -> CliResult<ChatterSequence> {
        let z1 = self.or(self.opts.z1, "z1", 0.5)?;
        let k = self.or(self.opts.k, "K", 6)?;
        Ok(run(z1, self.exponents()?, k, self.precision_bits()?)?)
    }

    fn level(&self, seq: &ChatterSequence) -> CliResult<usize> {
        let level = self.or(self.opts.level, "L", seq.k())?;
        check_level(seq, level)?;
        Ok(level)
    }
}

fn check_level(seq: &ChatterSequence, level: usize) -> CliResult<()> {
    if level == 0 || level > seq.k() {
        return Err(CliError::input(format!("L = {level} must lie in 1..={}", seq.k())));
    }
    Ok(())
}

pub fn read_sequence(path: &Path) -> CliResult<ChatterSequence> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read sequence {}: {e}", path.display())))?;
    Ok(ChatterSequence::from_json(&text)?)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

/// `1 - z_k` truncated (not rounded) to three significant figures, the form
/// used by the probe table (`1.52e-5` for `1.5258...e-5`).
pub fn three_figures(delta: &astro_float::BigFloat) -> String {
    let exact = exact_decimal(delta);
    let (mantissa, exponent) = exact.split_once('e').unwrap_or((&exact, "0"));
    let mut digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    while digits.len() < 3 {
        digits.push('0');
    }
    format!("{}.{}e{}", &digits[..1], &digits[1..3], exponent)
}

pub fn table_text(seq: &ChatterSequence) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>3} {:>10} {:>10} {:>10} {:>6}", "k", "1-z_k", "p_k", "q_k", "r_k");
    for k in 1..=seq.k() {
        let _ = writeln!(
            s,
            "{:>3} {:>10} {:>10} {:>10} {:>6}",
            k,
            three_figures(seq.delta(k)),
            seq.p(k),
            seq.q(k),
            seq.r(k)
        );
    }
    s
}

pub fn table_csv(seq: &ChatterSequence) -> String {
    let mut s = String::from("k,one_minus_z,p,q,r\n");
    for k in 1..=seq.k() {
        let _ = writeln!(s, "{},{},{},{},{}", k, exact_decimal(seq.delta(k)), seq.p(k), seq.q(k), seq.r(k));
    }
    s
}

fn cmd_build(settings: &Settings, out: &mut dyn Write) -> CliResult<()> {
    let seq = settings.build()?;
    let path = settings.path(&settings.opts.out, "out").unwrap_or_else(|| "sequence.json".into());
    write_file(&path, &(seq.to_json()? + "\n"))?;
    if let Some(table) = settings.path(&settings.opts.table, "table") {
        write_file(&table, &table_csv(&seq))?;
    }
    let _ = write!(out, "{}", table_text(&seq));
    Ok(())
}

/// `x -> 1 - exp(1 - (1 - x)^{-2})` evaluated as `delta = 1 - z`.
pub fn figure1_delta(x: f64) -> f64 {
    (1.0 - (1.0 - x).powi(-2)).exp()
}

/// Inverse of the figure rescaling: `x = 1 - (1 - ln delta)^{-1/2}`.
pub fn figure1_abscissa(delta: f64) -> f64 {
    1.0 - (1.0 - delta.ln()).powf(-0.5)
}

/// Rescaled curve value `P_L(1 - delta(x))`.
pub fn figure1_value(seq: &ChatterSequence, level: usize, x: f64) -> crate::Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    let log_z = (-figure1_delta(x)).ln_1p();
    Ok(eval_at_log_z(seq, level, log_z)?.value)
}

fn parse_levels(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| CliError::input(format!("bad level {p:?}: {e}")))
        })
        .collect()
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_figure1(settings: &Settings, out: &mut dyn Write) -> CliResult<()> {
    let seq = settings.sequence()?;
    let levels = match settings.get(settings.opts.levels.clone(), "levels")? {
        Some(s) => parse_levels(&s)?,
        None => (2.min(seq.k())..=seq.k()).collect(),
    };
    for &level in &levels {
        check_level(&seq, level)?;
    }
    let samples = settings.or(settings.opts.samples, "samples", 2001)?;
    if samples < 2 {
        return Err(CliError::input("samples must be at least 2"));
    }
    let path = settings.path(&settings.opts.out, "out").unwrap_or_else(|| "figure1.csv".into());

    let mut curve = String::from("x,L,value\n");
    for &level in &levels {
        for i in 0..samples {
            let x = i as f64 / samples as f64;
            let _ = writeln!(curve, "{x:e},{level},{:e}", figure1_value(&seq, level, x)?);
        }
    }
    let mut dots = String::from("L,k,x,one_minus_z,value\n");
    for &level in &levels {
        for k in 1..=level {
            let delta = seq.delta_f64(k);
            let value = eval_at_log_z(&seq, level, seq.log_z_f64(k))?.value;
            let _ = writeln!(dots, "{level},{k},{:e},{delta:e},{value:e}", figure1_abscissa(delta));
        }
    }
    let dots_path = sibling(&path, "_dots.csv");
    write_file(&path, &curve)?;
    write_file(&dots_path, &dots)?;
    let _ = writeln!(out, "wrote {} and {}", path.display(), dots_path.display());
    Ok(())
}

fn cmd_figure2(settings: &Settings, out: &mut dyn Write) -> CliResult<()> {
    let seq = settings.sequence()?;
    let level = settings.level(&seq)?;
    let grid = settings.or(settings.opts.grid, "grid", 10_001)?;
    if grid < 2 {
        return Err(CliError::input("grid must be at least 2"));
    }
    let w = terminal_datum_w(&seq, level)?;
    let mut csv = String::from("x,w\n");
    for x in uniform_grid(grid) {
        let _ = writeln!(csv, "{x:e},{:e}", w.eval(x));
    }
    let path = settings.path(&settings.opts.out, "out").unwrap_or_else(|| "figure2.csv".into());
    write_file(&path, &csv)?;
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct InstanceReport<'a> {
    passed: bool,
    diagnostics: &'a Diagnostics,
    optimality: &'a OptimalityReport,
    positivity: &'a PositivityCertificate,
}

fn cmd_instance(settings: &Settings, out: &mut dyn Write) -> CliResult<()> {
    let seq = settings.sequence()?;
    let level = settings.level(&seq)?;
    let horizon = settings.or(settings.opts.horizon, "T", 1.0)?;
    let no_oracle = settings.opts.no_oracle || settings.get(None, "no_oracle")?.unwrap_or(false);
    let defaults = InstanceConfig::default();
    let config = InstanceConfig {
        root_sampling: settings.or(settings.opts.root_sampling, "root_sampling", defaults.root_sampling)?,
        mode_tolerance: settings.or(settings.opts.mode_tolerance, "mode_tolerance", defaults.mode_tolerance)?,
        oracle: if no_oracle { None } else { defaults.oracle },
    };
    let inst = build_instance(&seq, level, horizon, &config)?;
    let vopts = VerifyOptions {
        t_grid_size: settings.or(settings.opts.t_grid, "t_grid", 10_000)?,
        control_samples: settings.or(settings.opts.control_samples, "control_samples", 100)?,
        seed: settings.or(settings.opts.seed, "seed", 0)?,
    };
    let optimality = verify_optimality(&inst, &vopts)?;
    let positivity = positivity_certificate(&inst)?;
    let passed = optimality.passed && positivity.passed;

    let path = settings.path(&settings.opts.out, "out").unwrap_or_else(|| "instance.json".into());
    let report_path = settings
        .path(&settings.opts.report, "report")
        .unwrap_or_else(|| sibling(&path, "_report.json"));
    write_file(&path, &(inst.to_json()? + "\n"))?;
    let report = InstanceReport {
        passed,
        diagnostics: &inst.diagnostics,
        optimality: &optimality,
        positivity: &positivity,
    };
    let report_json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    write_file(&report_path, &(report_json + "\n"))?;

    let d = &inst.diagnostics;
    let _ = writeln!(out, "L = {level}, T = {horizon}");
    let _ = writeln!(out, "objective value        {:e}", d.objective_value);
    let _ = writeln!(out, "interior switches      {}", d.interior_switch_count);
    if let Some(gap) = d.oracle_l2_gap {
        let _ = writeln!(out, "oracle L2 gap          {gap:e}");
    }
    let _ = writeln!(out, "sign law               {}", verdict(optimality.sign_law.passed));
    let _ = writeln!(out, "variational inequality {}", verdict(optimality.variational.passed));
    let _ = writeln!(out, "terminal identity      {}", verdict(optimality.terminal.passed));
    let _ = writeln!(out, "positivity             {} ({:e})", verdict(positivity.passed), positivity.parseval);
    let _ = writeln!(out, "wrote {} and {}", path.display(), report_path.display());
    if passed {
        Ok(())
    } else {
        Err(CliError::verification("instance verification failed"))
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn cmd_verify(settings: &Settings, out: &mut dyn Write) -> CliResult<()> {
    let seq = settings.sequence()?;
    seq.check_structure().map_err(|e| CliError::verification(e.to_string()))?;
    let _ = writeln!(out, "structure ok, K = {}", seq.k());
    let mut failed = Vec::new();
    for level in 1..=seq.k() {
        match verify_sign_pattern(&seq, level) {
            Ok(report) if report.ok => {
                let _ = writeln!(out, "L = {level}: sign pattern ok");
            }
            Ok(_) => {
                let _ = writeln!(out, "L = {level}: sign pattern FAILED");
                failed.push(level);
            }
            Err(e) => {
                let _ = writeln!(out, "L = {level}: {e}");
                failed.push(level);
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::verification(format!("sign pattern failed for L in {failed:?}")))
    }
}

type Handler = fn(&Settings, &mut dyn Write) -> CliResult<()>;

/// Runs one parsed command, writing human-readable output to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let (cmd, opts): (Handler, Options) = match cli.command {
        Command::Build(o) => (cmd_build, o),
        Command::Figure1(o) => (cmd_figure1, o),
        Command::Figure2(o) => (cmd_figure2, o),
        Command::Instance(o) => (cmd_instance, o),
        Command::Verify(o) => (cmd_verify, o),
    };
    cmd(&Settings::new(opts)?, out)
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let stdout = std::io::stdout();
    match execute(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let map = parse_config("# defaults\nz1 = 0.5\nprecision-bits=256 # more\n\nK = 9\n").unwrap();
        assert_eq!(map["z1"], "0.5");
        assert_eq!(map["precision_bits"], "256");
        assert_eq!(map["K"], "9");
        assert!(parse_config("colour = red").is_err());
        assert!(parse_config("z1 0.5").is_err());
    }

    #[test]
    fn truncated_table_figures() {
        let w = crate::precision::Working::new(128).unwrap();
        assert_eq!(three_figures(&w.from_f64(0.5)), "5.00e-1");
        assert_eq!(three_figures(&w.from_f64(1.52587890625e-5)), "1.52e-5");
        assert_eq!(three_figures(&w.from_f64(0.015625)), "1.56e-2");
    }

    #[test]
    fn rescaling_round_trip() {
        assert_eq!(figure1_delta(0.0), 1.0);
        for &x in &[0.1, 0.5, 0.77] {
            let back = figure1_abscissa(figure1_delta(x));
            assert!((back - x).abs() < 1e-12);
        }
    }
}
