//! Command-line front end.
//!
//! Exit status: 0 when every check passes, 1 when a run completes but a check
//! fails (or the run itself errors), 2 for usage and configuration errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::config::{parse_int_list, ConfigError, ConfigFile, RunConfig};
use crate::design::{Design, DesignError, DesignParams};
use crate::oracle::{OracleGuard, DEFAULT_MAX_IV_PAIRS};
use crate::pipeline::{self, PipelineError};
use crate::rational::{fraction_string, to_decimal, DISPLAY_DIGITS};
use crate::shuffle::Strategy;
use crate::sweep::{self, Entry, Family, FamilyKind, SweepSpec};

/// A parsed `4,6`-style list; the alias keeps clap from treating it as a
/// multi-value flag.
pub type IntList = Vec<usize>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hetcdc", version, about = "Lattice-placement coded shuffle simulator")]
pub struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the placement and dump groups, T-sets and per-node storage.
    Design(DesignArgs),
    /// Run Map and Shuffle, audit delivery and report the measured load.
    Simulate(RunArgs),
    /// Simulate, then compare against the brute-force oracle and the closed form.
    Verify(RunArgs),
    /// Evaluate many configurations into one CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub s: Option<usize>,
    /// Group sizes, e.g. `4,6`.
    #[arg(long, value_parser = parse_int_list)]
    pub x: Option<IntList>,
    #[arg(long)]
    pub eta1: Option<usize>,
    #[arg(long)]
    pub eta2: Option<usize>,
}

impl ParamArgs {
    fn overrides(&self) -> ConfigFile {
        ConfigFile {
            s: self.s,
            x: self.x.clone(),
            eta1: self.eta1,
            eta2: self.eta2,
            ..Default::default()
        }
    }

    fn base(&self) -> Result<ConfigFile, ConfigError> {
        match &self.config {
            Some(path) => ConfigFile::load(path),
            None => Ok(ConfigFile::default()),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Defaults to csv for `sweep`, json otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub output: OutArgs,
    /// Also print a per-node table to stderr.
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Payload size in bits.
    #[arg(long)]
    pub t_bits: Option<usize>,
    /// Seed for the synthetic intermediate values.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed for the Method B coding coefficients.
    #[arg(long)]
    pub coeff_seed: Option<u64>,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    /// Largest `Q * N` the oracle will enumerate.
    #[arg(long, default_value_t = DEFAULT_MAX_IV_PAIRS)]
    pub max_iv_pairs: usize,
    #[command(flatten)]
    pub output: OutArgs,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let over = ConfigFile {
            t_bits: self.t_bits,
            seed: self.seed,
            coeff_seed: self.coeff_seed,
            strategy: self.strategy,
            ..self.params.overrides()
        };
        self.params.base()?.merge(over).resolve()
    }

    fn guard(&self) -> OracleGuard {
        OracleGuard {
            max_iv_pairs: self.max_iv_pairs,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// TOML sweep spec (see `hetcdc::sweep`).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Explicit x-vector; repeatable.
    #[arg(long = "x", value_parser = parse_int_list)]
    pub x: Vec<IntList>,
    /// `s:lo..hi`, the vectors `(c, .., c)` for `c` in `lo..=hi`; repeatable.
    #[arg(long, value_parser = parse_family_range)]
    pub uniform: Vec<(usize, usize, usize)>,
    /// `s:lo..hi`, every non-decreasing vector with entries in `lo..=hi`; repeatable.
    #[arg(long, value_parser = parse_family_range)]
    pub grid: Vec<(usize, usize, usize)>,
    #[arg(long)]
    pub eta1: Option<usize>,
    #[arg(long)]
    pub eta2: Option<usize>,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    /// Run the full pipeline per row, not just the closed form.
    #[arg(long)]
    pub simulate: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_IV_PAIRS)]
    pub max_iv_pairs: usize,
    #[command(flatten)]
    pub output: OutArgs,
}

impl SweepArgs {
    fn spec(&self) -> Result<SweepSpec, CliError> {
        let mut spec = match &self.spec {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                SweepSpec::parse(&text).map_err(|e| CliError::Usage(format!("malformed sweep spec: {e}")))?
            }
            None => SweepSpec::default(),
        };
        spec.config.extend(self.x.iter().map(|x| Entry { x: x.clone() }));
        let fam = |kind| move |&(s, lo, hi): &(usize, usize, usize)| Family { kind, s, lo, hi };
        spec.family.extend(self.uniform.iter().map(fam(FamilyKind::Uniform)));
        spec.family.extend(self.grid.iter().map(fam(FamilyKind::Grid)));
        spec.eta1 = self.eta1.or(spec.eta1);
        spec.eta2 = self.eta2.or(spec.eta2);
        spec.strategy = self.strategy.or(spec.strategy);
        spec.simulate |= self.simulate;
        Ok(spec)
    }
}

/// Parses `s:lo..hi`.
pub fn parse_family_range(text: &str) -> Result<(usize, usize, usize), String> {
    let err = || format!("expected s:lo..hi, got '{text}'");
    let (s, range) = text.split_once(':').ok_or_else(err)?;
    let (lo, hi) = range.split_once("..").ok_or_else(err)?;
    let num = |p: &str| p.trim().trim_start_matches('=').parse::<usize>().map_err(|_| err());
    Ok((num(s)?, num(lo)?, num(hi)?))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Design(_) => EXIT_USAGE,
            _ => EXIT_FAILED,
        }
    }
}

fn out_err(e: impl std::fmt::Display) -> CliError {
    CliError::Output(e.to_string())
}

fn write_json<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(out_err)?;
    writeln!(out).map_err(out_err)
}

#[derive(Debug, Serialize)]
struct NodeRow {
    node: usize,
    group: usize,
    files: usize,
    functions: usize,
}

fn node_rows(design: &Design) -> Vec<NodeRow> {
    design
        .node_views()
        .into_iter()
        .map(|v| NodeRow {
            node: v.node,
            group: v.group,
            files: v.files.len(),
            functions: v.functions.len(),
        })
        .collect()
}

fn cmd_design(args: &DesignArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = args.params.base()?.merge(args.params.overrides());
    let x = cfg.x.ok_or(ConfigError::Missing("x"))?;
    let params = DesignParams::with_s(
        cfg.s.unwrap_or(x.len()),
        x,
        cfg.eta1.unwrap_or(1),
        cfg.eta2.unwrap_or(1),
    )?;
    let design = Design::build(params)?;
    let rows = node_rows(&design);
    if args.table {
        eprintln!("{:>6} {:>6} {:>8} {:>10}", "node", "group", "files", "functions");
        for r in &rows {
            eprintln!("{:>6} {:>6} {:>8} {:>10}", r.node, r.group, r.files, r.functions);
        }
    }
    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => write_json(&design.dump(), out)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in &rows {
                w.serialize(r).map_err(out_err)?;
            }
            w.flush().map_err(out_err)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_simulate(args: &RunArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = args.resolve()?;
    let sim = pipeline::run_simulation(&cfg, args.guard())?;
    let report = sim.report();
    log::info!(
        "load {}/{} ({}), formula {}/{}",
        report.measured_load.numerator,
        report.measured_load.denominator,
        report.measured_load.decimal,
        report.formula_load.numerator,
        report.formula_load.denominator
    );
    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => write_json(&report, out)?,
        Format::Csv => sim.ledger.write_csv(out).map_err(out_err)?,
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_verify(args: &RunArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = args.resolve()?;
    let report = pipeline::verify(&cfg, args.guard())?;
    for c in &report.checks {
        log::info!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => write_json(&report, out)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for c in &report.checks {
                w.serialize(c).map_err(out_err)?;
            }
            w.flush().map_err(out_err)?;
        }
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_FAILED })
}

#[derive(Debug, Serialize)]
struct SweepRowJson {
    k: usize,
    s: usize,
    x: Vec<usize>,
    lattice_size: usize,
    num_files: usize,
    num_functions: usize,
    formula_load: String,
    formula_load_decimal: String,
    simulated_load: Option<String>,
    matches: Option<bool>,
    round_bits: Vec<String>,
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let spec = args.spec()?;
    let guard = OracleGuard {
        max_iv_pairs: args.max_iv_pairs,
    };
    let rows = sweep::run_sweep(&spec, guard)?;
    match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => sweep::write_csv(&rows, out).map_err(out_err)?,
        Format::Json => {
            let json: Vec<SweepRowJson> = rows
                .iter()
                .map(|r| SweepRowJson {
                    k: r.params.num_nodes(),
                    s: r.params.s(),
                    x: r.params.x().to_vec(),
                    lattice_size: r.params.lattice_size(),
                    num_files: r.params.num_files(),
                    num_functions: r.params.num_functions(),
                    formula_load: fraction_string(&r.formula_load),
                    formula_load_decimal: to_decimal(&r.formula_load, DISPLAY_DIGITS),
                    simulated_load: r.simulated_load.as_ref().map(fraction_string),
                    matches: r.simulated_load.map(|l| l == r.formula_load),
                    round_bits: r.round_units.iter().map(fraction_string).collect(),
                })
                .collect();
            write_json(&json, out)?;
        }
    }
    let all_match = rows
        .iter()
        .all(|r| r.simulated_load.is_none_or(|l| l == r.formula_load));
    Ok(if all_match { EXIT_OK } else { EXIT_FAILED })
}

fn output_of(cmd: &Command) -> &OutArgs {
    match cmd {
        Command::Design(a) => &a.output,
        Command::Simulate(a) | Command::Verify(a) => &a.output,
        Command::Sweep(a) => &a.output,
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut file;
    let sink: &mut dyn Write = match &output_of(&cli.command).out {
        Some(path) => {
            file = BufWriter::new(File::create(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?);
            &mut file
        }
        None => out,
    };
    let code = match &cli.command {
        Command::Design(a) => cmd_design(a, sink),
        Command::Simulate(a) => cmd_simulate(a, sink),
        Command::Verify(a) => cmd_verify(a, sink),
        Command::Sweep(a) => cmd_sweep(a, sink),
    }?;
    sink.flush().map_err(out_err)?;
    Ok(code)
}

/// Runs a parsed command line, writing results to `out` unless `--out` is set.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.jobs {
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(out_err)?;
            // Buffer so the pool closure only captures `Send` data.
            let mut buf = Vec::new();
            let code = pool.install(|| dispatch(cli, &mut buf))?;
            out.write_all(&buf).map_err(out_err)?;
            Ok(code)
        }
        None => dispatch(cli, out),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
/// Errors are reported on `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
