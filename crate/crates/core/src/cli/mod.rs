//! The `pqw` command-line front end.
//!
//! Exit codes: 0 ok, 1 a requested check failed, 2 usage or input error, 3 size guard.

mod commands;
pub mod initspec;
pub mod manifest;
mod report_cmd;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{Topology, TopologyKind};
use crate::percolation::PercolationModel;

pub use initspec::InitSpec;
pub use manifest::{manifest_path, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

const INIT_HELP: &str = "\
Initial states (--init):
  bell:a,b,c,d[:x,y]  coin a|psi+> + b|psi-> + c|phi+> + d|phi-> on sites (x, y), default 0,0;
                      psi+- = (|LR> +- |RL>)/sqrt2, phi+- = (|LL> +- |RR>)/sqrt2;
                      amplitudes are complex literals (0.5, -1j, 0.3+0.4j) and get normalized
  basis:x,i,y,j       |x,i>|y,j> with i, j in {L, R}; basis:x,i for one particle
  LL                  |0,L>|0,L>
  mixed               maximally mixed state

Exit codes: 0 ok, 1 check failed, 2 usage or input error, 3 size guard exceeded.";

#[derive(Debug, Parser, Serialize)]
#[command(name = "pqw", version, about = "Percolated two-particle quantum walks", after_help = INIT_HELP)]
pub struct Cli {
    /// Master seed for Monte-Carlo sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file, or directory for `report`. Without it results go to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Build the orthonormal attractor basis and verify it.
    Attractors(AttractorsArgs),
    /// Evolve an initial state with the exact channel or by trajectory sampling.
    Evolve(EvolveArgs),
    /// Project an initial state onto its asymptotic cycle.
    Asymptotic(AsymptoticArgs),
    /// Partial-transpose spectrum, negativity or concurrence of a stored state.
    Entanglement(EntanglementArgs),
    /// Write the closed-form tables, figure data and discrepancy report.
    Report(ReportArgs),
    /// Re-run a command from its manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct TopologyArgs {
    #[arg(long, value_parser = parse_kind)]
    pub topology: TopologyKind,
    /// Number of sites.
    #[arg(long)]
    pub n: usize,
}

fn parse_kind(s: &str) -> std::result::Result<TopologyKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_init(s: &str) -> std::result::Result<InitSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl TopologyArgs {
    pub fn build(&self) -> Result<Topology> {
        Topology::new(self.topology, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Residual,
    Shift,
    Oracle,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct AttractorsArgs {
    #[command(flatten)]
    pub topology: TopologyArgs,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub particles: u8,
    /// With `all`, the oracle is skipped (and reported as such) above its size guard.
    #[arg(long, value_enum)]
    pub check: Option<Check>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Uniform break probability of every edge.
    #[arg(long, conflicts_with = "p_list")]
    pub p: Option<f64>,
    /// Per-edge break probabilities, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub p_list: Option<Vec<f64>>,
}

impl ModelArgs {
    pub fn build(&self, topology: &Topology) -> Result<PercolationModel> {
        match &self.p_list {
            Some(list) => PercolationModel::new(topology, list.clone()),
            None => PercolationModel::uniform(topology, self.p.unwrap_or(0.5)),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub topology: TopologyArgs,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub particles: u8,
    #[arg(long)]
    pub steps: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_parser = parse_init)]
    pub init: InitSpec,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    #[arg(long, default_value_t = 1000)]
    pub trajectories: usize,
    /// CSV of the HS distance to the projected asymptotic cycle at every step (exact mode).
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Distance used for the mixing time and `--check-converged`.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Fail (exit 1) unless the final distance to the cycle is below `--tol`.
    #[arg(long)]
    pub check_converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AsymptoticEmit {
    State,
    Positions,
    Coins,
}

#[derive(Debug, Args, Serialize)]
pub struct AsymptoticArgs {
    #[command(flatten)]
    pub topology: TopologyArgs,
    #[arg(long, value_parser = parse_init)]
    pub init: InitSpec,
    /// 0, 1, 2, 3 or all.
    #[arg(long, default_value = "all", value_parser = ["0", "1", "2", "3", "all"])]
    pub phase: String,
    #[arg(long, value_enum, default_value_t = AsymptoticEmit::State)]
    pub emit: AsymptoticEmit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Coins,
    Particles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntanglementEmit {
    PtSpectrum,
    Negativity,
    Concurrence,
}

#[derive(Debug, Args, Serialize)]
pub struct EntanglementArgs {
    /// State JSON written by `evolve` or `asymptotic`, or a bare operator JSON.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub split: Split,
    #[arg(long, value_enum)]
    pub emit: EntanglementEmit,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Only the data of one figure (1: concurrence surface, 2: position cycle).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub figure: Option<u8>,
    /// Initial coin for the four-site cycles (walkers start at site 0).
    #[arg(long, default_value = "LL", value_parser = parse_init)]
    pub init: InitSpec,
    /// q of the concurrence surface.
    #[arg(long, default_value_t = 0.0)]
    pub q: f64,
    /// Grid points per axis of the concurrence surface.
    #[arg(long, default_value_t = 50)]
    pub grid: usize,
    /// Circle sizes of the steady-state table.
    #[arg(long, value_delimiter = ',', default_value = "3,5,6,7")]
    pub sizes: Vec<usize>,
    /// Circle size used for the b = 1 claim adjudication.
    #[arg(long, default_value_t = 5)]
    pub claims_n: usize,
    /// Fail (exit 1) unless the projections match the reference closed forms to 1e-10.
    #[arg(long)]
    pub check_claims: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Compare the regenerated outputs byte for byte with the recorded ones (exit 1 on mismatch).
    #[arg(long)]
    pub verify: bool,
}

/// Result of a subcommand that ran to completion.
pub(crate) struct Outcome {
    pub passed: bool,
    pub outputs: Vec<PathBuf>,
    /// Where the manifest goes, if anything was written.
    pub manifest: Option<PathBuf>,
}

/// Writes `text` to `path`, or to stdout without one.
pub(crate) fn emit(path: Option<&Path>, text: &str, outputs: &mut Vec<PathBuf>) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, text)?;
            outputs.push(p.to_path_buf());
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// 17 significant digits.
pub(crate) fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Guard(_) => EXIT_GUARD,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<String> = args.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    execute(&cli, argv.get(1..).unwrap_or_default())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Attractors(_) => "attractors",
        Command::Evolve(_) => "evolve",
        Command::Asymptotic(_) => "asymptotic",
        Command::Entanglement(_) => "entanglement",
        Command::Report(_) => "report",
        Command::Replay(_) => "replay",
    }
}

fn execute(cli: &Cli, argv: &[String]) -> i32 {
    let start = Instant::now();
    let result = match &cli.command {
        Command::Attractors(a) => commands::attractors(cli, a),
        Command::Evolve(a) => commands::evolve(cli, a),
        Command::Asymptotic(a) => commands::asymptotic(cli, a),
        Command::Entanglement(a) => commands::entanglement(cli, a),
        Command::Report(a) => report_cmd::report(cli, a),
        Command::Replay(a) => return replay(a),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let code = if outcome.passed { EXIT_OK } else { EXIT_CHECK_FAILED };
    if let Some(path) = outcome.manifest {
        let manifest = RunManifest {
            command: command_name(&cli.command).to_string(),
            argv: argv.to_vec(),
            flags: serde_json::to_value(cli).unwrap_or(serde_json::Value::Null),
            seed: cli.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: start.elapsed().as_secs_f64(),
            outputs: outcome.outputs,
            exit_code: code,
        };
        if let Err(e) = manifest.save(&path) {
            eprintln!("error: writing manifest: {e}");
            return EXIT_USAGE;
        }
    }
    code
}

fn replay(args: &ReplayArgs) -> i32 {
    let manifest = match RunManifest::load(&args.manifest) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let before: Vec<Option<Vec<u8>>> = manifest.outputs.iter().map(|p| std::fs::read(p).ok()).collect();
    let code = run(std::iter::once("pqw".to_string()).chain(manifest.argv.iter().cloned()));
    if !args.verify || code == EXIT_USAGE || code == EXIT_GUARD {
        return code;
    }
    let mut same = true;
    for (path, old) in manifest.outputs.iter().zip(before) {
        let new = std::fs::read(path).ok();
        if old.is_none() || old != new {
            eprintln!("replay: {} differs from the recorded output", path.display());
            same = false;
        }
    }
    if same {
        eprintln!("replay: {} output(s) reproduced exactly", manifest.outputs.len());
        code
    } else {
        EXIT_CHECK_FAILED
    }
}
