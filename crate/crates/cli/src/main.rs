//! `oddcycle`: play the odd-cycle game, run Bell tests, sweep cycle sizes,
//! compute graph bounds, and run the networked referee, players and source.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{CliError, NRange};

#[derive(Parser, Debug)]
#[command(name = "oddcycle", version, about = "Odd-cycle nonlocal game simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Play one game configuration and report the win rate.
    Play(PlayArgs),
    /// Play every odd n in a range with both strategies; CSV out.
    Sweep(SweepArgs),
    /// Bell test with independently chosen settings; CSV out.
    Bell(BellArgs),
    /// Independence, Lovász and fractional packing numbers; CSV out.
    Bounds(BoundsArgs),
    /// Networked referee.
    Serve(ServeArgs),
    /// Networked player.
    Player(PlayerArgs),
    /// Networked entanglement source.
    Source(SourceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Classical,
    Quantum,
}

impl std::str::FromStr for StrategyArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    Inproc,
    Tcp,
}

impl std::str::FromStr for TransportArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Game,
    Bell,
}

impl std::str::FromStr for ModeArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoleArg {
    Alice,
    Bob,
}

impl std::str::FromStr for RoleArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, false)
    }
}

#[derive(Args, Debug)]
pub struct Common {
    /// `key=value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct Noise {
    /// Werner visibility in [0, 1].
    #[arg(long)]
    visibility: Option<f64>,
    /// Win rate as a fraction of the quantum value; sets the visibility.
    #[arg(long)]
    target_ratio: Option<f64>,
    /// Symmetric readout flip probability in [0, 0.5).
    #[arg(long)]
    readout_error: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PlayArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    noise: Noise,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    rounds: Option<i64>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long, value_enum)]
    transport: Option<TransportArg>,
    /// Round log destination.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Bob skips the herald phase correction.
    #[arg(long)]
    no_herald_correction: bool,
    #[arg(long)]
    timeout_ms: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    noise: Noise,
    #[arg(long)]
    n: Vec<u32>,
    /// Odd sizes `LO..HI`, inclusive. Default 3..27.
    #[arg(long)]
    n_range: Option<NRange>,
    /// Rounds per n and strategy.
    #[arg(long, allow_hyphen_values = true)]
    rounds: Option<i64>,
    /// Restrict to one strategy; both by default.
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BellArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    noise: Noise,
    #[arg(long)]
    n: Vec<u32>,
    #[arg(long)]
    n_range: Option<NRange>,
    #[arg(long, allow_hyphen_values = true)]
    rounds: Option<i64>,
    #[arg(long, value_enum)]
    transport: Option<TransportArg>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value` report; printed to stderr if absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Bell-record log; needs a single n.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Vec<u32>,
    /// Default 3..13.
    #[arg(long)]
    n_range: Option<NRange>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[command(flatten)]
    common: Common,
    /// `host:port` to listen on.
    #[arg(long)]
    listen: Option<String>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    rounds: Option<i64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Label written to the round log.
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long)]
    timeout_ms: Option<u64>,
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlayerArgs {
    #[command(flatten)]
    common: Common,
    /// Referee `host:port`.
    #[arg(long)]
    referee: Option<String>,
    /// Source `host:port`; needed for quantum play.
    #[arg(long)]
    source: Option<String>,
    #[arg(long, value_enum)]
    role: Option<RoleArg>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long)]
    no_herald_correction: bool,
    #[arg(long)]
    timeout_ms: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SourceArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    noise: Noise,
    #[arg(long)]
    listen: Option<String>,
    #[arg(long)]
    n: Option<u32>,
    /// Drop all state when this round's queries arrive.
    #[arg(long)]
    fail_at_round: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Play(a) => commands::play(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Bell(a) => commands::bell(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Serve(a) => commands::serve(a),
        Command::Player(a) => commands::player(a),
        Command::Source(a) => commands::source(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
