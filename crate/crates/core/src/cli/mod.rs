//! Command-line surface: `solve`, `analyze`, `evaluate` and `gen`.
//!
//! Exit codes: 0 success, 1 parse or validation error, 2 internal or
//! numerical error, 3 iteration cap reached (the report is still written).

pub mod format;
pub mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use thiserror::Error;

use crate::bsi::{run_bsi, EvalMode, SiConfig};
use crate::bvi::{run_bvi, BviConfig, Termination};
use crate::game::{Game, MixedStrategy, Player};
use crate::graph::{mec_decompose, sure_winning};
use crate::oracle::{chain_reach, gen_random_game, induced_chain, monte_carlo, RandomGameSpec, DEFAULT_HORIZON};
use crate::SolverError;
use format::{game_to_json, parse_game};
use report::{AnalyzeReport, EvaluateReport, SolveReport};

#[derive(Debug, Parser)]
#[command(name = "csg", version, about = "Certified bounds for concurrent reachability games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute per-state value intervals and strategies.
    Solve(SolveArgs),
    /// Print the sure-winning region and maximal end components.
    Analyze(AnalyzeArgs),
    /// Evaluate a fixed strategy pair exactly and by simulation.
    Evaluate(EvaluateArgs),
    /// Generate a random game file.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Bvi,
    Bsi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Objective {
    Reach,
    Safety,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalModeArg {
    Exact,
    Iterative,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub game: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Bvi)]
    pub method: Method,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// Defaults to 1000000 for bvi and 10000 for bsi.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Disable deflation (bvi only).
    #[arg(long)]
    pub naive_upper: bool,
    /// Include per-iteration valuations.
    #[arg(long)]
    pub trace: bool,
    #[arg(long, value_enum, default_value_t = Objective::Reach)]
    pub objective: Objective,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Strategy evaluation for bsi.
    #[arg(long, value_enum, default_value_t = EvalModeArg::Exact)]
    pub eval_mode: EvalModeArg,
    /// Reject unknown keys in the game file.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub game: PathBuf,
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub game: PathBuf,
    /// Strategy file: a solve report or its "strategies" object. Repeatable;
    /// later files override earlier ones. Unlisted states play uniformly.
    #[arg(long = "strategy", required = true)]
    pub strategies: Vec<PathBuf>,
    /// Monte Carlo runs from the initial state (every state if none).
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: u64,
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 10)]
    pub states: usize,
    /// Maximal number of moves per player and state.
    #[arg(long, default_value_t = 2)]
    pub moves: usize,
    #[arg(long, default_value_t = 2)]
    pub branching: usize,
    #[arg(long, default_value_t = 0.2)]
    pub target_frac: f64,
    #[arg(long, default_value_t = 0.2)]
    pub ec_bias: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Give the safety player a single move everywhere.
    #[arg(long)]
    pub single_player: bool,
    /// Only transitions towards higher state indices.
    #[arg(long)]
    pub acyclic: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Game(g) => CliError::Input(g.to_string()),
            SolverError::Config(c) => CliError::Input(c),
            other => CliError::Internal(other.to_string()),
        }
    }
}

pub fn load_game(path: &Path, strict: bool) -> Result<Game, CliError> {
    let src = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let def = parse_game(&src, strict).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    def.compile().map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Runs the solver selected by `args`. The returned code is 3 when the
/// iteration cap was hit and 0 otherwise.
pub fn cmd_solve(args: &SolveArgs) -> Result<(SolveReport, i32), CliError> {
    let game = load_game(&args.game, args.strict)?;
    if args.naive_upper && args.method == Method::Bsi {
        return Err(CliError::Input("--naive-upper only applies to --method bvi".into()));
    }
    let (result, config) = match args.method {
        Method::Bvi => {
            let cfg = BviConfig {
                epsilon: args.epsilon,
                max_iters: args.max_iters.unwrap_or(1_000_000),
                naive_upper: args.naive_upper,
                threads: args.threads.max(1),
                trace: args.trace,
                ..BviConfig::default()
            };
            (run_bvi(&game, &cfg)?, report::ConfigEcho::from_bvi(&cfg))
        }
        Method::Bsi => {
            let cfg = SiConfig {
                epsilon: args.epsilon,
                max_iters: args.max_iters.unwrap_or(10_000),
                eval_mode: match args.eval_mode {
                    EvalModeArg::Exact => EvalMode::Exact,
                    EvalModeArg::Iterative => EvalMode::Iterative,
                },
                trace: args.trace,
                ..SiConfig::default()
            };
            (run_bsi(&game, &cfg)?, report::ConfigEcho::from_si(&cfg))
        }
    };
    if (0..game.num_states()).any(|s| result.lower[s] > result.upper[s]) {
        return Err(CliError::Internal("solver produced lower > upper".into()));
    }
    let code = if result.termination == Termination::IterCap { 3 } else { 0 };
    let method = match args.method {
        Method::Bvi => "bvi",
        Method::Bsi => "bsi",
    };
    Ok((SolveReport::new(&game, &result, method, args.objective == Objective::Safety, args.epsilon, config), code))
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<AnalyzeReport, CliError> {
    let game = load_game(&args.game, args.strict)?;
    Ok(AnalyzeReport::new(&game, &mec_decompose(&game), &sure_winning(&game)))
}

/// Reads the strategies of a report (or a bare strategies object).
pub fn load_strategies(game: &Game, paths: &[PathBuf]) -> Result<(MixedStrategy, MixedStrategy), CliError> {
    let mut sigma = MixedStrategy::uniform(game, Player::Reach);
    let mut tau = MixedStrategy::uniform(game, Player::Safe);
    for path in paths {
        let src = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let value: Value =
            serde_json::from_str(&src).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let strategies = value.get("strategies").unwrap_or(&value);
        let parsed: report::StrategiesFile = serde_json::from_value(strategies.clone())
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        parsed.apply(game, &mut sigma, &mut tau).map_err(CliError::Input)?;
    }
    Ok((sigma, tau))
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<EvaluateReport, CliError> {
    let game = load_game(&args.game, args.strict)?;
    let (sigma, tau) = load_strategies(&game, &args.strategies)?;
    let chain = induced_chain(&game, &sigma, &tau).map_err(|e| CliError::Input(e.to_string()))?;
    let target = game.targets();
    let exact = chain_reach(&chain, &target)?;
    let monte_carlo = args.samples.map(|samples| {
        let starts: Vec<usize> = match game.init() {
            Some(s) => vec![s],
            None => (0..game.num_states()).collect(),
        };
        starts
            .into_iter()
            .map(|s| (s, monte_carlo(&chain, &target, s, samples.max(1), args.horizon, args.seed)))
            .collect()
    });
    Ok(EvaluateReport::new(&game, &exact, monte_carlo))
}

pub fn cmd_gen(args: &GenArgs) -> Result<String, CliError> {
    let spec = RandomGameSpec {
        state_count: args.states,
        max_moves_per_player: args.moves,
        branching: args.branching,
        target_fraction: args.target_frac,
        ec_bias: args.ec_bias,
        seed: args.seed,
        single_player: args.single_player,
        acyclic: args.acyclic,
    };
    spec.validate().map_err(CliError::Input)?;
    let mut out = game_to_json(&gen_random_game(&spec));
    out.push('\n');
    Ok(out)
}

fn emit(text: &str, out: Option<&PathBuf>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Internal(format!("stdout: {e}"))),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Executes a parsed command line and returns the process exit code.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a).and_then(|(r, code)| {
            if code == 3 {
                let _ = writeln!(stderr, "warning: iteration cap reached before the bounds converged");
            }
            for d in &r.diagnostics {
                let _ = writeln!(stderr, "diagnostic: {d}");
            }
            emit(&to_json(&r)?, a.out.as_ref(), stdout).map(|_| code)
        }),
        Command::Analyze(a) => cmd_analyze(a).and_then(|r| emit(&to_json(&r)?, a.out.as_ref(), stdout).map(|_| 0)),
        Command::Evaluate(a) => cmd_evaluate(a).and_then(|r| emit(&to_json(&r)?, a.out.as_ref(), stdout).map(|_| 0)),
        Command::Gen(a) => cmd_gen(a).and_then(|text| emit(&text, a.out.as_ref(), stdout).map(|_| 0)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
