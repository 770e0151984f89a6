//! `corrsched`: exponents, single-user operating points, scheduling sweeps,
//! the validation suite and the asymptotic laws from the command line.
//!
//! Exit status: 0 on success, 1 when validation or a computation fails,
//! 2 on a bad configuration or argument.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use corrsched::asymptotics::{theorem2_value, theorem3_value, theorem4_value, GAMMA_3_2};
use corrsched::harness::config::{parse_k_list, parse_strategies};
use corrsched::harness::{
    csv_string, run_sweep_with, summary_json, validate, Execution, ExponentMode, SweepConfig,
    ValidationLevel, ValidationOptions,
};
use corrsched::optimizer::{solve_operating_point_with, OptimalityInputs, SolverOptions};
use corrsched::{exponent_exact_mc_parallel, exponent_theorem1, Error, FadingParams};

#[derive(Parser)]
#[command(name = "corrsched", version, about = "Scheduling over time-correlated Rayleigh fading")]
struct Cli {
    /// Worker threads; also read from CORRSCHED_THREADS.
    #[arg(long, global = true, env = "CORRSCHED_THREADS")]
    threads: Option<usize>,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    serial: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error exponent E(rho) over a grid of rho.
    Exponent(ExponentArgs),
    /// Jointly optimal rate and codeword length for one user.
    Optimize(OptimizeArgs),
    /// Monte-Carlo scheduling sweep.
    Simulate(SimulateArgs),
    /// Run the numerical validation suite.
    Validate(ValidateArgs),
    /// Asymptotic throughput laws for a list of K.
    Laws(LawsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Theorem1,
    ExactMc,
}

impl From<Mode> for ExponentMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Theorem1 => ExponentMode::Theorem1,
            Mode::ExactMc => ExponentMode::ExactMc,
        }
    }
}

#[derive(Args)]
struct ExponentArgs {
    #[arg(long)]
    u0: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    power: f64,
    /// Comma list (`0.25,0.5,1`) or `start:stop:count`.
    #[arg(long, default_value = "0:1:11")]
    rho_grid: String,
    #[arg(long, value_enum, default_value = "theorem1")]
    mode: Mode,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    u0: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    power: f64,
    /// Length reported for alpha = 1.
    #[arg(long, default_value_t = 1e6)]
    length_cap: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Configuration file; inline flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k_list: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    strategies: Option<String>,
    #[arg(long)]
    power: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    mc_samples: Option<usize>,
    /// `formula`, `empirical` or a fixed length.
    #[arg(long)]
    strategy1_length: Option<String>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary destination.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, conflicts_with = "full")]
    quick: bool,
    #[arg(long)]
    full: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct LawsArgs {
    #[arg(long, default_value = "1e3,1e4,1e5,1e6,1e9")]
    k_list: String,
    #[arg(long, default_value_t = 1.0)]
    power: f64,
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::Config(_)
            | Error::InvalidDistribution(_)
            | Error::TooFewSamples { .. } => Failure::Config(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn parse_rho_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Config(format!("bad rho grid {spec:?}"));
    let grid: Vec<f64> = if let Some((a, rest)) = spec.split_once(':') {
        let (b, n) = rest.split_once(':').ok_or_else(bad)?;
        let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        let n: usize = n.parse().map_err(|_| bad())?;
        match n {
            0 => return Err(bad()),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        }
    } else {
        spec.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if grid.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Failure::Config("rho values must lie in [0, 1]".into()));
    }
    Ok(grid)
}

fn exponent(args: &ExponentArgs) -> Outcome {
    let params = FadingParams::new(args.alpha)?;
    let grid = parse_rho_grid(&args.rho_grid)?;
    let mut out = io::stdout().lock();
    writeln!(out, "rho,exponent,std_error")?;
    for rho in grid {
        let e = match args.mode {
            Mode::Theorem1 => exponent_theorem1(rho, args.u0, &params, args.n, args.power)?,
            Mode::ExactMc => exponent_exact_mc_parallel(
                rho, args.u0, &params, args.n, args.power, args.samples, args.seed,
            )?,
        };
        writeln!(out, "{rho:.16e},{:.16e},{:.16e}", e.value, e.std_error)?;
    }
    Ok(())
}

fn optimize(args: &OptimizeArgs) -> Outcome {
    let inputs = OptimalityInputs::new(args.u0, args.alpha, args.power)?;
    let opts = SolverOptions {
        length_cap: args.length_cap,
        ..SolverOptions::default()
    };
    let op = solve_operating_point_with(&inputs, &opts)?;
    let text = serde_json::to_string_pretty(&op).map_err(|e| Failure::Run(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn simulate(args: &SimulateArgs, exec: Execution) -> Outcome {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            SweepConfig::parse(&text)?
        }
        None => SweepConfig::default(),
    };
    if let Some(k) = &args.k_list {
        cfg.k_values = parse_k_list(k)?;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(s) = &args.strategies {
        cfg.strategies = parse_strategies(s)?;
    }
    if let Some(p) = args.power {
        cfg.power = p;
    }
    if let Some(m) = args.mode {
        cfg.exponent_mode = m.into();
    }
    if let Some(n) = args.mc_samples {
        cfg.mc_samples = n;
    }
    if let Some(l) = &args.strategy1_length {
        cfg.strategy1_length = l.parse()?;
    }
    cfg.validate()?;

    let result = run_sweep_with(&cfg, exec)?;
    let csv = csv_string(&result);
    match &args.out {
        Some(path) => fs::write(path, csv)?,
        None => io::stdout().lock().write_all(csv.as_bytes())?,
    }
    if let Some(path) = &args.json {
        let text = serde_json::to_string_pretty(&summary_json(&result, &cfg))
            .map_err(|e| Failure::Run(e.to_string()))?;
        fs::write(path, text + "\n")?;
    }
    Ok(())
}

fn run_validation(args: &ValidateArgs) -> Outcome {
    let mut opts = ValidationOptions {
        level: if args.full {
            ValidationLevel::Full
        } else {
            ValidationLevel::Quick
        },
        ..ValidationOptions::default()
    };
    if let Some(s) = args.seed {
        opts.seed = s;
    }
    let report = validate(&opts);
    println!("{report}");
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Run("validation failed".into()))
    }
}

fn laws(args: &LawsArgs) -> Outcome {
    let ks = parse_k_list(&args.k_list)?;
    if args.power.is_nan() || args.power <= 0.0 {
        return Err(Failure::Config("power must be positive".into()));
    }
    let mut out = io::stdout().lock();
    writeln!(out, "k,strategy_i,strategy_ii,strategy_iii")?;
    for k in ks {
        if k < 16 {
            return Err(Failure::Config(format!("laws need K >= 16, got {k}")));
        }
        let k = k as f64;
        writeln!(
            out,
            "{k},{:.16e},{:.16e},{:.16e}",
            theorem2_value(k, args.power, 1.0),
            theorem3_value(k, args.power, GAMMA_3_2),
            theorem4_value(k, args.power),
        )?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.serial {
        Execution::Serial
    } else {
        Execution::Parallel
    };
    let threads = if cli.serial { Some(1) } else { cli.threads };
    if let Some(n) = threads {
        if n == 0 {
            eprintln!("error: thread count must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Command::Exponent(a) => exponent(a),
        Command::Optimize(a) => optimize(a),
        Command::Simulate(a) => simulate(a, exec),
        Command::Validate(a) => run_validation(a),
        Command::Laws(a) => laws(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
