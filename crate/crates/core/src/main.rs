use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;

use sqrtlasso::gordon::solve_minmax;
use sqrtlasso::harness::run_sweep_with;
use sqrtlasso::io::{Format, RecordWriter, RunConfig};
use sqrtlasso::prediction::{critical_values, predict_nse, predict_nse_zero_noise};
use sqrtlasso::{Error, NoiseLevel};

/// Error predictions, min-max oracle and Monte Carlo sweeps for the square-root LASSO.
///
/// Exit status: 0 on success, 1 on invalid input, 2 when the problem is
/// well posed but degenerate (divergent prediction, no stable region).
#[derive(Parser)]
#[command(name = "sqrtlasso", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Predicted normalized error ‖x̂ − x₀‖/(σ√m) at one (σ², λ).
    Predict(Common),
    /// Critical regularizer values; λ_crit^σ only when --sigma2 is given.
    Critical(Common),
    /// Monte Carlo sweep over λ and σ², paired with predictions.
    Sweep(SweepArgs),
    /// Saddle point (α*, β*, p*) and value 𝒟* of the scalar min-max.
    Gordon(Common),
}

#[derive(Args, Default)]
struct Common {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Noise variance; a comma-separated list for sweeps.
    #[arg(long, value_delimiter = ',')]
    sigma2: Option<Vec<f64>>,
    /// Regularizer; a comma-separated list for sweeps.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// Monte Carlo realizations per cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed of the trial seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Solver certificate tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Built-in configuration (e.g. `fig1`), applied before --config and flags.
    #[arg(long)]
    preset: Option<String>,
    /// Extra λ values as comma-separated multiples of each level's λ_crit^σ.
    #[arg(long, value_delimiter = ',')]
    critical_multiples: Option<Vec<f64>>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    check_every: Option<usize>,
    /// Worker threads (default: $SQRTLASSO_THREADS, else all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Solve every λ from x = 0 instead of the previous solution.
    #[arg(long)]
    no_warm_start: bool,
}

/// Failure modes mapped to exit codes.
enum Failure {
    Usage(String),
    Degenerate(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_degenerate() {
            Failure::Degenerate(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Predict(c) => with_config(&c, None, cli.verbose).and_then(|cfg| cmd_predict(&cfg)),
        Command::Critical(c) => with_config(&c, None, cli.verbose).and_then(|cfg| cmd_critical(&cfg)),
        Command::Gordon(c) => with_config(&c, None, cli.verbose).and_then(|cfg| cmd_gordon(&cfg)),
        Command::Sweep(s) => cmd_sweep(s, cli.verbose),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Degenerate(msg)) => {
            eprintln!("degenerate: {msg}");
            ExitCode::from(2)
        }
    }
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
}

fn flag_config(c: &Common, verbose: u8) -> RunConfig {
    RunConfig {
        n: c.n,
        m: c.m,
        k: c.k,
        sigma2: c.sigma2.clone(),
        lambda: c.lambda.clone(),
        trials: c.trials,
        seed: c.seed,
        tol: c.tol,
        out: c.out.as_ref().map(|p| p.display().to_string()),
        format: c.format,
        verbosity: (verbose > 0).then_some(verbose),
        ..RunConfig::default()
    }
}

/// Merges preset, config file and flags (in increasing precedence).
fn with_config(c: &Common, preset: Option<&str>, verbose: u8) -> Result<RunConfig, Failure> {
    let mut cfg = match preset {
        Some(name) => RunConfig::preset(name)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &c.config {
        cfg = cfg.overlay(RunConfig::from_file(path)?);
    }
    cfg = cfg.overlay(flag_config(c, verbose));
    init_logging(cfg.verbosity.unwrap_or(0));
    Ok(cfg)
}

fn usage(sub: &str, msg: &str) -> Failure {
    let mut cmd = Cli::command();
    cmd.build();
    let usage = cmd
        .find_subcommand_mut(sub)
        .map(|s| s.render_usage().to_string())
        .unwrap_or_default();
    Failure::Usage(format!("{msg}\n\n{usage}"))
}

fn single(sub: &str, name: &str, values: &Option<Vec<f64>>) -> Result<f64, Failure> {
    match values.as_deref() {
        Some([v]) => Ok(*v),
        Some(_) => Err(usage(sub, &format!("--{name} takes a single value here"))),
        None => Err(usage(sub, &format!("missing required value --{name}"))),
    }
}

fn output(cfg: &RunConfig) -> Result<RecordWriter<Box<dyn Write>>, Failure> {
    let sink: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(io::BufWriter::new(
            File::create(path).map_err(|e| Failure::Usage(format!("{path}: {e}")))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    Ok(RecordWriter::new(sink, cfg.format.unwrap_or_default()))
}

fn emit<T: Serialize>(cfg: &RunConfig, record: &T) -> Outcome {
    output(cfg)?.write(std::slice::from_ref(record))?;
    Ok(())
}

fn cmd_predict(cfg: &RunConfig) -> Outcome {
    let dims = cfg.dims().map_err(|e| usage("predict", &e.to_string()))?;
    let sigma2 = single("predict", "sigma2", &cfg.sigma2)?;
    let lambda = single("predict", "lambda", &cfg.lambda)?;
    let noise = NoiseLevel::new(sigma2)?;
    let prediction = if noise.is_zero() {
        predict_nse_zero_noise(lambda, dims)?
    } else {
        predict_nse(lambda, dims, noise)?
    };
    emit(cfg, &prediction)?;
    if prediction.divergent {
        return Err(Failure::Degenerate(format!(
            "stability condition fails at effective lambda {}",
            prediction.lambda_effective
        )));
    }
    Ok(())
}

fn cmd_critical(cfg: &RunConfig) -> Outcome {
    let dims = cfg.dims().map_err(|e| usage("critical", &e.to_string()))?;
    let noise = match &cfg.sigma2 {
        None => None,
        Some(_) => Some(NoiseLevel::new(single("critical", "sigma2", &cfg.sigma2)?)?),
    };
    let values = critical_values(dims, noise)?;
    emit(cfg, &values)
}

fn cmd_gordon(cfg: &RunConfig) -> Outcome {
    let dims = cfg.dims().map_err(|e| usage("gordon", &e.to_string()))?;
    let noise = NoiseLevel::new(single("gordon", "sigma2", &cfg.sigma2)?)?;
    let lambda = single("gordon", "lambda", &cfg.lambda)?;
    let solution = solve_minmax(dims, noise, lambda)?;
    emit(cfg, &solution)
}

fn cmd_sweep(s: SweepArgs, verbose: u8) -> Outcome {
    let mut cfg = with_config(&s.common, s.preset.as_deref(), verbose)?;
    cfg = cfg.overlay(RunConfig {
        critical_multiples: s.critical_multiples,
        max_iters: s.max_iters,
        check_every: s.check_every,
        threads: s.threads,
        warm_start: s.no_warm_start.then_some(false),
        ..RunConfig::default()
    });
    let sweep = cfg.to_sweep_config()?;
    let mut writer = output(&cfg)?;
    run_sweep_with(&sweep, |rows| writer.write(rows))?;
    Ok(())
}
