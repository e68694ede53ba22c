//! `lmr`: certification of s-goodness, recovery experiments and RIP
//! estimates for linear measurement operators on matrices.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lmr_core::goodness::GKind;
use lmr_core::{Beta, MeasurementNorm};

use commands::{Context, PhaseArgs};
use config::RunConfig;
use error::{CliError, CliResult, EXIT_MALFORMED};

#[derive(Debug, Parser)]
#[command(name = "lmr", version, about)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Master seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Measurement norm, overriding the operator file.
    #[arg(long, global = true)]
    norm: Option<MeasurementNorm>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    GammaHat,
    Gamma,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide s-goodness; exit 0 = S_GOOD, 1 = NOT_S_GOOD, 2 = INCONCLUSIVE.
    Certify {
        operator: PathBuf,
        #[arg(long)]
        s: usize,
        /// Bound on the multipliers, a number or "inf".
        #[arg(long, default_value = "inf")]
        beta: Beta,
        #[arg(long, value_enum, default_value = "gamma-hat")]
        kind: KindArg,
    },
    /// Nuclear norm minimization from measurements or from a known matrix.
    Recover {
        operator: PathBuf,
        /// JSON array with the p measurements.
        #[arg(long, conflicts_with = "w", required_unless_present = "w")]
        b: Option<PathBuf>,
        /// JSON matrix whose measurements are recovered.
        #[arg(long)]
        w: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Order of the split used for the trial record.
        #[arg(long)]
        s: Option<usize>,
    },
    /// Restricted isometry estimates and the literature guarantee table.
    Rip {
        operator: PathBuf,
        /// Comma-separated orders.
        #[arg(long, value_delimiter = ',', required = true)]
        s: Vec<usize>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Exact recovery success rates on Gaussian operators, as CSV.
    Phase {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        s: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<usize>>,
        #[arg(long)]
        trials: Option<usize>,
        /// JSON lines file receiving one record per trial.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Lower bounds on the G-numbers from both ascent schemes.
    GnumLower {
        operator: PathBuf,
        #[arg(long)]
        s: usize,
    },
    /// Sampled upper bounds on Γ_1 and Γ_s.
    GnumUpper {
        operator: PathBuf,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value = "inf")]
        beta: Beta,
    },
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("LMR_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t >= 1).ok_or_else(|| {
        CliError::malformed(format!(
            "LMR_THREADS must be a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::internal(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<i32> {
    configure_threads()?;
    let mut config = match &cli.global.config {
        Some(path) => io::read_json::<RunConfig>(path)?,
        None => RunConfig::default(),
    };
    if cli.global.seed.is_some() {
        config.seed = cli.global.seed;
    }
    if cli.global.norm.is_some() {
        config.norm = cli.global.norm;
    }
    config.validate()?;
    let out = cli
        .global
        .out
        .or_else(|| config.out.clone().map(PathBuf::from));
    let ctx = Context { config, out };
    match cli.command {
        Command::Certify {
            operator,
            s,
            beta,
            kind,
        } => {
            let kind = match kind {
                KindArg::GammaHat => GKind::GammaHat,
                KindArg::Gamma => GKind::Gamma,
            };
            commands::cmd_certify(&ctx, &operator, s, beta, kind)
        }
        Command::Recover {
            operator,
            b,
            w,
            eps,
            s,
        } => commands::cmd_recover(&ctx, &operator, b.as_deref(), w.as_deref(), eps, s),
        Command::Rip {
            operator,
            s,
            samples,
        } => commands::cmd_rip(&ctx, &operator, &s, samples),
        Command::Phase {
            m,
            n,
            s,
            p,
            trials,
            records,
        } => commands::cmd_phase(
            &ctx,
            PhaseArgs {
                m,
                n,
                s_values: s,
                p_values: p,
                trials,
                records,
            },
        ),
        Command::GnumLower { operator, s } => commands::cmd_gnum_lower(&ctx, &operator, s),
        Command::GnumUpper { operator, s, beta } => {
            commands::cmd_gnum_upper(&ctx, &operator, s, beta)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(EXIT_MALFORMED as u8),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("lmr: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
