use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use boxmon::commands::{
    self, order_taus, parse_tau_list, BuildArgs, CoverageArgs, EvalArgs, EvalSource, FeatureSet, RunArgs, TuneArgs,
    DEFAULT_SEED,
};
use boxmon::Result;

#[derive(Parser)]
#[command(name = "boxmon", version, about = "Box-abstraction runtime monitors for classifier features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build per-class monitors from a training feature file.
    Build {
        #[arg(long)]
        train: PathBuf,
        /// Comma-separated classes; defaults to every predicted class.
        #[arg(long, value_delimiter = ',')]
        class: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        layer: usize,
        #[arg(long)]
        tau_correct: f64,
        #[arg(long)]
        tau_incorrect: f64,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a monitor file over a test feature file.
    Run {
        #[arg(long)]
        monitor: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Coverage bounds of a class's good and bad features per τ.
    Coverage {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        class: usize,
        #[arg(long)]
        tau: Option<String>,
        /// Process τ values in the given order instead of descending.
        #[arg(long)]
        keep_order: bool,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bisection search for τ_min and τ_max.
    Tune {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        class: usize,
        #[arg(long, value_enum, default_value_t = SetArg::Good)]
        set: SetArg,
        #[arg(long, default_value_t = 0.01)]
        eps_cov: f64,
        #[arg(long, default_value_t = 0.01)]
        eps_ival: f64,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Confusion counts and precision/recall/F1 per τ.
    Eval {
        #[arg(long, required_unless_present = "monitor")]
        train: Option<PathBuf>,
        #[arg(long, conflicts_with_all = ["train", "tau"])]
        monitor: Option<PathBuf>,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        class: usize,
        #[arg(long, default_value_t = 0)]
        layer: usize,
        #[arg(long)]
        tau: Option<String>,
        #[arg(long)]
        keep_order: bool,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SetArg {
    Good,
    Bad,
}

fn taus(list: Option<String>, keep_order: bool) -> Result<Vec<f64>> {
    let taus = match list {
        Some(s) => parse_tau_list(&s)?,
        None => commands::DEFAULT_TAUS.to_vec(),
    };
    Ok(order_taus(taus, keep_order))
}

fn dispatch(cmd: Command) -> Result<()> {
    let log = &mut io::stderr();
    match cmd {
        Command::Build {
            train,
            class,
            layer,
            tau_correct,
            tau_incorrect,
            resolution,
            seed,
            out,
        } => {
            let args = BuildArgs {
                train,
                classes: class,
                layer,
                tau_correct,
                tau_incorrect,
                resolution,
                seed,
                out,
            };
            commands::cmd_build(&args, log).map(drop)
        }
        Command::Run { monitor, test, out } => commands::cmd_run(&RunArgs { monitor, test, out }, log).map(drop),
        Command::Coverage {
            train,
            class,
            tau,
            keep_order,
            resolution,
            seed,
            out,
        } => {
            let args = CoverageArgs {
                train,
                class,
                taus: taus(tau, keep_order)?,
                resolution,
                seed,
                out,
            };
            commands::cmd_coverage(&args, log).map(drop)
        }
        Command::Tune {
            train,
            class,
            set,
            eps_cov,
            eps_ival,
            resolution,
            seed,
            out,
        } => {
            let args = TuneArgs {
                train,
                class,
                set: match set {
                    SetArg::Good => FeatureSet::Good,
                    SetArg::Bad => FeatureSet::Bad,
                },
                eps_cov,
                eps_ival,
                resolution,
                seed,
                out,
            };
            let report = commands::cmd_tune(&args, log)?;
            println!("{} {}", report.tau_min.tau, report.tau_max.tau);
            Ok(())
        }
        Command::Eval {
            train,
            monitor,
            test,
            class,
            layer,
            tau,
            keep_order,
            resolution,
            seed,
            out,
        } => {
            let source = match (monitor, train) {
                (Some(m), _) => EvalSource::Monitor(m),
                (None, Some(train)) => EvalSource::Build {
                    train,
                    taus: taus(tau, keep_order)?,
                },
                (None, None) => unreachable!("clap requires --train or --monitor"),
            };
            let args = EvalArgs {
                source,
                test,
                class,
                layer,
                resolution,
                seed,
                out,
            };
            commands::cmd_eval(&args, log).map(drop)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
