use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use mibound::mi_oracle::DEFAULT_OUTCOME_BUDGET;
use mibound::quantum_metrology::{CapRegime, NoiseKind};
use mibound_cli::commands::{self, MetrologyConfig, VerifyConfig, DEFAULT_SEED};
use mibound_cli::model;
use mibound_cli::output::DisplayUnits;

/// Fisher-information bounds on mutual information and Bayesian MSE.
#[derive(Debug, Parser)]
#[command(name = "mibound", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Output {
    /// Units for information quantities.
    #[arg(long, value_enum, default_value_t = DisplayUnits::Nats)]
    units: DisplayUnits,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Builtin model name (cos2, gaussian-phase, noon, noon-<N>,
    /// dephasing-qubit, ampdamp-qubit, erasure-qutrit) or a TOML model file.
    #[arg(long)]
    model: String,
    /// Override the number of grid points (odd).
    #[arg(long)]
    grid_points: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate every bound on one model, next to its oracle values.
    Bounds {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Check all bounds against brute-force oracles on seeded random models.
    Verify {
        /// Number of random models.
        #[arg(long, default_value_t = 200)]
        count: usize,
        /// Random seed.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Grid points of each random model (odd).
        #[arg(long, default_value_t = mibound::random_models::DEFAULT_GRID_POINTS)]
        grid_points: usize,
        /// Near-deterministic models with probabilities floored at 1e-9.
        #[arg(long)]
        adversarial: bool,
        /// Allowed excess of oracle MI over an MI bound, in nats.
        #[arg(long, default_value_t = 1e-3)]
        mi_tolerance: f64,
        /// Allowed relative shortfall of the Bayes MSE below an MSE bound.
        #[arg(long, default_value_t = 1e-3)]
        mse_tolerance: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Noisy phase-estimation MI caps over a range of resource counts.
    Metrology {
        /// Efficiencies η in (0, 1].
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.9, 0.99])]
        eta: Vec<f64>,
        /// Explicit resource counts; overrides the log-spaced range.
        #[arg(long = "n", value_delimiter = ',')]
        n: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        n_min: f64,
        #[arg(long, default_value_t = 1e6)]
        n_max: f64,
        /// Log-spaced points between n-min and n-max (before rounding to integers).
        #[arg(long, default_value_t = 121)]
        points: usize,
        /// Cap regime: finite-n or asymptotic.
        #[arg(long, default_value = "finite-n")]
        regime: CapRegime,
        /// Noise model: dephasing, erasure or amplitude-damping.
        #[arg(long, default_value = "dephasing")]
        noise: NoiseKind,
        /// Fisher constant F_as for amplitude damping.
        #[arg(long)]
        fisher_constant: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Brute-force mutual information, entropies and Bayes MSE.
    Mi {
        #[command(flatten)]
        model: ModelArgs,
        /// Independent repetitions of the measurement.
        #[arg(long, default_value_t = 1)]
        copies: usize,
        /// Largest product alphabet evaluated exactly.
        #[arg(long, default_value_t = DEFAULT_OUTCOME_BUDGET)]
        budget: usize,
        /// Run the ML-estimator Monte-Carlo study for these sample sizes instead.
        #[arg(long, value_delimiter = ',')]
        mle_study: Vec<usize>,
        /// Trials per sample size for the MLE study.
        #[arg(long, default_value_t = 20000)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Bounds { model, output } => {
            let loaded = model::load(&model.model, model.grid_points)?;
            commands::bounds_table(&loaded.joint, output.units).emit(output.out.as_deref())?;
        }
        Command::Verify {
            count,
            seed,
            grid_points,
            adversarial,
            mi_tolerance,
            mse_tolerance,
            output,
        } => {
            let config = VerifyConfig {
                count,
                seed,
                grid_points,
                adversarial,
                mi_tolerance,
                mse_tolerance,
                ..Default::default()
            };
            let outcome = commands::verify(&config)?;
            outcome.table.emit(output.out.as_deref())?;
            if !outcome.passed() {
                for dump in &outcome.violations {
                    eprintln!("{dump}");
                }
                eprintln!("verify: {} model(s) violated a bound", outcome.violations.len());
                return Ok(ExitCode::from(2));
            }
        }
        Command::Metrology {
            eta,
            n,
            n_min,
            n_max,
            points,
            regime,
            noise,
            fisher_constant,
            output,
        } => {
            let config = MetrologyConfig {
                etas: eta,
                ns: n,
                n_min,
                n_max,
                points,
                regime,
                noise,
                fisher_constant,
            };
            let outcome = commands::metrology(&config, output.units)?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            outcome.table.emit(output.out.as_deref())?;
        }
        Command::Mi {
            model,
            copies,
            budget,
            mle_study,
            trials,
            seed,
            output,
        } => {
            let loaded = model::load(&model.model, model.grid_points)?;
            let table = if mle_study.is_empty() {
                commands::mi_table(&loaded.joint, copies, budget, output.units)?
            } else {
                commands::mle_study_table(&loaded.joint, &mle_study, trials, seed, output.units)?
            };
            table.emit(output.out.as_deref())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
