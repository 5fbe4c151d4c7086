use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qrc_core::experiment::{self, ExperimentConfig, SweepAxis};

/// Quantum reservoir computing experiments on MNIST.
#[derive(Parser)]
#[command(name = "qrc", version)]
struct Cli {
    /// TOML file with experiment settings; missing keys take defaults.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Override one setting, e.g. `--set epsilon=0.1` or `--set epsilons=[0,0.03]`.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Effective-Hamiltonian network and degree distribution for every epsilon.
    Network,
    /// Encode, evolve and measure the dataset; writes the feature cache.
    Features,
    /// Train the readout on a cached feature set.
    Train,
    /// Features and training for every value along one axis.
    Sweep {
        #[arg(long, value_parser = parse_axis)]
        axis: SweepAxis,
    },
    /// Print the resolved configuration as TOML.
    Config,
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    s.parse().map_err(|e: qrc_core::Error| e.to_string())
}

fn run(cli: Cli) -> qrc_core::Result<()> {
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)?;
    match cli.command {
        Command::Network => {
            for row in experiment::cmd_network(&cfg)? {
                let fit = match (row.slope, row.r_squared) {
                    (Some(s), Some(r2)) => format!("slope {s:.3} (r² {r2:.3})"),
                    _ => "too few degree bins for a fit".to_string(),
                };
                println!(
                    "eps={}: {} edges, max degree {}, {} distinct degrees, {fit}",
                    row.epsilon, row.edges, row.max_degree, row.distinct_degrees
                );
            }
        }
        Command::Features => {
            let out = experiment::cmd_features(&cfg)?;
            let state = if out.hit { "reused" } else { "wrote" };
            println!(
                "{state} {} ({} train, {} test, {} features)",
                out.path.display(),
                out.cache.train.len(),
                out.cache.test.len(),
                out.cache.header.dim
            );
        }
        Command::Train => {
            let out = experiment::cmd_train(&cfg)?;
            let w = &out.window;
            print!(
                "epochs {}-{}: train {:.4} ± {:.4}",
                w.first_epoch, w.last_epoch, w.train_mean, w.train_std
            );
            if let (Some(m), Some(s)) = (w.test_mean, w.test_std) {
                print!(", test {m:.4} ± {s:.4}");
            }
            println!();
        }
        Command::Sweep { axis } => {
            for row in experiment::cmd_sweep(&cfg, axis)? {
                let w = &row.window;
                println!(
                    "{axis}={}: train {:.4} ± {:.4}, test {:.4} ± {:.4}",
                    row.value,
                    w.train_mean,
                    w.train_std,
                    w.test_mean.unwrap_or(f64::NAN),
                    w.test_std.unwrap_or(f64::NAN)
                );
            }
        }
        Command::Config => print!("{}", cfg.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
