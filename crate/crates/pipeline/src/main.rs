use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lmd_pipeline::commands::{self, ROLLOUT_DIR, TIMING_FILE, WEIGHTS_FILE};
use lmd_pipeline::{Error, Result, RunConfig};

#[derive(Parser)]
#[command(name = "lmd", version, about = "Dealloying phase-field runs and U-AFNO surrogate workflows")]
struct Cli {
    /// Run configuration (JSON). Defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides paths.out_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ground-truth HF runs: snapshots and step reports.
    Simulate,
    /// Train a surrogate on the runs in paths.data_dir.
    Train,
    /// Surrogate roll-out from the held-out run's initial state.
    Rollout {
        /// Weights file; defaults to out_dir/model.uafw.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// HF relaxation steps after each leap.
        #[arg(long)]
        hybrid: Option<u64>,
    },
    /// QoI time series of a snapshot directory.
    Qoi {
        #[arg(long)]
        snapshots: PathBuf,
    },
    /// Autocorrelation and QoI errors of a prediction against truth.
    Metrics {
        #[arg(long)]
        pred: PathBuf,
        /// Repeat for several truth runs; the first is the reference.
        #[arg(long, required = true)]
        truth: Vec<PathBuf>,
    },
    /// Speedup report from measured timings.
    Report {
        /// Timings JSON; defaults to out_dir/rollout/timing.json.
        #[arg(long)]
        timings: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.override_seed(s);
    }
    if let Some(o) = cli.out {
        cfg.paths.out_dir = o;
    }
    match cli.cmd {
        Cmd::Simulate => {
            commands::simulate(&cfg)?;
        }
        Cmd::Train => {
            commands::train_model(&cfg)?;
        }
        Cmd::Rollout { weights, hybrid } => {
            if let Some(n) = hybrid {
                cfg.rollout.n_relax = n;
            }
            let w = weights.unwrap_or_else(|| cfg.paths.out_dir.join(WEIGHTS_FILE));
            commands::rollout(&cfg, &w)?;
        }
        Cmd::Qoi { snapshots } => {
            commands::qoi(&cfg, &snapshots)?;
        }
        Cmd::Metrics { pred, truth } => {
            commands::metrics(&cfg, &pred, &truth)?;
        }
        Cmd::Report { timings } => {
            let t = timings.unwrap_or_else(|| cfg.paths.out_dir.join(ROLLOUT_DIR).join(TIMING_FILE));
            let rep = commands::report(&cfg, &t)?;
            print!("{}", rep.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let class = e.class();
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error class={} code={} message={:?}", class.name(), class.exit_code(), msg);
            ExitCode::from(class.exit_code() as u8)
        }
    }
}
