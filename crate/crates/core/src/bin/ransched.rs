//! Command-line entry point: `train`, `eval`, `baseline` and `summarize`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ransched::harness::{self, RunConfig, RunMode};
use ransched::sched::SchedulerKind;

#[derive(Parser)]
#[command(name = "ransched", version, about = "Learned priority scheduling for uplink teleoperation traffic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and write metrics, summary and checkpoints.
    Train(RunArgs),
    /// Evaluate a trained policy with its argmax actions.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        /// Directory holding the checkpoints (defaults to --out).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Evaluate the round-robin baseline.
    Baseline(RunArgs),
    /// Summarize an existing metrics.csv.
    Summarize {
        /// Metrics file to read.
        metrics: PathBuf,
        /// Where to write summary.csv (defaults to the metrics file's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// ippo, mappo or rr-baseline.
    #[arg(long)]
    mode: Option<RunMode>,
    #[arg(long)]
    scheduler: Option<SchedulerKind>,
    /// Training episodes (evaluation episodes for eval and baseline).
    #[arg(long)]
    episodes: Option<usize>,
    /// Extra key=value overrides, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    fn resolve(&self, evaluating: bool) -> ransched::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        for entry in &self.overrides {
            cfg.apply_str(entry)?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(mode) = self.mode {
            cfg.mode = mode;
        }
        if let Some(s) = self.scheduler {
            cfg.scheduler = s;
        }
        if let Some(n) = self.episodes {
            if evaluating {
                cfg.eval_episodes = n;
            } else {
                cfg.n_episodes = n;
            }
        }
        Ok(cfg)
    }
}

fn report(series: &[harness::EpisodeMetrics]) -> ransched::Result<()> {
    if !series.is_empty() {
        let s = harness::summarize(series)?;
        println!(
            "episodes {}  reward {:.4}  success {:.4}  mean latency {:.2} ms  p95 violation {:.4}",
            s.episodes, s.mean_reward, s.success_prob, s.mean_latency_ms, s.p95_violation
        );
    }
    Ok(())
}

fn run(cli: Cli) -> ransched::Result<()> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.resolve(false)?;
            let training = harness::run_training(&cfg)?;
            report(&training.metrics)
        }
        Command::Eval { run, checkpoint } => {
            let cfg = run.resolve(true)?;
            report(&harness::run_eval(&cfg, checkpoint.as_deref())?)
        }
        Command::Baseline(args) => {
            let mut cfg = args.resolve(true)?;
            cfg.mode = RunMode::RrBaseline;
            report(&harness::run_eval(&cfg, None)?)
        }
        Command::Summarize { metrics, out } => {
            let series = harness::read_metrics_csv(&metrics)?;
            let summary = harness::summarize(&series)?;
            let dir = out.unwrap_or_else(|| {
                metrics
                    .parent()
                    .map(PathBuf::from)
                    .unwrap_or_default()
            });
            std::fs::create_dir_all(&dir).map_err(|e| ransched::Error::Io {
                path: dir.clone(),
                source: e,
            })?;
            harness::write_summary_csv(&dir.join(harness::SUMMARY_FILE), &summary)?;
            report(&series)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
