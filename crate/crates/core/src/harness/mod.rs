//! Training and evaluation loops over the environment and agent pool, plus
//! the files a run leaves behind: `metrics.csv`, `summary.csv` and one
//! checkpoint per parameter set.

mod config;
mod metrics;

use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;

pub use config::{RunConfig, RunMode};
pub use metrics::{
    median, metrics_header, nearest_rank, read_metrics_csv, summarize, write_metrics_csv,
    write_summary_csv, EpisodeMetrics, EpisodeRecorder, Summary,
};

use crate::env::{Env, Observation, OBSERVATION_DIM};
use crate::marl::AgentPool;
use crate::{rng, Error, Result};

const TRAIN_EPISODE_STREAM: u64 = 0x7261;
const EVAL_EPISODE_STREAM: u64 = 0x6576;
const POOL_STREAM: u64 = 0x706f;
const ACTION_STREAM: u64 = 0x6163;

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Environment seed of training episode `episode`.
pub fn training_episode_seed(seed: u64, episode: usize) -> u64 {
    rng::derive_seed(seed, &[TRAIN_EPISODE_STREAM, episode as u64])
}

/// Environment seed of evaluation episode `episode`.
pub fn eval_episode_seed(seed: u64, episode: usize) -> u64 {
    rng::derive_seed(seed, &[EVAL_EPISODE_STREAM, episode as u64])
}

enum Policy<'a> {
    None,
    Frozen(&'a AgentPool),
    Learning(&'a mut AgentPool),
}

fn refs(observations: &[Observation]) -> Vec<&[f64]> {
    observations.iter().map(Observation::as_slice).collect()
}

fn run_episode(
    env: &mut Env,
    mut policy: Policy<'_>,
    env_seed: u64,
    episode: usize,
    action_rng: &mut ChaCha8Rng,
) -> Result<EpisodeMetrics> {
    let n = env.config().n_ues;
    let mut observations = env.reset(env_seed);
    let mut recorder = EpisodeRecorder::new(n);
    while !env.is_done() {
        let decision = match &policy {
            Policy::None => None,
            Policy::Frozen(pool) => Some(pool.act(&refs(&observations), action_rng, false)?),
            Policy::Learning(pool) => Some(pool.act(&refs(&observations), action_rng, true)?),
        };
        let priorities = match &decision {
            Some(d) => d.priorities.clone(),
            None => vec![1; n],
        };
        let outcome = env.step(&priorities)?;
        recorder.record_rewards(&outcome.rewards);
        recorder.record_frames(&outcome.info.delivered);
        if let (Policy::Learning(pool), Some(d)) = (&mut policy, &decision) {
            let learned = pool.record_step(
                &refs(&observations),
                d,
                &outcome.rewards,
                &refs(&outcome.observations),
                env.is_done(),
            )?;
            if let Some(stats) = learned {
                for u in &stats.updates {
                    log::debug!(
                        "episode {episode}: update on {} samples, loss {:.4}, clip {:.3}, entropy {:.3}",
                        stats.samples,
                        u.loss,
                        u.clip_fraction,
                        u.entropy
                    );
                }
            }
        }
        observations = outcome.observations;
    }
    recorder.record_frames(&env.pending_latencies());
    Ok(recorder.finish(episode, env.config().latency_threshold_ms))
}

/// A fresh agent pool for `config`, or `None` in baseline mode.
pub fn build_pool(config: &RunConfig) -> Result<Option<AgentPool>> {
    match config.mode {
        RunMode::RrBaseline => Ok(None),
        RunMode::Learned(mode) => AgentPool::new(
            mode,
            config.env.n_ues,
            OBSERVATION_DIM,
            config.env.n_priority_levels as usize,
            &config.ppo,
            rng::derive_seed(config.seed, &[POOL_STREAM]),
        )
        .map(Some),
    }
}

#[derive(Debug, Clone)]
pub struct Training {
    pub metrics: Vec<EpisodeMetrics>,
    /// Final policy; `None` in baseline mode.
    pub pool: Option<AgentPool>,
}

/// Runs the training episodes in memory. Learning fires whenever the agent
/// buffers reach the trajectory length, which may straddle episodes.
pub fn train(config: &RunConfig) -> Result<Training> {
    config.validate()?;
    let mut pool = build_pool(config)?;
    let mut env = Env::new(config.env.clone(), config.effective_scheduler())?;
    let mut action_rng = rng::stream(config.seed, &[ACTION_STREAM]);
    let mut series = Vec::with_capacity(config.n_episodes);
    for episode in 0..config.n_episodes {
        let policy = match pool.as_mut() {
            Some(p) => Policy::Learning(p),
            None => Policy::None,
        };
        let seed = training_episode_seed(config.seed, episode);
        let m = run_episode(&mut env, policy, seed, episode, &mut action_rng)?;
        log::info!(
            "train episode {episode}: reward {:.4}, success {:.4}, mean latency {:.2} ms",
            m.mean_reward,
            m.success_prob,
            m.mean_latency_ms
        );
        series.push(m);
    }
    Ok(Training {
        metrics: series,
        pool,
    })
}

/// Evaluates a frozen argmax policy (or the baseline) on fresh episodes.
pub fn evaluate(config: &RunConfig, pool: Option<&AgentPool>) -> Result<Vec<EpisodeMetrics>> {
    config.validate()?;
    let pool = match config.mode {
        RunMode::RrBaseline => None,
        RunMode::Learned(_) => Some(pool.ok_or_else(|| {
            Error::InvalidConfig("evaluating a learned mode needs a policy".into())
        })?),
    };
    let mut env = Env::new(config.env.clone(), config.effective_scheduler())?;
    let mut action_rng = rng::stream(config.seed, &[ACTION_STREAM]);
    (0..config.eval_episodes)
        .map(|episode| {
            let policy = pool.map_or(Policy::None, Policy::Frozen);
            let seed = eval_episode_seed(config.seed, episode);
            run_episode(&mut env, policy, seed, episode, &mut action_rng)
        })
        .collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `metrics.csv` and, for a non-empty series, `summary.csv`.
pub fn write_outputs(dir: &Path, n_ues: usize, series: &[EpisodeMetrics]) -> Result<()> {
    create_dir(dir)?;
    write_metrics_csv(&dir.join(METRICS_FILE), n_ues, series)?;
    if !series.is_empty() {
        write_summary_csv(&dir.join(SUMMARY_FILE), &summarize(series)?)?;
    }
    Ok(())
}

/// Trains and writes metrics, summary and checkpoints to the output
/// directory.
pub fn run_training(config: &RunConfig) -> Result<Training> {
    let training = train(config)?;
    write_outputs(&config.output_dir, config.env.n_ues, &training.metrics)?;
    if let Some(pool) = &training.pool {
        pool.save(&config.output_dir)?;
    }
    Ok(training)
}

/// Loads the policy from `checkpoint_dir` (ignored in baseline mode),
/// evaluates it and writes metrics and summary to the output directory.
pub fn run_eval(config: &RunConfig, checkpoint_dir: Option<&Path>) -> Result<Vec<EpisodeMetrics>> {
    config.validate()?;
    let mut pool = build_pool(config)?;
    if let Some(p) = pool.as_mut() {
        let dir: PathBuf = checkpoint_dir.map_or_else(|| config.output_dir.clone(), Path::to_path_buf);
        p.load(&dir)?;
    }
    let series = evaluate(config, pool.as_ref())?;
    write_outputs(&config.output_dir, config.env.n_ues, &series)?;
    Ok(series)
}
