//! Run configuration and its flat `key=value` file format.
//!
//! Keys carry a section prefix (`env.n_ues=5`, `ppo.learning_rate=1e-4`);
//! run-level keys (`mode`, `scheduler`, `n_episodes`, `eval_episodes`,
//! `output_dir`, `seed`) have none. Everything after a `#` is a comment;
//! blank lines are skipped. Setting `env.q` or `env.c` resets the mean frame size to
//! that compression profile.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::env::{CompressionConfig, EnvConfig};
use crate::marl::Mode;
use crate::ppo::PpoConfig;
use crate::sched::SchedulerKind;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Learned(Mode),
    /// Round-robin allocation with no policy in the loop.
    RrBaseline,
}

impl FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ippo" => Ok(RunMode::Learned(Mode::Ippo)),
            "mappo" => Ok(RunMode::Learned(Mode::Mappo)),
            "rr" | "rr-baseline" | "baseline" => Ok(RunMode::RrBaseline),
            other => Err(Error::InvalidConfig(format!(
                "unknown mode {other:?} (expected ippo, mappo or rr-baseline)"
            ))),
        }
    }
}

impl std::fmt::Display for RunMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunMode::Learned(m) => f.write_str(m.as_str()),
            RunMode::RrBaseline => f.write_str("rr-baseline"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    pub mode: RunMode,
    pub scheduler: SchedulerKind,
    pub n_episodes: usize,
    pub eval_episodes: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            ppo: PpoConfig::default(),
            mode: RunMode::Learned(Mode::Mappo),
            scheduler: SchedulerKind::Greedy,
            n_episodes: 250,
            eval_episodes: 20,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {value:?}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse(key, v.trim()))
        .collect()
}

impl RunConfig {
    /// The allocator actually driven: round-robin in baseline mode,
    /// otherwise the configured one.
    pub fn effective_scheduler(&self) -> SchedulerKind {
        match self.mode {
            RunMode::RrBaseline => SchedulerKind::RoundRobin,
            RunMode::Learned(_) => self.scheduler,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.ppo.validate()
    }

    /// Sets one key. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        let env = &mut self.env;
        let ppo = &mut self.ppo;
        match key {
            "mode" => self.mode = value.parse()?,
            "scheduler" => self.scheduler = value.parse()?,
            "n_episodes" | "episodes" => self.n_episodes = parse(key, value)?,
            "eval_episodes" => self.eval_episodes = parse(key, value)?,
            "output_dir" | "out" => self.output_dir = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,

            "env.n_ues" => env.n_ues = parse(key, value)?,
            "env.symbols_per_slot" => env.symbols_per_slot = parse(key, value)?,
            "env.slot_duration" => env.slot_duration = parse(key, value)?,
            "env.frame_rate" => env.frame_rate = parse(key, value)?,
            "env.latency_threshold_ms" => env.latency_threshold_ms = parse(key, value)?,
            "env.n_priority_levels" => env.n_priority_levels = parse(key, value)?,
            "env.wired_delay_ms" => env.wired_delay_ms = parse(key, value)?,
            "env.steps_per_episode" => env.steps_per_episode = parse(key, value)?,
            "env.q" | "env.c" => {
                let level: u8 = parse(key, value)?;
                let (q, c) = if key == "env.q" {
                    (level, env.compression.c)
                } else {
                    (env.compression.q, level)
                };
                let jitter = env.compression.frame_size_jitter;
                env.compression = CompressionConfig::profile(q, c)?;
                env.compression.frame_size_jitter = jitter;
            }
            "env.mean_frame_bytes" => env.compression.mean_frame_bytes = parse(key, value)?,
            "env.frame_size_jitter" => env.compression.frame_size_jitter = parse(key, value)?,
            "env.sinr_mean_db" => env.channel.sinr_mean_db = parse(key, value)?,
            "env.ar_coefficient" => env.channel.ar_coefficient = parse(key, value)?,
            "env.noise_std_db" => env.channel.noise_std_db = parse(key, value)?,
            "env.offset_spread_db" => env.channel.offset_spread_db = parse(key, value)?,
            "env.per_ue_mean_offsets" => env.channel.per_ue_mean_offsets = Some(parse_list(key, value)?),

            "ppo.gamma" => ppo.gamma = parse(key, value)?,
            "ppo.gae_lambda" => ppo.gae_lambda = parse(key, value)?,
            "ppo.clip_epsilon" => ppo.clip_epsilon = parse(key, value)?,
            "ppo.value_coef" => ppo.value_coef = parse(key, value)?,
            "ppo.entropy_coef" => ppo.entropy_coef = parse(key, value)?,
            "ppo.trajectory_len" => ppo.trajectory_len = parse(key, value)?,
            "ppo.minibatch_size" => ppo.minibatch_size = parse(key, value)?,
            "ppo.epochs_per_update" => ppo.epochs_per_update = parse(key, value)?,
            "ppo.learning_rate" => ppo.learning_rate = parse(key, value)?,
            "ppo.hidden_units" => ppo.hidden_units = parse(key, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies every `key=value` line of `text` on top of `self`.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
                line: i + 1,
                reason: format!("expected key=value, got {line:?}"),
            })?;
            self.set(key, value).map_err(|e| Error::ConfigParse {
                line: i + 1,
                reason: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_str_with_defaults(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_str(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str_with_defaults(&text)
    }
}
