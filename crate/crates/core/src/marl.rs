//! Multi-agent orchestration over PPO actor/critic pairs.
//!
//! Under IPPO every agent owns its networks and learns only from its own
//! experience. Under MAPPO all agents act through one shared pair, which is
//! trained on the pooled experience of every agent. In both modes advantages
//! are computed and normalized per agent before any pooling.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::nn::{checkpoint, DenseNet, Head};
use crate::ppo::{self, ActorCritic, Batch, PpoConfig, Trajectory, UpdateStats};
use crate::rng;
use crate::{Error, Result};

const INIT_STREAM: u64 = 0x1417;
const SHUFFLE_STREAM: u64 = 0x5a0f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Ippo,
    Mappo,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Ippo => "ippo",
            Mode::Mappo => "mappo",
        }
    }
}

/// Actions chosen for one decision step.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    /// Priority levels in `1..=K`, one per agent.
    pub priorities: Vec<u32>,
    /// The same choices as network output indices.
    pub action_indices: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
}

/// Experience of one agent since its last update, split into trajectories
/// at episode ends and at update points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    pub closed: Vec<Trajectory>,
    pub open: Trajectory,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.closed.iter().map(Trajectory::len).sum::<usize>() + self.open.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn close(&mut self, bootstrap_value: f64) {
        if !self.open.is_empty() {
            let mut segment = std::mem::take(&mut self.open);
            segment.bootstrap_value = bootstrap_value;
            self.closed.push(segment);
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearnStats {
    /// One entry per updated parameter set.
    pub updates: Vec<UpdateStats>,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct AgentPool {
    mode: Mode,
    n_agents: usize,
    config: PpoConfig,
    models: Vec<ActorCritic>,
    buffers: Vec<RolloutBuffer>,
    shuffle_rngs: Vec<ChaCha8Rng>,
}

impl AgentPool {
    pub fn new(
        mode: Mode,
        n_agents: usize,
        obs_dim: usize,
        n_actions: usize,
        config: &PpoConfig,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if n_agents == 0 || n_actions == 0 {
            return Err(Error::InvalidConfig("agent pool needs at least one agent and action".into()));
        }
        let n_models = match mode {
            Mode::Ippo => n_agents,
            Mode::Mappo => 1,
        };
        let h = config.hidden_units;
        let models = (0..n_models)
            .map(|i| {
                let mut init = rng::stream(seed, &[INIT_STREAM, i as u64]);
                let actor = DenseNet::new(&[obs_dim, h, h, n_actions], Head::Softmax, &mut init)?;
                let critic = DenseNet::new(&[obs_dim, h, h, 1], Head::Linear, &mut init)?;
                Ok(ActorCritic::new(actor, critic, config.learning_rate))
            })
            .collect::<Result<Vec<_>>>()?;
        let shuffle_rngs = (0..n_models)
            .map(|i| rng::stream(seed, &[SHUFFLE_STREAM, i as u64]))
            .collect();
        Ok(Self {
            mode,
            n_agents,
            config: config.clone(),
            models,
            buffers: vec![RolloutBuffer::default(); n_agents],
            shuffle_rngs,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn models(&self) -> &[ActorCritic] {
        &self.models
    }

    pub fn models_mut(&mut self) -> &mut [ActorCritic] {
        &mut self.models
    }

    pub fn buffers(&self) -> &[RolloutBuffer] {
        &self.buffers
    }

    /// Parameter set driving agent `i`.
    pub fn model_for(&self, agent: usize) -> &ActorCritic {
        match self.mode {
            Mode::Ippo => &self.models[agent],
            Mode::Mappo => &self.models[0],
        }
    }

    pub fn n_params(&self) -> usize {
        self.models.iter().map(ActorCritic::n_params).sum()
    }

    pub fn policy(&self, agent: usize, observation: &[f64]) -> Result<Vec<f64>> {
        Ok(self.model_for(agent).actor.forward_policy(observation)?.0)
    }

    pub fn value(&self, agent: usize, observation: &[f64]) -> Result<f64> {
        Ok(self.model_for(agent).critic.forward_value(observation)?.0)
    }

    /// Chooses an action per agent: sampled when exploring, otherwise the
    /// most probable one (lowest index on ties). Exactly one uniform draw is
    /// consumed per agent when exploring.
    pub fn act<R: Rng + ?Sized>(
        &self,
        observations: &[&[f64]],
        rng: &mut R,
        explore: bool,
    ) -> Result<Decision> {
        if observations.len() != self.n_agents {
            return Err(Error::Shape(format!(
                "{} observations for {} agents",
                observations.len(),
                self.n_agents
            )));
        }
        let mut decision = Decision {
            priorities: Vec::with_capacity(self.n_agents),
            action_indices: Vec::with_capacity(self.n_agents),
            log_probs: Vec::with_capacity(self.n_agents),
            values: Vec::with_capacity(self.n_agents),
        };
        for (agent, obs) in observations.iter().enumerate() {
            let probs = self.policy(agent, obs)?;
            let index = if explore {
                sample_index(&probs, rng.random::<f64>())
            } else {
                argmax(&probs)
            };
            decision.priorities.push(index as u32 + 1);
            decision.action_indices.push(index);
            decision.log_probs.push(probs[index].ln());
            decision.values.push(self.value(agent, obs)?);
        }
        Ok(decision)
    }

    /// Stores one step of experience for every agent. When `episode_end` is
    /// set, or the buffers reach the trajectory length, the open trajectories
    /// are closed with the critic's value of `next_observations`; a full
    /// buffer then triggers [`AgentPool::learn`].
    pub fn record_step(
        &mut self,
        observations: &[&[f64]],
        decision: &Decision,
        rewards: &[f64],
        next_observations: &[&[f64]],
        episode_end: bool,
    ) -> Result<Option<LearnStats>> {
        let n = self.n_agents;
        if observations.len() != n || rewards.len() != n || next_observations.len() != n {
            return Err(Error::Shape("record_step needs one entry per agent".into()));
        }
        for agent in 0..n {
            self.buffers[agent].open.push(
                observations[agent].to_vec(),
                decision.action_indices[agent],
                decision.log_probs[agent],
                rewards[agent],
                decision.values[agent],
            );
        }
        let full = self.buffers.iter().all(|b| b.len() >= self.config.trajectory_len);
        if episode_end || full {
            for (agent, next) in next_observations.iter().enumerate() {
                let bootstrap = self.value(agent, next)?;
                self.buffers[agent].close(bootstrap);
            }
        }
        if full {
            return self.learn().map(Some);
        }
        Ok(None)
    }

    /// Per-agent GAE batches, advantages normalized within each agent.
    fn agent_batches(&self) -> Vec<Batch> {
        self.buffers
            .iter()
            .map(|buffer| {
                let mut batch = Batch::default();
                for trajectory in &buffer.closed {
                    batch.push_trajectory(trajectory, &self.config);
                }
                batch.normalize_advantages();
                batch
            })
            .collect()
    }

    /// Runs PPO on the closed trajectories and clears the buffers.
    pub fn learn(&mut self) -> Result<LearnStats> {
        for (agent, buffer) in self.buffers.iter().enumerate() {
            if !buffer.open.is_empty() {
                return Err(Error::InsufficientData(format!(
                    "agent {agent} has an unclosed trajectory"
                )));
            }
            if buffer.len() < self.config.trajectory_len {
                return Err(Error::InsufficientData(format!(
                    "agent {agent} holds {} steps, needs {}",
                    buffer.len(),
                    self.config.trajectory_len
                )));
            }
        }
        let batches = self.agent_batches();
        let samples = batches.iter().map(Batch::len).sum();
        let mut stats = LearnStats {
            updates: Vec::with_capacity(self.models.len()),
            samples,
        };
        match self.mode {
            Mode::Ippo => {
                for ((model, mut batch), rng) in self
                    .models
                    .iter_mut()
                    .zip(batches)
                    .zip(&mut self.shuffle_rngs)
                {
                    stats.updates.push(ppo::update(model, &mut batch, &self.config, rng)?);
                }
            }
            Mode::Mappo => {
                let mut pooled = Batch::default();
                for batch in batches {
                    pooled.extend(batch);
                }
                stats.updates.push(ppo::update(
                    &mut self.models[0],
                    &mut pooled,
                    &self.config,
                    &mut self.shuffle_rngs[0],
                )?);
            }
        }
        self.buffers.iter_mut().for_each(|b| *b = RolloutBuffer::default());
        Ok(stats)
    }

    fn checkpoint_paths(&self, dir: &Path) -> Vec<PathBuf> {
        match self.mode {
            Mode::Ippo => (0..self.n_agents)
                .map(|i| dir.join(format!("agent{i}.ckpt")))
                .collect(),
            Mode::Mappo => vec![dir.join("shared.ckpt")],
        }
    }

    /// Writes one file per parameter set (actor block, then critic block).
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let paths = self.checkpoint_paths(dir);
        for (model, path) in self.models.iter().zip(&paths) {
            checkpoint::save(path, &[&model.actor, &model.critic])?;
        }
        Ok(paths)
    }

    /// Replaces the networks with those stored in `dir`. Optimizer state is
    /// reset.
    pub fn load(&mut self, dir: &Path) -> Result<()> {
        let paths = self.checkpoint_paths(dir);
        for (model, path) in self.models.iter_mut().zip(&paths) {
            let actor_dims = model.actor.dims().to_vec();
            let critic_dims = model.critic.dims().to_vec();
            let mut nets = checkpoint::load(
                path,
                &[(&actor_dims, Head::Softmax), (&critic_dims, Head::Linear)],
            )?;
            let critic = nets.pop().expect("two nets");
            let actor = nets.pop().expect("two nets");
            *model = ActorCritic::new(actor, critic, self.config.learning_rate);
        }
        Ok(())
    }
}

/// Index of the largest probability, lowest index on ties.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Inverse-CDF sample from `probs` with a uniform draw `u` in `[0, 1)`.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    // rounding can leave the total a hair below one
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}
