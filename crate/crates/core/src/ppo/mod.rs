//! Single-policy PPO: trajectories, GAE, the clipped loss and minibatch
//! Adam updates of an actor/critic pair.

pub mod gae;
pub mod loss;

use rand::seq::SliceRandom;
use rand::Rng;

pub use gae::{compute_gae, compute_returns, gae, Trajectory};
pub use loss::{clipped_surrogate, ppo_loss, ppo_loss_and_gradients, LossDiagnostics, LossGradients};

use crate::nn::{AdamState, DenseNet};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// Steps per agent between updates.
    pub trajectory_len: usize,
    pub minibatch_size: usize,
    pub epochs_per_update: usize,
    pub learning_rate: f64,
    /// Width of both hidden layers.
    pub hidden_units: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            trajectory_len: 512,
            minibatch_size: 64,
            epochs_per_update: 4,
            learning_rate: 1e-4,
            hidden_units: 64,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(0.0..1.0).contains(&self.gamma) {
            return fail(format!("gamma must be in [0, 1), got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return fail(format!("gae_lambda must be in [0, 1], got {}", self.gae_lambda));
        }
        if self.clip_epsilon.is_nan() || self.clip_epsilon <= 0.0 {
            return fail(format!("clip_epsilon must be > 0, got {}", self.clip_epsilon));
        }
        if !(self.value_coef >= 0.0 && self.entropy_coef >= 0.0) {
            return fail("value_coef and entropy_coef must be >= 0".into());
        }
        if self.minibatch_size == 0 || self.trajectory_len == 0 {
            return fail("trajectory_len and minibatch_size must be >= 1".into());
        }
        if !self.trajectory_len.is_multiple_of(self.minibatch_size) {
            return fail(format!(
                "trajectory_len {} is not a multiple of minibatch_size {}",
                self.trajectory_len, self.minibatch_size
            ));
        }
        if self.epochs_per_update == 0 {
            return fail("epochs_per_update must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if self.hidden_units == 0 {
            return fail("hidden_units must be >= 1".into());
        }
        Ok(())
    }
}

/// Flattened training samples with advantages and value targets attached.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Runs GAE on `trajectory` and appends its steps.
    pub fn push_trajectory(&mut self, trajectory: &Trajectory, config: &PpoConfig) {
        let advantages = compute_gae(trajectory, config.gamma, config.gae_lambda);
        let returns = compute_returns(trajectory, &advantages);
        self.observations.extend(trajectory.observations.iter().cloned());
        self.actions.extend(&trajectory.actions);
        self.log_probs.extend(&trajectory.log_probs);
        self.advantages.extend(advantages);
        self.returns.extend(returns);
    }

    pub fn extend(&mut self, other: Batch) {
        self.observations.extend(other.observations);
        self.actions.extend(other.actions);
        self.log_probs.extend(other.log_probs);
        self.advantages.extend(other.advantages);
        self.returns.extend(other.returns);
    }

    /// Shifts and scales advantages to zero mean and unit (population)
    /// standard deviation. Constant advantages are only centered.
    pub fn normalize_advantages(&mut self) {
        normalize(&mut self.advantages);
    }

    pub(crate) fn check_shapes(&self) -> Result<()> {
        let n = self.len();
        if [
            self.observations.len(),
            self.log_probs.len(),
            self.advantages.len(),
            self.returns.len(),
        ]
        .iter()
        .any(|&l| l != n)
        {
            return Err(Error::Shape("batch arrays differ in length".into()));
        }
        Ok(())
    }
}

pub fn normalize(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    for v in values.iter_mut() {
        *v -= mean;
        if std > 0.0 {
            *v /= std;
        }
    }
}

/// Actor/critic pair with their optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub actor: DenseNet,
    pub critic: DenseNet,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
}

impl ActorCritic {
    pub fn new(actor: DenseNet, critic: DenseNet, learning_rate: f64) -> Self {
        let actor_opt = AdamState::new(actor.n_params(), learning_rate);
        let critic_opt = AdamState::new(critic.n_params(), learning_rate);
        Self {
            actor,
            critic,
            actor_opt,
            critic_opt,
        }
    }

    pub fn n_params(&self) -> usize {
        self.actor.n_params() + self.critic.n_params()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub minibatches: usize,
    pub loss: f64,
    pub clip_fraction: f64,
    pub entropy: f64,
    pub value_error: f64,
}

/// Normalizes the batch advantages, then for each epoch shuffles the samples
/// and takes one Adam step per minibatch on both networks.
pub fn update<R: Rng + ?Sized>(
    model: &mut ActorCritic,
    batch: &mut Batch,
    config: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats> {
    batch.check_shapes()?;
    if batch.len() < config.minibatch_size {
        return Err(Error::InsufficientData(format!(
            "{} samples for minibatch size {}",
            batch.len(),
            config.minibatch_size
        )));
    }
    batch.normalize_advantages();

    let mut stats = UpdateStats::default();
    let mut order: Vec<usize> = (0..batch.len()).collect();
    for _ in 0..config.epochs_per_update {
        order.shuffle(rng);
        for chunk in order.chunks(config.minibatch_size) {
            let (diag, grads) = ppo_loss_and_gradients(&model.actor, &model.critic, batch, chunk, config)?;
            model.actor_opt.update(model.actor.params_mut(), &grads.actor.0)?;
            model.critic_opt.update(model.critic.params_mut(), &grads.critic.0)?;
            stats.minibatches += 1;
            stats.loss += diag.loss;
            stats.clip_fraction += diag.clip_fraction;
            stats.entropy += diag.entropy;
            stats.value_error += diag.value_error;
        }
    }
    let n = stats.minibatches as f64;
    stats.loss /= n;
    stats.clip_fraction /= n;
    stats.entropy /= n;
    stats.value_error /= n;
    Ok(stats)
}
