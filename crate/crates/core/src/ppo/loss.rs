//! Clipped-surrogate PPO loss and its exact gradients.
//!
//! The minimized loss is `-L_clip + c1 * L_vf - c2 * S`, averaged over the
//! minibatch, where `L_clip` is the clipped surrogate, `L_vf` the squared
//! error of the critic against the value targets and `S` the policy entropy.

use super::{Batch, PpoConfig};
use crate::nn::{DenseNet, Gradients};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossDiagnostics {
    pub loss: f64,
    /// Mean clipped surrogate (the quantity being maximized).
    pub surrogate: f64,
    /// Fraction of samples whose ratio fell outside `[1 - eps, 1 + eps]`.
    pub clip_fraction: f64,
    pub entropy: f64,
    /// Mean squared error of the critic.
    pub value_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGradients {
    pub actor: Gradients,
    pub critic: Gradients,
}

/// Per-sample clipped surrogate `min(r A, clip(r, 1-eps, 1+eps) A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    (ratio * advantage).min(clipped * advantage)
}

fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
}

/// Loss value and diagnostics on `batch[indices]`.
pub fn ppo_loss(
    actor: &DenseNet,
    critic: &DenseNet,
    batch: &Batch,
    indices: &[usize],
    config: &PpoConfig,
) -> Result<LossDiagnostics> {
    evaluate(actor, critic, batch, indices, config, None)
}

/// Loss, diagnostics and the gradients for both networks.
pub fn ppo_loss_and_gradients(
    actor: &DenseNet,
    critic: &DenseNet,
    batch: &Batch,
    indices: &[usize],
    config: &PpoConfig,
) -> Result<(LossDiagnostics, LossGradients)> {
    let mut grads = LossGradients {
        actor: Gradients::zeros(actor.n_params()),
        critic: Gradients::zeros(critic.n_params()),
    };
    let diag = evaluate(actor, critic, batch, indices, config, Some(&mut grads))?;
    Ok((diag, grads))
}

fn evaluate(
    actor: &DenseNet,
    critic: &DenseNet,
    batch: &Batch,
    indices: &[usize],
    config: &PpoConfig,
    mut grads: Option<&mut LossGradients>,
) -> Result<LossDiagnostics> {
    batch.check_shapes()?;
    if indices.is_empty() {
        return Err(Error::Shape("empty minibatch".into()));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= batch.len()) {
        return Err(Error::Shape(format!("minibatch index {bad} out of {}", batch.len())));
    }
    let n_actions = actor.output_dim();
    let scale = 1.0 / indices.len() as f64;
    let eps = config.clip_epsilon;

    let mut diag = LossDiagnostics::default();
    for &i in indices {
        let obs = &batch.observations[i];
        let action = batch.actions[i];
        if action >= n_actions {
            return Err(Error::Shape(format!("action {action} with {n_actions} outputs")));
        }
        let advantage = batch.advantages[i];

        let (probs, actor_cache) = actor.forward_policy(obs)?;
        let log_prob = probs[action].ln();
        let ratio = (log_prob - batch.log_probs[i]).exp();
        let surrogate = clipped_surrogate(ratio, advantage, eps);
        let sample_entropy = entropy(&probs);
        let (value, critic_cache) = critic.forward_value(obs)?;
        let value_diff = value - batch.returns[i];

        diag.surrogate += surrogate * scale;
        diag.entropy += sample_entropy * scale;
        diag.value_error += value_diff * value_diff * scale;
        if (ratio - 1.0).abs() > eps {
            diag.clip_fraction += scale;
        }

        if let Some(g) = grads.as_deref_mut() {
            // the unclipped branch carries the gradient unless the clip binds
            let clip_binds = (advantage > 0.0 && ratio > 1.0 + eps)
                || (advantage < 0.0 && ratio < 1.0 - eps);
            let d_log_prob = if clip_binds { 0.0 } else { -ratio * advantage * scale };
            let ent_coef = config.entropy_coef * scale;
            let logits_grad: Vec<f64> = probs
                .iter()
                .enumerate()
                .map(|(j, &p)| {
                    let onehot = if j == action { 1.0 } else { 0.0 };
                    let from_surrogate = d_log_prob * (onehot - p);
                    let from_entropy = if p > 0.0 { ent_coef * p * (p.ln() + sample_entropy) } else { 0.0 };
                    from_surrogate + from_entropy
                })
                .collect();
            actor.backward_into(&actor_cache, &logits_grad, &mut g.actor)?;
            let value_grad = 2.0 * config.value_coef * value_diff * scale;
            critic.backward_into(&critic_cache, &[value_grad], &mut g.critic)?;
        }
    }
    diag.loss = -diag.surrogate + config.value_coef * diag.value_error - config.entropy_coef * diag.entropy;
    Ok(diag)
}
