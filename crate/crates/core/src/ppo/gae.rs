//! Trajectories, generalized advantage estimation and value targets.

/// One contiguous run of agent experience, truncated after the last step
/// and bootstrapped with the critic's estimate of the following state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub observations: Vec<Vec<f64>>,
    /// Action indices in `0..K`.
    pub actions: Vec<usize>,
    /// Log-probability of each action under the policy that collected it.
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    /// Critic estimate of the state after the final step.
    pub bootstrap_value: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn push(&mut self, observation: Vec<f64>, action: usize, log_prob: f64, reward: f64, value: f64) {
        self.observations.push(observation);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.rewards.push(reward);
        self.values.push(value);
    }
}

/// Advantages by the backward recursion `A_t = delta_t + gamma lambda A_{t+1}`
/// with `delta_t = r_t + gamma V_{t+1} - V_t`.
///
/// `values` carries one more entry than `rewards`: the bootstrap value.
pub fn gae(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> Vec<f64> {
    assert_eq!(values.len(), rewards.len() + 1, "values must include the bootstrap");
    let mut advantages = vec![0.0; rewards.len()];
    let mut running = 0.0;
    for t in (0..rewards.len()).rev() {
        let delta = rewards[t] + gamma * values[t + 1] - values[t];
        running = delta + gamma * lambda * running;
        advantages[t] = running;
    }
    advantages
}

pub fn compute_gae(trajectory: &Trajectory, gamma: f64, lambda: f64) -> Vec<f64> {
    let mut values = trajectory.values.clone();
    values.push(trajectory.bootstrap_value);
    gae(&trajectory.rewards, &values, gamma, lambda)
}

/// Value targets `A_t + V(s_t)`.
pub fn compute_returns(trajectory: &Trajectory, advantages: &[f64]) -> Vec<f64> {
    advantages
        .iter()
        .zip(&trajectory.values)
        .map(|(a, v)| a + v)
        .collect()
}
