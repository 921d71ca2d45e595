//! Synthetic per-UE SINR process: an AR(1) in dB around a per-UE mean.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::env::config::ChannelConfig;

/// Advances one slot: `s' = mean + rho (s - mean) + sigma z`.
pub fn sinr_step<R: Rng + ?Sized>(
    sinr_db: f64,
    ue_mean_db: f64,
    config: &ChannelConfig,
    rng: &mut R,
) -> f64 {
    let innovation = if config.noise_std_db > 0.0 {
        let z: f64 = StandardNormal.sample(rng);
        config.noise_std_db * z
    } else {
        0.0
    };
    ue_mean_db + config.ar_coefficient * (sinr_db - ue_mean_db) + innovation
}

/// Draws the per-UE mean offsets for an episode.
pub fn draw_offsets<R: Rng + ?Sized>(config: &ChannelConfig, n_ues: usize, rng: &mut R) -> Vec<f64> {
    match &config.per_ue_mean_offsets {
        Some(fixed) => fixed.clone(),
        None if config.offset_spread_db > 0.0 => (0..n_ues)
            .map(|_| rng.random_range(-config.offset_spread_db..=config.offset_spread_db))
            .collect(),
        None => vec![0.0; n_ues],
    }
}
