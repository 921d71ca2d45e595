//! Application frames and their generation.

use rand::Rng;

use crate::env::config::CompressionConfig;
use crate::env::ue::UeState;

/// Simulation time in slot boundaries: tick `t` is the start of slot `t`
/// (equivalently the end of slot `t - 1`).
pub type Tick = u64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub ue_id: usize,
    pub size_bits: u64,
    pub remaining_bits: u64,
    pub generated_at: Tick,
    pub delivered_at: Option<Tick>,
}

impl Frame {
    pub fn new(ue_id: usize, size_bits: u64, generated_at: Tick) -> Self {
        Self {
            ue_id,
            size_bits,
            remaining_bits: size_bits,
            generated_at,
            delivered_at: None,
        }
    }

    /// Air-interface delay in slots, once delivered.
    pub fn air_slots(&self) -> Option<u64> {
        self.delivered_at.map(|d| d - self.generated_at)
    }
}

/// Draws one frame size in bits: whole bytes, uniform within
/// `mean * (1 +/- jitter)`.
pub fn draw_frame_bits<R: Rng + ?Sized>(compression: &CompressionConfig, rng: &mut R) -> u64 {
    let mean = compression.mean_frame_bytes;
    let half_width = compression.frame_size_jitter * mean;
    let bytes = if half_width > 0.0 {
        rng.random_range(mean - half_width..=mean + half_width)
    } else {
        mean
    };
    bytes.round() as u64 * 8
}

/// Enqueues one freshly generated frame at every UE and returns copies of
/// the new frames.
pub fn generate_frames<R: Rng + ?Sized>(
    ues: &mut [UeState],
    now: Tick,
    compression: &CompressionConfig,
    rng: &mut R,
) -> Vec<Frame> {
    ues.iter_mut()
        .enumerate()
        .map(|(ue_id, ue)| {
            let frame = Frame::new(ue_id, draw_frame_bits(compression, rng), now);
            ue.enqueue(frame.clone());
            frame
        })
        .collect()
}
