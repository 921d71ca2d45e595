use crate::env::mcs::McsTable;
use crate::{Error, Result};

/// Mean compressed frame size of the most aggressive profile, (8, 0).
pub const SMALLEST_FRAME_BYTES: f64 = 17_240.0;
/// Mean compressed frame size of the most conservative profile, (10, 10).
pub const LARGEST_FRAME_BYTES: f64 = 34_480.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionConfig {
    /// Quantization bits, one of 8, 9, 10.
    pub q: u8,
    /// Compression level, one of 0, 5, 10.
    pub c: u8,
    pub mean_frame_bytes: f64,
    /// Uniform half-width of the frame size, as a fraction of the mean.
    pub frame_size_jitter: f64,
}

impl CompressionConfig {
    /// Builds the profile for `(q, c)` with the mean frame size placed on a
    /// log-linear scale between the (8, 0) and (10, 10) anchors.
    pub fn profile(q: u8, c: u8) -> Result<Self> {
        if !matches!(q, 8..=10) || !matches!(c, 0 | 5 | 10) {
            return Err(Error::InvalidConfig(format!(
                "compression profile ({q}, {c}) not in q in {{8,9,10}}, c in {{0,5,10}}"
            )));
        }
        Ok(Self {
            q,
            c,
            mean_frame_bytes: profile_mean_bytes(q, c),
            frame_size_jitter: 0.05,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_frame_bytes.is_finite() && self.mean_frame_bytes >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "mean_frame_bytes must be non-negative, got {}",
                self.mean_frame_bytes
            )));
        }
        if !(0.0..1.0).contains(&self.frame_size_jitter) {
            return Err(Error::InvalidConfig(format!(
                "frame_size_jitter must be in [0, 1), got {}",
                self.frame_size_jitter
            )));
        }
        Ok(())
    }
}

impl Default for CompressionConfig {
    fn default() -> Self {
        Self::profile(8, 0).expect("(8, 0) is a valid profile")
    }
}

fn profile_mean_bytes(q: u8, c: u8) -> f64 {
    let position = (f64::from(q - 8) / 2.0 + f64::from(c) / 10.0) / 2.0;
    SMALLEST_FRAME_BYTES * (LARGEST_FRAME_BYTES / SMALLEST_FRAME_BYTES).powf(position)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    /// Network-wide mean SINR in dB.
    pub sinr_mean_db: f64,
    /// Per-slot AR(1) coefficient.
    pub ar_coefficient: f64,
    /// Standard deviation of the per-slot innovation, dB.
    pub noise_std_db: f64,
    /// Fixed per-UE mean offsets. When `None`, offsets are drawn at every
    /// reset from `Uniform(-offset_spread_db, offset_spread_db)`.
    pub per_ue_mean_offsets: Option<Vec<f64>>,
    pub offset_spread_db: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            sinr_mean_db: 15.0,
            ar_coefficient: 0.98,
            noise_std_db: 0.5,
            per_ue_mean_offsets: None,
            offset_spread_db: 5.0,
        }
    }
}

impl ChannelConfig {
    /// A channel frozen at `sinr_db` for every UE.
    pub fn constant(sinr_db: f64) -> Self {
        Self {
            sinr_mean_db: sinr_db,
            ar_coefficient: 0.0,
            noise_std_db: 0.0,
            per_ue_mean_offsets: None,
            offset_spread_db: 0.0,
        }
    }

    fn validate(&self, n_ues: usize) -> Result<()> {
        if !self.sinr_mean_db.is_finite() {
            return Err(Error::InvalidConfig("sinr_mean_db must be finite".into()));
        }
        if !(0.0..1.0).contains(&self.ar_coefficient) {
            return Err(Error::InvalidConfig(format!(
                "ar_coefficient must be in [0, 1), got {}",
                self.ar_coefficient
            )));
        }
        if !(self.noise_std_db >= 0.0 && self.noise_std_db.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise_std_db must be >= 0, got {}",
                self.noise_std_db
            )));
        }
        if !(self.offset_spread_db >= 0.0 && self.offset_spread_db.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "offset_spread_db must be >= 0, got {}",
                self.offset_spread_db
            )));
        }
        if let Some(offsets) = &self.per_ue_mean_offsets {
            if offsets.len() != n_ues {
                return Err(Error::InvalidConfig(format!(
                    "per_ue_mean_offsets has {} entries for {} UEs",
                    offsets.len(),
                    n_ues
                )));
            }
            if offsets.iter().any(|o| !o.is_finite()) {
                return Err(Error::InvalidConfig("per_ue_mean_offsets must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Fixed per-feature scales applied to observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub sinr_db: f64,
    pub buffer_bits: f64,
    pub symbols: f64,
    pub mcs_index: f64,
    pub latency_ms: f64,
    pub app_bytes: f64,
    /// Value reported for the symbols feature while a UE with queued data is
    /// in outage (already normalized).
    pub outage_symbols_feature: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            sinr_db: 30.0,
            buffer_bits: 1e6,
            symbols: 1e3,
            mcs_index: 15.0,
            latency_ms: 100.0,
            app_bytes: 1e5,
            outage_symbols_feature: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub n_ues: usize,
    pub symbols_per_slot: u32,
    /// Slot duration in seconds.
    pub slot_duration: f64,
    /// Application frame rate, frames per second.
    pub frame_rate: f64,
    pub latency_threshold_ms: f64,
    pub n_priority_levels: u32,
    pub compression: CompressionConfig,
    pub wired_delay_ms: f64,
    pub steps_per_episode: usize,
    pub channel: ChannelConfig,
    pub mcs: McsTable,
    pub normalization: Normalization,
    pub rng_seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            n_ues: 3,
            symbols_per_slot: 12,
            slot_duration: 0.125e-3,
            frame_rate: 30.0,
            latency_threshold_ms: 25.0,
            n_priority_levels: 3,
            compression: CompressionConfig::default(),
            wired_delay_ms: 10.0,
            steps_per_episode: 400,
            channel: ChannelConfig::default(),
            mcs: McsTable::default(),
            normalization: Normalization::default(),
            rng_seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_ues == 0 {
            return fail("n_ues must be >= 1".into());
        }
        if self.symbols_per_slot == 0 {
            return fail("symbols_per_slot must be >= 1".into());
        }
        if self.n_priority_levels == 0 {
            return fail("n_priority_levels must be >= 1".into());
        }
        if !(self.slot_duration > 0.0 && self.slot_duration.is_finite()) {
            return fail(format!("slot_duration must be > 0, got {}", self.slot_duration));
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return fail(format!("frame_rate must be > 0, got {}", self.frame_rate));
        }
        if self.slots_per_frame() < 1.0 {
            return fail("frame period must span at least one slot".into());
        }
        if !(self.latency_threshold_ms > 0.0 && self.latency_threshold_ms.is_finite()) {
            return fail(format!(
                "latency_threshold_ms must be > 0, got {}",
                self.latency_threshold_ms
            ));
        }
        if !(self.wired_delay_ms >= 0.0 && self.wired_delay_ms.is_finite()) {
            return fail(format!("wired_delay_ms must be >= 0, got {}", self.wired_delay_ms));
        }
        self.compression.validate()?;
        self.channel.validate(self.n_ues)?;
        self.mcs.validate()?;
        Ok(())
    }

    /// Frame period measured in slots; may be fractional.
    pub fn slots_per_frame(&self) -> f64 {
        1.0 / (self.frame_rate * self.slot_duration)
    }

    pub fn slot_ms(&self) -> f64 {
        self.slot_duration * 1e3
    }
}
