//! Slot-level uplink environment with one decision step per application
//! frame period.
//!
//! At each step every UE generates one frame, then every slot of the period
//! runs: channel update, link adaptation, demand computation, symbol
//! allocation under the held priorities, and FIFO buffer drain. Latency is
//! measured from frame generation to the end of the slot that carries its
//! last bit, plus the fixed wired-segment delay.

pub mod channel;
pub mod config;
pub mod mcs;
pub mod traffic;
pub mod ue;

use rand_chacha::ChaCha8Rng;

pub use config::{ChannelConfig, CompressionConfig, EnvConfig, Normalization};
pub use mcs::{LinkRate, McsEntry, McsTable};
pub use traffic::{Frame, Tick};
pub use ue::{drain_buffer, symbols_required, StepStats, UeState};

use crate::rng;
use crate::sched::{AllocationRequest, Scheduler, SchedulerKind};
use crate::{Error, Result};

pub const OBSERVATION_DIM: usize = 6;

/// Normalized per-UE measurements over the last decision step:
/// `[avg_sinr, buffer_bits, symbols_required, avg_mcs_index, avg_latency_ms,
/// app_bytes_tx]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation(pub [f64; OBSERVATION_DIM]);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
    pub fn avg_sinr(&self) -> f64 {
        self.0[0]
    }
    pub fn buffer_bits(&self) -> f64 {
        self.0[1]
    }
    pub fn symbols_required(&self) -> f64 {
        self.0[2]
    }
    pub fn avg_mcs_index(&self) -> f64 {
        self.0[3]
    }
    pub fn avg_latency_ms(&self) -> f64 {
        self.0[4]
    }
    pub fn app_bytes_tx(&self) -> f64 {
        self.0[5]
    }
}

/// Per-step reward: 1 when the latency meets the threshold, otherwise a
/// penalty of one unit per 100 ms of violation. Both arguments in ms.
pub fn reward(latency_ms: f64, tau_ms: f64) -> f64 {
    if latency_ms <= tau_ms {
        1.0
    } else {
        -(latency_ms - tau_ms) / 100.0
    }
}

/// Builds the observation from the UE's step statistics and clears them.
///
/// `step_latency_ms` is the latency statistic of the step (see
/// [`Env::step`]); `None` reports zero.
pub fn observe(ue: &mut UeState, norm: &Normalization, step_latency_ms: Option<f64>) -> Observation {
    let stats = std::mem::take(&mut ue.stats);
    let (avg_sinr, avg_mcs) = if stats.slot_samples > 0 {
        let n = stats.slot_samples as f64;
        (stats.sinr_sum_db / n, stats.mcs_sum / n)
    } else {
        (ue.sinr_db, ue.mcs_index as f64)
    };
    let demand = ue.demand();
    let symbols_feature = if demand == crate::sched::INFINITE_DEMAND {
        norm.outage_symbols_feature
    } else {
        f64::from(demand) / norm.symbols
    };
    Observation([
        avg_sinr / norm.sinr_db,
        ue.buffer_bits() as f64 / norm.buffer_bits,
        symbols_feature,
        avg_mcs / norm.mcs_index,
        step_latency_ms.unwrap_or(0.0) / norm.latency_ms,
        stats.bits_drained as f64 / 8.0 / norm.app_bytes,
    ])
}

/// A frame completed during a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeliveredFrame {
    pub ue_id: usize,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    /// Latency statistic behind each UE's reward; `None` when the UE had
    /// nothing delivered and nothing queued.
    pub step_latency_ms: Vec<Option<f64>>,
    pub delivered: Vec<DeliveredFrame>,
    /// Symbols granted per UE over the step.
    pub allocated_symbols: Vec<u64>,
    pub slots: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observations: Vec<Observation>,
    pub rewards: Vec<f64>,
    pub info: StepInfo,
}

/// Episode-cumulative bit counts for one UE.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BitTotals {
    pub generated: u64,
    pub drained: u64,
}

pub struct Env {
    config: EnvConfig,
    scheduler: Scheduler,
    ues: Vec<UeState>,
    totals: Vec<BitTotals>,
    now: Tick,
    step_index: usize,
    traffic_rng: ChaCha8Rng,
    channel_rng: ChaCha8Rng,
}

impl Env {
    pub fn new(config: EnvConfig, scheduler: SchedulerKind) -> Result<Self> {
        config.validate()?;
        let seed = config.rng_seed;
        let mut env = Self {
            scheduler: Scheduler::new(scheduler),
            ues: Vec::new(),
            totals: Vec::new(),
            now: 0,
            step_index: 0,
            traffic_rng: rng::stream(seed, &[1]),
            channel_rng: rng::stream(seed, &[2]),
            config,
        };
        env.reset(seed);
        Ok(env)
    }

    /// Restarts the episode from `seed`: new channel offsets, empty buffers,
    /// clock at zero. Returns the initial observations.
    pub fn reset(&mut self, seed: u64) -> Vec<Observation> {
        self.config.rng_seed = seed;
        self.traffic_rng = rng::stream(seed, &[1]);
        self.channel_rng = rng::stream(seed, &[2]);
        self.scheduler = Scheduler::new(self.scheduler.kind());
        let offsets = channel::draw_offsets(&self.config.channel, self.config.n_ues, &mut self.channel_rng);
        self.ues = offsets
            .iter()
            .map(|off| {
                let mut ue = UeState::new(self.config.channel.sinr_mean_db + off);
                let rate = self.config.mcs.rate_for(ue.sinr_db);
                ue.mcs_index = rate.mcs_index;
                ue.bits_per_symbol = rate.bits_per_symbol;
                ue
            })
            .collect();
        self.totals = vec![BitTotals::default(); self.config.n_ues];
        self.now = 0;
        self.step_index = 0;
        let norm = &self.config.normalization;
        self.ues.iter_mut().map(|ue| observe(ue, norm, None)).collect()
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn ues(&self) -> &[UeState] {
        &self.ues
    }

    pub fn totals(&self) -> &[BitTotals] {
        &self.totals
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn is_done(&self) -> bool {
        self.step_index >= self.config.steps_per_episode
    }

    /// First slot of decision step `k`. Frame periods that are not a whole
    /// number of slots start at the nearest slot boundary.
    pub fn step_start(&self, k: usize) -> Tick {
        (k as f64 * self.config.slots_per_frame()).round() as Tick
    }

    fn latency_ms(&self, frame: &Frame) -> f64 {
        let air = frame.air_slots().expect("frame delivered") as f64 * self.config.slot_ms();
        air + self.config.wired_delay_ms
    }

    /// Lower bound on the eventual latency of every frame still queued.
    pub fn pending_latencies(&self) -> Vec<DeliveredFrame> {
        let slot_ms = self.config.slot_ms();
        self.ues
            .iter()
            .enumerate()
            .flat_map(|(ue_id, ue)| {
                ue.buffer.iter().map(move |f| DeliveredFrame {
                    ue_id,
                    latency_ms: (self.now - f.generated_at) as f64 * slot_ms
                        + self.config.wired_delay_ms,
                })
            })
            .collect()
    }

    fn validate_actions(&self, actions: &[u32]) -> Result<()> {
        if actions.len() != self.config.n_ues {
            return Err(Error::ActionCount {
                expected: self.config.n_ues,
                got: actions.len(),
            });
        }
        let max = self.config.n_priority_levels;
        match actions.iter().position(|&k| k == 0 || k > max) {
            Some(ue) => Err(Error::InvalidAction {
                ue,
                priority: actions[ue],
                max,
            }),
            None => Ok(()),
        }
    }

    /// Advances one frame period holding `actions` (priority levels in
    /// `1..=K`) fixed for every slot.
    ///
    /// Each UE's reward uses the mean latency of the frames it completed in
    /// this step; with none completed but data queued, the head-of-line
    /// frame's age plus the wired delay stands in as a lower bound.
    pub fn step(&mut self, actions: &[u32]) -> Result<StepOutcome> {
        self.validate_actions(actions)?;
        let n = self.config.n_ues;
        let start = self.now;
        let end = self.step_start(self.step_index + 1).max(start + 1);

        let mut delivered_frames = Vec::new();
        let new_frames = traffic::generate_frames(
            &mut self.ues,
            start,
            &self.config.compression,
            &mut self.traffic_rng,
        );
        for f in &new_frames {
            self.totals[f.ue_id].generated += f.size_bits;
        }
        for ue in &mut self.ues {
            delivered_frames.extend(ue.flush_empty(start));
        }

        let mut request = AllocationRequest::new(actions.to_vec(), vec![0; n], self.config.symbols_per_slot);
        let mut allocated = vec![0u64; n];
        let mut grants = vec![0u32; n];
        for slot in start..end {
            for (i, ue) in self.ues.iter_mut().enumerate() {
                ue.sinr_db = channel::sinr_step(
                    ue.sinr_db,
                    ue.mean_sinr_db,
                    &self.config.channel,
                    &mut self.channel_rng,
                );
                let rate = self.config.mcs.rate_for(ue.sinr_db);
                ue.mcs_index = rate.mcs_index;
                ue.bits_per_symbol = rate.bits_per_symbol;
                ue.stats.sinr_sum_db += ue.sinr_db;
                ue.stats.mcs_sum += rate.mcs_index as f64;
                ue.stats.slot_samples += 1;
                request.demands[i] = ue.demand();
            }
            self.scheduler.allocate_into(&request, &mut grants)?;
            for (i, ue) in self.ues.iter_mut().enumerate() {
                let granted = grants[i];
                if granted == 0 {
                    continue;
                }
                allocated[i] += u64::from(granted);
                let before = ue.stats.bits_drained;
                let bps = ue.bits_per_symbol;
                delivered_frames.extend(drain_buffer(ue, granted, bps, slot + 1));
                self.totals[i].drained += ue.stats.bits_drained - before;
            }
        }
        self.now = end;
        self.step_index += 1;

        let mut delivered = Vec::with_capacity(delivered_frames.len());
        for f in &delivered_frames {
            let latency_ms = self.latency_ms(f);
            let ue = &mut self.ues[f.ue_id];
            ue.stats.latency_sum_ms += latency_ms;
            ue.stats.delivered_frames += 1;
            delivered.push(DeliveredFrame {
                ue_id: f.ue_id,
                latency_ms,
            });
        }

        let slot_ms = self.config.slot_ms();
        let wired = self.config.wired_delay_ms;
        let tau = self.config.latency_threshold_ms;
        let now = self.now;
        let step_latency_ms: Vec<Option<f64>> = self
            .ues
            .iter()
            .map(|ue| {
                ue.stats.mean_latency_ms().or_else(|| {
                    ue.head_of_line()
                        .map(|hol| (now - hol.generated_at) as f64 * slot_ms + wired)
                })
            })
            .collect();
        let rewards = step_latency_ms
            .iter()
            .map(|l| l.map_or(1.0, |l| reward(l, tau)))
            .collect();
        let norm = &self.config.normalization;
        let observations = self
            .ues
            .iter_mut()
            .zip(&step_latency_ms)
            .map(|(ue, &l)| observe(ue, norm, l))
            .collect();

        Ok(StepOutcome {
            observations,
            rewards,
            info: StepInfo {
                step_latency_ms,
                delivered,
                allocated_symbols: allocated,
                slots: end - start,
            },
        })
    }
}
