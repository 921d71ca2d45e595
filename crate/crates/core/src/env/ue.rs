//! Per-UE transmit buffer, link state and decision-step statistics.

use std::collections::VecDeque;

use crate::env::traffic::{Frame, Tick};
use crate::sched::INFINITE_DEMAND;

/// Running sums over the current decision step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    pub sinr_sum_db: f64,
    pub mcs_sum: f64,
    pub slot_samples: u64,
    pub latency_sum_ms: f64,
    pub delivered_frames: u64,
    pub bits_drained: u64,
}

impl StepStats {
    pub fn mean_latency_ms(&self) -> Option<f64> {
        (self.delivered_frames > 0).then(|| self.latency_sum_ms / self.delivered_frames as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeState {
    /// Queued frames, oldest first.
    pub buffer: VecDeque<Frame>,
    pub sinr_db: f64,
    pub mcs_index: usize,
    pub bits_per_symbol: u64,
    /// This episode's mean SINR for the UE, dB.
    pub mean_sinr_db: f64,
    pub stats: StepStats,
    buffered_bits: u64,
}

impl UeState {
    pub fn new(mean_sinr_db: f64) -> Self {
        Self {
            buffer: VecDeque::new(),
            sinr_db: mean_sinr_db,
            mcs_index: 0,
            bits_per_symbol: 0,
            mean_sinr_db,
            stats: StepStats::default(),
            buffered_bits: 0,
        }
    }

    pub fn buffer_bits(&self) -> u64 {
        self.buffered_bits
    }

    /// Appends a frame at the tail; frames must arrive in generation order.
    pub fn enqueue(&mut self, frame: Frame) {
        debug_assert!(self
            .buffer
            .back()
            .is_none_or(|last| last.generated_at <= frame.generated_at));
        self.buffered_bits += frame.remaining_bits;
        self.buffer.push_back(frame);
    }

    /// Removes the leading frames that carry no bits (zero-size payloads),
    /// delivering them at `now`.
    pub fn flush_empty(&mut self, now: Tick) -> Vec<Frame> {
        let mut out = Vec::new();
        while self.buffer.front().is_some_and(|f| f.remaining_bits == 0) {
            let mut f = self.buffer.pop_front().expect("front exists");
            f.delivered_at = Some(now);
            out.push(f);
        }
        out
    }

    pub fn demand(&self) -> u32 {
        symbols_required(self.buffered_bits, self.bits_per_symbol)
    }

    pub fn head_of_line(&self) -> Option<&Frame> {
        self.buffer.front()
    }
}

/// Symbols needed to empty `buffer_bits` at `bits_per_symbol`.
///
/// Returns [`INFINITE_DEMAND`] when there is data but the link is in outage.
pub fn symbols_required(buffer_bits: u64, bits_per_symbol: u64) -> u32 {
    if buffer_bits == 0 {
        return 0;
    }
    if bits_per_symbol == 0 {
        return INFINITE_DEMAND;
    }
    buffer_bits
        .div_ceil(bits_per_symbol)
        .min(u64::from(INFINITE_DEMAND - 1)) as u32
}

/// Transmits `allocated_symbols * bits_per_symbol` bits from the head of the
/// buffer. Frames that complete are stamped with `slot_end` and returned.
pub fn drain_buffer(
    ue: &mut UeState,
    allocated_symbols: u32,
    bits_per_symbol: u64,
    slot_end: Tick,
) -> Vec<Frame> {
    let mut budget = u64::from(allocated_symbols) * bits_per_symbol;
    let mut delivered = Vec::new();
    while budget > 0 {
        let Some(head) = ue.buffer.front_mut() else {
            break;
        };
        let sent = head.remaining_bits.min(budget);
        head.remaining_bits -= sent;
        budget -= sent;
        ue.buffered_bits -= sent;
        ue.stats.bits_drained += sent;
        if head.remaining_bits == 0 {
            let mut frame = ue.buffer.pop_front().expect("head exists");
            frame.delivered_at = Some(slot_end);
            delivered.push(frame);
        }
    }
    delivered
}
