//! Per-slot OFDM-symbol allocators.
//!
//! Every allocator takes the per-UE priority levels, the number of symbols
//! each UE can actually use this slot (its demand) and the slot budget `U`,
//! and returns how many symbols each UE gets. Demands may be
//! [`INFINITE_DEMAND`], which marks a UE whose link is in outage (zero rate)
//! or, in isolated tests, one that is simply never satisfied.

use crate::{Error, Result};

/// Sentinel demand for a UE with buffered data but zero rate.
pub const INFINITE_DEMAND: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationRequest {
    /// Priority level `k_i` per UE, each in `1..=K`.
    pub priorities: Vec<u32>,
    /// Symbols required per UE this slot.
    pub demands: Vec<u32>,
    /// Symbols available in the slot.
    pub total_symbols: u32,
}

impl AllocationRequest {
    pub fn new(priorities: Vec<u32>, demands: Vec<u32>, total_symbols: u32) -> Self {
        Self {
            priorities,
            demands,
            total_symbols,
        }
    }

    pub fn len(&self) -> usize {
        self.priorities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.priorities.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.priorities.len() != self.demands.len() {
            return Err(Error::RequestShape {
                priorities: self.priorities.len(),
                demands: self.demands.len(),
            });
        }
        if self.priorities.is_empty() {
            return Err(Error::EmptyRequest);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub symbols: Vec<u32>,
}

impl Allocation {
    pub fn total(&self) -> u32 {
        self.symbols.iter().sum()
    }
}

/// Rotation state of the round-robin benchmark.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RrState {
    pub next_ue_pointer: usize,
}

/// Allocation strategy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchedulerKind {
    Proportional,
    Greedy,
    RoundRobin,
}

impl SchedulerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::Proportional => "pa",
            SchedulerKind::Greedy => "ga",
            SchedulerKind::RoundRobin => "rr",
        }
    }
}

impl std::str::FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pa" | "proportional" => Ok(SchedulerKind::Proportional),
            "ga" | "greedy" => Ok(SchedulerKind::Greedy),
            "rr" | "round-robin" | "roundrobin" => Ok(SchedulerKind::RoundRobin),
            other => Err(Error::InvalidConfig(format!(
                "unknown scheduler '{other}' (expected pa, ga or rr)"
            ))),
        }
    }
}

impl std::fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A scheduler instance: the strategy plus whatever state it carries between
/// slots (only round-robin has any).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheduler {
    kind: SchedulerKind,
    rr: RrState,
}

impl Scheduler {
    pub fn new(kind: SchedulerKind) -> Self {
        Self {
            kind,
            rr: RrState::default(),
        }
    }

    pub fn kind(&self) -> SchedulerKind {
        self.kind
    }

    pub fn allocate(&mut self, request: &AllocationRequest) -> Result<Allocation> {
        let mut symbols = vec![0; request.len()];
        self.allocate_into(request, &mut symbols)?;
        Ok(Allocation { symbols })
    }

    /// Allocates into `symbols`, which must hold one entry per UE.
    pub fn allocate_into(&mut self, request: &AllocationRequest, symbols: &mut [u32]) -> Result<()> {
        match self.kind {
            SchedulerKind::Proportional => proportional_allocate_into(request, symbols),
            SchedulerKind::Greedy => greedy_allocate_into(request, symbols),
            SchedulerKind::RoundRobin => round_robin_allocate_into(request, &mut self.rr, symbols),
        }
    }
}

/// Calls `visit` on every UE accepted by `include`, in descending priority
/// and ascending index among equal priorities.
fn visit_by_priority(priorities: &[u32], include: impl Fn(usize) -> bool, mut visit: impl FnMut(usize)) {
    let highest_below = |bound: Option<u32>| {
        (0..priorities.len())
            .filter(|&i| include(i) && bound.is_none_or(|b| priorities[i] < b))
            .map(|i| priorities[i])
            .max()
    };
    let mut level = highest_below(None);
    while let Some(k) = level {
        for i in 0..priorities.len() {
            if priorities[i] == k && include(i) {
                visit(i);
            }
        }
        level = highest_below(Some(k));
    }
}

fn check_output(request: &AllocationRequest, out: &[u32]) -> Result<()> {
    request.validate()?;
    if out.len() != request.len() {
        return Err(Error::Shape(format!(
            "allocation buffer holds {} UEs, request has {}",
            out.len(),
            request.len()
        )));
    }
    Ok(())
}

/// Proportional allocation: each UE first gets `floor(U k_i / sum k)` symbols
/// capped at its demand; the leftover is then handed out one UE at a time in
/// descending priority (ascending index on ties), each UE taking as much of
/// its unmet demand as remains. UEs in outage (infinite demand) are served
/// last in the leftover pass so that finite demands are filled first.
pub fn proportional_allocate(request: &AllocationRequest) -> Result<Allocation> {
    let mut symbols = vec![0; request.len()];
    proportional_allocate_into(request, &mut symbols)?;
    Ok(Allocation { symbols })
}

/// [`proportional_allocate`] writing into a caller-provided buffer.
pub fn proportional_allocate_into(request: &AllocationRequest, symbols: &mut [u32]) -> Result<()> {
    check_output(request, symbols)?;
    let u = u64::from(request.total_symbols);
    let sum: u64 = request.priorities.iter().map(|&k| u64::from(k)).sum();
    if sum == 0 {
        return Err(Error::ZeroPrioritySum);
    }
    for ((s, &k), &d) in symbols.iter_mut().zip(&request.priorities).zip(&request.demands) {
        *s = ((u * u64::from(k) / sum) as u32).min(d);
    }
    let mut remaining = request.total_symbols - symbols.iter().sum::<u32>();

    let finite = |i: usize| request.demands[i] != INFINITE_DEMAND;
    for outage in [false, true] {
        if remaining == 0 {
            break;
        }
        visit_by_priority(&request.priorities, |i| finite(i) != outage, |i| {
            let grant = remaining.min(request.demands[i] - symbols[i]);
            symbols[i] += grant;
            remaining -= grant;
        });
    }
    Ok(())
}

/// Greedy allocation: UEs in descending priority (ascending index on ties)
/// each take as much as they can use until the slot is exhausted.
pub fn greedy_allocate(request: &AllocationRequest) -> Result<Allocation> {
    let mut symbols = vec![0; request.len()];
    greedy_allocate_into(request, &mut symbols)?;
    Ok(Allocation { symbols })
}

/// [`greedy_allocate`] writing into a caller-provided buffer.
pub fn greedy_allocate_into(request: &AllocationRequest, symbols: &mut [u32]) -> Result<()> {
    check_output(request, symbols)?;
    let mut remaining = request.total_symbols;
    visit_by_priority(&request.priorities, |_| true, |i| {
        let grant = remaining.min(request.demands[i]);
        symbols[i] = grant;
        remaining -= grant;
    });
    Ok(())
}

/// Round-robin benchmark, blind to priorities.
///
/// Each UE gets `floor(U / N)`; the `U mod N` extra symbols go one each to
/// the UEs starting at the rotation pointer. Symbols freed by demand caps are
/// dealt out one at a time continuing the same rotation. The pointer then
/// advances by `U mod N`.
pub fn round_robin_allocate(request: &AllocationRequest, state: &mut RrState) -> Result<Allocation> {
    let mut symbols = vec![0; request.len()];
    round_robin_allocate_into(request, state, &mut symbols)?;
    Ok(Allocation { symbols })
}

/// [`round_robin_allocate`] writing into a caller-provided buffer.
pub fn round_robin_allocate_into(request: &AllocationRequest, state: &mut RrState, symbols: &mut [u32]) -> Result<()> {
    check_output(request, symbols)?;
    let n = request.len();
    let u = request.total_symbols as usize;
    let start = state.next_ue_pointer % n;
    let base = u / n;
    let extra = u % n;

    for (i, s) in symbols.iter_mut().enumerate() {
        let offset = (i + n - start) % n;
        let share = base + usize::from(offset < extra);
        *s = (share as u32).min(request.demands[i]);
    }
    let mut remaining = request.total_symbols - symbols.iter().sum::<u32>();

    let cursor = (start + extra) % n;
    while remaining > 0 {
        let before = remaining;
        for i in (0..n).map(|step| (cursor + step) % n) {
            if remaining == 0 {
                break;
            }
            if symbols[i] < request.demands[i] {
                symbols[i] += 1;
                remaining -= 1;
            }
        }
        if remaining == before {
            break;
        }
    }

    state.next_ue_pointer = (start + extra) % n;
    Ok(())
}
