//! The streaming model: arms arrive one at a time, at most `m` may be held
//! in memory, only held arms may be pulled, and a discarded arm is gone for
//! good.
//!
//! [`StreamSession`] is the only way algorithms in this crate touch rewards.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::model::{ArmId, EmpiricalMean, Instance};
use crate::rng::{rng_from_seed, SeedSpec, StreamTag, TrialRng};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StreamError {
    #[error("arm memory must hold at least one arm")]
    ZeroCapacity,
    #[error("admitting arm {arm} would exceed arm memory {capacity}")]
    AdmitOverCapacity { arm: usize, capacity: usize },
    #[error("arm {0} was discarded and cannot be read again")]
    ReadmitAfterDiscard(usize),
    #[error("arm {0} is already in memory")]
    AlreadyResident(usize),
    #[error("arm {0} has not arrived yet")]
    NotDelivered(usize),
    #[error("arm {0} is not in memory and cannot be discarded")]
    DiscardNonResident(usize),
    #[error("arm {0} is not in memory and cannot be pulled")]
    PullNonResident(usize),
    #[error("a pull needs a positive count")]
    EmptyPull,
    #[error("arm {arm} out of range for an instance with {n} arms")]
    ArmOutOfRange { arm: usize, n: usize },
}

/// Arrival order of the arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StreamOrder {
    #[default]
    Natural,
    /// Uniform permutation drawn by Fisher–Yates from a generator seeded
    /// with the given value.
    RandomPermutation(u64),
}

impl StreamOrder {
    /// Shuffled order seeded from the trial's `Order` sub-stream.
    pub fn random_for(seed: &SeedSpec) -> Self {
        StreamOrder::RandomPermutation(seed.derive(StreamTag::Order))
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            StreamOrder::Natural => None,
            StreamOrder::RandomPermutation(s) => Some(*s),
        }
    }

    /// `σ` as a vector: position `k` holds the arm arriving `k`-th.
    pub fn permutation(&self, n: usize) -> Vec<ArmId> {
        let mut perm: Vec<ArmId> = (0..n).map(ArmId).collect();
        if let StreamOrder::RandomPermutation(seed) = *self {
            let mut rng = rng_from_seed(seed);
            // Durstenfeld's variant, swapping from the back.
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                perm.swap(i, j);
            }
        }
        perm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capacity {
    Bounded(usize),
    Unlimited,
}

impl Capacity {
    fn admits(self, resident: usize) -> bool {
        match self {
            Capacity::Bounded(m) => resident < m,
            Capacity::Unlimited => true,
        }
    }

    pub fn limit(self) -> Option<usize> {
        match self {
            Capacity::Bounded(m) => Some(m),
            Capacity::Unlimited => None,
        }
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capacity::Bounded(m) => write!(f, "{m}"),
            Capacity::Unlimited => f.write_str("unlimited"),
        }
    }
}

/// Result of pulling one arm `count` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PullSummary {
    pub sum: u64,
    pub count: u64,
}

impl PullSummary {
    pub fn mean(&self) -> f64 {
        self.sum as f64 / self.count as f64
    }

    pub fn empirical(&self) -> EmpiricalMean {
        EmpiricalMean::new(self.sum, self.count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ArmState {
    Pending,
    Delivered,
    Resident,
    Discarded,
}

/// One line of the optional run trace.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    Arrive(ArmId),
    Admit(ArmId),
    Discard(ArmId),
    Pull {
        arm: ArmId,
        count: u64,
        sum: u64,
    },
    /// An arm moved into `level` (level-based algorithms).
    Promote {
        arm: ArmId,
        level: usize,
    },
    /// A new king took over.
    Crowned(ArmId),
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Arrive(a) => write!(f, "arrive {a}"),
            TraceEvent::Admit(a) => write!(f, "admit {a}"),
            TraceEvent::Discard(a) => write!(f, "discard {a}"),
            TraceEvent::Pull { arm, count, sum } => write!(f, "pull {arm} x{count} sum={sum}"),
            TraceEvent::Promote { arm, level } => write!(f, "promote {arm} -> level {level}"),
            TraceEvent::Crowned(a) => write!(f, "king {a}"),
        }
    }
}

/// Counters exported with each run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionAudit {
    pub consumed: usize,
    pub total_pulls: u64,
    pub peak_residency: usize,
}

/// A single pass over the arms of one instance under an arm-memory bound.
pub struct StreamSession<'a> {
    instance: &'a Instance,
    order: StreamOrder,
    arrival: Vec<ArmId>,
    capacity: Capacity,
    state: Vec<ArmState>,
    resident: usize,
    consumed: usize,
    ledger: Vec<u64>,
    total_pulls: u64,
    peak: usize,
    rng: TrialRng,
    trace: Option<Vec<TraceEvent>>,
}

impl<'a> StreamSession<'a> {
    /// Rewards come from the `Rewards` sub-stream of `seed`.
    pub fn begin(
        instance: &'a Instance,
        order: StreamOrder,
        capacity: Capacity,
        seed: SeedSpec,
    ) -> Result<Self, StreamError> {
        Self::with_reward_seed(instance, order, capacity, seed.derive(StreamTag::Rewards))
    }

    pub fn with_reward_seed(
        instance: &'a Instance,
        order: StreamOrder,
        capacity: Capacity,
        reward_seed: u64,
    ) -> Result<Self, StreamError> {
        if capacity == Capacity::Bounded(0) {
            return Err(StreamError::ZeroCapacity);
        }
        let n = instance.n();
        Ok(StreamSession {
            instance,
            order,
            arrival: order.permutation(n),
            capacity,
            state: vec![ArmState::Pending; n],
            resident: 0,
            consumed: 0,
            ledger: vec![0; n],
            total_pulls: 0,
            peak: 0,
            rng: rng_from_seed(reward_seed),
            trace: None,
        })
    }

    /// Record every event from now on.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> Option<&[TraceEvent]> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Option<Vec<TraceEvent>> {
        self.trace.take()
    }

    pub fn trace_text(&self) -> String {
        self.trace
            .iter()
            .flatten()
            .map(|e| format!("{e}\n"))
            .collect()
    }

    /// Algorithm-level annotation; dropped unless tracing is on.
    pub fn note(&mut self, event: TraceEvent) {
        if let Some(t) = &mut self.trace {
            t.push(event);
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn n(&self) -> usize {
        self.instance.n()
    }

    pub fn order(&self) -> StreamOrder {
        self.order
    }

    pub fn capacity(&self) -> Capacity {
        self.capacity
    }

    /// Next arm in arrival order, or `None` at end of stream. The arm is not
    /// resident until admitted.
    pub fn next_arm(&mut self) -> Option<ArmId> {
        let arm = *self.arrival.get(self.consumed)?;
        self.consumed += 1;
        self.state[arm.0] = ArmState::Delivered;
        self.note(TraceEvent::Arrive(arm));
        Some(arm)
    }

    pub fn admit(&mut self, arm: ArmId) -> Result<(), StreamError> {
        match self.state_of(arm)? {
            ArmState::Pending => return Err(StreamError::NotDelivered(arm.0)),
            ArmState::Resident => return Err(StreamError::AlreadyResident(arm.0)),
            ArmState::Discarded => return Err(StreamError::ReadmitAfterDiscard(arm.0)),
            ArmState::Delivered => {}
        }
        if !self.capacity.admits(self.resident) {
            return Err(StreamError::AdmitOverCapacity {
                arm: arm.0,
                capacity: self.capacity.limit().unwrap_or(usize::MAX),
            });
        }
        self.state[arm.0] = ArmState::Resident;
        self.resident += 1;
        self.peak = self.peak.max(self.resident);
        self.note(TraceEvent::Admit(arm));
        Ok(())
    }

    pub fn discard(&mut self, arm: ArmId) -> Result<(), StreamError> {
        if self.state_of(arm)? != ArmState::Resident {
            return Err(StreamError::DiscardNonResident(arm.0));
        }
        self.state[arm.0] = ArmState::Discarded;
        self.resident -= 1;
        self.note(TraceEvent::Discard(arm));
        Ok(())
    }

    /// Pull a resident arm `count` times.
    pub fn pull(&mut self, arm: ArmId, count: u64) -> Result<PullSummary, StreamError> {
        if self.state_of(arm)? != ArmState::Resident {
            return Err(StreamError::PullNonResident(arm.0));
        }
        if count == 0 {
            return Err(StreamError::EmptyPull);
        }
        let sum = self.instance.reward_sum(arm, count, &mut self.rng);
        self.ledger[arm.0] += count;
        self.total_pulls += count;
        self.note(TraceEvent::Pull { arm, count, sum });
        Ok(PullSummary { sum, count })
    }

    pub fn is_resident(&self, arm: ArmId) -> bool {
        self.state.get(arm.0) == Some(&ArmState::Resident)
    }

    pub fn resident_count(&self) -> usize {
        self.resident
    }

    pub fn peak_residency(&self) -> usize {
        self.peak
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    pub fn total_pulls(&self) -> u64 {
        self.total_pulls
    }

    /// Per-arm pull counts, indexed by arm.
    pub fn ledger(&self) -> &[u64] {
        &self.ledger
    }

    pub fn ledger_sum(&self) -> u64 {
        self.ledger.iter().sum()
    }

    pub fn audit(&self) -> SessionAudit {
        SessionAudit {
            consumed: self.consumed,
            total_pulls: self.total_pulls,
            peak_residency: self.peak,
        }
    }

    fn state_of(&self, arm: ArmId) -> Result<ArmState, StreamError> {
        self.state
            .get(arm.0)
            .copied()
            .ok_or(StreamError::ArmOutOfRange {
                arm: arm.0,
                n: self.state.len(),
            })
    }
}
