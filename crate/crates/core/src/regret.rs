//! Regret minimisation: explore-then-commit over a stream with two arms of
//! memory, and a full-memory UCB1 baseline. Regret is pseudo-regret,
//! computed from true means.

use std::collections::BTreeMap;
use std::time::Instant;

use thiserror::Error;

use crate::model::{ArmId, EmpiricalMean, Instance, RunOutcome};
use crate::rng::SeedSpec;
use crate::stream::{Capacity, StreamOrder, StreamSession};
use crate::Result;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegretError {
    #[error("horizon T={horizon} is shorter than the stream of {n} arms")]
    HorizonTooShort { horizon: u64, n: usize },
    #[error("kappa must be positive and finite, got {0}")]
    InvalidKappa(f64),
    #[error("explore-then-commit needs arm memory of at least 2")]
    InsufficientCapacity,
}

/// The sequence of pulled arms, run-length encoded.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RegretTrace {
    runs: Vec<(ArmId, u64)>,
    horizon: u64,
}

impl RegretTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, arm: ArmId, count: u64) {
        if count == 0 {
            return;
        }
        self.horizon += count;
        match self.runs.last_mut() {
            Some((last, c)) if *last == arm => *c += count,
            _ => self.runs.push((arm, count)),
        }
    }

    /// Number of pulls recorded.
    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn runs(&self) -> &[(ArmId, u64)] {
        &self.runs
    }

    pub fn concat(&self, other: &RegretTrace) -> RegretTrace {
        let mut out = self.clone();
        for &(arm, c) in &other.runs {
            out.push(arm, c);
        }
        out
    }

    /// Arm pulled at each step, expanded. Only sensible for short traces.
    pub fn expand(&self) -> Vec<ArmId> {
        self.runs
            .iter()
            .flat_map(|&(a, c)| std::iter::repeat_n(a, c as usize))
            .collect()
    }

    /// `(t, arm_t, R(t))` rows at a uniform stride so that at most
    /// `max_rows` rows are produced; the final step is always included.
    pub fn sampled_curve(&self, instance: &Instance, max_rows: usize) -> Result<Vec<CurvePoint>> {
        let max_rows = max_rows.max(1) as u64;
        let stride = self.horizon.div_ceil(max_rows).max(1);
        let best = instance.best_mean();
        let mut rows = Vec::new();
        let mut t = 0u64;
        let mut regret = 0.0;
        let mut next = stride.min(self.horizon);
        for &(arm, c) in &self.runs {
            let gap = best - instance.mean(arm)?;
            let end = t + c;
            while next <= end && next > t {
                rows.push(CurvePoint {
                    t: next,
                    arm,
                    cumulative_regret: regret + gap * (next - t) as f64,
                });
                if next == self.horizon {
                    break;
                }
                next = (next + stride).min(self.horizon);
            }
            regret += gap * c as f64;
            t = end;
        }
        Ok(rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: u64,
    pub arm: ArmId,
    pub cumulative_regret: f64,
}

/// `R(T) = Σ_t (μ* − μ_{i_t})`.
pub fn cumulative_regret(trace: &RegretTrace, instance: &Instance) -> Result<f64> {
    let best = instance.best_mean();
    let mut total = 0.0;
    for &(arm, c) in trace.runs() {
        total += (best - instance.mean(arm)?) * c as f64;
    }
    Ok(total)
}

/// Pulls per arm during exploration: `⌈κ·(T/n)^{2/3}·(log₂T)^{1/3}⌉`.
pub fn exploration_budget(n: usize, horizon: u64, kappa: f64) -> u64 {
    let t = horizon as f64;
    let e = kappa * (t / n as f64).powf(2.0 / 3.0) * t.log2().cbrt();
    (e.ceil() as u64).max(1)
}

/// A regret run: the pull sequence plus the usual outcome record.
#[derive(Debug, Clone)]
pub struct RegretRun {
    pub trace: RegretTrace,
    pub outcome: RunOutcome,
    pub regret: f64,
}

/// Explore each arriving arm `e` times, keep the empirically better of it
/// and the king, then commit to the king for the rest of the horizon.
///
/// If fewer than `e` steps remain when an arm arrives, exploration stops
/// there and the king is exploited; the trace always has length `T`.
pub fn run_uniform_exploration(
    session: &mut StreamSession<'_>,
    horizon: u64,
    kappa: f64,
) -> Result<RegretRun> {
    let started = Instant::now();
    let n = session.n();
    if horizon < n as u64 {
        return Err(RegretError::HorizonTooShort { horizon, n }.into());
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(RegretError::InvalidKappa(kappa).into());
    }
    if matches!(session.capacity(), Capacity::Bounded(m) if m < 2) {
        return Err(RegretError::InsufficientCapacity.into());
    }
    let e = exploration_budget(n, horizon, kappa);
    let mut trace = RegretTrace::new();
    let mut remaining = horizon;
    let mut king: Option<(ArmId, EmpiricalMean)> = None;
    let mut per_level = BTreeMap::new();

    while let Some(arm) = session.next_arm() {
        session.admit(arm)?;
        if remaining < e {
            match king {
                None => king = Some((arm, EmpiricalMean::ZERO)),
                Some(_) => session.discard(arm)?,
            }
            break;
        }
        let mean = session.pull(arm, e)?.empirical();
        trace.push(arm, e);
        remaining -= e;
        *per_level.entry(1).or_default() += e;
        king = match king {
            None => Some((arm, mean)),
            Some((k, km)) if mean > km => {
                session.discard(k)?;
                Some((arm, mean))
            }
            Some(kept) => {
                session.discard(arm)?;
                Some(kept)
            }
        };
    }
    let (king, _) = king.expect("T ≥ n ≥ 1 leaves a king");
    if remaining > 0 {
        session.pull(king, remaining)?;
        trace.push(king, remaining);
        *per_level.entry(2).or_default() += remaining;
    }
    finish(session, trace, king, per_level, started)
}

fn finish(
    session: &StreamSession<'_>,
    trace: RegretTrace,
    arm: ArmId,
    per_level_pulls: BTreeMap<usize, u64>,
    started: Instant,
) -> Result<RegretRun> {
    let instance = session.instance();
    let regret = cumulative_regret(&trace, instance)?;
    Ok(RegretRun {
        outcome: RunOutcome {
            returned_arm: arm,
            true_gap: instance.gap(arm)?,
            total_pulls: session.total_pulls(),
            peak_residency: session.peak_residency(),
            per_level_pulls,
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        },
        trace,
        regret,
    })
}

/// UCB1 with every arm in memory: pull each arm once, then
/// `argmax μ̂_i + √(2 ln t / n_i)` with `t` the pulls so far; ties go to the
/// lowest arm index. The returned arm is the most-pulled one.
pub fn run_ucb1(instance: &Instance, horizon: u64, seed: SeedSpec) -> Result<RegretRun> {
    let started = Instant::now();
    let n = instance.n();
    if horizon < n as u64 {
        return Err(RegretError::HorizonTooShort { horizon, n }.into());
    }
    let mut session =
        StreamSession::begin(instance, StreamOrder::Natural, Capacity::Unlimited, seed)?;
    let mut sums = vec![0u64; n];
    let mut pulls = vec![0u64; n];
    let mut trace = RegretTrace::new();
    while let Some(arm) = session.next_arm() {
        session.admit(arm)?;
        sums[arm.0] += session.pull(arm, 1)?.sum;
        pulls[arm.0] = 1;
        trace.push(arm, 1);
    }
    for t in n as u64..horizon {
        let log_t = 2.0 * (t as f64).ln();
        let mut best = 0;
        let mut best_index = f64::NEG_INFINITY;
        for i in 0..n {
            let nf = pulls[i] as f64;
            let index = sums[i] as f64 / nf + (log_t / nf).sqrt();
            if index > best_index {
                best_index = index;
                best = i;
            }
        }
        sums[best] += session.pull(ArmId(best), 1)?.sum;
        pulls[best] += 1;
        trace.push(ArmId(best), 1);
    }
    let most = (0..n)
        .max_by_key(|&i| (pulls[i], std::cmp::Reverse(i)))
        .unwrap_or(0);
    let per_level = BTreeMap::from([(1, horizon)]);
    finish(&session, trace, ArmId(most), per_level, started)
}
