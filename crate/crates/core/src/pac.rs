//! Best-arm identification over a stream.
//!
//! - [`run_r_round`]: r-round selective promotion against stored level means.
//! - [`run_king_budget`]: a single king defends itself with a pull budget and
//!   an offset in its favour.
//! - [`run_aggressive_promotion`] and [`run_king_no_offset`]: the two
//!   variants that resample the incumbent or drop the offset. Both are kept
//!   because their failure modes are what the counterexample streams probe.

use std::collections::BTreeMap;
use std::time::Instant;

use thiserror::Error;

use crate::model::{ArmId, EmpiricalMean, RunOutcome};
use crate::schedule::{AssadiSchedule, ChallengeSchedule, LevelSchedule};
use crate::stream::{StreamSession, TraceEvent};
use crate::Result;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PacError {
    #[error("the session has already been used")]
    SessionNotFresh,
    #[error("schedule built for n={schedule} but the stream has {stream} arms")]
    ScheduleMismatch { schedule: usize, stream: usize },
    #[error("arm memory {have} is below the {need} arms this algorithm holds")]
    InsufficientCapacity { need: usize, have: usize },
}

fn check_session(session: &StreamSession<'_>, need: usize) -> Result<(), PacError> {
    if session.consumed() != 0 || session.total_pulls() != 0 {
        return Err(PacError::SessionNotFresh);
    }
    if let Some(have) = session.capacity().limit() {
        if have < need {
            return Err(PacError::InsufficientCapacity { need, have });
        }
    }
    Ok(())
}

fn outcome(
    session: &StreamSession<'_>,
    arm: ArmId,
    per_level_pulls: BTreeMap<usize, u64>,
    started: Instant,
) -> Result<RunOutcome> {
    debug_assert_eq!(session.total_pulls(), session.ledger_sum());
    debug_assert_eq!(per_level_pulls.values().sum::<u64>(), session.total_pulls());
    Ok(RunOutcome {
        returned_arm: arm,
        true_gap: session.instance().gap(arm)?,
        total_pulls: session.total_pulls(),
        peak_residency: session.peak_residency(),
        per_level_pulls,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    arm: ArmId,
    mean: EmpiricalMean,
}

struct RRound<'s> {
    schedule: &'s LevelSchedule,
    counters: Vec<u64>,
    stored: Vec<Option<Slot>>,
    per_level: BTreeMap<usize, u64>,
}

impl RRound<'_> {
    /// Sample `arm` at `level` and keep promoting while blocks fill up.
    /// Returns `Some` when the one-round early exit fires.
    fn place(
        &mut self,
        session: &mut StreamSession<'_>,
        mut arm: ArmId,
        mut level: usize,
    ) -> Result<Option<ArmId>> {
        let r = self.schedule.r;
        loop {
            let s = self.schedule.samples(level);
            let mean = session.pull(arm, s)?.empirical();
            *self.per_level.entry(level).or_default() += s;

            let slot = &mut self.stored[level - 1];
            let stored_mean = slot.map_or(EmpiricalMean::ZERO, |sl| sl.mean);
            if mean < stored_mean {
                session.discard(arm)?;
            } else {
                if let Some(old) = slot.take() {
                    session.discard(old.arm)?;
                }
                *slot = Some(Slot { arm, mean });
            }

            self.counters[level - 1] += 1;
            if self.counters[level - 1] < self.schedule.block(level) {
                return Ok(None);
            }
            if r == 1 || level == r {
                return Ok(self.stored[level - 1].map(|s| s.arm));
            }
            self.counters[level - 1] = 0;
            let promoted = self.stored[level - 1]
                .take()
                .expect("a filled level always stores an arm");
            arm = promoted.arm;
            level += 1;
            session.note(TraceEvent::Promote { arm, level });
        }
    }

    /// End of stream: arms left below the top level get one top-level
    /// sampling each and the best of them faces the stored top arm.
    fn finish(&mut self, session: &mut StreamSession<'_>) -> Result<ArmId> {
        let r = self.schedule.r;
        let s = self.schedule.samples(r);
        let mut challenger: Option<Slot> = None;
        for level in 1..r {
            let Some(slot) = self.stored[level - 1].take() else {
                continue;
            };
            session.note(TraceEvent::Promote {
                arm: slot.arm,
                level: r,
            });
            let mean = session.pull(slot.arm, s)?.empirical();
            *self.per_level.entry(r).or_default() += s;
            let cand = Slot {
                arm: slot.arm,
                mean,
            };
            challenger = match challenger {
                None => Some(cand),
                Some(best) if beats(cand, best) => {
                    session.discard(best.arm)?;
                    Some(cand)
                }
                Some(best) => {
                    session.discard(cand.arm)?;
                    Some(best)
                }
            };
        }
        let top = self.stored[r - 1];
        Ok(match (top, challenger) {
            (Some(t), Some(c)) => {
                if t.mean > c.mean {
                    t.arm
                } else {
                    c.arm
                }
            }
            (Some(t), None) => t.arm,
            (None, Some(c)) => c.arm,
            (None, None) => unreachable!("a non-empty stream leaves a stored arm"),
        })
    }
}

/// Higher empirical mean wins, then the lower arm index.
fn beats(a: Slot, b: Slot) -> bool {
    a.mean > b.mean || (a.mean == b.mean && a.arm < b.arm)
}

/// r-round modified selective promotion. Holds at most `r` stored arms plus
/// the incoming one.
pub fn run_r_round(
    session: &mut StreamSession<'_>,
    schedule: &LevelSchedule,
) -> Result<RunOutcome> {
    let started = Instant::now();
    if schedule.n != session.n() {
        return Err(PacError::ScheduleMismatch {
            schedule: schedule.n,
            stream: session.n(),
        }
        .into());
    }
    check_session(session, schedule.r + 1)?;
    let mut state = RRound {
        schedule,
        counters: vec![0; schedule.r],
        stored: vec![None; schedule.r],
        per_level: BTreeMap::new(),
    };
    while let Some(arm) = session.next_arm() {
        session.admit(arm)?;
        if let Some(winner) = state.place(session, arm, 1)? {
            return outcome(session, winner, state.per_level, started);
        }
    }
    let winner = state.finish(session)?;
    outcome(session, winner, state.per_level, started)
}

/// Pull totals of an r-round run, which do not depend on any reward.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DryRun {
    pub total_pulls: u64,
    pub per_level_pulls: BTreeMap<usize, u64>,
    /// How many arms were sampled at each level, end-of-stream step included.
    pub arrivals: BTreeMap<usize, u64>,
}

/// Count the pulls of [`run_r_round`] without drawing rewards.
pub fn r_round_dry_run(schedule: &LevelSchedule) -> DryRun {
    let r = schedule.r;
    let mut counters = vec![0u64; r];
    let mut per_level: BTreeMap<usize, u64> = BTreeMap::new();
    let mut arrivals: BTreeMap<usize, u64> = BTreeMap::new();
    let mut visit = |level: usize, per_level: &mut BTreeMap<usize, u64>| {
        *per_level.entry(level).or_default() += schedule.samples(level);
        *arrivals.entry(level).or_default() += 1;
    };
    'stream: for _ in 0..schedule.n {
        let mut level = 1;
        loop {
            visit(level, &mut per_level);
            counters[level - 1] += 1;
            if counters[level - 1] < schedule.block(level) {
                break;
            }
            if r == 1 || level == r {
                break 'stream;
            }
            counters[level - 1] = 0;
            level += 1;
        }
    }
    if !(r == 1 || counters[r - 1] == schedule.block(r)) {
        for level in 1..r {
            if counters[level - 1] > 0 {
                visit(r, &mut per_level);
            }
        }
    }
    DryRun {
        total_pulls: per_level.values().sum(),
        per_level_pulls: per_level,
        arrivals,
    }
}

fn run_king<S: ChallengeSchedule>(
    session: &mut StreamSession<'_>,
    schedule: &S,
) -> Result<RunOutcome> {
    let started = Instant::now();
    check_session(session, 2)?;
    let offset = schedule.offset();
    let grant = schedule.budget();
    let phi_ceiling = session.n() as u128 * grant as u128;
    let mut per_level = BTreeMap::new();

    let first = session
        .next_arm()
        .expect("an instance has at least one arm");
    session.admit(first)?;
    session.note(TraceEvent::Crowned(first));
    let mut king = first;
    let mut phi: u64 = 0;

    while let Some(arm) = session.next_arm() {
        session.admit(arm)?;
        phi += grant;
        let mut level = 1;
        loop {
            let s = schedule.samples(level);
            if phi < s {
                session.discard(king)?;
                king = arm;
                phi = 0;
                session.note(TraceEvent::Crowned(king));
                break;
            }
            // φ never exceeds n·b, so the defeat branch above fires no later
            // than the first level whose sample count passes n·b.
            assert!(
                (s as u128) <= phi_ceiling,
                "challenge loop passed its cap without a defeat"
            );
            phi -= s;
            let k = session.pull(king, s)?;
            let c = session.pull(arm, s)?;
            *per_level.entry(level).or_default() += 2 * s;
            let king_wins = if offset == 0.0 {
                k.empirical() > c.empirical()
            } else {
                k.mean() > c.mean() - offset
            };
            if king_wins {
                session.discard(arm)?;
                break;
            }
            level += 1;
        }
    }
    outcome(session, king, per_level, started)
}

/// Budgeted king challenges; the king wins a level when
/// `μ̂_king > μ̂_i − 0.495ε`.
pub fn run_king_budget(
    session: &mut StreamSession<'_>,
    schedule: &crate::schedule::KingSchedule,
) -> Result<RunOutcome> {
    run_king(session, schedule)
}

/// Same duel without the offset: the king needs `μ̂_king > μ̂_i` outright.
pub fn run_king_no_offset(
    session: &mut StreamSession<'_>,
    schedule: &crate::schedule::AssadiTypeSchedule,
) -> Result<RunOutcome> {
    run_king(session, schedule)
}

/// Aggressive selective promotion: every comparison resamples both the
/// incoming arm and the arm stored at that level.
///
/// A promoted arm leaves its level empty; the next arm to reach an empty
/// level is stored without pulls. The arm at level `t` is returned, or the
/// arm at the highest occupied level if `t` was never reached.
pub fn run_aggressive_promotion(
    session: &mut StreamSession<'_>,
    schedule: &AssadiSchedule,
) -> Result<RunOutcome> {
    let started = Instant::now();
    if schedule.n != session.n() {
        return Err(PacError::ScheduleMismatch {
            schedule: schedule.n,
            stream: session.n(),
        }
        .into());
    }
    let t = schedule.t;
    check_session(session, t + 1)?;
    let mut counters = vec![0u64; t];
    let mut stored: Vec<Option<ArmId>> = vec![None; t];
    let mut per_level: BTreeMap<usize, u64> = BTreeMap::new();

    while let Some(arm) = session.next_arm() {
        session.admit(arm)?;
        let mut cur = arm;
        let mut level = 1;
        loop {
            let lv = *schedule.level(level)?;
            match stored[level - 1] {
                None => stored[level - 1] = Some(cur),
                Some(held) => {
                    let fresh = session.pull(cur, lv.samples)?.empirical();
                    let incumbent = session.pull(held, lv.samples)?.empirical();
                    *per_level.entry(level).or_default() += 2 * lv.samples;
                    if fresh < incumbent {
                        session.discard(cur)?;
                    } else {
                        session.discard(held)?;
                        stored[level - 1] = Some(cur);
                    }
                }
            }
            counters[level - 1] += 1;
            if counters[level - 1] < lv.block || level == t {
                break;
            }
            counters[level - 1] = 0;
            cur = stored[level - 1].take().expect("filled level holds an arm");
            level += 1;
            session.note(TraceEvent::Promote { arm: cur, level });
        }
    }
    let winner = stored
        .iter()
        .rev()
        .find_map(|s| *s)
        .expect("a non-empty stream leaves a stored arm");
    outcome(session, winner, per_level, started)
}
