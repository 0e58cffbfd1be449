//! Iterated logarithms and the per-level sample/block tables.
//!
//! The r-round tables use binary logarithms; the king and aggressive
//! schedules use natural logarithms.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("iterated log needs an argument ≥ 1, got {0}")]
    LogDomain(f64),
    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("delta must lie in {range}, got {value}")]
    InvalidDelta { value: f64, range: &'static str },
    #[error("need at least one arm")]
    ZeroArms,
    #[error("r={r} out of range: must lie in [1, {max}] for n={n}")]
    RoundsOutOfRange { r: usize, max: usize, n: usize },
    #[error("the constant C must be positive, got {0}")]
    InvalidConstant(f64),
    #[error("reduction factor must be ≥ 1, got {0}")]
    InvalidReduction(f64),
    #[error("block sizes must all be ≥ 2")]
    InvalidBlockSizes,
    #[error("level {level} needs more than {cap} samples per arm and was truncated")]
    TruncatedLevel { level: usize, cap: f64 },
}

/// `ilog^{(r)}(a)`: the binary logarithm applied `r` times, floored at 1
/// after every step.
pub fn ilog(r: u32, a: f64) -> Result<f64, ScheduleError> {
    if !(a >= 1.0) {
        return Err(ScheduleError::LogDomain(a));
    }
    let mut x = a;
    for _ in 0..r {
        if x == 1.0 {
            break;
        }
        x = x.log2().max(1.0);
    }
    Ok(x)
}

/// Smallest `r` with `ilog^{(r)}(n) = 1`.
pub fn log_star(n: f64) -> Result<u32, ScheduleError> {
    if !(n >= 1.0) {
        return Err(ScheduleError::LogDomain(n));
    }
    let mut x = n;
    let mut r = 0;
    while x > 1.0 {
        x = x.log2().max(1.0);
        r += 1;
    }
    Ok(r)
}

fn check_epsilon(eps: f64) -> Result<(), ScheduleError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(ScheduleError::InvalidEpsilon(eps))
    }
}

fn check_delta(delta: f64, upper: f64, range: &'static str) -> Result<(), ScheduleError> {
    if delta > 0.0 && delta < upper {
        Ok(())
    } else {
        Err(ScheduleError::InvalidDelta {
            value: delta,
            range,
        })
    }
}

fn check_reduction(reduction: f64) -> Result<(), ScheduleError> {
    if reduction >= 1.0 && reduction.is_finite() {
        Ok(())
    } else {
        Err(ScheduleError::InvalidReduction(reduction))
    }
}

fn ceil_u64(x: f64) -> u64 {
    // Saturates at u64::MAX for huge or infinite x.
    x.ceil() as u64
}

/// One row of a level table. Levels are numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub level: usize,
    pub eps: f64,
    pub beta: f64,
    /// Pulls per arm at this level.
    pub samples: u64,
    /// Arms processed at this level before its best is promoted.
    pub block: u64,
}

/// Largest admissible round count for `n` arms.
pub fn max_rounds(n: usize) -> usize {
    (log_star(n as f64).unwrap_or(0) as usize).max(1)
}

/// The table driving the r-round selective promotion algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSchedule {
    pub n: usize,
    pub r: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub levels: Vec<Level>,
}

impl LevelSchedule {
    /// Level `l`, 1-based.
    pub fn level(&self, l: usize) -> &Level {
        &self.levels[l - 1]
    }

    pub fn samples(&self, l: usize) -> u64 {
        self.levels[l - 1].samples
    }

    pub fn block(&self, l: usize) -> u64 {
        self.levels[l - 1].block
    }

    /// `Σ_ℓ (n / Π_{i<ℓ} c_i)·s_ℓ + (r−1)·s_r`.
    pub fn pull_bound(&self) -> f64 {
        let mut arms = self.n as f64;
        let mut total = 0.0;
        for lv in &self.levels {
            total += arms * lv.samples as f64;
            arms /= lv.block as f64;
        }
        total + (self.r as f64 - 1.0) * self.samples(self.r) as f64
    }

    pub fn rows(&self) -> Vec<ScheduleRow> {
        self.levels
            .iter()
            .map(|lv| ScheduleRow {
                level: lv.level,
                eps: lv.eps,
                samples: lv.samples,
                block: Some(lv.block),
            })
            .collect()
    }
}

/// Table for the r-round algorithm: `ε_ℓ = ε/2^{ℓ+1}`, `β_ℓ = 1/ε_ℓ²`,
/// `s_ℓ = ⌈2β_ℓ(ilog^{(r+1−ℓ)}(n) + log₂(2^{ℓ+2}/δ))⌉`,
/// `c_ℓ = ⌈ilog^{(r−ℓ)}(n)⌉`.
///
/// `r` ranges over `[1, max(1, log* n)]`; a single arm still admits one round.
pub fn r_round_schedule(
    n: usize,
    r: usize,
    epsilon: f64,
    delta: f64,
) -> Result<LevelSchedule, ScheduleError> {
    if n == 0 {
        return Err(ScheduleError::ZeroArms);
    }
    check_epsilon(epsilon)?;
    check_delta(delta, 0.5, "(0, 1/2)")?;
    let max = max_rounds(n);
    if r < 1 || r > max {
        return Err(ScheduleError::RoundsOutOfRange { r, max, n });
    }
    let nf = n as f64;
    let levels = (1..=r)
        .map(|l| {
            let eps = epsilon / 2f64.powi(l as i32 + 1);
            let beta = 1.0 / (eps * eps);
            let tail = (2f64.powi(l as i32 + 2) / delta).log2();
            let samples = ceil_u64(2.0 * beta * (ilog((r + 1 - l) as u32, nf)? + tail));
            let block = ceil_u64(ilog((r - l) as u32, nf)?);
            Ok(Level {
                level: l,
                eps,
                beta,
                samples,
                block,
            })
        })
        .collect::<Result<_, ScheduleError>>()?;
    Ok(LevelSchedule {
        n,
        r,
        epsilon,
        delta,
        levels,
    })
}

/// `(n/ε²)·(ilog^{(r)}(n) + log₂(1/δ))`, the shape of the r-round pull bound.
pub fn r_round_reference(n: usize, r: usize, epsilon: f64, delta: f64) -> f64 {
    let nf = n as f64;
    nf / (epsilon * epsilon) * (ilog(r as u32, nf).unwrap_or(1.0) + (1.0 / delta).log2())
}

/// Sample counts, budget grant and win offset of a king-challenge schedule.
pub trait ChallengeSchedule {
    /// Pulls of each arm at challenge level `level` (1-based).
    fn samples(&self, level: usize) -> u64;
    /// Budget added to the king for each arriving arm.
    fn budget(&self) -> u64;
    /// The king wins when `μ̂_king > μ̂_i − offset`.
    fn offset(&self) -> f64;
    fn epsilon(&self) -> f64;
    fn delta(&self) -> f64;
    fn constant(&self) -> f64;

    fn rows(&self, levels: usize) -> Vec<ScheduleRow> {
        (1..=levels)
            .map(|l| ScheduleRow {
                level: l,
                eps: self.epsilon(),
                samples: self.samples(l),
                block: None,
            })
            .collect()
    }
}

/// Budgeted king challenges with a `0.495ε` offset.
///
/// `s_ℓ = ⌈(2/(ε/200)²)·ln(4/δ)·3^ℓ / reduction⌉`,
/// `b = ⌈((2/(ε/200)²)·C·ln(4/δ) + s_1) / reduction⌉` with `s_1` the
/// unreduced first-level count. The reduction shrinks both so the
/// budget-to-sample ratio is preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct KingSchedule {
    pub epsilon: f64,
    pub delta: f64,
    pub c: f64,
    pub reduction: f64,
    base: f64,
    budget: u64,
}

pub const KING_OFFSET_FACTOR: f64 = 0.495;

pub fn king_schedule(
    epsilon: f64,
    delta: f64,
    c: f64,
    reduction: f64,
) -> Result<KingSchedule, ScheduleError> {
    check_epsilon(epsilon)?;
    check_delta(delta, 1.0, "(0, 1)")?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(ScheduleError::InvalidConstant(c));
    }
    check_reduction(reduction)?;
    let scale = 2.0 / (epsilon / 200.0).powi(2);
    let log_term = (4.0 / delta).ln();
    let base = scale * log_term;
    let s1_full = (base * 3.0).ceil();
    let budget = ceil_u64((scale * c * log_term + s1_full) / reduction);
    Ok(KingSchedule {
        epsilon,
        delta,
        c,
        reduction,
        base,
        budget,
    })
}

impl KingSchedule {
    /// First-level count before reduction.
    pub fn unreduced_s1(&self) -> u64 {
        ceil_u64(self.base * 3.0)
    }
}

impl ChallengeSchedule for KingSchedule {
    fn samples(&self, level: usize) -> u64 {
        ceil_u64(self.base * 3f64.powi(level as i32) / self.reduction)
    }
    fn budget(&self) -> u64 {
        self.budget
    }
    fn offset(&self) -> f64 {
        KING_OFFSET_FACTOR * self.epsilon
    }
    fn epsilon(&self) -> f64 {
        self.epsilon
    }
    fn delta(&self) -> f64 {
        self.delta
    }
    fn constant(&self) -> f64 {
        self.c
    }
}

/// Offset-free king challenges: `s_ℓ = ⌈(2/ε²)·ln(1/δ)·3^ℓ / reduction⌉`,
/// `b = ⌈((2/ε²)·C·ln(1/δ) + s_1) / reduction⌉`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssadiTypeSchedule {
    pub epsilon: f64,
    pub delta: f64,
    pub c: f64,
    pub reduction: f64,
    base: f64,
    budget: u64,
}

pub fn assadi_type_schedule(
    epsilon: f64,
    delta: f64,
    c: f64,
) -> Result<AssadiTypeSchedule, ScheduleError> {
    assadi_type_schedule_reduced(epsilon, delta, c, 1.0)
}

pub fn assadi_type_schedule_reduced(
    epsilon: f64,
    delta: f64,
    c: f64,
    reduction: f64,
) -> Result<AssadiTypeSchedule, ScheduleError> {
    check_epsilon(epsilon)?;
    check_delta(delta, 1.0, "(0, 1)")?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(ScheduleError::InvalidConstant(c));
    }
    check_reduction(reduction)?;
    let scale = 2.0 / (epsilon * epsilon);
    let log_term = (1.0 / delta).ln();
    let base = scale * log_term;
    let s1_full = (base * 3.0).ceil();
    let budget = ceil_u64((scale * c * log_term + s1_full) / reduction);
    Ok(AssadiTypeSchedule {
        epsilon,
        delta,
        c,
        reduction,
        base,
        budget,
    })
}

impl ChallengeSchedule for AssadiTypeSchedule {
    fn samples(&self, level: usize) -> u64 {
        ceil_u64(self.base * 3f64.powi(level as i32) / self.reduction)
    }
    fn budget(&self) -> u64 {
        self.budget
    }
    fn offset(&self) -> f64 {
        0.0
    }
    fn epsilon(&self) -> f64 {
        self.epsilon
    }
    fn delta(&self) -> f64 {
        self.delta
    }
    fn constant(&self) -> f64 {
        self.c
    }
}

/// Default ceiling on per-arm samples of a single aggressive-promotion level.
pub const DEFAULT_SAMPLE_CAP: f64 = 1e12;

/// Table for aggressive selective promotion.
///
/// `r_1 = 4`, `r_{ℓ+1} = 2^{r_ℓ}`, `ε_ℓ = ε/(10·2^{ℓ−1})`,
/// `s_ℓ = ⌈4β_ℓ(ln(1/δ) + 3r_ℓ) / reduction⌉`, `c_1 = 2^{r_1}`,
/// `c_ℓ = 2^{r_ℓ}/2^{ℓ−1}` and `t = log* n + 1` levels. Levels whose sample
/// count exceeds the cap are dropped from `levels`; `t` is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct AssadiSchedule {
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub reduction: f64,
    pub sample_cap: f64,
    pub t: usize,
    pub levels: Vec<Level>,
    towers: Vec<f64>,
}

pub fn assadi_schedule(
    n: usize,
    epsilon: f64,
    delta: f64,
) -> Result<AssadiSchedule, ScheduleError> {
    AssadiSchedule::build(n, epsilon, delta, 1.0, DEFAULT_SAMPLE_CAP, &[])
}

impl AssadiSchedule {
    pub fn build(
        n: usize,
        epsilon: f64,
        delta: f64,
        reduction: f64,
        sample_cap: f64,
        blocks: &[u64],
    ) -> Result<Self, ScheduleError> {
        if n == 0 {
            return Err(ScheduleError::ZeroArms);
        }
        check_epsilon(epsilon)?;
        check_delta(delta, 1.0, "(0, 1)")?;
        check_reduction(reduction)?;
        if blocks.iter().any(|&c| c < 2) {
            return Err(ScheduleError::InvalidBlockSizes);
        }
        let t = log_star(n as f64)? as usize + 1;
        let mut towers = Vec::with_capacity(t);
        let mut levels = Vec::new();
        let mut r_l = 4.0f64;
        for l in 1..=t {
            towers.push(r_l);
            let eps = epsilon / (10.0 * 2f64.powi(l as i32 - 1));
            let beta = 1.0 / (eps * eps);
            let raw = 4.0 * beta * ((1.0 / delta).ln() + 3.0 * r_l) / reduction;
            if !(raw <= sample_cap) {
                break;
            }
            let block = match blocks.get(l - 1) {
                Some(&c) => c,
                None => tower_block(l, r_l),
            };
            levels.push(Level {
                level: l,
                eps,
                beta,
                samples: ceil_u64(raw),
                block,
            });
            r_l = 2f64.powf(r_l);
        }
        Ok(AssadiSchedule {
            n,
            epsilon,
            delta,
            reduction,
            sample_cap,
            t,
            levels,
            towers,
        })
    }

    pub fn with_reduction(self, reduction: f64) -> Result<Self, ScheduleError> {
        let blocks = self.block_overrides();
        Self::build(
            self.n,
            self.epsilon,
            self.delta,
            reduction,
            self.sample_cap,
            &blocks,
        )
    }

    fn block_overrides(&self) -> Vec<u64> {
        self.levels.iter().map(|l| l.block).collect()
    }

    /// `r_ℓ` of the tower, infinite once it overflows `f64`.
    pub fn tower(&self, level: usize) -> f64 {
        self.towers.get(level - 1).copied().unwrap_or(f64::INFINITY)
    }

    pub fn level(&self, level: usize) -> Result<&Level, ScheduleError> {
        self.levels
            .get(level - 1)
            .ok_or(ScheduleError::TruncatedLevel {
                level,
                cap: self.sample_cap,
            })
    }

    pub fn rows(&self) -> Vec<ScheduleRow> {
        self.levels
            .iter()
            .map(|lv| ScheduleRow {
                level: lv.level,
                eps: lv.eps,
                samples: lv.samples,
                block: Some(lv.block),
            })
            .collect()
    }
}

/// `c_1 = 2^{r_1}`, `c_ℓ = 2^{r_ℓ − (ℓ−1)}`, saturating at `u64::MAX`.
fn tower_block(level: usize, r_l: f64) -> u64 {
    let exp = r_l - (level as f64 - 1.0);
    if exp >= 64.0 {
        u64::MAX
    } else {
        1u64 << (exp as u32)
    }
}

/// A printable schedule row; `block` is absent for king schedules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleRow {
    pub level: usize,
    pub eps: f64,
    pub samples: u64,
    pub block: Option<u64>,
}
