//! Monte Carlo runner: one plan, many seeded trials, one summary.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::instances::{
    assadi_counterexample, lb_family, linear_gap_stream, random_order_lb, sample_means, DistSpec,
};
use crate::model::{ArmId, Instance};
use crate::pac::{run_aggressive_promotion, run_king_budget, run_king_no_offset, run_r_round};
use crate::regret::{run_ucb1, run_uniform_exploration, RegretTrace};
use crate::rng::{SeedSpec, StreamTag};
use crate::schedule::{
    assadi_type_schedule_reduced, king_schedule, r_round_schedule, AssadiSchedule,
    AssadiTypeSchedule, KingSchedule, LevelSchedule, DEFAULT_SAMPLE_CAP,
};
use crate::stream::{Capacity, StreamOrder, StreamSession};
use crate::{Error, Result};

mod report;

pub use report::{
    read_trials_csv, write_aggregate_csv, write_histogram_svg, write_regret_csv, write_trace_csv,
    write_trials_csv, AGGREGATE_HEADER, TRIALS_HEADER,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("report I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed trials CSV: {0}")]
    Malformed(String),
}

fn invalid(msg: impl Into<String>) -> Error {
    HarnessError::InvalidPlan(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    RRound,
    KingBudget,
    AggressivePromotion,
    KingNoOffset,
    UniformExploration,
    Ucb1,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::RRound,
        Algorithm::KingBudget,
        Algorithm::AggressivePromotion,
        Algorithm::KingNoOffset,
        Algorithm::UniformExploration,
        Algorithm::Ucb1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::RRound => "rround",
            Algorithm::KingBudget => "king",
            Algorithm::AggressivePromotion => "aggressive",
            Algorithm::KingNoOffset => "king-no-offset",
            Algorithm::UniformExploration => "uniform-explore",
            Algorithm::Ucb1 => "ucb1",
        }
    }

    pub fn is_regret(self) -> bool {
        matches!(self, Algorithm::UniformExploration | Algorithm::Ucb1)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                format!(
                    "unknown algorithm `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

/// How to build the instance for a trial.
#[derive(Debug, Clone, PartialEq)]
pub enum GenSpec {
    /// Means drawn i.i.d.; fresh per trial.
    Dist {
        dist: DistSpec,
        n: usize,
    },
    /// Regret lower-bound family. Without `j`, trial `k` uses `I_{k mod (m+1)}`.
    /// Without `horizon`, the plan's horizon sets `ε`.
    LowerBound {
        m: usize,
        n: usize,
        j: Option<usize>,
        horizon: Option<u64>,
    },
    RandomOrderLb {
        n: usize,
        epsilon: f64,
        variant: u8,
    },
    Assadi {
        epsilon: f64,
        c1: usize,
        c2: usize,
        n: usize,
    },
    LinearGap {
        n: usize,
        epsilon: f64,
        mu1: f64,
    },
}

impl GenSpec {
    pub fn n(&self) -> usize {
        match *self {
            GenSpec::Dist { n, .. }
            | GenSpec::LowerBound { n, .. }
            | GenSpec::RandomOrderLb { n, .. }
            | GenSpec::Assadi { n, .. }
            | GenSpec::LinearGap { n, .. } => n,
        }
    }

    /// Instance for one trial. Only the distribution family consumes the
    /// seed; the lower-bound family uses the trial index to pick `j`.
    pub fn generate(&self, seed: SeedSpec, horizon: u64) -> Result<Instance> {
        Ok(match *self {
            GenSpec::Dist { dist, n } => sample_means(&dist, n, seed.derive(StreamTag::Instance))?,
            GenSpec::LowerBound {
                m,
                n,
                j,
                horizon: h,
            } => {
                let j = j.unwrap_or((seed.trial_index % (m as u64 + 1)) as usize);
                lb_family(m, h.unwrap_or(horizon), n, j)?
            }
            GenSpec::RandomOrderLb {
                n,
                epsilon,
                variant,
            } => random_order_lb(n, epsilon, variant)?,
            GenSpec::Assadi { epsilon, c1, c2, n } => assadi_counterexample(epsilon, c1, c2, n)?,
            GenSpec::LinearGap { n, epsilon, mu1 } => linear_gap_stream(n, epsilon, mu1)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    Fixed(Arc<Instance>),
    Generator(GenSpec),
}

impl InstanceSource {
    pub fn n(&self) -> usize {
        match self {
            InstanceSource::Fixed(i) => i.n(),
            InstanceSource::Generator(g) => g.n(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrderKind {
    #[default]
    Natural,
    /// Fresh uniform permutation per trial.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgParams {
    pub epsilon: f64,
    pub delta: f64,
    pub r: usize,
    pub c: f64,
    pub kappa: f64,
    pub horizon: u64,
    /// Divides per-level sample counts (and the king budget).
    pub reduction: f64,
    /// Overrides the algorithm's natural arm memory.
    pub capacity: Option<usize>,
    /// Leading block sizes for aggressive promotion.
    pub block_sizes: Vec<u64>,
    pub sample_cap: f64,
}

impl Default for AlgParams {
    fn default() -> Self {
        AlgParams {
            epsilon: 0.1,
            delta: 0.1,
            r: 1,
            c: 117.0,
            kappa: 1.0,
            horizon: 1_000_000,
            reduction: 1.0,
            capacity: None,
            block_sizes: Vec::new(),
            sample_cap: DEFAULT_SAMPLE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub algorithm: Algorithm,
    pub source: InstanceSource,
    pub order: OrderKind,
    pub trials: u64,
    pub master_seed: u64,
    pub params: AlgParams,
    /// Worker threads; `None` defers to `BANDIT_LAB_WORKERS`, then rayon.
    pub workers: Option<usize>,
}

impl ExperimentPlan {
    pub fn new(algorithm: Algorithm, source: InstanceSource) -> Self {
        ExperimentPlan {
            algorithm,
            source,
            order: OrderKind::Natural,
            trials: 1,
            master_seed: 0,
            params: AlgParams::default(),
            workers: None,
        }
    }

    /// Column `param_r_or_C`: r, C, the level count t, κ, or 0 for UCB1.
    fn headline_param(&self, prepared: &Prepared) -> f64 {
        match prepared {
            Prepared::RRound(s) => s.r as f64,
            Prepared::King(_) | Prepared::NoOffset(_) => self.params.c,
            Prepared::Aggressive(a) => a.t as f64,
            Prepared::Uniform => self.params.kappa,
            Prepared::Ucb1 => 0.0,
        }
    }

    /// Check parameters and build the schedule once for all trials.
    pub fn prepare(&self) -> Result<PreparedPlan<'_>> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        let n = self.source.n();
        if n == 0 {
            return Err(invalid("instance has no arms"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers must be at least 1"));
        }
        let p = &self.params;
        let to_plan = |e: Error| match e {
            Error::Schedule(s) => invalid(s.to_string()),
            other => other,
        };
        let prepared = match self.algorithm {
            Algorithm::RRound => Prepared::RRound(
                r_round_schedule(n, p.r, p.epsilon, p.delta).map_err(|e| to_plan(e.into()))?,
            ),
            Algorithm::KingBudget => Prepared::King(
                king_schedule(p.epsilon, p.delta, p.c, p.reduction)
                    .map_err(|e| to_plan(e.into()))?,
            ),
            Algorithm::KingNoOffset => Prepared::NoOffset(
                assadi_type_schedule_reduced(p.epsilon, p.delta, p.c, p.reduction)
                    .map_err(|e| to_plan(e.into()))?,
            ),
            Algorithm::AggressivePromotion => Prepared::Aggressive(
                AssadiSchedule::build(
                    n,
                    p.epsilon,
                    p.delta,
                    p.reduction,
                    p.sample_cap,
                    &p.block_sizes,
                )
                .map_err(|e| to_plan(e.into()))?,
            ),
            Algorithm::UniformExploration | Algorithm::Ucb1 => {
                if p.horizon < n as u64 {
                    return Err(invalid(format!(
                        "horizon T={} is shorter than n={n}",
                        p.horizon
                    )));
                }
                if !(p.kappa > 0.0 && p.kappa.is_finite()) {
                    return Err(invalid(format!("kappa must be positive, got {}", p.kappa)));
                }
                if !(p.epsilon > 0.0 && p.epsilon < 1.0) {
                    return Err(invalid(format!(
                        "epsilon must lie in (0, 1), got {}",
                        p.epsilon
                    )));
                }
                if self.algorithm == Algorithm::Ucb1 {
                    Prepared::Ucb1
                } else {
                    Prepared::Uniform
                }
            }
        };
        let natural = match &prepared {
            Prepared::RRound(s) => Capacity::Bounded(s.r + 1),
            Prepared::Aggressive(a) => Capacity::Bounded(a.t + 1),
            Prepared::King(_) | Prepared::NoOffset(_) | Prepared::Uniform => Capacity::Bounded(2),
            Prepared::Ucb1 => Capacity::Unlimited,
        };
        let capacity = match p.capacity {
            Some(0) => return Err(invalid("capacity must be at least 1")),
            Some(m) => Capacity::Bounded(m),
            None => natural,
        };
        let param = self.headline_param(&prepared);
        Ok(PreparedPlan {
            plan: self,
            prepared,
            capacity,
            param,
        })
    }

    pub fn seed(&self, trial: u64) -> SeedSpec {
        SeedSpec::new(self.master_seed, trial)
    }

    pub fn instance_for(&self, trial: u64) -> Result<Arc<Instance>> {
        match &self.source {
            InstanceSource::Fixed(i) => Ok(Arc::clone(i)),
            InstanceSource::Generator(g) => {
                Ok(Arc::new(g.generate(self.seed(trial), self.params.horizon)?))
            }
        }
    }

    /// Run one trial.
    pub fn run_trial(&self, trial: u64) -> Result<TrialOutput> {
        self.prepare()?.run_trial(trial)
    }
}

enum Prepared {
    RRound(LevelSchedule),
    King(KingSchedule),
    NoOffset(AssadiTypeSchedule),
    Aggressive(AssadiSchedule),
    Uniform,
    Ucb1,
}

/// A validated plan with its schedule built.
pub struct PreparedPlan<'p> {
    plan: &'p ExperimentPlan,
    prepared: Prepared,
    capacity: Capacity,
    param: f64,
}

impl PreparedPlan<'_> {
    pub fn run_trial(&self, trial: u64) -> Result<TrialOutput> {
        let plan = self.plan;
        let p = &plan.params;
        let seed = plan.seed(trial);
        let instance = plan.instance_for(trial)?;
        let order = match plan.order {
            OrderKind::Natural => StreamOrder::Natural,
            OrderKind::Random => StreamOrder::random_for(&seed),
        };
        let reward_seed = seed.derive(StreamTag::Rewards);
        let mut trace = None;
        let mut regret = None;
        let outcome = match &self.prepared {
            Prepared::Ucb1 => {
                let run = run_ucb1(&instance, p.horizon, seed)?;
                regret = Some(run.regret);
                trace = Some(run.trace);
                run.outcome
            }
            prepared => {
                let mut session =
                    StreamSession::with_reward_seed(&instance, order, self.capacity, reward_seed)?;
                match prepared {
                    Prepared::RRound(s) => run_r_round(&mut session, s)?,
                    Prepared::King(s) => run_king_budget(&mut session, s)?,
                    Prepared::NoOffset(s) => run_king_no_offset(&mut session, s)?,
                    Prepared::Aggressive(s) => run_aggressive_promotion(&mut session, s)?,
                    Prepared::Uniform => {
                        let run = run_uniform_exploration(&mut session, p.horizon, p.kappa)?;
                        regret = Some(run.regret);
                        trace = Some(run.trace);
                        run.outcome
                    }
                    Prepared::Ucb1 => unreachable!(),
                }
            }
        };
        let record = TrialRecord {
            trial_id: trial,
            algorithm: plan.algorithm,
            n: instance.n(),
            param: self.param,
            epsilon: p.epsilon,
            delta: p.delta,
            order_seed: order.seed(),
            reward_seed,
            returned_arm: outcome.returned_arm,
            best_arm: instance.best_arm(),
            gap: outcome.true_gap,
            total_pulls: outcome.total_pulls,
            peak_residency: outcome.peak_residency,
            wall_ms: outcome.wall_time_ms,
            horizon: plan.algorithm.is_regret().then_some(p.horizon),
            regret,
        };
        Ok(TrialOutput {
            record,
            trace,
            instance,
        })
    }
}

/// Everything one trial produces.
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub record: TrialRecord,
    /// Pull sequence of regret runs.
    pub trace: Option<RegretTrace>,
    pub instance: Arc<Instance>,
}

/// One row of the per-trial report.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub algorithm: Algorithm,
    pub n: usize,
    pub param: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// `None` for natural order.
    pub order_seed: Option<u64>,
    pub reward_seed: u64,
    pub returned_arm: ArmId,
    pub best_arm: ArmId,
    pub gap: f64,
    pub total_pulls: u64,
    pub peak_residency: usize,
    pub wall_ms: f64,
    pub horizon: Option<u64>,
    pub regret: Option<f64>,
}

impl TrialRecord {
    /// ε-best, judged from the recorded gap so that a summary rebuilt from
    /// the CSV agrees with the live one.
    pub fn success(&self) -> bool {
        self.gap <= self.epsilon
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialFailure {
    pub trial_id: u64,
    pub message: String,
}

pub const GAP_BIN_WIDTH: f64 = 0.005;
pub const GAP_BINS: usize = 200;

/// Counts of returned-arm gaps in right-closed bins of width 0.005 over
/// `[0, 1]`: bin 0 is `[0, 0.005]`, bin k is `(0.005k, 0.005(k+1)]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapHistogram {
    pub counts: Vec<u64>,
}

impl Default for GapHistogram {
    fn default() -> Self {
        GapHistogram {
            counts: vec![0; GAP_BINS],
        }
    }
}

impl GapHistogram {
    pub fn bin(gap: f64) -> usize {
        if !(gap > 0.0) {
            return 0;
        }
        let upper = |k: usize| (k + 1) as f64 * GAP_BIN_WIDTH;
        let mut k = ((gap / GAP_BIN_WIDTH).ceil() as usize).saturating_sub(1);
        while k > 0 && gap <= upper(k - 1) {
            k -= 1;
        }
        while k + 1 < GAP_BINS && gap > upper(k) {
            k += 1;
        }
        k.min(GAP_BINS - 1)
    }

    pub fn add(&mut self, gap: f64) {
        self.counts[Self::bin(gap)] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Number of bins up to and including the last non-empty one.
    pub fn populated_span(&self) -> usize {
        self.counts
            .iter()
            .rposition(|&c| c > 0)
            .map_or(0, |k| k + 1)
    }

    /// Trials whose gap lies in the bins covering `[0, limit]`.
    pub fn count_at_most(&self, limit: f64) -> u64 {
        self.counts[..=Self::bin(limit)].iter().sum()
    }
}

/// Aggregate over the completed trials of one plan.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub algorithm: Option<Algorithm>,
    /// Completed trials.
    pub trials: u64,
    pub success_count: u64,
    pub gap_histogram: GapHistogram,
    pub mean_total_pulls: f64,
    pub max_total_pulls: u64,
    pub mean_peak_residency: f64,
    pub max_peak_residency: usize,
    pub mean_gap: f64,
    pub max_gap: f64,
    pub mean_regret: Option<f64>,
    pub rows: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
}

impl TrialSummary {
    /// Aggregate rows; they are sorted by trial id first, so the result does
    /// not depend on the order they finished in.
    pub fn from_rows(mut rows: Vec<TrialRecord>, mut failures: Vec<TrialFailure>) -> Self {
        rows.sort_by_key(|r| r.trial_id);
        failures.sort_by_key(|f| f.trial_id);
        let trials = rows.len() as u64;
        let mut hist = GapHistogram::default();
        let mut pulls: u128 = 0;
        let mut peak_sum: u128 = 0;
        let mut gap_sum = 0.0;
        let mut regret_sum = 0.0;
        let mut regret_rows = 0u64;
        for r in &rows {
            hist.add(r.gap);
            pulls += r.total_pulls as u128;
            peak_sum += r.peak_residency as u128;
            gap_sum += r.gap;
            if let Some(reg) = r.regret {
                regret_sum += reg;
                regret_rows += 1;
            }
        }
        let mean = |x: f64| if trials == 0 { 0.0 } else { x / trials as f64 };
        let algorithm = rows.first().map(|r| r.algorithm);
        TrialSummary {
            algorithm,
            trials,
            success_count: rows.iter().filter(|r| r.success()).count() as u64,
            gap_histogram: hist,
            mean_total_pulls: mean(pulls as f64),
            max_total_pulls: rows.iter().map(|r| r.total_pulls).max().unwrap_or(0),
            mean_peak_residency: mean(peak_sum as f64),
            max_peak_residency: rows.iter().map(|r| r.peak_residency).max().unwrap_or(0),
            mean_gap: mean(gap_sum),
            max_gap: rows.iter().map(|r| r.gap).fold(0.0, f64::max),
            mean_regret: (regret_rows > 0).then(|| regret_sum / regret_rows as f64),
            rows,
            failures,
        }
    }

    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.success_count as f64 / self.trials as f64
        }
    }

    /// Fraction of completed trials whose gap is at most `limit`.
    pub fn fraction_gap_at_most(&self, limit: f64) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.gap <= limit).count() as f64 / self.trials as f64
    }
}

/// Worker count: explicit, else `BANDIT_LAB_WORKERS`, else rayon's default.
pub fn worker_count(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| {
            std::env::var("BANDIT_LAB_WORKERS")
                .ok()
                .and_then(|v| v.trim().parse().ok())
                .filter(|&w: &usize| w > 0)
        })
        .unwrap_or_else(rayon::current_num_threads)
}

/// Run every trial of `plan` on a bounded pool. A trial that errors is
/// recorded as a failure and left out of the aggregate.
pub fn monte_carlo(plan: &ExperimentPlan) -> Result<TrialSummary> {
    let prepared = plan.prepare()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(plan.workers))
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(u64, Result<TrialRecord>)> = pool.install(|| {
        (0..plan.trials)
            .into_par_iter()
            .map(|t| (t, prepared.run_trial(t).map(|o| o.record)))
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (trial_id, r) in results {
        match r {
            Ok(rec) => rows.push(rec),
            Err(e) => failures.push(TrialFailure {
                trial_id,
                message: e.to_string(),
            }),
        }
    }
    Ok(TrialSummary::from_rows(rows, failures))
}
