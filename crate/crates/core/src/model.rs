//! Ground-truth problem instances, the Bernoulli reward model and the
//! records every algorithm returns.
//!
//! Arm indices are zero-based throughout the crate: `ArmId(0)` is the first
//! arm of the instance (not necessarily the first to arrive in a stream).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::RngCore;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("an instance needs at least one arm")]
    EmptyInstance,
    #[error("mean of arm {index} is {value}, outside [0, 1]")]
    MeanOutOfRange { index: usize, value: f64 },
    #[error("arm {arm} out of range for an instance with {n} arms")]
    ArmOutOfRange { arm: usize, n: usize },
    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("instance file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("instance file declares n={declared} but lists {found} means")]
    CountMismatch { declared: usize, found: usize },
    #[error("instance file I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Zero-based arm index into an [`Instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArmId(pub usize);

impl ArmId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-arm reward distribution family. Every arm draws from the same family,
/// parameterised by its mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RewardModel {
    #[default]
    Bernoulli,
}

/// Precomputed acceptance threshold for one Bernoulli arm.
///
/// A reward is 1 iff a fresh 64-bit draw falls below `threshold`; a mean of
/// exactly 1 is flagged separately since 2^64 does not fit in a `u64`.
/// Either way one draw is consumed per reward.
#[derive(Debug, Clone, Copy)]
struct Coin {
    threshold: u64,
    certain: bool,
}

impl Coin {
    fn new(mean: f64) -> Self {
        if mean >= 1.0 {
            Coin {
                threshold: u64::MAX,
                certain: true,
            }
        } else {
            // 2^64 as f64; the float-to-int cast saturates.
            Coin {
                threshold: (mean * 18_446_744_073_709_551_616.0) as u64,
                certain: false,
            }
        }
    }

    #[inline(always)]
    fn flip<R: RngCore + ?Sized>(&self, rng: &mut R) -> bool {
        let draw = rng.next_u64();
        self.certain || draw < self.threshold
    }
}

/// An n-armed stochastic bandit instance. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Instance {
    means: Vec<f64>,
    reward_model: RewardModel,
    best: ArmId,
    coins: Vec<Coin>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.reward_model == other.reward_model && self.means == other.means
    }
}

impl Instance {
    pub fn new(means: Vec<f64>) -> Result<Self, ModelError> {
        Self::with_model(means, RewardModel::Bernoulli)
    }

    pub fn with_model(means: Vec<f64>, reward_model: RewardModel) -> Result<Self, ModelError> {
        if means.is_empty() {
            return Err(ModelError::EmptyInstance);
        }
        if let Some((index, &value)) = means
            .iter()
            .enumerate()
            .find(|(_, m)| !(0.0..=1.0).contains(*m))
        {
            return Err(ModelError::MeanOutOfRange { index, value });
        }
        // Lowest index wins ties.
        let mut best = 0;
        for (i, &m) in means.iter().enumerate().skip(1) {
            if m > means[best] {
                best = i;
            }
        }
        let coins = means.iter().map(|&m| Coin::new(m)).collect();
        Ok(Instance {
            means,
            reward_model,
            best: ArmId(best),
            coins,
        })
    }

    pub fn n(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn reward_model(&self) -> RewardModel {
        self.reward_model
    }

    pub fn mean(&self, arm: ArmId) -> Result<f64, ModelError> {
        self.check(arm)?;
        Ok(self.means[arm.0])
    }

    /// Index of the best arm, ties broken by lowest index.
    pub fn best_arm(&self) -> ArmId {
        self.best
    }

    pub fn best_mean(&self) -> f64 {
        self.means[self.best.0]
    }

    /// Reward gap `μ* − μ_arm`.
    pub fn gap(&self, arm: ArmId) -> Result<f64, ModelError> {
        Ok(self.best_mean() - self.mean(arm)?)
    }

    pub fn check(&self, arm: ArmId) -> Result<(), ModelError> {
        if arm.0 < self.n() {
            Ok(())
        } else {
            Err(ModelError::ArmOutOfRange {
                arm: arm.0,
                n: self.n(),
            })
        }
    }

    /// Sum of `count` independent rewards of `arm`; consumes exactly `count`
    /// draws from `rng`. The caller has already validated `arm`.
    #[inline]
    pub(crate) fn reward_sum<R: RngCore + ?Sized>(
        &self,
        arm: ArmId,
        count: u64,
        rng: &mut R,
    ) -> u64 {
        let coin = self.coins[arm.0];
        let mut sum = 0u64;
        for _ in 0..count {
            sum += coin.flip(rng) as u64;
        }
        sum
    }

    /// Serialise to the plain-text instance format: a header line `n=<int>`
    /// followed by one mean per line. Means use the shortest representation
    /// that parses back to the same `f64`.
    pub fn to_text(&self) -> String {
        let mut out = format!("n={}\n", self.n());
        for m in &self.means {
            out.push_str(&format!("{m}\n"));
        }
        out
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_from(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        fs::read_to_string(path)?.parse()
    }
}

impl FromStr for Instance {
    type Err = ModelError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(ModelError::Parse {
            line: 1,
            message: "missing `n=<int>` header".into(),
        })?;
        let declared: usize = header
            .strip_prefix("n=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| ModelError::Parse {
                line,
                message: format!("expected `n=<int>`, found `{header}`"),
            })?;
        let mut means = Vec::with_capacity(declared);
        for (line, raw) in lines {
            let m: f64 = raw.parse().map_err(|_| ModelError::Parse {
                line,
                message: format!("`{raw}` is not a decimal mean"),
            })?;
            means.push(m);
        }
        if means.len() != declared {
            return Err(ModelError::CountMismatch {
                declared,
                found: means.len(),
            });
        }
        Instance::new(means)
    }
}

/// True iff `μ_arm ≥ μ* − ε`.
pub fn epsilon_best(instance: &Instance, arm: ArmId, epsilon: f64) -> Result<bool, ModelError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(ModelError::InvalidEpsilon(epsilon));
    }
    Ok(instance.mean(arm)? >= instance.best_mean() - epsilon)
}

/// One reward of `arm`: 1.0 with probability `μ_arm`, else 0.0. Advances
/// `rng` by exactly one draw.
pub fn draw_reward<R: RngCore + ?Sized>(
    instance: &Instance,
    arm: ArmId,
    rng: &mut R,
) -> Result<f64, ModelError> {
    instance.check(arm)?;
    Ok(if instance.coins[arm.0].flip(rng) {
        1.0
    } else {
        0.0
    })
}

/// Empirical mean kept as the exact pair `(reward_sum, pulls)`.
///
/// Ordering cross-multiplies, so equal ratios compare equal regardless of
/// the sample counts behind them. The zero value `0/1` is the initial stored
/// mean of an empty level.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalMean {
    pub sum: u64,
    pub pulls: u64,
}

impl EmpiricalMean {
    pub const ZERO: EmpiricalMean = EmpiricalMean { sum: 0, pulls: 1 };

    pub fn new(sum: u64, pulls: u64) -> Self {
        assert!(pulls > 0, "empirical mean over zero pulls");
        EmpiricalMean { sum, pulls }
    }

    pub fn value(&self) -> f64 {
        self.sum as f64 / self.pulls as f64
    }
}

impl PartialEq for EmpiricalMean {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for EmpiricalMean {}

impl PartialOrd for EmpiricalMean {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EmpiricalMean {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.sum as u128 * other.pulls as u128;
        let rhs = other.sum as u128 * self.pulls as u128;
        lhs.cmp(&rhs)
    }
}

/// What a single algorithm run returns.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub returned_arm: ArmId,
    /// `μ* − μ_returned`, recomputed from the instance.
    pub true_gap: f64,
    /// Equals the session ledger sum.
    pub total_pulls: u64,
    pub peak_residency: usize,
    /// Pulls attributed to each (one-based) level or challenge level.
    pub per_level_pulls: BTreeMap<usize, u64>,
    pub wall_time_ms: f64,
}

impl RunOutcome {
    pub fn is_epsilon_best(&self, instance: &Instance, epsilon: f64) -> Result<bool, ModelError> {
        epsilon_best(instance, self.returned_arm, epsilon)
    }
}
