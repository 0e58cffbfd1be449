//! Instance families: regret lower-bound families, adversarial streams for
//! the two counterexample algorithms, and arm means drawn from distributions
//! truncated to `(0, 1]`.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, LogNormal, Normal};
use thiserror::Error;

use crate::model::{Instance, ModelError};
use crate::rng::{rng_from_seed, TrialRng};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{family}: no draw landed in (0, 1] after {tries} attempts")]
    RejectionExhausted { family: &'static str, tries: u32 },
    #[error("j={j} exceeds m={m}")]
    IndexOutOfRange { j: usize, m: usize },
    #[error("this family needs n > {bound}, got n={n}")]
    TooFewArms { n: usize, bound: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn invalid(msg: impl Into<String>) -> InstanceError {
    InstanceError::InvalidParameter(msg.into())
}

/// Retry budget for each rejection-sampled draw.
pub const MAX_REJECTIONS: u32 = 10_000;

/// A distribution over arm means, truncated to `(0, 1]`. Variances are
/// given as `σ²`, matching how the families are usually quoted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistSpec {
    Uniform,
    TruncNormal { mu: f64, var: f64 },
    TruncLogNormal { mu: f64, var: f64 },
    TruncExponential { lambda: f64 },
    Beta { alpha: f64, beta: f64 },
    TruncGamma { shape: f64, scale: f64 },
    TruncWeibull { scale: f64, shape: f64 },
}

impl DistSpec {
    /// Parse a family name plus positional parameters, e.g.
    /// `("normal", [0.5, 1.0])`.
    pub fn from_parts(family: &str, params: &[f64]) -> Result<Self, InstanceError> {
        let want = |k: usize| -> Result<(), InstanceError> {
            if params.len() == k {
                Ok(())
            } else {
                Err(invalid(format!(
                    "family `{family}` takes {k} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        let spec = match family {
            "uniform" => {
                want(0)?;
                DistSpec::Uniform
            }
            "normal" => {
                want(2)?;
                DistSpec::TruncNormal {
                    mu: params[0],
                    var: params[1],
                }
            }
            "lognormal" => {
                want(2)?;
                DistSpec::TruncLogNormal {
                    mu: params[0],
                    var: params[1],
                }
            }
            "exponential" => {
                want(1)?;
                DistSpec::TruncExponential { lambda: params[0] }
            }
            "beta" => {
                want(2)?;
                DistSpec::Beta {
                    alpha: params[0],
                    beta: params[1],
                }
            }
            "gamma" => {
                want(2)?;
                DistSpec::TruncGamma {
                    shape: params[0],
                    scale: params[1],
                }
            }
            "weibull" => {
                want(2)?;
                DistSpec::TruncWeibull {
                    scale: params[0],
                    shape: params[1],
                }
            }
            other => return Err(invalid(format!("unknown distribution family `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn name(&self) -> &'static str {
        match self {
            DistSpec::Uniform => "uniform",
            DistSpec::TruncNormal { .. } => "normal",
            DistSpec::TruncLogNormal { .. } => "lognormal",
            DistSpec::TruncExponential { .. } => "exponential",
            DistSpec::Beta { .. } => "beta",
            DistSpec::TruncGamma { .. } => "gamma",
            DistSpec::TruncWeibull { .. } => "weibull",
        }
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        let fin = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be finite, got {v}")))
            }
        };
        match *self {
            DistSpec::Uniform => Ok(()),
            DistSpec::TruncNormal { mu, var } | DistSpec::TruncLogNormal { mu, var } => {
                fin("mu", mu)?;
                pos("variance", var)
            }
            DistSpec::TruncExponential { lambda } => pos("lambda", lambda),
            DistSpec::Beta { alpha, beta } => {
                pos("alpha", alpha)?;
                pos("beta", beta)
            }
            DistSpec::TruncGamma { shape, scale } => {
                pos("shape", shape)?;
                pos("scale", scale)
            }
            DistSpec::TruncWeibull { scale, shape } => {
                pos("scale", scale)?;
                pos("shape", shape)
            }
        }
    }

    /// A sampler bound to this spec.
    pub fn sampler(&self) -> Result<MeanSampler, InstanceError> {
        self.validate()?;
        let kind = match *self {
            DistSpec::Uniform => Kind::Uniform,
            DistSpec::TruncExponential { lambda } => Kind::Exponential {
                lambda,
                mass: -(-lambda).exp_m1(),
            },
            DistSpec::TruncWeibull { scale, shape } => Kind::Weibull {
                scale,
                shape,
                mass: -(-(1.0 / scale).powf(shape)).exp_m1(),
            },
            DistSpec::Beta { alpha, beta: 1.0 } => Kind::PowerLaw { alpha },
            DistSpec::Beta { alpha: 1.0, beta } => Kind::ReversePowerLaw { beta },
            DistSpec::Beta { alpha, beta } => {
                Kind::Beta(Beta::new(alpha, beta).map_err(|e| invalid(e.to_string()))?)
            }
            DistSpec::TruncNormal { mu, var } => {
                Kind::Normal(Normal::new(mu, var.sqrt()).map_err(|e| invalid(e.to_string()))?)
            }
            DistSpec::TruncLogNormal { mu, var } => {
                Kind::LogNormal(LogNormal::new(mu, var.sqrt()).map_err(|e| invalid(e.to_string()))?)
            }
            DistSpec::TruncGamma { shape, scale } => {
                Kind::Gamma(Gamma::new(shape, scale).map_err(|e| invalid(e.to_string()))?)
            }
        };
        Ok(MeanSampler {
            kind,
            name: self.name(),
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Uniform,
    /// `mass` is the untruncated `F(1)`.
    Exponential {
        lambda: f64,
        mass: f64,
    },
    Weibull {
        scale: f64,
        shape: f64,
        mass: f64,
    },
    /// Beta(α, 1): `F(x) = x^α`.
    PowerLaw {
        alpha: f64,
    },
    /// Beta(1, β): `F(x) = 1 − (1 − x)^β`.
    ReversePowerLaw {
        beta: f64,
    },
    Beta(Beta<f64>),
    Normal(Normal<f64>),
    LogNormal(LogNormal<f64>),
    Gamma(Gamma<f64>),
}

/// Draws from a [`DistSpec`]. Closed-form inverse CDFs where they exist,
/// otherwise rejection from the untruncated family.
#[derive(Debug, Clone, Copy)]
pub struct MeanSampler {
    kind: Kind,
    name: &'static str,
}

impl MeanSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, InstanceError> {
        // u ∈ (0, 1], so every inverse CDF below lands in (0, 1].
        let mut u = || 1.0 - rng.random::<f64>();
        Ok(match self.kind {
            Kind::Uniform => u(),
            Kind::Exponential { lambda, mass } => (-(-u() * mass).ln_1p() / lambda).min(1.0),
            Kind::Weibull { scale, shape, mass } => {
                (scale * (-(-u() * mass).ln_1p()).powf(1.0 / shape)).min(1.0)
            }
            Kind::PowerLaw { alpha } => u().powf(1.0 / alpha),
            Kind::ReversePowerLaw { beta } => 1.0 - (1.0 - u()).powf(1.0 / beta),
            Kind::Beta(d) => self.reject(rng, d)?,
            Kind::Normal(d) => self.reject(rng, d)?,
            Kind::LogNormal(d) => self.reject(rng, d)?,
            Kind::Gamma(d) => self.reject(rng, d)?,
        })
    }

    fn reject<R: Rng + ?Sized, D: Distribution<f64>>(
        &self,
        rng: &mut R,
        d: D,
    ) -> Result<f64, InstanceError> {
        for _ in 0..MAX_REJECTIONS {
            let x = d.sample(rng);
            if x > 0.0 && x <= 1.0 {
                return Ok(x);
            }
        }
        Err(InstanceError::RejectionExhausted {
            family: self.name,
            tries: MAX_REJECTIONS,
        })
    }

    pub fn sample_n(&self, n: usize, rng: &mut TrialRng) -> Result<Vec<f64>, InstanceError> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// `n` i.i.d. means from `dist`, reproducible from `seed`.
pub fn sample_means(dist: &DistSpec, n: usize, seed: u64) -> Result<Instance, InstanceError> {
    if n == 0 {
        return Err(InstanceError::TooFewArms { n, bound: 0 });
    }
    let sampler = dist.sampler()?;
    let mut rng = rng_from_seed(seed);
    Ok(Instance::new(sampler.sample_n(n, &mut rng)?)?)
}

/// Gap parameter of the regret lower-bound family: `1/(m^{1/3}·T^{1/3})`.
pub fn lb_epsilon(m: usize, horizon: u64) -> f64 {
    1.0 / ((m as f64).cbrt() * (horizon as f64).cbrt())
}

/// Regret lower-bound family member `I_j` on `n` arms.
///
/// `I_0` puts mean 1 on the last arm; `I_j` (1 ≤ j ≤ m) puts `(1+ε)/2` on
/// arm `j` (one-based, so index `j−1`). Every other arm has mean 1/2.
pub fn lb_family(m: usize, horizon: u64, n: usize, j: usize) -> Result<Instance, InstanceError> {
    if m == 0 || horizon == 0 {
        return Err(invalid("m and T must be positive"));
    }
    if j > m {
        return Err(InstanceError::IndexOutOfRange { j, m });
    }
    if n <= m {
        return Err(InstanceError::TooFewArms { n, bound: m });
    }
    let mut means = vec![0.5; n];
    if j == 0 {
        means[n - 1] = 1.0;
    } else {
        means[j - 1] = (1.0 + lb_epsilon(m, horizon)) / 2.0;
    }
    Ok(Instance::new(means)?)
}

/// The two random-arrival regret instances: variant 1 lifts the first arm to
/// `(1+ε)/2`, variant 2 puts mean 1 on the last arm.
pub fn random_order_lb(n: usize, epsilon: f64, variant: u8) -> Result<Instance, InstanceError> {
    if n < 2 {
        return Err(InstanceError::TooFewArms { n, bound: 1 });
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(invalid(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    let mut means = vec![0.5; n];
    match variant {
        1 => means[0] = (1.0 + epsilon) / 2.0,
        2 => means[n - 1] = 1.0,
        v => return Err(invalid(format!("variant must be 1 or 2, got {v}"))),
    }
    Ok(Instance::new(means)?)
}

/// Stream that defeats resampled promotion: blocks of `c1` equal arms whose
/// means step down by `ε/(c2−2)` per block, for `c2` blocks, then zeros.
pub fn assadi_counterexample(
    epsilon: f64,
    c1: usize,
    c2: usize,
    n: usize,
) -> Result<Instance, InstanceError> {
    if c1 == 0 || c2 < 3 {
        return Err(invalid(format!(
            "need c1 ≥ 1 and c2 ≥ 3, got c1={c1}, c2={c2}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let head = c1
        .checked_mul(c2)
        .ok_or_else(|| invalid("c1·c2 overflows"))?;
    if n <= head {
        return Err(InstanceError::TooFewArms { n, bound: head });
    }
    let step = epsilon / (c2 - 2) as f64;
    let means = (0..n)
        .map(|i| {
            if i < head {
                0.5 - (i / c1) as f64 * step
            } else {
                0.0
            }
        })
        .collect();
    Ok(Instance::new(means)?)
}

/// Means falling linearly from `μ_1` by `ε/(n−2)` per arm, so the last arm is
/// just over `ε` below the first.
pub fn linear_gap_stream(n: usize, epsilon: f64, mu1: f64) -> Result<Instance, InstanceError> {
    if n < 3 {
        return Err(InstanceError::TooFewArms { n, bound: 2 });
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let denom = (n - 2) as f64;
    let means = (0..n).map(|i| mu1 - epsilon * (i as f64 / denom)).collect();
    Ok(Instance::new(means)?)
}
