//! Numerical checks of the estimator's analytic properties.
//!
//! With the conditional density as weight the local intercept converges to
//! `μ′(x) = ∫ v f(v|x)² dv / ∫ f(v|x)² dv`, the mean under the squared
//! conditional density, rather than to `E[Y | X = x]`. The two coincide for
//! symmetric conditionals. [`population_mu_prime`] evaluates `μ′` by
//! quadrature; [`empirical_target_experiment`] measures what the estimator
//! actually converges to on simulated data.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF};

use crate::dataset::{knn, DataSet};
use crate::error::{Error, Result};
use crate::regression::{predict, wls_polyfit, EstimatorConfig, Method};
use crate::similarity::{resolve_density_bandwidth, robust_weights, K2Variant};

/// Tail mass cut from each unbounded end of the support before integrating.
pub const TAIL_MASS: f64 = 1e-12;
/// Relative tolerance requested from the quadrature.
pub const QUADRATURE_RTOL: f64 = 1e-8;

/// A distribution parameter as a function of the predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Constant(f64),
    Linear { intercept: f64, slope: f64 },
}

impl Profile {
    pub fn at(&self, x: f64) -> f64 {
        match *self {
            Profile::Constant(v) => v,
            Profile::Linear { intercept, slope } => intercept + slope * x,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Profile::Constant(_)) || matches!(self, Profile::Linear { slope, .. } if *slope == 0.0)
    }
}

impl From<f64> for Profile {
    fn from(v: f64) -> Self {
        Profile::Constant(v)
    }
}

/// Conditional law of `Y` given `X = x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ConditionalFamily {
    Gaussian {
        mean: Profile,
        sd: Profile,
    },
    Exponential {
        rate: Profile,
    },
    LogNormal {
        mu: Profile,
        sigma: Profile,
    },
    /// Shape `k`, scale `θ` (mean `kθ`).
    Gamma {
        shape: Profile,
        scale: Profile,
    },
}

/// A family with its parameters evaluated at one predictor value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrozenFamily {
    Gaussian { mean: f64, sd: f64 },
    Exponential { rate: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Gamma { shape: f64, scale: f64 },
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

impl ConditionalFamily {
    pub fn gaussian(mean: f64, sd: f64) -> Self {
        Self::Gaussian {
            mean: mean.into(),
            sd: sd.into(),
        }
    }

    pub fn exponential(rate: f64) -> Self {
        Self::Exponential { rate: rate.into() }
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Self {
        Self::LogNormal {
            mu: mu.into(),
            sigma: sigma.into(),
        }
    }

    pub fn gamma(shape: f64, scale: f64) -> Self {
        Self::Gamma {
            shape: shape.into(),
            scale: scale.into(),
        }
    }

    pub fn at(&self, x: f64) -> Result<FrozenFamily> {
        Ok(match self {
            Self::Gaussian { mean, sd } => {
                let mean = mean.at(x);
                if !mean.is_finite() {
                    return Err(Error::InvalidParameter("gaussian mean must be finite".into()));
                }
                FrozenFamily::Gaussian {
                    mean,
                    sd: positive("sd", sd.at(x))?,
                }
            }
            Self::Exponential { rate } => FrozenFamily::Exponential {
                rate: positive("rate", rate.at(x))?,
            },
            Self::LogNormal { mu, sigma } => {
                let mu = mu.at(x);
                if !mu.is_finite() {
                    return Err(Error::InvalidParameter("lognormal mu must be finite".into()));
                }
                FrozenFamily::LogNormal {
                    mu,
                    sigma: positive("sigma", sigma.at(x))?,
                }
            }
            Self::Gamma { shape, scale } => FrozenFamily::Gamma {
                shape: positive("shape", shape.at(x))?,
                scale: positive("scale", scale.at(x))?,
            },
        })
    }

    /// True when no parameter depends on the predictor.
    pub fn is_flat(&self) -> bool {
        match self {
            Self::Gaussian { mean, sd } => mean.is_constant() && sd.is_constant(),
            Self::Exponential { rate } => rate.is_constant(),
            Self::LogNormal { mu, sigma } => mu.is_constant() && sigma.is_constant(),
            Self::Gamma { shape, scale } => shape.is_constant() && scale.is_constant(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Exponential { .. } => "exponential",
            Self::LogNormal { .. } => "lognormal",
            Self::Gamma { .. } => "gamma",
        }
    }
}

fn statrs_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(e.to_string())
}

impl FrozenFamily {
    pub fn pdf(&self, v: f64) -> f64 {
        match *self {
            Self::Gaussian { mean, sd } => {
                let z = (v - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
            }
            Self::Exponential { rate } => {
                if v < 0.0 {
                    0.0
                } else {
                    rate * (-rate * v).exp()
                }
            }
            Self::LogNormal { mu, sigma } => statrs::distribution::LogNormal::new(mu, sigma)
                .map(|d| d.pdf(v))
                .unwrap_or(f64::NAN),
            Self::Gamma { shape, scale } => statrs::distribution::Gamma::new(shape, scale.recip())
                .map(|d| if v <= 0.0 { 0.0 } else { d.pdf(v) })
                .unwrap_or(f64::NAN),
        }
    }

    /// Analytic mean.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Gaussian { mean, .. } => mean,
            Self::Exponential { rate } => rate.recip(),
            Self::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Self::Gamma { shape, scale } => shape * scale,
        }
    }

    pub fn sd(&self) -> f64 {
        match *self {
            Self::Gaussian { sd, .. } => sd,
            Self::Exponential { rate } => rate.recip(),
            Self::LogNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                ((s2.exp() - 1.0) * (2.0 * mu + s2).exp()).sqrt()
            }
            Self::Gamma { shape, scale } => shape.sqrt() * scale,
        }
    }

    /// Integration range with [`TAIL_MASS`] removed from unbounded ends.
    pub fn truncated_support(&self) -> Result<(f64, f64)> {
        let upper = 1.0 - TAIL_MASS;
        Ok(match *self {
            Self::Gaussian { mean, sd } => {
                let d = statrs::distribution::Normal::new(mean, sd).map_err(statrs_err)?;
                (d.inverse_cdf(TAIL_MASS), d.inverse_cdf(upper))
            }
            Self::Exponential { rate } => (0.0, -(TAIL_MASS).ln() / rate),
            Self::LogNormal { mu, sigma } => {
                let d = statrs::distribution::LogNormal::new(mu, sigma).map_err(statrs_err)?;
                (0.0, d.inverse_cdf(upper))
            }
            Self::Gamma { shape, scale } => {
                let d = statrs::distribution::Gamma::new(shape, scale.recip()).map_err(statrs_err)?;
                (0.0, d.inverse_cdf(upper))
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Gaussian { mean, sd } => rand_distr::Normal::new(mean, sd).expect("validated").sample(rng),
            Self::Exponential { rate } => rand_distr::Exp::new(rate).expect("validated").sample(rng),
            Self::LogNormal { mu, sigma } => rand_distr::LogNormal::new(mu, sigma).expect("validated").sample(rng),
            Self::Gamma { shape, scale } => rand_distr::Gamma::new(shape, scale).expect("validated").sample(rng),
        }
    }
}

fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, target: f64) -> Result<f64> {
    let out = quadrature::integrate(&f, lo, hi, target);
    if !out.integral.is_finite() || out.error_estimate > target {
        return Err(Error::Quadrature {
            estimate: out.error_estimate,
            target,
        });
    }
    Ok(out.integral)
}

/// `μ′(x)`: the mean of `Y` under the normalized squared conditional density.
pub fn population_mu_prime(family: &ConditionalFamily, x: f64) -> Result<f64> {
    let frozen = family.at(x)?;
    let (lo, hi) = frozen.truncated_support()?;
    let sq = |v: f64| {
        let p = frozen.pdf(v);
        p * p
    };
    // Coarse pass for the magnitude, then a pass at the requested tolerance.
    let rough = quadrature::integrate(sq, lo, hi, 1e-6).integral.abs();
    if !(rough > 0.0 && rough.is_finite()) {
        return Err(Error::Quadrature {
            estimate: f64::INFINITY,
            target: 0.0,
        });
    }
    let mass = integrate(sq, lo, hi, QUADRATURE_RTOL * rough)?;
    let reach = lo.abs().max(hi.abs()).max(1.0);
    let first = integrate(|v| v * sq(v), lo, hi, QUADRATURE_RTOL * rough * reach)?;
    Ok(first / mass)
}

/// `μ′(x) − E[Y | X = x]`.
pub fn asymptotic_bias(family: &ConditionalFamily, x: f64) -> Result<f64> {
    Ok(population_mu_prime(family, x)? - family.at(x)?.mean())
}

/// Monte-Carlo measurement of the value the estimator converges to on data
/// with `X ~ U[0, 1]` and `Y | X` drawn from a flat family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetExperiment {
    pub family: ConditionalFamily,
    pub sample_size: usize,
    pub config: EstimatorConfig,
    /// Evenly spaced queries over `query_range`.
    pub queries: usize,
    pub query_range: (f64, f64),
    pub replicates: usize,
    pub seed: u64,
}

impl TargetExperiment {
    pub fn new(family: ConditionalFamily, sample_size: usize, config: EstimatorConfig, seed: u64) -> Self {
        Self {
            family,
            sample_size,
            config,
            queries: 10,
            query_range: (0.2, 0.8),
            replicates: 1,
            seed,
        }
    }

    pub fn with_replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    pub fn with_queries(mut self, queries: usize) -> Self {
        self.queries = queries;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    /// Mean of all estimates over queries and replicates.
    pub mean: f64,
    /// Standard deviation of those estimates over the square root of
    /// their count.
    pub std_error: f64,
    pub replicate_means: Vec<f64>,
}

/// Seeded generator for replicate `stream` of base seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `n` pairs with `X ~ U[0, 1]` and `Y | X ~ family(X)`.
pub fn sample_family<R: Rng + ?Sized>(family: &ConditionalFamily, n: usize, rng: &mut R) -> Result<DataSet<f64>> {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.random();
        ys.push(family.at(x)?.sample(rng));
        xs.push(x);
    }
    DataSet::from_xy(&xs, &ys)
}

pub fn empirical_target_experiment(exp: &TargetExperiment) -> Result<TargetEstimate> {
    if !exp.family.is_flat() {
        return Err(Error::InvalidParameter(
            "target experiment needs a family with constant parameters".into(),
        ));
    }
    if exp.replicates == 0 || exp.queries == 0 {
        return Err(Error::InvalidParameter(
            "need at least one replicate and one query".into(),
        ));
    }
    let (a, b) = exp.query_range;
    let q = exp.queries;
    let grid: Vec<f64> = (0..q)
        .map(|i| {
            if q == 1 {
                0.5 * (a + b)
            } else {
                a + (b - a) * i as f64 / (q - 1) as f64
            }
        })
        .collect();
    let queries = Array2::from_shape_vec((q, 1), grid).map_err(|e| Error::Shape(e.to_string()))?;

    let per_replicate: Vec<Vec<f64>> = (0..exp.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(exp.seed, r as u64);
            let data = sample_family(&exp.family, exp.sample_size, &mut rng)?;
            predict(&exp.config, &data, queries.view())
        })
        .collect::<Result<_>>()?;

    let all: Vec<f64> = per_replicate.iter().flatten().copied().collect();
    let n = all.len() as f64;
    let mean = all.iter().sum::<f64>() / n;
    let var = if all.len() > 1 {
        all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(TargetEstimate {
        mean,
        std_error: (var / n).sqrt(),
        replicate_means: per_replicate
            .iter()
            .map(|v| v.iter().sum::<f64>() / v.len() as f64)
            .collect(),
    })
}

/// Weight scaling must leave the fitted coefficients unchanged to this
/// relative tolerance.
pub const SCALING_TOLERANCE: f64 = 1e-10;
/// Normalizing the weights to unit sum must leave them unchanged to this
/// relative tolerance.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Relative coefficient changes at one query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceDeltas {
    pub scaling: f64,
    pub normalization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub trials: usize,
    pub worst_scaling: f64,
    pub worst_normalization: f64,
    pub failures: usize,
    pub passed: bool,
}

fn relative_change(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(f64::MIN_POSITIVE)
    }
}

/// Refits one query with its weights multiplied by `c` and with its weights
/// normalized to unit sum, and reports the relative coefficient changes.
pub fn check_invariance_at(
    config: &EstimatorConfig,
    data: &DataSet<f64>,
    x: &[f64],
    c: f64,
) -> Result<InvarianceDeltas> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {c}")));
    }
    let x = Array1::from(x.to_vec());
    let nbr = knn(data, x.view(), config.neighbors)?;
    let k2 = if config.method == Method::Rsklpr {
        config.k2
    } else {
        K2Variant::None
    };
    let h2 = if k2 == K2Variant::None {
        None
    } else {
        Some(resolve_density_bandwidth(&config.bandwidth, &nbr, data)?)
    };
    let w = robust_weights(&nbr, data, k2, config.k1, h2.as_ref())?;
    let base = wls_polyfit(x.view(), &nbr, data, &w, config.degree)?;
    let scaled = wls_polyfit(x.view(), &nbr, data, &w.scaled(c), config.degree)?;
    let normalized = wls_polyfit(x.view(), &nbr, data, &w.normalized(), config.degree)?;
    Ok(InvarianceDeltas {
        scaling: relative_change(&base.coefficients, &scaled.coefficients),
        normalization: relative_change(&base.coefficients, &normalized.coefficients),
    })
}

/// Random queries inside the predictor bounding box and log-uniform scales
/// in `[1e-3, 1e3]`. Failures are counted, not raised.
pub fn check_invariances(
    config: &EstimatorConfig,
    data: &DataSet<f64>,
    trials: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    config.validate(data.dim())?;
    let bounds = data.bounds();
    let mut rng = stream_rng(seed, 0);
    let mut report = InvarianceReport {
        trials,
        worst_scaling: 0.0,
        worst_normalization: 0.0,
        failures: 0,
        passed: true,
    };
    for _ in 0..trials {
        let x: Vec<f64> = bounds
            .iter()
            .map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect();
        let c = 10f64.powf(rng.random_range(-3.0..3.0));
        let d = check_invariance_at(config, data, &x, c)?;
        report.worst_scaling = report.worst_scaling.max(d.scaling);
        report.worst_normalization = report.worst_normalization.max(d.normalization);
        if d.scaling > SCALING_TOLERANCE || d.normalization > NORMALIZATION_TOLERANCE {
            report.failures += 1;
        }
    }
    report.passed = report.failures == 0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_target_is_the_mean() {
        let v = population_mu_prime(&ConditionalFamily::gaussian(3.0, 1.0), 0.0).unwrap();
        assert_relative_eq!(v, 3.0, epsilon = 1e-6);
        assert!(
            asymptotic_bias(&ConditionalFamily::gaussian(-2.0, 0.3), 0.0)
                .unwrap()
                .abs()
                < 1e-6
        );
    }

    #[test]
    fn exponential_targets() {
        let v1 = population_mu_prime(&ConditionalFamily::exponential(1.0), 0.0).unwrap();
        assert_relative_eq!(v1, 0.5, epsilon = 1e-6);
        let v2 = population_mu_prime(&ConditionalFamily::exponential(2.0), 0.0).unwrap();
        assert_relative_eq!(v2, 0.25, epsilon = 1e-6);
        let b = asymptotic_bias(&ConditionalFamily::exponential(1.0), 0.0).unwrap();
        assert_relative_eq!(b, -0.5, epsilon = 1e-6);
    }

    #[test]
    fn lognormal_bias_is_negative() {
        let b = asymptotic_bias(&ConditionalFamily::lognormal(0.0, 0.5), 0.0).unwrap();
        assert!(b < 0.0);
    }

    #[test]
    fn profiles_follow_the_predictor() {
        let fam = ConditionalFamily::Exponential {
            rate: Profile::Linear {
                intercept: 1.0,
                slope: 1.0,
            },
        };
        assert!(!fam.is_flat());
        let v = population_mu_prime(&fam, 1.0).unwrap();
        assert_relative_eq!(v, 0.25, epsilon = 1e-6);
        assert!(ConditionalFamily::exponential(-1.0).at(0.0).is_err());
    }

    #[test]
    fn invariance_identity_scale_is_exact() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 / 29.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (6.0 * x).sin()).collect();
        let data = DataSet::from_xy(&xs, &ys).unwrap();
        let d = check_invariance_at(&EstimatorConfig::rsklpr(10), &data, &[0.4], 1.0).unwrap();
        assert_eq!(d.scaling, 0.0);
    }

    #[test]
    fn non_flat_family_rejected() {
        let fam = ConditionalFamily::Gaussian {
            mean: Profile::Linear {
                intercept: 0.0,
                slope: 1.0,
            },
            sd: 1.0.into(),
        };
        let exp = TargetExperiment::new(fam, 100, EstimatorConfig::lpr(10), 1);
        assert!(empirical_target_experiment(&exp).is_err());
    }
}
