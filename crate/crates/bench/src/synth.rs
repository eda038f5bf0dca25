//! Seeded synthetic regression data.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, LogNormal, Normal, Weibull};
use rsklpr::theory::stream_rng;
use rsklpr::DataSet;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Regression functions on `[0, 1]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    /// `x · sin(4πx)`.
    SineHetero,
    /// `2x`.
    Line,
    /// Three Gaussian bumps of different heights and widths.
    Bumps,
    /// `sin(2π x₁) · cos(π x₂)` on the unit square.
    Surface2d,
}

impl Curve {
    pub const ALL: [Curve; 4] = [Curve::SineHetero, Curve::Line, Curve::Bumps, Curve::Surface2d];

    pub fn dim(self) -> usize {
        match self {
            Curve::Surface2d => 2,
            _ => 1,
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        use std::f64::consts::PI;
        match self {
            Curve::SineHetero => x[0] * (4.0 * PI * x[0]).sin(),
            Curve::Line => 2.0 * x[0],
            Curve::Bumps => {
                const BUMPS: [(f64, f64, f64); 3] = [(0.25, 1.0, 0.05), (0.5, 0.6, 0.08), (0.75, 0.9, 0.04)];
                BUMPS
                    .iter()
                    .map(|&(c, h, w)| h * (-((x[0] - c) / w).powi(2)).exp())
                    .sum()
            }
            Curve::Surface2d => (2.0 * PI * x[0]).sin() * (PI * x[1]).cos(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Curve::SineHetero => "sine_hetero",
            Curve::Line => "line",
            Curve::Bumps => "bumps",
            Curve::Surface2d => "surface2d",
        }
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Curve {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Curve::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            BenchError::Usage(format!(
                "unknown curve {s:?} (expected sine_hetero, line, bumps or surface2d)"
            ))
        })
    }
}

/// Additive noise distributions. `GaussianHetero` has standard deviation
/// `base + slope · x̄` where `x̄` is the mean predictor coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NoiseFamily {
    GaussianHomo {
        sigma: f64,
    },
    GaussianHetero {
        base: f64,
        slope: f64,
    },
    Exponential {
        rate: f64,
    },
    #[serde(rename = "lognormal")]
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    Weibull {
        shape: f64,
        scale: f64,
    },
}

impl NoiseFamily {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseFamily::GaussianHomo { .. } => "gaussian_homo",
            NoiseFamily::GaussianHetero { .. } => "gaussian_hetero",
            NoiseFamily::Exponential { .. } => "exponential",
            NoiseFamily::LogNormal { .. } => "lognormal",
            NoiseFamily::Gamma { .. } => "gamma",
            NoiseFamily::Weibull { .. } => "weibull",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| BenchError::Usage(format!("{} {what} must be positive, got {v}", self.name()));
        let check = |what: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(bad(what, v))
            }
        };
        match *self {
            NoiseFamily::GaussianHomo { sigma } => check("sigma", sigma),
            NoiseFamily::GaussianHetero { base, slope } => {
                check("base", base)?;
                if !(slope.is_finite() && base + slope.min(0.0) > 0.0) {
                    return Err(BenchError::Usage(format!(
                        "gaussian_hetero sigma must stay positive on [0, 1] (base {base}, slope {slope})"
                    )));
                }
                Ok(())
            }
            NoiseFamily::Exponential { rate } => check("rate", rate),
            NoiseFamily::LogNormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(BenchError::Usage("lognormal mu must be finite".into()));
                }
                check("sigma", sigma)
            }
            NoiseFamily::Gamma { shape, scale } | NoiseFamily::Weibull { shape, scale } => {
                check("shape", shape)?;
                check("scale", scale)
            }
        }
    }

    fn hetero_sigma(base: f64, slope: f64, x: &[f64]) -> f64 {
        base + slope * x.iter().sum::<f64>() / x.len() as f64
    }

    /// `E[noise | x]`.
    pub fn mean(&self, x: &[f64]) -> f64 {
        let _ = x;
        match *self {
            NoiseFamily::GaussianHomo { .. } | NoiseFamily::GaussianHetero { .. } => 0.0,
            NoiseFamily::Exponential { rate } => rate.recip(),
            NoiseFamily::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            NoiseFamily::Gamma { shape, scale } => shape * scale,
            NoiseFamily::Weibull { shape, scale } => scale * statrs::function::gamma::gamma(1.0 + shape.recip()),
        }
    }

    /// Standard deviation of the noise at `x`.
    pub fn sd(&self, x: &[f64]) -> f64 {
        match *self {
            NoiseFamily::GaussianHomo { sigma } => sigma,
            NoiseFamily::GaussianHetero { base, slope } => Self::hetero_sigma(base, slope, x),
            NoiseFamily::Exponential { rate } => rate.recip(),
            NoiseFamily::LogNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                ((s2.exp() - 1.0) * (2.0 * mu + s2).exp()).sqrt()
            }
            NoiseFamily::Gamma { shape, scale } => shape.sqrt() * scale,
            NoiseFamily::Weibull { shape, scale } => {
                let g1 = statrs::function::gamma::gamma(1.0 + shape.recip());
                let g2 = statrs::function::gamma::gamma(1.0 + 2.0 / shape);
                scale * (g2 - g1 * g1).sqrt()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> f64 {
        match *self {
            NoiseFamily::GaussianHomo { sigma } => Normal::new(0.0, sigma).expect("validated").sample(rng),
            NoiseFamily::GaussianHetero { base, slope } => Normal::new(0.0, Self::hetero_sigma(base, slope, x))
                .expect("validated")
                .sample(rng),
            NoiseFamily::Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
            NoiseFamily::LogNormal { mu, sigma } => LogNormal::new(mu, sigma).expect("validated").sample(rng),
            NoiseFamily::Gamma { shape, scale } => Gamma::new(shape, scale).expect("validated").sample(rng),
            NoiseFamily::Weibull { shape, scale } => Weibull::new(scale, shape).expect("validated").sample(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    /// Subtract the analytic noise mean so the target stays `m(x)`.
    pub center: bool,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, center: bool) -> Self {
        Self { family, center }
    }
}

/// Gross outliers: a fraction of responses shifted up by a multiple of the
/// local noise standard deviation. Ground truth is not affected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contamination {
    pub fraction: f64,
    pub offset_sds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub curve: Curve,
    pub n: usize,
    pub noise: NoiseSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contamination: Option<Contamination>,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(curve: Curve, n: usize, noise: NoiseSpec, seed: u64) -> Self {
        Self {
            curve,
            n,
            noise,
            contamination: None,
            seed,
        }
    }

    pub fn with_contamination(mut self, fraction: f64, offset_sds: f64) -> Self {
        self.contamination = Some(Contamination { fraction, offset_sds });
        self
    }

    /// The declared ground truth at `x`: `m(x)` for centered noise,
    /// `m(x) + E[noise]` otherwise.
    pub fn truth_at(&self, x: &[f64]) -> f64 {
        let m = self.curve.eval(x);
        if self.noise.center {
            m
        } else {
            m + self.noise.family.mean(x)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub data: DataSet<f64>,
    /// Ground truth at each training point.
    pub truth: Vec<f64>,
}

/// Draws `X ~ U[0, 1]^d` and `Y = m(X) + noise`, reproducibly from the seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Synthetic> {
    if spec.n < 2 {
        return Err(BenchError::Usage(format!("need n >= 2, got {}", spec.n)));
    }
    spec.noise.family.validate()?;
    if let Some(c) = spec.contamination {
        if !(0.0..=1.0).contains(&c.fraction) || !c.offset_sds.is_finite() {
            return Err(BenchError::Usage("contamination fraction must be in [0, 1]".into()));
        }
    }
    let d = spec.curve.dim();
    let mut rng = stream_rng(spec.seed, 0);
    let xs: Vec<f64> = (0..spec.n * d).map(|_| rng.random::<f64>()).collect();
    let predictors = Array2::from_shape_vec((spec.n, d), xs).expect("shape matches");
    let mut ys = Vec::with_capacity(spec.n);
    let mut truth = Vec::with_capacity(spec.n);
    for row in predictors.outer_iter() {
        let x = row.as_slice().expect("standard layout");
        let mut noise = spec.noise.family.sample(x, &mut rng);
        if spec.noise.center {
            noise -= spec.noise.family.mean(x);
        }
        ys.push(spec.curve.eval(x) + noise);
        truth.push(spec.truth_at(x));
    }
    if let Some(c) = spec.contamination {
        let k = (c.fraction * spec.n as f64).round() as usize;
        for i in rand::seq::index::sample(&mut rng, spec.n, k).into_iter() {
            let x = predictors.row(i);
            ys[i] += c.offset_sds * spec.noise.family.sd(x.as_slice().expect("standard layout"));
        }
    }
    let data = DataSet::new(predictors, Array1::from(ys))?;
    Ok(Synthetic { data, truth })
}

/// `points` evenly spaced values per axis over `[lo, hi]`, as a
/// `points^d × d` query matrix in row-major grid order.
pub fn grid_queries(bounds: &[(f64, f64)], points: usize) -> Array2<f64> {
    let d = bounds.len();
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .map(|&(lo, hi)| {
            (0..points)
                .map(|i| {
                    if points == 1 {
                        0.5 * (lo + hi)
                    } else {
                        lo + (hi - lo) * i as f64 / (points - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    let total = points.pow(d as u32);
    let mut out = Array2::zeros((total, d));
    for r in 0..total {
        let mut rem = r;
        for j in (0..d).rev() {
            out[[r, j]] = axes[j][rem % points];
            rem /= points;
        }
    }
    out
}
