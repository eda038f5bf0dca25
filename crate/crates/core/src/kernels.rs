//! Distance kernels for the proximity weight and factorized Gaussian kernel
//! density estimation for the density weight, plus bandwidth rules.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Un-normalized kernels on a `[0, 1]` normalized distance. Constant
/// factors cancel in a weighted fit, so none are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKernel {
    #[default]
    Laplacian,
    Gaussian,
    Epanechnikov,
    Tricube,
    Uniform,
}

impl DistanceKernel {
    pub const ALL: [DistanceKernel; 5] = [
        DistanceKernel::Laplacian,
        DistanceKernel::Gaussian,
        DistanceKernel::Epanechnikov,
        DistanceKernel::Tricube,
        DistanceKernel::Uniform,
    ];

    /// Evaluates the kernel at normalized distance `u ∈ [0, 1]`.
    pub fn eval<T: Scalar>(self, u: T) -> Result<T> {
        if !(u >= T::zero() && u <= T::one()) {
            return Err(Error::DistanceOutOfRange(u.as_f64()));
        }
        Ok(self.eval_unchecked(u))
    }

    pub(crate) fn eval_unchecked<T: Scalar>(self, u: T) -> T {
        let one = T::one();
        match self {
            DistanceKernel::Laplacian => (-u).exp(),
            DistanceKernel::Gaussian => (-u * u / T::lit(2.0)).exp(),
            DistanceKernel::Epanechnikov => (one - u * u).max(T::zero()),
            DistanceKernel::Tricube => {
                let t = (one - u * u * u).max(T::zero());
                t * t * t
            }
            DistanceKernel::Uniform => one,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DistanceKernel::Laplacian => "laplacian",
            DistanceKernel::Gaussian => "gaussian",
            DistanceKernel::Epanechnikov => "epanechnikov",
            DistanceKernel::Tricube => "tricube",
            DistanceKernel::Uniform => "uniform",
        }
    }
}

impl fmt::Display for DistanceKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DistanceKernel::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown distance kernel {s:?} (expected laplacian, gaussian, epanechnikov, tricube or uniform)"
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    #[default]
    Scott,
    Silverman,
    Fixed,
    CvGrid,
}

/// How density bandwidths are chosen. Resolved values form a diagonal
/// bandwidth matrix, one entry per sample column.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BandwidthSpec {
    pub rule: BandwidthRule,
    /// Per-dimension values for [`BandwidthRule::Fixed`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_values: Option<Vec<f64>>,
    /// Multipliers of the Scott baseline tried by [`BandwidthRule::CvGrid`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv_folds: Option<usize>,
}

pub const DEFAULT_CV_FOLDS: usize = 5;

impl BandwidthSpec {
    pub fn scott() -> Self {
        Self::default()
    }

    pub fn silverman() -> Self {
        Self {
            rule: BandwidthRule::Silverman,
            ..Self::default()
        }
    }

    pub fn fixed(values: Vec<f64>) -> Self {
        Self {
            rule: BandwidthRule::Fixed,
            fixed_values: Some(values),
            ..Self::default()
        }
    }

    pub fn cv_grid(grid: Vec<f64>, folds: usize) -> Self {
        Self {
            rule: BandwidthRule::CvGrid,
            cv_grid: Some(grid),
            cv_folds: Some(folds),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.rule {
            BandwidthRule::Fixed => match &self.fixed_values {
                Some(v) if !v.is_empty() => {
                    if let Some(dim) = v.iter().position(|h| !(h.is_finite() && *h > 0.0)) {
                        return Err(Error::NonPositiveBandwidth { dim });
                    }
                }
                _ => {
                    return Err(Error::InvalidConfig(
                        "fixed bandwidth rule requires fixed_values".into(),
                    ))
                }
            },
            BandwidthRule::CvGrid => match &self.cv_grid {
                Some(g) if !g.is_empty() => {
                    if g.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
                        return Err(Error::InvalidConfig("cv_grid multipliers must be positive".into()));
                    }
                    if self.cv_folds.is_some_and(|f| f < 2) {
                        return Err(Error::InvalidConfig("cv_folds must be at least 2".into()));
                    }
                }
                _ => {
                    return Err(Error::InvalidConfig(
                        "cv_grid rule requires a non-empty candidate grid".into(),
                    ))
                }
            },
            BandwidthRule::Scott | BandwidthRule::Silverman => {}
        }
        Ok(())
    }

    /// Whether resolving depends on sample spread.
    pub fn is_data_driven(&self) -> bool {
        self.rule != BandwidthRule::Fixed
    }
}

/// Resolves a bandwidth per column of `samples` (`n × k`).
pub fn resolve_bandwidth<T: Scalar>(spec: &BandwidthSpec, samples: ArrayView2<'_, T>) -> Result<Array1<T>> {
    spec.validate()?;
    let (n, k) = samples.dim();
    match spec.rule {
        BandwidthRule::Fixed => {
            let values = spec.fixed_values.as_deref().unwrap_or_default();
            if values.len() != k {
                return Err(Error::Dimension {
                    expected: k,
                    found: values.len(),
                });
            }
            Ok(values.iter().map(|&h| T::lit(h)).collect())
        }
        BandwidthRule::Scott => scott(samples),
        BandwidthRule::Silverman => {
            let factor = (T::lit(4.0) / T::from_count(k + 2)).powf(T::one() / T::from_count(k + 4));
            Ok(scott(samples)? * factor)
        }
        BandwidthRule::CvGrid => {
            let grid = spec.cv_grid.as_deref().unwrap_or_default();
            let folds = spec.cv_folds.unwrap_or(DEFAULT_CV_FOLDS).min(n);
            cv_bandwidth(samples, grid, folds)
        }
    }
}

/// Scott's rule: `σ̂_j · n^(-1/(k+4))` per column.
fn scott<T: Scalar>(samples: ArrayView2<'_, T>) -> Result<Array1<T>> {
    let (n, k) = samples.dim();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, found: n });
    }
    let factor = T::from_count(n).powf(-T::one() / T::from_count(k + 4));
    let mut out = Array1::zeros(k);
    for (j, col) in samples.axis_iter(Axis(1)).enumerate() {
        let sd = sample_sd(col);
        if !(sd > T::zero()) {
            return Err(Error::ZeroVariance { dim: j });
        }
        out[j] = sd * factor;
    }
    Ok(out)
}

fn sample_sd<T: Scalar>(col: ArrayView1<'_, T>) -> T {
    let n = T::from_count(col.len());
    let mean = col.iter().copied().sum::<T>() / n;
    let ss = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
    (ss / (n - T::one())).sqrt()
}

fn check_bandwidths<T: Scalar>(bandwidths: ArrayView1<'_, T>) -> Result<()> {
    match bandwidths.iter().position(|&h| !(h > T::zero() && h.is_finite())) {
        Some(dim) => Err(Error::NonPositiveBandwidth { dim }),
        None => Ok(()),
    }
}

/// Product-Gaussian kernel density at `point`: the mean over samples of
/// `∏_j φ((point_j − s_ij)/h_j)/h_j`. A proper density on `ℝᵏ`.
pub fn kde_density<T: Scalar>(
    point: ArrayView1<'_, T>,
    samples: ArrayView2<'_, T>,
    bandwidths: ArrayView1<'_, T>,
) -> Result<T> {
    let (n, k) = samples.dim();
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, found: 0 });
    }
    if point.len() != k || bandwidths.len() != k {
        return Err(Error::Dimension {
            expected: k,
            found: if point.len() != k {
                point.len()
            } else {
                bandwidths.len()
            },
        });
    }
    check_bandwidths(bandwidths)?;
    let inv: Vec<T> = bandwidths.iter().map(|&h| h.recip()).collect();
    let norm = normalizer(&inv);
    Ok(kernel_sum(&point.to_vec(), samples, &inv) * norm / T::from_count(n))
}

/// `∏_j (1/(h_j √(2π)))`.
fn normalizer<T: Scalar>(inv_bandwidths: &[T]) -> T {
    let root_two_pi = (T::lit(2.0) * T::PI()).sqrt();
    inv_bandwidths.iter().fold(T::one(), |acc, &ih| acc * ih / root_two_pi)
}

/// `Σ_i exp(-½ Σ_j ((p_j − s_ij)/h_j)²)` without normalization.
fn kernel_sum<T: Scalar>(p: &[T], samples: ArrayView2<'_, T>, inv: &[T]) -> T {
    let half = T::lit(0.5);
    samples
        .outer_iter()
        .map(|s| {
            let q = s
                .iter()
                .zip(p)
                .zip(inv)
                .map(|((&sv, &pv), &ih)| {
                    let z = (pv - sv) * ih;
                    z * z
                })
                .sum::<T>();
            (-half * q).exp()
        })
        .sum()
}

/// Product-Gaussian density evaluated at each sample row in turn (self
/// term included), returned up to the common factor
/// `1/(n ∏ h_j √(2π))` when `normalized` is false.
pub(crate) fn kde_at_rows<T: Scalar>(samples: ArrayView2<'_, T>, bandwidths: &[T], normalized: bool) -> Vec<T> {
    let n = samples.nrows();
    let inv: Vec<T> = bandwidths.iter().map(|&h| h.recip()).collect();
    let scale = if normalized {
        normalizer(&inv) / T::from_count(n)
    } else {
        T::one()
    };
    samples
        .outer_iter()
        .map(|row| kernel_sum(&row.to_vec(), samples, &inv) * scale)
        .collect()
}

/// Conditional density `f̂(y | x) = f̂(x, y) / f̂(x)` from joint rows
/// `(predictors_i, responses_i)`, with the same predictor bandwidths in
/// numerator and denominator.
pub fn conditional_density<T: Scalar>(
    y: T,
    x: ArrayView1<'_, T>,
    predictors: ArrayView2<'_, T>,
    responses: ArrayView1<'_, T>,
    hx: ArrayView1<'_, T>,
    hy: T,
) -> Result<T> {
    let (n, d) = predictors.dim();
    if responses.len() != n {
        return Err(Error::Shape(format!(
            "{n} predictor rows but {} responses",
            responses.len()
        )));
    }
    let marginal = kde_density(x, predictors, hx)?;
    if !(hy > T::zero() && hy.is_finite()) {
        return Err(Error::NonPositiveBandwidth { dim: d });
    }
    if marginal <= T::zero() {
        return Err(Error::ZeroMarginal);
    }
    let joint_samples = stack_joint(predictors, responses);
    let mut point = x.to_vec();
    point.push(y);
    let mut h = hx.to_vec();
    h.push(hy);
    let joint = kde_density(
        ArrayView1::from(&point[..]),
        joint_samples.view(),
        ArrayView1::from(&h[..]),
    )?;
    Ok(joint / marginal)
}

/// `[predictors | responses]` as an `n × (d+1)` matrix.
pub fn stack_joint<T: Scalar>(predictors: ArrayView2<'_, T>, responses: ArrayView1<'_, T>) -> Array2<T> {
    let (n, d) = predictors.dim();
    let mut out = Array2::zeros((n, d + 1));
    out.slice_mut(ndarray::s![.., ..d]).assign(&predictors);
    out.column_mut(d).assign(&responses);
    out
}

/// Picks the multiplier of the Scott baseline with the highest held-out
/// mean log-density. Rows are assigned to folds round-robin; ties go to
/// the smaller multiplier.
pub fn cv_bandwidth<T: Scalar>(samples: ArrayView2<'_, T>, grid: &[f64], folds: usize) -> Result<Array1<T>> {
    let n = samples.nrows();
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty bandwidth grid".into()));
    }
    if folds < 2 || folds > n {
        return Err(Error::InvalidParameter(format!(
            "cross-validation needs 2 <= folds <= n, got folds={folds}, n={n}"
        )));
    }
    let baseline = scott(samples)?;

    let mut candidates: Vec<f64> = grid.to_vec();
    candidates.sort_by(|a, b| a.total_cmp(b));
    candidates.dedup();

    let splits: Vec<(Array2<T>, Array2<T>)> = (0..folds)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|i| i % folds == f);
            (samples.select(Axis(0), &test), samples.select(Axis(0), &train))
        })
        .collect();

    let mut best: Option<(T, f64)> = None;
    for &m in &candidates {
        let h = &baseline * T::lit(m);
        let mut total = T::zero();
        for (test, train) in &splits {
            for row in test.outer_iter() {
                total = total + kde_density(row, train.view(), h.view())?.ln();
            }
        }
        let score = total / T::from_count(n);
        if score.is_nan() || score == T::neg_infinity() {
            continue;
        }
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, m));
        }
    }
    match best {
        Some((_, m)) => Ok(baseline * T::lit(m)),
        None => Err(Error::DegenerateCrossValidation),
    }
}
