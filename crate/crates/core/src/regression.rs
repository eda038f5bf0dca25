//! Weighted local polynomial fits and the three estimators built on them:
//! similarity-kernel weighting (`rsklpr`), standard local polynomial
//! regression (`lpr`) and iteratively reweighted robust LOWESS.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{knn, DataSet, Neighborhood};
use crate::error::{Error, Result};
use crate::kernels::{BandwidthSpec, DistanceKernel};
use crate::linalg::lstsq;
use crate::scalar::Scalar;
use crate::similarity::{proximity_weights, resolve_density_bandwidth, robust_weights, K2Variant, WeightVector};

/// Condition estimate above which a fit is flagged as nearly singular.
pub const CONDITION_FLAG_THRESHOLD: f64 = 1e6;
/// Condition estimate above which a weighted design is treated as rank
/// deficient and the degree is lowered.
pub const SINGULAR_THRESHOLD: f64 = 1e10;

/// Local polynomial coefficients around `center`. `coefficients[0]` is the
/// estimate at `center`; for degree 1 the next `d` entries are the slopes,
/// for degree 2 (one predictor only) the last entry is the quadratic term.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit<T> {
    pub center: Array1<T>,
    pub degree: usize,
    pub coefficients: Vec<T>,
    /// Set when the weighted design was close to singular or the degree had
    /// to be lowered.
    pub condition_flag: bool,
}

impl<T: Scalar> PolyFit<T> {
    pub fn estimate(&self) -> T {
        self.coefficients[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rsklpr,
    Lpr,
    RobustLowess,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Rsklpr, Method::Lpr, Method::RobustLowess];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rsklpr => "rsklpr",
            Method::Lpr => "lpr",
            Method::RobustLowess => "robust_lowess",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::InvalidParameter(format!("unknown method {s:?} (expected rsklpr, lpr or robust_lowess)"))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: Method,
    pub neighbors: usize,
    pub degree: usize,
    pub k1: DistanceKernel,
    pub k2: K2Variant,
    pub bandwidth: BandwidthSpec,
    pub robust_iterations: usize,
}

impl Default for EstimatorConfig {
    /// Local linear, Laplacian proximity, conditional density weight,
    /// Scott bandwidths.
    fn default() -> Self {
        Self {
            method: Method::Rsklpr,
            neighbors: 40,
            degree: 1,
            k1: DistanceKernel::Laplacian,
            k2: K2Variant::Conditional,
            bandwidth: BandwidthSpec::scott(),
            robust_iterations: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn rsklpr(neighbors: usize) -> Self {
        Self {
            neighbors,
            ..Self::default()
        }
    }

    pub fn lpr(neighbors: usize) -> Self {
        Self {
            method: Method::Lpr,
            neighbors,
            k2: K2Variant::None,
            ..Self::default()
        }
    }

    /// Classical robust LOWESS: tricube proximity, local linear.
    pub fn robust_lowess(neighbors: usize, iterations: usize) -> Self {
        Self {
            method: Method::RobustLowess,
            neighbors,
            k1: DistanceKernel::Tricube,
            k2: K2Variant::None,
            robust_iterations: iterations,
            ..Self::default()
        }
    }

    pub fn with_k2(mut self, k2: K2Variant) -> Self {
        self.k2 = k2;
        self
    }

    pub fn with_k1(mut self, k1: DistanceKernel) -> Self {
        self.k1 = k1;
        self
    }

    pub fn with_degree(mut self, degree: usize) -> Self {
        self.degree = degree;
        self
    }

    pub fn with_bandwidth(mut self, bandwidth: BandwidthSpec) -> Self {
        self.bandwidth = bandwidth;
        self
    }

    /// Checks method/weight compatibility and the degree against the
    /// predictor dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.neighbors == 0 {
            return Err(Error::InvalidConfig("neighbors must be at least 1".into()));
        }
        check_degree(self.degree, dim)?;
        match self.method {
            Method::Rsklpr => {
                if self.k2 == K2Variant::None {
                    return Err(Error::InvalidConfig(
                        "rsklpr needs a conditional or joint density weight".into(),
                    ));
                }
                self.bandwidth.validate()?;
            }
            Method::Lpr => {
                if self.k2 != K2Variant::None {
                    return Err(Error::InvalidConfig("lpr uses no density weight".into()));
                }
            }
            Method::RobustLowess => {
                if self.k2 != K2Variant::None {
                    return Err(Error::InvalidConfig("robust_lowess uses no density weight".into()));
                }
                if self.robust_iterations == 0 {
                    return Err(Error::InvalidConfig(
                        "robust_lowess needs at least one robustness iteration".into(),
                    ));
                }
                if self.degree != 1 {
                    return Err(Error::InvalidConfig("robust_lowess is local linear".into()));
                }
            }
        }
        Ok(())
    }
}

fn check_degree(degree: usize, dim: usize) -> Result<()> {
    match (degree, dim) {
        (0 | 1, _) => Ok(()),
        (2, 1) => Ok(()),
        (2, _) => Err(Error::InvalidConfig(
            "degree 2 is only supported with a single predictor".into(),
        )),
        _ => Err(Error::InvalidConfig(format!(
            "degree {degree} not supported (0, 1, or 2 with one predictor)"
        ))),
    }
}

fn design_columns(degree: usize, dim: usize) -> usize {
    match degree {
        0 => 1,
        1 => dim + 1,
        _ => 3,
    }
}

/// Weighted least-squares polynomial fit around `x` over the neighborhood.
/// Regressors are centered on `x`, so `coefficients[0]` is the fit at `x`.
///
/// Rank-deficient designs are refit at the next lower degree with
/// `condition_flag` set; failure at degree 0 (no positive weight) is an error.
pub fn wls_polyfit<T: Scalar>(
    x: ArrayView1<'_, T>,
    nbr: &Neighborhood<T>,
    data: &DataSet<T>,
    weights: &WeightVector<T>,
    degree: usize,
) -> Result<PolyFit<T>> {
    let dim = data.dim();
    check_degree(degree, dim)?;
    if x.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            found: x.len(),
        });
    }
    if weights.len() != nbr.len() {
        return Err(Error::Shape(format!(
            "{} weights for {} neighbors",
            weights.len(),
            nbr.len()
        )));
    }
    if weights.weights.iter().any(|&w| !(w >= T::zero() && w.is_finite())) {
        return Err(Error::InvalidParameter(
            "weights must be finite and non-negative".into(),
        ));
    }

    let active: Vec<(usize, T)> = nbr
        .indices
        .iter()
        .zip(&weights.weights)
        .filter(|(_, &w)| w > T::zero())
        .map(|(&i, &w)| (i, w.sqrt()))
        .collect();

    let flag_at = T::lit(CONDITION_FLAG_THRESHOLD).min(T::epsilon().recip() * T::lit(0.01));
    let singular_at = T::lit(SINGULAR_THRESHOLD).min(T::epsilon().recip() * T::lit(0.01));
    let mut flagged = false;
    let mut p = degree;
    loop {
        let cols = design_columns(p, dim);
        if active.len() >= cols {
            let mut a = Array2::zeros((active.len(), cols));
            let mut b = Array1::zeros(active.len());
            for (r, &(i, sw)) in active.iter().enumerate() {
                let row = data.row(i);
                a[[r, 0]] = sw;
                match p {
                    0 => {}
                    1 => {
                        for j in 0..dim {
                            a[[r, j + 1]] = sw * (row[j] - x[j]);
                        }
                    }
                    _ => {
                        let u = row[0] - x[0];
                        a[[r, 1]] = sw * u;
                        a[[r, 2]] = sw * u * u;
                    }
                }
                b[r] = sw * data.response(i);
            }
            if let Some(sol) = lstsq(a, b) {
                if sol.condition <= singular_at {
                    return Ok(PolyFit {
                        center: x.to_owned(),
                        degree: p,
                        coefficients: sol.coefficients.to_vec(),
                        condition_flag: flagged || sol.condition > flag_at,
                    });
                }
            }
        }
        if p == 0 {
            return Err(Error::RankDeficient);
        }
        flagged = true;
        p -= 1;
    }
}

/// Fits a single query point with the configured weights.
pub fn fit_query<T: Scalar>(config: &EstimatorConfig, data: &DataSet<T>, x: ArrayView1<'_, T>) -> Result<PolyFit<T>> {
    let nbr = knn(data, x, config.neighbors)?;
    let k2 = match config.method {
        Method::Rsklpr => config.k2,
        _ => K2Variant::None,
    };
    let h2 = if k2 == K2Variant::None {
        None
    } else {
        Some(resolve_density_bandwidth(&config.bandwidth, &nbr, data)?)
    };
    let weights = robust_weights(&nbr, data, k2, config.k1, h2.as_ref())?;
    wls_polyfit(x, &nbr, data, &weights, config.degree)
}

/// Runs the configured estimator at every query row. `rsklpr` and `lpr`
/// make a single weighted fit per query.
pub fn estimate<T: Scalar>(
    config: &EstimatorConfig,
    data: &DataSet<T>,
    queries: ArrayView2<'_, T>,
) -> Result<Vec<PolyFit<T>>> {
    config.validate(data.dim())?;
    if config.neighbors > data.len() {
        return Err(Error::NeighborCount {
            requested: config.neighbors,
            available: data.len(),
        });
    }
    if queries.ncols() != data.dim() {
        return Err(Error::Dimension {
            expected: data.dim(),
            found: queries.ncols(),
        });
    }
    match config.method {
        Method::Rsklpr | Method::Lpr => (0..queries.nrows())
            .into_par_iter()
            .map(|q| fit_query(config, data, queries.row(q)))
            .collect(),
        Method::RobustLowess => {
            robust_lowess_fit(data, config.neighbors, config.robust_iterations, queries).map(|r| r.fits)
        }
    }
}

/// Point estimates `m̂(x)` for every query row.
pub fn predict<T: Scalar>(config: &EstimatorConfig, data: &DataSet<T>, queries: ArrayView2<'_, T>) -> Result<Vec<T>> {
    Ok(estimate(config, data, queries)?.iter().map(PolyFit::estimate).collect())
}

/// Outcome of the iterative robust LOWESS procedure.
#[derive(Debug, Clone)]
pub struct RobustLowessFit<T> {
    pub fits: Vec<PolyFit<T>>,
    /// Final bisquare robustness factor per training point.
    pub robustness: Vec<T>,
    /// Robustness updates actually applied (fewer than requested when the
    /// residual scale reaches zero).
    pub passes: usize,
}

/// Bisquare robustness factor for residual `r` at scale `s`:
/// `(1 − (r/6s)²)²` inside `|r| < 6s`, otherwise zero.
pub fn bisquare<T: Scalar>(r: T, s: T) -> T {
    let t = r / (T::lit(6.0) * s);
    if t.abs() < T::one() {
        let a = T::one() - t * t;
        a * a
    } else {
        T::zero()
    }
}

fn lowess_point<T: Scalar>(
    data: &DataSet<T>,
    x: ArrayView1<'_, T>,
    neighbors: usize,
    robustness: &[T],
) -> Result<PolyFit<T>> {
    let nbr = knn(data, x, neighbors)?;
    let k1 = proximity_weights(&nbr, DistanceKernel::Tricube);
    let robust: Vec<T> = nbr.indices.iter().map(|&i| robustness[i]).collect();
    let combined = WeightVector::from_parts(k1.clone(), robust);
    let weights = if combined.weights.iter().any(|&w| w > T::zero()) {
        combined
    } else {
        // Every neighbor was rejected; fall back to proximity alone.
        WeightVector::from_parts(k1, vec![T::one(); nbr.len()])
    };
    wls_polyfit(x, &nbr, data, &weights, 1)
}

fn median<T: Scalar>(mut values: Vec<T>) -> T {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / T::lit(2.0)
    }
}

/// Iterative robust LOWESS. Pass 0 is local linear with tricube proximity
/// weights; each of the `iterations` further passes refits with bisquare
/// factors from the previous pass's residuals at the training points.
pub fn robust_lowess_fit<T: Scalar>(
    data: &DataSet<T>,
    neighbors: usize,
    iterations: usize,
    queries: ArrayView2<'_, T>,
) -> Result<RobustLowessFit<T>> {
    if neighbors == 0 || neighbors > data.len() {
        return Err(Error::NeighborCount {
            requested: neighbors,
            available: data.len(),
        });
    }
    let n = data.len();
    let mut robustness = vec![T::one(); n];
    // Residual scale below this is rounding noise on an exact fit.
    let scale = data.responses().iter().map(|v| v.abs()).sum::<T>() / T::from_count(n);
    let zero_scale = T::epsilon() * T::lit(1e3) * scale.max(T::one());
    let mut passes = 0;
    for _ in 0..iterations {
        let fitted: Vec<T> = (0..n)
            .into_par_iter()
            .map(|i| lowess_point(data, data.row(i), neighbors, &robustness).map(|f| f.estimate()))
            .collect::<Result<_>>()?;
        let residuals: Vec<T> = fitted.iter().enumerate().map(|(i, &f)| data.response(i) - f).collect();
        let s = median(residuals.iter().map(|r| r.abs()).collect());
        if s <= zero_scale {
            break;
        }
        robustness = residuals.iter().map(|&r| bisquare(r, s)).collect();
        passes += 1;
    }
    let fits = (0..queries.nrows())
        .into_par_iter()
        .map(|q| lowess_point(data, queries.row(q), neighbors, &robustness))
        .collect::<Result<Vec<_>>>()?;
    Ok(RobustLowessFit {
        fits,
        robustness,
        passes,
    })
}

/// Robust LOWESS predictions at the query rows.
pub fn robust_lowess<T: Scalar>(
    data: &DataSet<T>,
    neighbors: usize,
    iterations: usize,
    queries: ArrayView2<'_, T>,
) -> Result<Vec<T>> {
    Ok(robust_lowess_fit(data, neighbors, iterations, queries)?
        .fits
        .iter()
        .map(PolyFit::estimate)
        .collect())
}
