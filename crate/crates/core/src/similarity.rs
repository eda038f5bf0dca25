//! Compound similarity weights: a proximity kernel on normalized predictor
//! distance times a density weight estimated from the neighborhood itself.
//!
//! The density weight is one factor of a separable kernel
//! `K2((x, y), (x', y')) = c(x, y) · w(x', y')`. The `c(x, y)` factor scales
//! every term of the local loss equally, so it is never computed; only
//! `w(X_i, Y_i)` is.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{DataSet, Neighborhood};
use crate::error::{Error, Result};
use crate::kernels::{kde_at_rows, resolve_bandwidth, stack_joint, BandwidthSpec, DistanceKernel};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum K2Variant {
    /// `w = f̂(Y_i | X_i)`: down-weights response outliers.
    #[default]
    Conditional,
    /// `w = f̂(X_i, Y_i)`: also down-weights isolated predictors.
    Joint,
    /// `w = 1`: standard local polynomial regression.
    None,
}

impl K2Variant {
    pub fn name(self) -> &'static str {
        match self {
            K2Variant::Conditional => "conditional",
            K2Variant::Joint => "joint",
            K2Variant::None => "none",
        }
    }
}

impl fmt::Display for K2Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for K2Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conditional" => Ok(K2Variant::Conditional),
            "joint" => Ok(K2Variant::Joint),
            "none" => Ok(K2Variant::None),
            _ => Err(Error::InvalidParameter(format!(
                "unknown density weight {s:?} (expected conditional, joint or none)"
            ))),
        }
    }
}

/// Per-neighbor weights, `weights[i] = k1_part[i] * k2_part[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    pub weights: Vec<T>,
    pub k1_part: Vec<T>,
    pub k2_part: Vec<T>,
}

impl<T: Scalar> WeightVector<T> {
    pub fn from_parts(k1_part: Vec<T>, k2_part: Vec<T>) -> Self {
        let weights = k1_part.iter().zip(&k2_part).map(|(&a, &b)| a * b).collect();
        Self {
            weights,
            k1_part,
            k2_part,
        }
    }

    /// Uniform weights of length `n`.
    pub fn uniform(n: usize) -> Self {
        Self::from_parts(vec![T::one(); n], vec![T::one(); n])
    }

    /// Every weight multiplied by `c`; the parts are left as they were.
    pub fn scaled(&self, c: T) -> Self {
        Self {
            weights: self.weights.iter().map(|&w| w * c).collect(),
            k1_part: self.k1_part.clone(),
            k2_part: self.k2_part.clone(),
        }
    }

    /// Weights divided by their sum.
    pub fn normalized(&self) -> Self {
        let total: T = self.weights.iter().copied().sum();
        self.scaled(total.recip())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Density bandwidths for the `[x, y]` columns of one neighborhood.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityBandwidth<T> {
    /// `d` predictor bandwidths followed by the response bandwidth.
    Resolved(Array1<T>),
    /// A data-driven rule found no spread in some column (for example all
    /// responses equal); the density weight falls back to 1.
    ZeroSpread,
}

/// Resolves density bandwidths on the neighborhood's joint `[X_i, Y_i]`
/// sample. The predictor part is shared by the joint and marginal
/// estimates so the conditional estimate stays a proper density in `y`.
pub fn resolve_density_bandwidth<T: Scalar>(
    spec: &BandwidthSpec,
    nbr: &Neighborhood<T>,
    data: &DataSet<T>,
) -> Result<DensityBandwidth<T>> {
    let joint = neighborhood_joint(nbr, data);
    match resolve_bandwidth(spec, joint.view()) {
        Ok(h) => Ok(DensityBandwidth::Resolved(h)),
        Err(Error::ZeroVariance { .. } | Error::TooFewSamples { .. }) if spec.is_data_driven() => {
            Ok(DensityBandwidth::ZeroSpread)
        }
        Err(e) => Err(e),
    }
}

fn neighborhood_joint<T: Scalar>(nbr: &Neighborhood<T>, data: &DataSet<T>) -> ndarray::Array2<T> {
    let xs = data.predictors().select(Axis(0), &nbr.indices);
    let ys = data.responses().select(Axis(0), &nbr.indices);
    stack_joint(xs.view(), ys.view())
}

/// Proximity weights on normalized distance. Degenerate neighborhoods, and
/// bounded kernels that vanish on every neighbor, get uniform weights.
pub fn proximity_weights<T: Scalar>(nbr: &Neighborhood<T>, k1: DistanceKernel) -> Vec<T> {
    if nbr.degenerate {
        return vec![T::one(); nbr.len()];
    }
    let w: Vec<T> = nbr.normalized_distances.iter().map(|&u| k1.eval_unchecked(u)).collect();
    if w.iter().all(|&v| v <= T::zero()) {
        vec![T::one(); nbr.len()]
    } else {
        w
    }
}

/// Computes `K1 · K2` weights for every neighbor. Densities are estimated
/// over the neighborhood's own points.
pub fn robust_weights<T: Scalar>(
    nbr: &Neighborhood<T>,
    data: &DataSet<T>,
    variant: K2Variant,
    k1: DistanceKernel,
    h2: Option<&DensityBandwidth<T>>,
) -> Result<WeightVector<T>> {
    let k1_part = proximity_weights(nbr, k1);
    let n = nbr.len();
    let k2_part = match (variant, h2) {
        (K2Variant::None, _) => vec![T::one(); n],
        (_, None) => return Err(Error::UnresolvedBandwidth),
        (_, Some(DensityBandwidth::ZeroSpread)) => vec![T::one(); n],
        (_, Some(DensityBandwidth::Resolved(h))) => {
            let d = data.dim();
            if h.len() != d + 1 {
                return Err(Error::Dimension {
                    expected: d + 1,
                    found: h.len(),
                });
            }
            if let Some(dim) = h.iter().position(|&v| !(v > T::zero() && v.is_finite())) {
                return Err(Error::NonPositiveBandwidth { dim });
            }
            let joint_sample = neighborhood_joint(nbr, data);
            let h = h.to_vec();
            let joint = kde_at_rows(joint_sample.view(), &h, true);
            match variant {
                K2Variant::Joint => joint,
                _ => {
                    let xs = joint_sample.slice(ndarray::s![.., ..d]);
                    let marginal = kde_at_rows(xs, &h[..d], true);
                    joint
                        .iter()
                        .zip(&marginal)
                        .map(|(&j, &m)| if m > T::zero() { j / m } else { T::zero() })
                        .collect()
                }
            }
        }
    };
    Ok(WeightVector::from_parts(k1_part, k2_part))
}

/// Quadratic loss times a Gaussian density in the residual:
/// `r² · φ(r/σ)/σ` at each grid point.
pub fn effective_loss_curve<T: Scalar>(residuals: ArrayView1<'_, T>, sigma: T) -> Result<Array1<T>> {
    if !(sigma > T::zero() && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let norm = (T::lit(2.0) * T::PI()).sqrt() * sigma;
    Ok(residuals.mapv(|r| {
        let z = r / sigma;
        r * r * (-z * z / T::lit(2.0)).exp() / norm
    }))
}
