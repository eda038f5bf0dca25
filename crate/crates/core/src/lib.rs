//! Local polynomial regression whose neighbor weights combine predictor
//! proximity with a kernel density estimate of each neighbor's
//! `(predictor, response)` pair.
//!
//! A neighbor's weight is `K1(‖X_i − x‖) · w(X_i, Y_i)` where `K1` is a
//! distance kernel on neighborhood-normalized distance and `w` is either the
//! conditional density `f̂(Y_i | X_i)` or the joint density `f̂(X_i, Y_i)`,
//! estimated from the neighborhood. Points with improbable responses get
//! small weights in a single weighted least-squares pass, with no
//! iteration.
//!
//! ```
//! use ndarray::array;
//! use rsklpr::{predict, DataSet, EstimatorConfig};
//!
//! let xs: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
//! let mut ys: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
//! ys[25] += 10.0;
//! let data = DataSet::from_xy(&xs, &ys).unwrap();
//! let fit = predict(&EstimatorConfig::rsklpr(15), &data, array![[0.5]].view()).unwrap();
//! assert!((fit[0] - 1.0).abs() < 0.3);
//! ```
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below name the concrete instantiations.

// `!(a > b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod regression;
pub mod scalar;
pub mod similarity;
pub mod theory;

pub use dataset::{knn, normalize_distances, predictor_columns, DataSet, Neighborhood};
pub use error::{Error, ErrorKind, Result};
pub use kernels::{
    conditional_density, cv_bandwidth, kde_density, resolve_bandwidth, BandwidthRule, BandwidthSpec, DistanceKernel,
    DEFAULT_CV_FOLDS,
};
pub use regression::{
    estimate, fit_query, predict, robust_lowess, robust_lowess_fit, wls_polyfit, EstimatorConfig, Method, PolyFit,
    RobustLowessFit,
};
pub use scalar::Scalar;
pub use similarity::{
    effective_loss_curve, proximity_weights, resolve_density_bandwidth, robust_weights, DensityBandwidth, K2Variant,
    WeightVector,
};

pub type DataSet64 = DataSet<f64>;
pub type DataSet32 = DataSet<f32>;
pub type Neighborhood64 = Neighborhood<f64>;
pub type Neighborhood32 = Neighborhood<f32>;
pub type PolyFit64 = PolyFit<f64>;
pub type PolyFit32 = PolyFit<f32>;
pub type WeightVector64 = WeightVector<f64>;
pub type WeightVector32 = WeightVector<f32>;
