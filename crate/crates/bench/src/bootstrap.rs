//! Percentile bootstrap intervals for local regression estimates.

use ndarray::{Array1, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use rsklpr::theory::stream_rng;
use rsklpr::{predict, DataSet, EstimatorConfig};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapCi {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub replicates: usize,
    /// Replicates whose refit failed and were left out.
    pub skipped: usize,
}

/// Linear interpolation between order statistics (`sorted` ascending).
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Resamples the `T` pairs with replacement `replicates` times and refits at
/// every query. Replicate `b` draws from its own stream of `seed`, so the
/// result does not depend on thread scheduling.
pub fn bootstrap_ci(
    data: &DataSet<f64>,
    config: &EstimatorConfig,
    queries: ArrayView2<'_, f64>,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapCi> {
    if replicates < 2 {
        return Err(BenchError::Usage(format!(
            "need at least 2 replicates, got {replicates}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(BenchError::Usage(format!("level must be in (0, 1), got {level}")));
    }
    config.validate(data.dim())?;
    let t = data.len();
    let fits: Vec<Option<Vec<f64>>> = (0..replicates as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b);
            let idx: Vec<usize> = (0..t).map(|_| rng.random_range(0..t)).collect();
            predict(config, &data.select(&idx), queries).ok()
        })
        .collect();
    let ok: Vec<&Vec<f64>> = fits.iter().flatten().collect();
    let skipped = replicates - ok.len();
    if ok.is_empty() {
        return Err(BenchError::AllReplicatesFailed {
            failed: skipped,
            replicates,
        });
    }
    let alpha = 0.5 * (1.0 - level);
    let (mut lower, mut upper) = (Vec::with_capacity(queries.nrows()), Vec::with_capacity(queries.nrows()));
    for q in 0..queries.nrows() {
        let mut col: Vec<f64> = ok.iter().map(|f| f[q]).collect();
        col.sort_by(f64::total_cmp);
        lower.push(percentile(&col, alpha));
        upper.push(percentile(&col, 1.0 - alpha));
    }
    Ok(BootstrapCi {
        lower,
        upper,
        replicates,
        skipped,
    })
}

/// Point estimates plus intervals, in query order.
pub fn fit_with_ci(
    data: &DataSet<f64>,
    config: &EstimatorConfig,
    queries: ArrayView2<'_, f64>,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<(Array1<f64>, BootstrapCi)> {
    let est = predict(config, data, queries)?;
    let ci = bootstrap_ci(data, config, queries, replicates, level, seed)?;
    Ok((Array1::from(est), ci))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&s, 0.0), 1.0);
        assert_eq!(percentile(&s, 0.5), 3.0);
        assert_eq!(percentile(&s, 1.0), 5.0);
        assert!((percentile(&s, 0.1) - 1.4).abs() < 1e-12);
    }

    #[test]
    fn constant_data_gives_zero_width() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 / 29.0).collect();
        let data = DataSet::from_xy(&xs, &vec![2.5; 30]).unwrap();
        let q = ndarray::array![[0.1], [0.5], [0.9]];
        let cfg = EstimatorConfig::lpr(10);
        let ci = bootstrap_ci(&data, &cfg, q.view(), 50, 0.9, 3).unwrap();
        for (lo, hi) in ci.lower.iter().zip(&ci.upper) {
            assert!((hi - lo).abs() < 1e-12);
            assert!((lo - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let data = DataSet::from_xy(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]).unwrap();
        let q = ndarray::array![[1.0]];
        let cfg = EstimatorConfig::lpr(3);
        assert!(bootstrap_ci(&data, &cfg, q.view(), 1, 0.9, 0).is_err());
        assert!(bootstrap_ci(&data, &cfg, q.view(), 10, 1.0, 0).is_err());
    }
}
