//! Versioned benchmark configuration.

use std::path::Path;

use rsklpr::{BandwidthSpec, DistanceKernel, EstimatorConfig, K2Variant};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::synth::{Curve, NoiseFamily};

pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub version: u32,
    pub estimator: EstimatorDefaults,
    pub evaluation: Evaluation,
    pub gaussian: GaussianSuite,
    pub asymmetric: AsymmetricSuite,
    pub density_sweep: DensitySweep,
    pub neighbor_sweep: NeighborSweep,
    pub loss_curves: LossCurves,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorDefaults {
    /// Neighborhood size as a fraction of `n` where a suite does not sweep it.
    pub neighbor_fraction: f64,
    pub min_neighbors: usize,
    pub degree: usize,
    pub k1: DistanceKernel,
    pub k2: K2Variant,
    pub robust_iterations: usize,
    pub bandwidth: BandwidthSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Evaluation {
    pub grid_points: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSuite {
    pub curve: Curve,
    pub n: usize,
    pub noises: Vec<NoiseFamily>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymmetricSuite {
    pub curve: Curve,
    pub center: bool,
    pub sizes: Vec<usize>,
    pub families: Vec<NoiseFamily>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySweep {
    pub curve: Curve,
    pub sizes: Vec<usize>,
    pub noise: NoiseFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborSweep {
    pub curve: Curve,
    pub n: usize,
    pub neighbors: Vec<usize>,
    pub noises: Vec<NoiseFamily>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossCurves {
    pub sigmas: Vec<f64>,
    pub residual_min: f64,
    pub residual_max: f64,
    pub points: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("bundled default config is valid")
    }
}

impl BenchConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: BenchConfig = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        let e = &self.estimator;
        if !(e.neighbor_fraction > 0.0 && e.neighbor_fraction <= 1.0) {
            return bad(format!(
                "neighbor_fraction must be in (0, 1], got {}",
                e.neighbor_fraction
            ));
        }
        if e.min_neighbors == 0 {
            return bad("min_neighbors must be positive".into());
        }
        e.bandwidth.validate()?;
        if self.evaluation.grid_points < 2 || !(self.evaluation.lo < self.evaluation.hi) {
            return bad("evaluation grid needs at least 2 points and lo < hi".into());
        }
        let sizes = self.asymmetric.sizes.iter().chain(&self.density_sweep.sizes);
        for &n in sizes.chain([&self.gaussian.n, &self.neighbor_sweep.n]) {
            if n < 2 {
                return bad(format!("data sizes must be at least 2, got {n}"));
            }
        }
        if self.asymmetric.sizes.len() < 2 || self.asymmetric.families.is_empty() {
            return bad("asymmetric suite needs at least two sizes and one family".into());
        }
        if let Some(&k) = self
            .neighbor_sweep
            .neighbors
            .iter()
            .find(|&&k| k == 0 || k > self.neighbor_sweep.n)
        {
            return bad(format!("neighbor_sweep N = {k} outside 1..={}", self.neighbor_sweep.n));
        }
        let families = self
            .gaussian
            .noises
            .iter()
            .chain(&self.asymmetric.families)
            .chain(&self.neighbor_sweep.noises)
            .chain([&self.density_sweep.noise]);
        for f in families {
            f.validate()?;
        }
        let lc = &self.loss_curves;
        if lc.points < 2 || !(lc.residual_min < lc.residual_max) || lc.sigmas.iter().any(|&s| !(s > 0.0)) {
            return bad("loss_curves needs points >= 2, residual_min < residual_max and positive sigmas".into());
        }
        Ok(())
    }

    /// `max(min_neighbors, round(fraction · n))`, capped at `n`.
    pub fn neighbors_for(&self, n: usize) -> usize {
        let k = (self.estimator.neighbor_fraction * n as f64).round() as usize;
        k.max(self.estimator.min_neighbors).min(n)
    }

    pub fn rsklpr(&self, neighbors: usize) -> EstimatorConfig {
        EstimatorConfig::rsklpr(neighbors)
            .with_k1(self.estimator.k1)
            .with_k2(self.estimator.k2)
            .with_degree(self.estimator.degree)
            .with_bandwidth(self.estimator.bandwidth.clone())
    }

    pub fn lpr(&self, neighbors: usize) -> EstimatorConfig {
        EstimatorConfig::lpr(neighbors)
            .with_k1(self.estimator.k1)
            .with_degree(self.estimator.degree)
    }

    pub fn robust_lowess(&self, neighbors: usize) -> EstimatorConfig {
        EstimatorConfig::robust_lowess(neighbors, self.estimator.robust_iterations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_default_parses() {
        let cfg = BenchConfig::default();
        assert_eq!(cfg.version, 1);
        assert_eq!(cfg.asymmetric.families.len(), 4);
        assert!(!cfg.asymmetric.center);
        assert_eq!(cfg.neighbors_for(50), 10);
        assert_eq!(cfg.neighbors_for(10), 5);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = BenchConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(BenchConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let text = DEFAULT_CONFIG.replace("version = 1", "version = 1\nextra = 3");
        assert!(BenchConfig::parse(&text).is_err());
        let text = DEFAULT_CONFIG.replace("neighbor_fraction = 0.2", "neighbor_fraction = 0.0");
        assert!(BenchConfig::parse(&text).is_err());
    }
}
