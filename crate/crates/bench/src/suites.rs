//! Experiment suites: independent (family, size, seed) jobs on a worker pool.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array1;
use rayon::prelude::*;
use rsklpr::{effective_loss_curve, predict, EstimatorConfig};
use serde::Serialize;

use crate::config::BenchConfig;
use crate::error::{BenchError, Result};
use crate::metrics::{mean, rmse, std_dev};
use crate::synth::{generate_synthetic, grid_queries, Curve, NoiseFamily, NoiseSpec, SyntheticSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Gaussian,
    Asymmetric,
    DensitySweep,
    NeighborSweep,
    LossCurves,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Gaussian,
        Suite::Asymmetric,
        Suite::DensitySweep,
        Suite::NeighborSweep,
        Suite::LossCurves,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gaussian => "gaussian",
            Suite::Asymmetric => "asymmetric",
            Suite::DensitySweep => "density_sweep",
            Suite::NeighborSweep => "neighbor_sweep",
            Suite::LossCurves => "loss_curves",
        }
    }

    fn tag(self) -> u64 {
        Suite::ALL.iter().position(|&s| s == self).expect("listed") as u64 + 1
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| BenchError::UnknownSuite {
                name: s.to_string(),
                valid: Suite::ALL.map(Suite::name).join(", "),
            })
    }
}

/// One method fitted on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub method: String,
    pub family: String,
    pub n: usize,
    #[serde(rename = "N")]
    pub neighbors: usize,
    pub seed: u64,
    pub rmse: f64,
    /// Seconds spent fitting; the only field allowed to differ between runs.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub seeds: Vec<u64>,
    #[serde(flatten)]
    pub bench: BenchConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub suite: String,
    pub config: ReportConfig,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone)]
pub struct SuiteOutput {
    pub report: Report,
    /// Per-figure table: seed-averaged RMSE, or the loss curves.
    pub companion_csv: String,
}

#[derive(Debug, Clone)]
struct Job {
    curve: Curve,
    family: String,
    noise: NoiseSpec,
    contamination: Option<(f64, f64)>,
    n: usize,
    neighbors: Vec<usize>,
    seed: u64,
    data_seed: u64,
}

/// SplitMix64 finalizer, used to derive independent per-cell data seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5EED, |acc, &p| mix(acc ^ mix(p)))
}

pub const METHODS: [&str; 3] = ["rsklpr", "lpr", "robust_lowess"];

fn method_config(cfg: &BenchConfig, method: &str, neighbors: usize) -> EstimatorConfig {
    match method {
        "rsklpr" => cfg.rsklpr(neighbors),
        "lpr" => cfg.lpr(neighbors),
        _ => cfg.robust_lowess(neighbors),
    }
}

fn jobs_for(suite: Suite, cfg: &BenchConfig, seeds: &[u64]) -> Vec<Job> {
    // (family label, noise, centered, sizes, neighbor grid or None for the fraction rule)
    type Group = (Curve, String, NoiseFamily, bool, Vec<usize>, Option<Vec<usize>>);
    let groups: Vec<Group> = match suite {
        Suite::Gaussian => cfg
            .gaussian
            .noises
            .iter()
            .map(|f| {
                (
                    cfg.gaussian.curve,
                    f.name().to_string(),
                    *f,
                    true,
                    vec![cfg.gaussian.n],
                    None,
                )
            })
            .collect(),
        Suite::Asymmetric => cfg
            .asymmetric
            .families
            .iter()
            .map(|f| {
                let a = &cfg.asymmetric;
                (a.curve, f.name().to_string(), *f, a.center, a.sizes.clone(), None)
            })
            .collect(),
        Suite::DensitySweep => {
            let d = &cfg.density_sweep;
            vec![(
                d.curve,
                d.noise.name().to_string(),
                d.noise,
                true,
                d.sizes.clone(),
                None,
            )]
        }
        Suite::NeighborSweep => cfg
            .neighbor_sweep
            .noises
            .iter()
            .map(|f| {
                let s = &cfg.neighbor_sweep;
                (
                    s.curve,
                    f.name().to_string(),
                    *f,
                    true,
                    vec![s.n],
                    Some(s.neighbors.clone()),
                )
            })
            .collect(),
        Suite::LossCurves => Vec::new(),
    };
    let mut jobs = Vec::new();
    for (gi, (curve, family, noise, center, sizes, grid)) in groups.into_iter().enumerate() {
        for &n in &sizes {
            for &seed in seeds {
                let neighbors = grid.clone().unwrap_or_else(|| vec![cfg.neighbors_for(n)]);
                jobs.push(Job {
                    curve,
                    family: family.clone(),
                    noise: NoiseSpec::new(noise, center),
                    contamination: None,
                    n,
                    neighbors,
                    seed,
                    data_seed: derive_seed(&[suite.tag(), gi as u64, n as u64, seed]),
                });
            }
        }
    }
    jobs
}

fn run_job(cfg: &BenchConfig, job: &Job) -> Result<Vec<Cell>> {
    let mut spec = SyntheticSpec::new(job.curve, job.n, job.noise, job.data_seed);
    if let Some((fraction, offset)) = job.contamination {
        spec = spec.with_contamination(fraction, offset);
    }
    let synth = generate_synthetic(&spec)?;
    let ev = &cfg.evaluation;
    let queries = grid_queries(&vec![(ev.lo, ev.hi); job.curve.dim()], ev.grid_points);
    let truth: Vec<f64> = queries
        .outer_iter()
        .map(|q| spec.truth_at(q.as_slice().expect("standard layout")))
        .collect();
    let mut cells = Vec::with_capacity(job.neighbors.len() * METHODS.len());
    for &k in &job.neighbors {
        for method in METHODS {
            let config = method_config(cfg, method, k.min(job.n));
            let start = Instant::now();
            let pred = predict(&config, &synth.data, queries.view())?;
            let wall_time = start.elapsed().as_secs_f64();
            cells.push(Cell {
                method: method.to_string(),
                family: job.family.clone(),
                n: job.n,
                neighbors: k,
                seed: job.seed,
                rmse: rmse(&pred, &truth)?,
                wall_time,
            });
        }
    }
    Ok(cells)
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(BenchError::Usage("workers must be positive".into()));
        }
        builder = builder.num_threads(w);
    }
    builder
        .build()
        .map_err(|e| BenchError::Usage(format!("cannot start worker pool: {e}")))
}

/// Runs every job of `suite` on a pool of `workers` threads (all cores when
/// `None`). Cells come out in job order regardless of scheduling.
pub fn run_suite(suite: Suite, cfg: &BenchConfig, seeds: &[u64], workers: Option<usize>) -> Result<SuiteOutput> {
    cfg.validate()?;
    if seeds.is_empty() && suite != Suite::LossCurves {
        return Err(BenchError::Usage("need at least one seed".into()));
    }
    let jobs = jobs_for(suite, cfg, seeds);
    let per_job: Vec<Result<Vec<Cell>>> = pool(workers)?.install(|| jobs.par_iter().map(|j| run_job(cfg, j)).collect());
    let mut cells = Vec::new();
    for r in per_job {
        cells.extend(r?);
    }
    let companion_csv = match suite {
        Suite::LossCurves => loss_curves_csv(&cfg.loss_curves.sigmas, cfg)?,
        _ => summary_csv(&cells)?,
    };
    Ok(SuiteOutput {
        report: Report {
            suite: suite.name().to_string(),
            config: ReportConfig {
                seeds: seeds.to_vec(),
                bench: cfg.clone(),
            },
            cells,
        },
        companion_csv,
    })
}

/// Runs the robustness scenario: `curve` with Gaussian noise plus a fraction
/// of gross outliers, fitted by rsklpr and lpr with `neighbors` points.
pub fn run_contaminated(
    cfg: &BenchConfig,
    noise: NoiseFamily,
    n: usize,
    neighbors: usize,
    fraction: f64,
    offset_sds: f64,
    seeds: &[u64],
) -> Result<Vec<Cell>> {
    let jobs: Vec<Job> = seeds
        .iter()
        .map(|&seed| Job {
            curve: Curve::SineHetero,
            family: format!("{}+outliers", noise.name()),
            noise: NoiseSpec::new(noise, true),
            contamination: Some((fraction, offset_sds)),
            n,
            neighbors: vec![neighbors],
            seed,
            data_seed: derive_seed(&[99, n as u64, seed]),
        })
        .collect();
    let per_job: Vec<Result<Vec<Cell>>> = jobs.par_iter().map(|j| run_job(cfg, j)).collect();
    let mut cells = Vec::new();
    for r in per_job {
        cells.extend(r?);
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub family: String,
    pub n: usize,
    #[serde(rename = "N")]
    pub neighbors: usize,
    pub seeds: usize,
    pub mean_rmse: f64,
    pub sd_rmse: f64,
}

/// Seed-averaged RMSE per (method, family, n, N), in first-appearance order.
pub fn summarize(cells: &[Cell]) -> Vec<SummaryRow> {
    let mut keys: Vec<(&str, &str, usize, usize)> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for c in cells {
        let key = (c.method.as_str(), c.family.as_str(), c.n, c.neighbors);
        match keys.iter().position(|k| *k == key) {
            Some(i) => values[i].push(c.rmse),
            None => {
                keys.push(key);
                values.push(vec![c.rmse]);
            }
        }
    }
    keys.into_iter()
        .zip(values)
        .map(|((method, family, n, neighbors), v)| SummaryRow {
            method: method.to_string(),
            family: family.to_string(),
            n,
            neighbors,
            seeds: v.len(),
            mean_rmse: mean(&v),
            sd_rmse: std_dev(&v),
        })
        .collect()
}

fn csv_error(e: impl fmt::Display) -> BenchError {
    BenchError::Usage(format!("csv encoding failed: {e}"))
}

fn summary_csv(cells: &[Cell]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in summarize(cells) {
        w.serialize(row).map_err(csv_error)?;
    }
    String::from_utf8(w.into_inner().map_err(csv_error)?).map_err(csv_error)
}

/// `residual,sigma,value` rows of the effective loss, sigma-major.
pub fn loss_curves_csv(sigmas: &[f64], cfg: &BenchConfig) -> Result<String> {
    let lc = &cfg.loss_curves;
    if sigmas.is_empty() || sigmas.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(BenchError::Usage("sigmas must be positive and finite".into()));
    }
    let residuals = Array1::from_iter(
        (0..lc.points)
            .map(|i| lc.residual_min + (lc.residual_max - lc.residual_min) * i as f64 / (lc.points - 1) as f64),
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["residual", "sigma", "value"]).map_err(csv_error)?;
    for &s in sigmas {
        let values = effective_loss_curve(residuals.view(), s)?;
        for (r, v) in residuals.iter().zip(values.iter()) {
            w.write_record([r.to_string(), s.to_string(), v.to_string()])
                .map_err(csv_error)?;
        }
    }
    String::from_utf8(w.into_inner().map_err(csv_error)?).map_err(csv_error)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| BenchError::write(path, e))
}

/// Writes the JSON report to `out` and the companion table next to it
/// (`out` with a `.csv` extension).
pub fn write_outputs(output: &SuiteOutput, out: &Path) -> Result<std::path::PathBuf> {
    let json = serde_json::to_string_pretty(&output.report)
        .map_err(|e| BenchError::Usage(format!("json encoding failed: {e}")))?;
    write_text(out, &(json + "\n"))?;
    let companion = out.with_extension("csv");
    let companion = if companion == out {
        out.with_extension("summary.csv")
    } else {
        companion
    };
    write_text(&companion, &output.companion_csv)?;
    Ok(companion)
}

/// Report JSON with every `wall_time` zeroed, for byte comparisons.
pub fn canonical_json(report: &Report) -> String {
    let mut r = report.clone();
    for c in &mut r.cells {
        c.wall_time = 0.0;
    }
    serde_json::to_string_pretty(&r).expect("report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        let err = "foo".parse::<Suite>().unwrap_err().to_string();
        assert!(err.contains("gaussian") && err.contains("loss_curves"));
    }

    #[test]
    fn loss_curve_is_zero_at_zero_residual() {
        let cfg = BenchConfig::default();
        let csv = loss_curves_csv(&[1.0, 2.0, 3.0], &cfg).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("residual,sigma,value"));
        let zero_rows: Vec<&str> = lines.filter(|l| l.starts_with("0,")).collect();
        assert_eq!(zero_rows, ["0,1,0", "0,2,0", "0,3,0"]);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(&[1, 0, 50, 0]), derive_seed(&[1, 0, 50, 1]));
        assert_ne!(derive_seed(&[1, 0, 50, 0]), derive_seed(&[1, 1, 50, 0]));
    }

    #[test]
    fn summary_groups_by_cell() {
        let cell = |method: &str, seed, rmse| Cell {
            method: method.into(),
            family: "f".into(),
            n: 10,
            neighbors: 5,
            seed,
            rmse,
            wall_time: 0.0,
        };
        let rows = summarize(&[cell("a", 0, 1.0), cell("b", 0, 2.0), cell("a", 1, 3.0)]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].mean_rmse, 2.0);
        assert_eq!(rows[0].seeds, 2);
        assert_eq!(rows[1].method, "b");
    }
}
