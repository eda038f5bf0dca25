//! Parsing of command-line value syntaxes and CSV output.

use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rsklpr::{predictor_columns, BandwidthSpec, DataSet, DEFAULT_CV_FOLDS};

use crate::error::{BenchError, Result};
use crate::synth::grid_queries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuerySpec {
    /// `G` points per axis over the data's bounding box.
    Grid(usize),
    /// The training predictors themselves.
    Data,
}

impl std::str::FromStr for QuerySpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "data" {
            return Ok(QuerySpec::Data);
        }
        let bad = || BenchError::Usage(format!("bad query spec {s:?}; expected grid:G or data"));
        let g = s.strip_prefix("grid:").ok_or_else(bad)?;
        match g.parse::<usize>() {
            Ok(g) if g >= 1 => Ok(QuerySpec::Grid(g)),
            _ => Err(bad()),
        }
    }
}

impl QuerySpec {
    pub fn build(self, data: &DataSet<f64>) -> Array2<f64> {
        match self {
            QuerySpec::Data => data.predictors().to_owned(),
            QuerySpec::Grid(g) => grid_queries(&data.bounds(), g),
        }
    }
}

/// `scott`, `silverman`, `fixed:h1,h2,...`, `cv` or `cv:m1,m2,...`
/// (multipliers of the Scott bandwidth).
pub fn parse_bandwidth(s: &str) -> Result<BandwidthSpec> {
    let list = |body: &str| -> Result<Vec<f64>> {
        body.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| BenchError::Usage(format!("bad number {v:?} in bandwidth {s:?}")))
            })
            .collect()
    };
    let spec = match s {
        "scott" => BandwidthSpec::scott(),
        "silverman" => BandwidthSpec::silverman(),
        "cv" => BandwidthSpec::cv_grid(vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0], DEFAULT_CV_FOLDS),
        _ => {
            if let Some(body) = s.strip_prefix("fixed:") {
                BandwidthSpec::fixed(list(body)?)
            } else if let Some(body) = s.strip_prefix("cv:") {
                BandwidthSpec::cv_grid(list(body)?, DEFAULT_CV_FOLDS)
            } else {
                return Err(BenchError::Usage(format!(
                    "bad bandwidth {s:?}; expected scott, silverman, fixed:h,.. or cv[:m,..]"
                )));
            }
        }
    };
    spec.validate()?;
    Ok(spec)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| BenchError::Usage(format!("bad number {v:?} in list {s:?}")))
        })
        .collect()
}

/// Writes `x1..xd` plus the named value columns.
pub fn write_table(path: &Path, queries: ArrayView2<'_, f64>, columns: &[(&str, &[f64])]) -> Result<()> {
    let werr = |e: csv::Error| BenchError::write(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(werr)?;
    let mut header = predictor_columns(queries.ncols());
    header.extend(columns.iter().map(|(name, _)| name.to_string()));
    w.write_record(&header).map_err(werr)?;
    for (i, q) in queries.outer_iter().enumerate() {
        let row = q
            .iter()
            .copied()
            .chain(columns.iter().map(|(_, v)| v[i]))
            .map(|v| v.to_string());
        w.write_record(row).map_err(werr)?;
    }
    w.flush().map_err(|e| BenchError::write(path, e))
}

pub fn write_dataset(path: &Path, data: &DataSet<f64>) -> Result<()> {
    let y = data.responses().to_vec();
    let werr = |e: csv::Error| BenchError::write(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(werr)?;
    let mut header = predictor_columns(data.dim());
    header.push("y".into());
    w.write_record(&header).map_err(werr)?;
    for (i, x) in data.predictors().outer_iter().enumerate() {
        w.write_record(x.iter().chain([&y[i]]).map(|v| v.to_string()))
            .map_err(werr)?;
    }
    w.flush().map_err(|e| BenchError::write(path, e))
}
