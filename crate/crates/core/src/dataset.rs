//! Training data, nearest-neighbor queries and per-neighborhood distance
//! normalization.
//!
//! Distances are Euclidean on the raw predictor values. Predictors are never
//! standardized here; callers that want scale-free neighborhoods pre-scale
//! their columns.

use std::cmp::Ordering;
use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `T` predictor rows of dimension `d` paired with `T` responses. All
/// entries are finite; this is checked at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet<T> {
    predictors: Array2<T>,
    responses: Array1<T>,
}

impl<T: Scalar> DataSet<T> {
    pub fn new(predictors: Array2<T>, responses: Array1<T>) -> Result<Self> {
        let (rows, dim) = predictors.dim();
        if rows == 0 {
            return Err(Error::Empty);
        }
        if dim == 0 {
            return Err(Error::Shape("predictor dimension must be at least 1".into()));
        }
        if rows != responses.len() {
            return Err(Error::Shape(format!(
                "{rows} predictor rows but {} responses",
                responses.len()
            )));
        }
        for (i, row) in predictors.outer_iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row: i + 1,
                    column: format!("x{}", j + 1),
                });
            }
        }
        if let Some(i) = responses.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: i + 1,
                column: "y".into(),
            });
        }
        Ok(Self { predictors, responses })
    }

    /// One-dimensional convenience constructor.
    pub fn from_xy(xs: &[T], ys: &[T]) -> Result<Self> {
        let predictors = Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(predictors, Array1::from(ys.to_vec()))
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.predictors.ncols()
    }

    pub fn predictors(&self) -> ArrayView2<'_, T> {
        self.predictors.view()
    }

    pub fn responses(&self) -> ArrayView1<'_, T> {
        self.responses.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, T> {
        self.predictors.row(i)
    }

    pub fn response(&self, i: usize) -> T {
        self.responses[i]
    }

    /// New data set made of the given rows, in order; duplicates allowed.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            predictors: self.predictors.select(Axis(0), indices),
            responses: self.responses.select(Axis(0), indices),
        }
    }

    /// Same predictors with responses replaced.
    pub fn with_responses(&self, responses: Array1<T>) -> Result<Self> {
        Self::new(self.predictors.clone(), responses)
    }

    /// Per-column `(min, max)` of the predictors.
    pub fn bounds(&self) -> Vec<(T, T)> {
        self.predictors
            .axis_iter(Axis(1))
            .map(|col| {
                col.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                })
            })
            .collect()
    }

    /// Reads a CSV file whose header is exactly `x1,...,xd,y`.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_csv(file)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
        let columns: Vec<String> = header.iter().map(str::to_owned).collect();
        let dim = check_header(&columns)?;

        let mut flat = Vec::new();
        let mut ys = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::Csv(format!("row {row}: {e}")))?;
            if record.len() != dim + 1 {
                return Err(Error::Csv(format!(
                    "row {row}: expected {} fields, found {}",
                    dim + 1,
                    record.len()
                )));
            }
            for (j, cell) in record.iter().enumerate() {
                let value: f64 = cell.parse().map_err(|_| Error::Parse {
                    row,
                    column: columns[j].clone(),
                    value: cell.to_owned(),
                })?;
                if !value.is_finite() {
                    return Err(Error::NonFinite {
                        row,
                        column: columns[j].clone(),
                    });
                }
                if j < dim {
                    flat.push(T::lit(value));
                } else {
                    ys.push(T::lit(value));
                }
            }
        }
        if ys.is_empty() {
            return Err(Error::Empty);
        }
        let predictors = Array2::from_shape_vec((ys.len(), dim), flat).map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(predictors, Array1::from(ys))
    }
}

/// Header names for `d` predictors: `x1..xd`.
pub fn predictor_columns(dim: usize) -> Vec<String> {
    (1..=dim).map(|j| format!("x{j}")).collect()
}

fn check_header(columns: &[String]) -> Result<usize> {
    if columns.len() < 2 {
        return Err(Error::Header(format!(
            "expected x1,...,xd,y; found {:?}",
            columns.join(",")
        )));
    }
    let dim = columns.len() - 1;
    let expected = predictor_columns(dim);
    if columns[..dim] != expected[..] || columns[dim] != "y" {
        return Err(Error::Header(format!(
            "expected {},y; found {}",
            expected.join(","),
            columns.join(",")
        )));
    }
    Ok(dim)
}

/// The `N` nearest training points to a query, with their raw and
/// `[0, 1]`-normalized distances.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood<T> {
    pub center: Array1<T>,
    pub indices: Vec<usize>,
    pub raw_distances: Vec<T>,
    pub normalized_distances: Vec<T>,
    /// Set when every raw distance is zero.
    pub degenerate: bool,
}

impl<T: Scalar> Neighborhood<T> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Brute-force `N` nearest neighbors of `x`; ties go to the lower index.
/// The returned neighborhood is already normalized.
pub fn knn<T: Scalar>(data: &DataSet<T>, x: ArrayView1<'_, T>, n: usize) -> Result<Neighborhood<T>> {
    if n == 0 || n > data.len() {
        return Err(Error::NeighborCount {
            requested: n,
            available: data.len(),
        });
    }
    if x.len() != data.dim() {
        return Err(Error::Dimension {
            expected: data.dim(),
            found: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("query point is not finite".into()));
    }

    // Squared distances order identically and skip the sqrt on the full scan.
    let mut order: Vec<(T, usize)> = data
        .predictors
        .outer_iter()
        .enumerate()
        .map(|(i, row)| {
            let d2 = row.iter().zip(x.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>();
            (d2, i)
        })
        .collect();
    let cmp = |a: &(T, usize), b: &(T, usize)| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1));
    if n < order.len() {
        order.select_nth_unstable_by(n - 1, cmp);
        order.truncate(n);
    }
    order.sort_unstable_by(cmp);

    let indices = order.iter().map(|&(_, i)| i).collect();
    let raw_distances = order.iter().map(|&(d2, _)| d2.sqrt()).collect();
    Ok(normalize_distances(Neighborhood {
        center: x.to_owned(),
        indices,
        raw_distances,
        normalized_distances: Vec::new(),
        degenerate: false,
    }))
}

/// Divides every raw distance by the largest one. A neighborhood whose
/// distances are all zero gets all-zero normalized distances and the
/// degenerate flag.
pub fn normalize_distances<T: Scalar>(mut nbr: Neighborhood<T>) -> Neighborhood<T> {
    let max = nbr.raw_distances.iter().fold(T::zero(), |acc, &d| acc.max(d));
    if max > T::zero() {
        nbr.normalized_distances = nbr.raw_distances.iter().map(|&d| (d / max).min(T::one())).collect();
        nbr.degenerate = false;
    } else {
        nbr.normalized_distances = vec![T::zero(); nbr.raw_distances.len()];
        nbr.degenerate = true;
    }
    nbr
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn line(xs: &[f64]) -> DataSet<f64> {
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        DataSet::from_xy(xs, &ys).unwrap()
    }

    #[test]
    fn csv_one_predictor() {
        let d = DataSet::<f64>::read_csv("x1,y\n0,1\n1,2\n".as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.dim(), 1);
        assert_eq!(d.response(1), 2.0);
    }

    #[test]
    fn csv_two_predictors() {
        let d = DataSet::<f64>::read_csv("x1,x2,y\n0,0,1\n1,0,2\n0,1,3\n".as_bytes()).unwrap();
        assert_eq!((d.len(), d.dim()), (3, 2));
        assert_eq!(d.row(2).to_vec(), vec![0.0, 1.0]);
    }

    #[test]
    fn csv_nan_names_row() {
        let err = DataSet::<f64>::read_csv("x1,y\n0,1\n1,NaN\n".as_bytes()).unwrap_err();
        match err {
            Error::NonFinite { row, column } => {
                assert_eq!(row, 2);
                assert_eq!(column, "y");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(matches!(
            DataSet::<f64>::read_csv("a,y\n0,1\n".as_bytes()),
            Err(Error::Header(_))
        ));
        assert!(matches!(
            DataSet::<f64>::read_csv("x2,x1,y\n0,1,2\n".as_bytes()),
            Err(Error::Header(_))
        ));
        assert!(matches!(
            DataSet::<f64>::read_csv("x1,y\n".as_bytes()),
            Err(Error::Empty)
        ));
        let err = DataSet::<f64>::read_csv("x1,y\n0,1\nabc,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, ref column, .. } if column == "x1"));
        assert!(matches!(
            DataSet::<f64>::load_csv("/nonexistent/file.csv"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn knn_nearest_and_exhaustive() {
        let d = line(&[0.0, 1.0, 2.0, 3.0]);
        let nbr = knn(&d, array![0.0].view(), 2).unwrap();
        assert_eq!(nbr.indices, vec![0, 1]);
        let all = knn(&d, array![1.7].view(), 4).unwrap();
        let mut idx = all.indices.clone();
        idx.sort();
        assert_eq!(idx, vec![0, 1, 2, 3]);
    }

    #[test]
    fn knn_tie_goes_to_lower_index() {
        let d = line(&[-1.0, 1.0]);
        let nbr = knn(&d, array![0.0].view(), 1).unwrap();
        assert_eq!(nbr.indices, vec![0]);
        let d = line(&[1.0, -1.0]);
        assert_eq!(knn(&d, array![0.0].view(), 1).unwrap().indices, vec![0]);
    }

    #[test]
    fn knn_rejects_bad_counts() {
        let d = line(&[0.0, 1.0]);
        assert!(matches!(
            knn(&d, array![0.0].view(), 0),
            Err(Error::NeighborCount { .. })
        ));
        assert!(matches!(
            knn(&d, array![0.0].view(), 3),
            Err(Error::NeighborCount { .. })
        ));
        assert!(matches!(
            knn(&d, array![0.0, 1.0].view(), 1),
            Err(Error::Dimension { .. })
        ));
    }

    fn raw(distances: &[f64]) -> Neighborhood<f64> {
        normalize_distances(Neighborhood {
            center: array![0.0],
            indices: (0..distances.len()).collect(),
            raw_distances: distances.to_vec(),
            normalized_distances: vec![],
            degenerate: false,
        })
    }

    #[test]
    fn normalization_cases() {
        let n = raw(&[0.0, 1.0, 2.0]);
        assert_eq!(n.normalized_distances, vec![0.0, 0.5, 1.0]);
        assert!(!n.degenerate);

        let n = raw(&[0.0, 0.0, 0.0]);
        assert_eq!(n.normalized_distances, vec![0.0; 3]);
        assert!(n.degenerate);

        let n = raw(&[5.0]);
        assert_eq!(n.normalized_distances, vec![1.0]);
        assert!(!n.degenerate);
    }

    #[test]
    fn normalization_is_idempotent() {
        let once = raw(&[0.3, 0.7, 1.1, 2.9]);
        let twice = normalize_distances(once.clone());
        assert_eq!(once, twice);
    }

    #[test]
    fn f32_knn() {
        let d = DataSet::<f32>::from_xy(&[0.0, 0.5, 3.0], &[1.0, 1.0, 1.0]).unwrap();
        let nbr = knn(&d, array![0.4f32].view(), 2).unwrap();
        assert_eq!(nbr.indices, vec![1, 0]);
    }
}
