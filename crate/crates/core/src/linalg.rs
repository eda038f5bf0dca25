//! Householder QR least squares for the small dense systems produced by a
//! single local fit.

use ndarray::{Array1, Array2};

use crate::scalar::Scalar;

/// Least-squares solution of `A β ≈ b` together with a cheap condition
/// estimate `max|R_jj| / min|R_jj|` from the triangular factor.
#[derive(Debug, Clone)]
pub struct LstsqSolution<T> {
    pub coefficients: Array1<T>,
    pub condition: T,
}

/// Solves `min ‖A β − b‖₂` for `A` of shape `m × n`, `m ≥ n`.
///
/// Returns `None` when `R` has a zero (or non-finite) pivot; callers decide
/// how to treat merely ill-conditioned systems via `condition`.
pub fn lstsq<T: Scalar>(mut a: Array2<T>, mut b: Array1<T>) -> Option<LstsqSolution<T>> {
    let (m, n) = a.dim();
    if m < n || b.len() != m || n == 0 {
        return None;
    }
    for k in 0..n {
        let norm = (k..m).map(|i| a[[i, k]] * a[[i, k]]).sum::<T>().sqrt();
        if norm == T::zero() {
            continue;
        }
        let alpha = if a[[k, k]] > T::zero() { -norm } else { norm };
        // v = x - alpha e1, stored in place below the diagonal.
        let v0 = a[[k, k]] - alpha;
        a[[k, k]] = v0;
        let vnorm2 = v0 * v0 + (k + 1..m).map(|i| a[[i, k]] * a[[i, k]]).sum::<T>();
        if vnorm2 == T::zero() {
            a[[k, k]] = alpha;
            continue;
        }
        let two = T::lit(2.0);
        for j in k + 1..n {
            let dot = (k..m).map(|i| a[[i, k]] * a[[i, j]]).sum::<T>();
            let f = two * dot / vnorm2;
            for i in k..m {
                let vi = a[[i, k]];
                a[[i, j]] = a[[i, j]] - f * vi;
            }
        }
        let dot = (k..m).map(|i| a[[i, k]] * b[i]).sum::<T>();
        let f = two * dot / vnorm2;
        for i in k..m {
            b[i] = b[i] - f * a[[i, k]];
        }
        a[[k, k]] = alpha;
    }

    let mut max_pivot = T::zero();
    let mut min_pivot = T::infinity();
    for k in 0..n {
        let p = a[[k, k]].abs();
        if !p.is_finite() || p == T::zero() {
            return None;
        }
        max_pivot = max_pivot.max(p);
        min_pivot = min_pivot.min(p);
    }

    let mut x = Array1::zeros(n);
    for k in (0..n).rev() {
        let s = (k + 1..n).map(|j| a[[k, j]] * x[j]).sum::<T>();
        x[k] = (b[k] - s) / a[[k, k]];
    }
    if x.iter().any(|v: &T| !v.is_finite()) {
        return None;
    }
    Some(LstsqSolution {
        coefficients: x,
        condition: max_pivot / min_pivot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn square_system() {
        let a = array![[2.0, 1.0], [1.0, 3.0]];
        let b = array![3.0, 5.0];
        let s = lstsq(a, b).unwrap();
        assert_relative_eq!(s.coefficients[0], 0.8, epsilon = 1e-14);
        assert_relative_eq!(s.coefficients[1], 1.4, epsilon = 1e-14);
    }

    #[test]
    fn overdetermined_line() {
        // y = 1 + 2x exactly.
        let a = array![[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]];
        let b = array![1.0, 3.0, 5.0, 7.0];
        let s = lstsq(a, b).unwrap();
        assert_relative_eq!(s.coefficients[0], 1.0, epsilon = 1e-13);
        assert_relative_eq!(s.coefficients[1], 2.0, epsilon = 1e-13);
    }

    #[test]
    fn collinear_columns() {
        let a = array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]];
        let b = array![1.0, 2.0, 3.0];
        match lstsq(a, b) {
            None => {}
            Some(s) => assert!(s.condition > 1e12),
        }
    }

    #[test]
    fn zero_column() {
        let a = array![[1.0, 0.0], [1.0, 0.0]];
        assert!(lstsq(a, array![1.0, 2.0]).is_none());
    }
}
