//! Reference computations that share no code with the library.

#![allow(dead_code, clippy::needless_range_loop)]

pub fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Design row of a local polynomial centered at `x0`.
pub fn design_row(x: &[f64], x0: &[f64], degree: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    match degree {
        0 => {}
        1 => row.extend(x.iter().zip(x0).map(|(a, b)| a - b)),
        _ => {
            let u = x[0] - x0[0];
            row.push(u);
            row.push(u * u);
        }
    }
    row
}

/// Weighted least squares through the normal equations `XᵀWX β = XᵀWy`.
pub fn normal_equations(xs: &[Vec<f64>], ys: &[f64], ws: &[f64], x0: &[f64], degree: usize) -> Option<Vec<f64>> {
    let rows: Vec<Vec<f64>> = xs.iter().map(|x| design_row(x, x0, degree)).collect();
    let p = rows[0].len();
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for ((r, &y), &w) in rows.iter().zip(ys).zip(ws) {
        for i in 0..p {
            xty[i] += w * r[i] * y;
            for j in 0..p {
                xtx[i][j] += w * r[i] * r[j];
            }
        }
    }
    gauss_solve(xtx, xty)
}

/// Product Gaussian KDE at `point` by direct summation.
pub fn kde(point: &[f64], samples: &[Vec<f64>], h: &[f64]) -> f64 {
    let norm: f64 = h.iter().product();
    samples
        .iter()
        .map(|s| {
            s.iter()
                .zip(point)
                .zip(h)
                .map(|((a, b), hj)| phi((b - a) / hj))
                .product::<f64>()
        })
        .sum::<f64>()
        / (samples.len() as f64 * norm)
}

/// Composite trapezoid rule on `n` intervals.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + h * i as f64)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

/// Tensor-product trapezoid rule on `[a, b]²`.
pub fn trapezoid_2d(f: impl Fn(f64, f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    trapezoid(|x| trapezoid(|y| f(x, y), a, b, n), a, b, n)
}

/// Sample standard deviation.
pub fn sd(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}
