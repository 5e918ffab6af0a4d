use crate::error::{Error, Result};
use crate::numeric::Matrix;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample mean and sample standard deviation (ddof = 1).
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::StdUndefined { len: values.len() });
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Ok((m, (ss / (values.len() - 1) as f64).sqrt()))
}

/// Centers and scales a column to sample mean 0 and sample std 1.
///
/// Returns the transformed column with the fitted `(mean, std)` so the same
/// transform can be applied to held-out data via [`apply_standardize`].
pub fn standardize(column: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    if column.is_empty() {
        return Err(Error::StdUndefined { len: 0 });
    }
    if column.len() < 2 {
        return Err(Error::ConstantColumn);
    }
    let (m, s) = mean_std(column)?;
    if !(s > 0.0) || s <= 1e-14 * m.abs() {
        return Err(Error::ConstantColumn);
    }
    Ok((apply_standardize(column, m, s), m, s))
}

pub fn apply_standardize(column: &[f64], mean: f64, std: f64) -> Vec<f64> {
    column.iter().map(|v| (v - mean) / std).collect()
}

/// `(x - lo) / (hi - lo)` elementwise.
pub fn minmax(column: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::DegenerateRange { lo, hi });
    }
    let span = hi - lo;
    Ok(column.iter().map(|v| (v - lo) / span).collect())
}

/// Ordinary least squares with intercept via the normal equations.
///
/// Returns `(w, b)` minimizing `sum_i (w . x_i + b - y_i)^2`.
pub fn least_squares(x: &Matrix, y: &[f64]) -> Result<(Vec<f64>, f64)> {
    if x.rows() != y.len() {
        return Err(Error::Shape {
            op: "least_squares",
            left: x.shape(),
            right: (y.len(), 1),
        });
    }
    let p = x.cols() + 1;
    // augmented [A^T A | A^T y] with A = [X, 1]
    let mut aug = vec![vec![0.0; p + 1]; p];
    for (row, &target) in x.iter_rows().zip(y) {
        let feat = |j: usize| if j < p - 1 { row[j] } else { 1.0 };
        for i in 0..p {
            let fi = feat(i);
            for j in 0..p {
                aug[i][j] += fi * feat(j);
            }
            aug[i][p] += fi * target;
        }
    }
    let beta = solve_gaussian(aug)?;
    let b = beta[p - 1];
    Ok((beta[..p - 1].to_vec(), b))
}

fn solve_gaussian(mut aug: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let n = aug.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))
            .unwrap_or(col);
        if aug[pivot][col].abs() < 1e-300 {
            return Err(Error::Domain("singular normal equations".into()));
        }
        aug.swap(col, pivot);
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = aug[r][col] / aug[col][col];
            if factor == 0.0 {
                continue;
            }
            for c in col..=n {
                aug[r][c] -= factor * aug[col][c];
            }
        }
    }
    Ok((0..n).map(|i| aug[i][n] / aug[i][i]).collect())
}
