//! Dense linear-algebra helpers over `faer` matrices.
//!
//! Everything in the crate stores sample-by-feature data as an `N x d`
//! column-major [`Matrix`]. The helpers here cover the handful of
//! operations the spectral code needs: pairwise distances, medians,
//! sorted eigendecompositions and small SPD solves.

use faer::{Mat, Side};

use crate::error::{Error, Result};

pub type Matrix = Mat<f64>;

/// Builds an `rows x cols` matrix from row-major data.
pub fn from_rows(rows: usize, cols: usize, data: &[f64]) -> Result<Matrix> {
    if data.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            expected: rows * cols,
            actual: data.len(),
        });
    }
    Ok(Matrix::from_fn(rows, cols, |i, j| data[i * cols + j]))
}

/// Builds a matrix whose columns are the given vectors.
pub fn from_columns(columns: &[Vec<f64>]) -> Result<Matrix> {
    let ncols = columns.len();
    let nrows = columns.first().map_or(0, Vec::len);
    if let Some(bad) = columns.iter().find(|c| c.len() != nrows) {
        return Err(Error::DimensionMismatch {
            expected: nrows,
            actual: bad.len(),
        });
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| columns[j][i]))
}

pub fn row(m: &Matrix, i: usize) -> Vec<f64> {
    (0..m.ncols()).map(|j| m[(i, j)]).collect()
}

pub fn column(m: &Matrix, j: usize) -> Vec<f64> {
    m.col_as_slice(j).to_vec()
}

/// Row-major copy of the matrix entries.
pub fn to_row_major(m: &Matrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Selects a subset of columns.
pub fn select_columns(m: &Matrix, cols: &[usize]) -> Matrix {
    Matrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

/// Selects a subset of rows.
pub fn select_rows(m: &Matrix, rows: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

pub fn hstack(parts: &[&Matrix]) -> Result<Matrix> {
    let nrows = parts.first().map_or(0, |m| m.nrows());
    let mut offsets = Vec::with_capacity(parts.len());
    let mut total = 0;
    for p in parts {
        if p.nrows() != nrows {
            return Err(Error::DimensionMismatch {
                expected: nrows,
                actual: p.nrows(),
            });
        }
        offsets.push(total);
        total += p.ncols();
    }
    let mut out = Matrix::zeros(nrows, total);
    for (p, &off) in parts.iter().zip(&offsets) {
        for j in 0..p.ncols() {
            out.col_as_slice_mut(off + j)
                .copy_from_slice(p.col_as_slice(j));
        }
    }
    Ok(out)
}

/// Squared Euclidean distances between all rows of `x`.
///
/// Computed by explicit differences, so identical rows give exactly zero
/// and the result is exactly symmetric.
pub fn pairwise_sq_distances(x: &Matrix) -> Matrix {
    let n = x.nrows();
    let d = x.ncols();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| row(x, i)).collect();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for k in 0..d {
                let diff = rows[i][k] - rows[j][k];
                s += diff * diff;
            }
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    out
}

/// Squared Euclidean distances between rows of `a` (queries) and rows of `b`.
pub fn cross_sq_distances(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: b.ncols(),
            actual: a.ncols(),
        });
    }
    let brows: Vec<Vec<f64>> = (0..b.nrows()).map(|i| row(b, i)).collect();
    let mut out = Matrix::zeros(a.nrows(), b.nrows());
    for i in 0..a.nrows() {
        let ai = row(a, i);
        for (j, bj) in brows.iter().enumerate() {
            out[(i, j)] = sq_dist(&ai, bj);
        }
    }
    Ok(out)
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median of a slice (mean of the two central values for even lengths).
pub fn median(values: &mut [f64]) -> Option<f64> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mid = n / 2;
    let (_, &mut upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        Some(upper)
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        Some(0.5 * (lower + upper))
    }
}

/// Median of the strictly positive pairwise distances (upper triangle).
pub fn median_nonzero_distance(sq_dists: &Matrix) -> Option<f64> {
    let n = sq_dists.nrows();
    let mut d = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for j in 0..n {
        for i in 0..j {
            let v = sq_dists[(i, j)];
            if v > 0.0 {
                d.push(v.sqrt());
            }
        }
    }
    median(&mut d)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn mean(a: &[f64]) -> f64 {
    a.iter().sum::<f64>() / a.len() as f64
}

/// Flips the sign of a vector so its first non-negligible entry is positive.
pub fn fix_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-10 * scale) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Normalizes the columns of `m` to unit Euclidean norm and applies the
/// sign convention of [`fix_sign`].
pub fn normalize_columns(m: &mut Matrix) {
    for j in 0..m.ncols() {
        let col = m.col_as_slice_mut(j);
        let nrm = norm(col);
        if nrm > 0.0 {
            col.iter_mut().for_each(|x| *x /= nrm);
        }
        fix_sign(col);
    }
}

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue,
/// truncated to the leading `n`.
pub fn symmetric_eigen_desc(a: &Matrix, n: usize) -> Result<(Vec<f64>, Matrix)> {
    let dim = a.nrows();
    let n = n.min(dim);
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::ConvergenceFailure(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    // faer returns nondecreasing order
    let values: Vec<f64> = (0..n).map(|k| s[dim - 1 - k]).collect();
    let vectors = Matrix::from_fn(dim, n, |i, k| u[(i, dim - 1 - k)]);
    Ok((values, vectors))
}

/// Solves `a x = b` for a small symmetric positive (semi)definite system by
/// Cholesky factorization. `a` is row-major `n x n` and is overwritten.
/// Returns `None` when the factorization breaks down.
pub fn cholesky_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Some(())
}

/// Solves a small general linear system by Gaussian elimination with
/// partial pivoting. Row-major `a` is overwritten.
pub fn lu_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col] == 0.0 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for r in (col + 1)..n {
            let f = a[r * n + col] / a[col * n + col];
            for k in col..n {
                a[r * n + k] -= f * a[col * n + k];
            }
            b[r] -= f * b[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Some(())
}

/// Inverse of a small square matrix (row-major), via [`lu_solve`].
pub fn invert(a: &Matrix) -> Option<Matrix> {
    let n = a.nrows();
    let mut out = Matrix::zeros(n, n);
    for c in 0..n {
        let mut lu = to_row_major(a);
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        lu_solve(&mut lu, &mut e, n)?;
        for r in 0..n {
            out[(r, c)] = e[r];
        }
    }
    Some(out)
}
