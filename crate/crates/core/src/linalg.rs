//! Dense matrix storage and a rank-revealing minimum-norm least-squares
//! solver.
//!
//! The solver runs a one-sided Jacobi (Hestenes) SVD: plane rotations
//! orthogonalize the columns of the working matrix until convergence, after
//! which column norms are the singular values. Jacobi converges to high
//! relative accuracy on the small, structurally rank-deficient systems
//! produced by assembly, where the tiny singular values carry the duplicate
//! columns and the zero row.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// Builds a matrix from row vectors; all rows must have equal length.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in &rows {
            if row.len() != ncols {
                return Err(Error::Numerical(
                    "ragged rows in matrix construction".into(),
                ));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: nrows,
            cols: ncols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &x)| acc + a * x)
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.at(r, c));
            }
        }
        out
    }
}

/// Result of [`solve_min_norm`].
#[derive(Debug, Clone)]
pub struct MinNormSolution<T> {
    /// Minimum-norm least-squares solution.
    pub coefficients: Vec<T>,
    /// Number of singular values above the truncation threshold.
    pub rank: usize,
    /// All singular values, descending.
    pub singular_values: Vec<T>,
    /// Absolute truncation threshold actually applied (`rcond * sigma_max`).
    pub truncation_threshold: T,
}

/// Minimum-norm least-squares solution of `matrix * x = rhs`.
///
/// Singular values at or below `rcond * sigma_max` are truncated; among all
/// least-squares minimizers of the truncated operator the returned solution
/// has the smallest Euclidean norm. Requires `rows >= cols`.
pub fn solve_min_norm<T: Real>(
    matrix: &Matrix<T>,
    rhs: &[T],
    rcond: T,
) -> Result<MinNormSolution<T>> {
    let (m, n) = (matrix.rows(), matrix.cols());
    if m == 0 || n == 0 {
        return Err(Error::Numerical("empty system".into()));
    }
    if m < n {
        return Err(Error::Config(format!(
            "underdetermined system ({m} rows < {n} columns) is not supported"
        )));
    }
    if rhs.len() != m {
        return Err(Error::Numerical(format!(
            "right-hand side length {} does not match {m} rows",
            rhs.len()
        )));
    }
    if rcond <= T::zero() || rcond >= T::one() || rcond.is_nan() {
        return Err(Error::Config(format!(
            "rcond must lie in (0, 1), got {rcond}"
        )));
    }
    if matrix.data.iter().any(|v| !v.is_finite()) || rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in the system".into()));
    }

    let svd = hestenes_svd(matrix)?;

    let sigma_max = svd
        .sigma
        .iter()
        .fold(T::zero(), |acc, &s| if s > acc { s } else { acc });
    let threshold = rcond * sigma_max;

    // x = sum over kept directions of v_j (u_j . rhs) / sigma_j.
    let mut coefficients = vec![T::zero(); n];
    let mut rank = 0;
    for j in 0..n {
        let sigma = svd.sigma[j];
        if sigma <= threshold || sigma == T::zero() {
            continue;
        }
        rank += 1;
        let u_col = &svd.u[j * m..(j + 1) * m];
        let proj = u_col
            .iter()
            .zip(rhs)
            .fold(T::zero(), |acc, (&u, &b)| acc + u * b)
            / sigma;
        let v_col = &svd.v[j * n..(j + 1) * n];
        for (x, &v) in coefficients.iter_mut().zip(v_col) {
            *x = *x + v * proj;
        }
    }

    let mut singular_values = svd.sigma;
    singular_values.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));

    Ok(MinNormSolution {
        coefficients,
        rank,
        singular_values,
        truncation_threshold: threshold,
    })
}

/// Thin SVD in column-major working storage: `u` holds n orthonormal columns
/// of length m (left vectors), `v` n columns of length n (right vectors),
/// `sigma` the unsorted singular values.
struct ThinSvd<T> {
    u: Vec<T>,
    v: Vec<T>,
    sigma: Vec<T>,
}

fn hestenes_svd<T: Real>(matrix: &Matrix<T>) -> Result<ThinSvd<T>> {
    let (m, n) = (matrix.rows(), matrix.cols());
    // Column-major copies so each column is contiguous for the rotations.
    let mut u = vec![T::zero(); m * n];
    for r in 0..m {
        for c in 0..n {
            u[c * m + r] = matrix.at(r, c);
        }
    }
    let mut v = vec![T::zero(); n * n];
    for c in 0..n {
        v[c * n + c] = T::one();
    }

    // Round-off in the Gram accumulation grows with the column length, so
    // the orthogonality test has to sit above that noise floor or rotations
    // never cease.
    let conv_tol = T::epsilon() * real::<T>(8.0 * (m as f64).sqrt());
    let max_sweeps = 60;
    let mut converged = false;
    for _ in 0..max_sweeps {
        // Columns at round-off level relative to the largest are numerically
        // zero; rotating them only churns denormal dust (and alpha * beta can
        // underflow, breaking the orthogonality test).
        let deflate = T::epsilon()
            * (0..n)
                .map(|j| column_norm_sq(&u, m, j))
                .fold(T::zero(), T::max)
                .sqrt();
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let (alpha, beta, gamma) = column_gram(&u, m, p, q);
                let norm_p = alpha.sqrt();
                let norm_q = beta.sqrt();
                if norm_p <= deflate || norm_q <= deflate {
                    continue;
                }
                // Columns already orthogonal to working precision.
                if gamma.abs() <= conv_tol * norm_p * norm_q {
                    continue;
                }
                let zeta = (beta - alpha) / (real::<T>(2.0) * gamma);
                let tan = if zeta >= T::zero() {
                    T::one() / (zeta + (T::one() + zeta * zeta).sqrt())
                } else {
                    -T::one() / (-zeta + (T::one() + zeta * zeta).sqrt())
                };
                let cos = T::one() / (T::one() + tan * tan).sqrt();
                let sin = cos * tan;
                rotate_columns(&mut u, m, p, q, cos, sin);
                rotate_columns(&mut v, n, p, q, cos, sin);
                rotated = true;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(
            "one-sided Jacobi SVD did not converge".into(),
        ));
    }

    let mut sigma = vec![T::zero(); n];
    for j in 0..n {
        let col = &mut u[j * m..(j + 1) * m];
        let norm = col.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
        sigma[j] = norm;
        if norm > T::zero() {
            for x in col.iter_mut() {
                *x = *x / norm;
            }
        }
    }
    Ok(ThinSvd { u, v, sigma })
}

#[inline]
fn column_norm_sq<T: Real>(cols: &[T], len: usize, j: usize) -> T {
    cols[j * len..(j + 1) * len]
        .iter()
        .fold(T::zero(), |acc, &x| acc + x * x)
}

#[inline]
fn column_gram<T: Real>(cols: &[T], len: usize, p: usize, q: usize) -> (T, T, T) {
    let cp = &cols[p * len..(p + 1) * len];
    let cq = &cols[q * len..(q + 1) * len];
    let mut alpha = T::zero();
    let mut beta = T::zero();
    let mut gamma = T::zero();
    for (&a, &b) in cp.iter().zip(cq) {
        alpha = alpha + a * a;
        beta = beta + b * b;
        gamma = gamma + a * b;
    }
    (alpha, beta, gamma)
}

#[inline]
fn rotate_columns<T: Real>(cols: &mut [T], len: usize, p: usize, q: usize, cos: T, sin: T) {
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    let (head, tail) = cols.split_at_mut(hi * len);
    let cp = &mut head[lo * len..(lo + 1) * len];
    let cq = &mut tail[..len];
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let na = cos * *a - sin * *b;
        let nb = sin * *a + cos * *b;
        *a = na;
        *b = nb;
    }
}
