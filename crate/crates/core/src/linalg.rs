//! Small dense matrix kernels.
//!
//! Matrices here are at most a few hundred rows square (latent rank, or the
//! number of edges a node emits in one slot), so everything is plain
//! row-major loops. Every "matrix division" in the filter gain and the
//! column ridge solve goes through [`cholesky`] + triangular solves.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Relative tolerance used when checking symmetry before factorization.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Smallest diagonal pivot accepted by [`cholesky`].
pub const MIN_PIVOT: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
}

fn mismatch(expected: impl Into<String>, got: impl Into<String>) -> LinalgError {
    LinalgError::DimensionMismatch {
        expected: expected.into(),
        got: got.into(),
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix<S> {
    rows: usize,
    cols: usize,
    values: Vec<S>,
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![S::one(); n])
    }

    pub fn from_diagonal(diag: &[S]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (k, &d) in diag.iter().enumerate() {
            m[(k, k)] = d;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<S>) -> Result<Self, LinalgError> {
        if values.len() != rows * cols {
            return Err(mismatch(
                format!("{} values for {rows}x{cols}", rows * cols),
                format!("{} values", values.len()),
            ));
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds a matrix from equally sized rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[S]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            values.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            values,
        }
    }

    /// Single-column matrix.
    pub fn column(v: &[S]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            values: v.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn values(&self) -> &[S] {
        &self.values
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[S] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        let c = self.cols;
        &mut self.values[r * c..(r + 1) * c]
    }

    pub fn col_vec(&self, c: usize) -> Vec<S> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.rows.min(self.cols)).map(|k| self[(k, k)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(mismatch(
                format!("rhs with {} rows", self.cols),
                format!("{}x{}", rhs.rows, rhs.cols),
            ));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == S::zero() {
                    continue;
                }
                let src = rhs.row(k);
                for (o, &b) in out.row_mut(r).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[S]) -> Result<Vec<S>, LinalgError> {
        if x.len() != self.cols {
            return Err(mismatch(
                format!("vector of length {}", self.cols),
                format!("length {}", x.len()),
            ));
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), x)).collect())
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_with(rhs, |a, b| a + b)
    }

    fn zip_with(&self, rhs: &Self, op: impl Fn(S, S) -> S) -> Result<Self, LinalgError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(mismatch(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", rhs.rows, rhs.cols),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&rhs.values)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            values,
        })
    }

    pub fn scaled(&self, s: S) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }

    /// Adds `s` to every diagonal entry in place.
    pub fn add_to_diagonal(&mut self, s: S) {
        for k in 0..self.rows.min(self.cols) {
            self[(k, k)] += s;
        }
    }

    pub fn frobenius_norm(&self) -> S {
        self.values.iter().map(|&v| v * v).sum::<S>().sqrt()
    }

    pub fn max_abs(&self) -> S {
        self.values
            .iter()
            .fold(S::zero(), |acc, &v| acc.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|`. Zero for non-square input is meaningless, so
    /// callers check squareness first.
    pub fn max_asymmetry(&self) -> S {
        let mut worst = S::zero();
        for r in 0..self.rows {
            for c in (r + 1)..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)]).abs());
            }
        }
        worst
    }
}

impl<S> Index<(usize, usize)> for DenseMatrix<S> {
    type Output = S;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &S {
        debug_assert!(r < self.rows && c < self.cols);
        &self.values[r * self.cols + c]
    }
}

impl<S> IndexMut<(usize, usize)> for DenseMatrix<S> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.values[r * self.cols + c]
    }
}

#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm2<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor<S> {
    lower: DenseMatrix<S>,
}

impl<S: Scalar> CholeskyFactor<S> {
    pub fn lower(&self) -> &DenseMatrix<S> {
        &self.lower
    }

    pub fn into_lower(self) -> DenseMatrix<S> {
        self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.rows
    }

    /// Solves `A·X = B` column by column with forward then back substitution.
    pub fn solve(&self, b: &DenseMatrix<S>) -> Result<DenseMatrix<S>, LinalgError> {
        let n = self.dim();
        if b.rows != n {
            return Err(mismatch(
                format!("right-hand side with {n} rows"),
                format!("{}x{}", b.rows, b.cols),
            ));
        }
        let l = &self.lower;
        let mut x = b.clone();
        for c in 0..b.cols {
            // L·z = b
            for r in 0..n {
                let mut s = x[(r, c)];
                for k in 0..r {
                    s -= l[(r, k)] * x[(k, c)];
                }
                x[(r, c)] = s / l[(r, r)];
            }
            // Lᵀ·x = z
            for r in (0..n).rev() {
                let mut s = x[(r, c)];
                for k in (r + 1)..n {
                    s -= l[(k, r)] * x[(k, c)];
                }
                x[(r, c)] = s / l[(r, r)];
            }
        }
        Ok(x)
    }

    pub fn solve_vec(&self, b: &[S]) -> Result<Vec<S>, LinalgError> {
        Ok(self.solve(&DenseMatrix::column(b))?.values)
    }
}

/// Factorizes a symmetric positive-definite matrix.
pub fn cholesky<S: Scalar>(a: &DenseMatrix<S>) -> Result<CholeskyFactor<S>, LinalgError> {
    if !a.is_square() {
        return Err(mismatch(
            "square matrix",
            format!("{}x{}", a.rows, a.cols),
        ));
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let scale = a.max_abs().max(S::min_positive_value());
    let asym = a.max_asymmetry();
    if asym > S::lit(SYMMETRY_TOL) * scale {
        return Err(LinalgError::NotSymmetric {
            asymmetry: asym.as_f64(),
        });
    }

    let n = a.rows;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d >= S::lit(MIN_PIVOT)) {
            return Err(LinalgError::NotPositiveDefinite {
                index: j,
                pivot: d.as_f64(),
            });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            // lower triangle of A only; the symmetry check above covers the rest
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(CholeskyFactor { lower: l })
}

/// Solves `A·X = B` for symmetric positive-definite `A`.
pub fn solve_spd<S: Scalar>(
    a: &DenseMatrix<S>,
    b: &DenseMatrix<S>,
) -> Result<DenseMatrix<S>, LinalgError> {
    if b.rows != a.rows {
        return Err(mismatch(
            format!("right-hand side with {} rows", a.rows),
            format!("{}x{}", b.rows, b.cols),
        ));
    }
    cholesky(a)?.solve(b)
}

pub fn solve_spd_vec<S: Scalar>(a: &DenseMatrix<S>, b: &[S]) -> Result<Vec<S>, LinalgError> {
    Ok(solve_spd(a, &DenseMatrix::column(b))?.values)
}

/// Returns `(A + Aᵀ) / 2`.
pub fn symmetrize<S: Scalar>(a: &DenseMatrix<S>) -> Result<DenseMatrix<S>, LinalgError> {
    if !a.is_square() {
        return Err(mismatch(
            "square matrix",
            format!("{}x{}", a.rows, a.cols),
        ));
    }
    let half = S::lit(0.5);
    let mut out = a.clone();
    for r in 0..a.rows {
        for c in (r + 1)..a.cols {
            let m = (a[(r, c)] + a[(c, r)]) * half;
            out[(r, c)] = m;
            out[(c, r)] = m;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel_frobenius(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> f64 {
        a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
    }

    fn gram_plus(g: &DenseMatrix<f64>, eps: f64) -> DenseMatrix<f64> {
        let mut a = g.transpose().matmul(g).unwrap();
        a.add_to_diagonal(eps);
        // GᵀG is symmetric up to rounding; make it exact
        symmetrize(&a).unwrap()
    }

    #[test]
    fn cholesky_identity_is_identity() {
        let l = cholesky(&DenseMatrix::<f64>::identity(3)).unwrap();
        assert_eq!(l.lower(), &DenseMatrix::identity(3));
    }

    #[test]
    fn cholesky_reconstructs_2x2() {
        let a = DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]);
        let l = cholesky(&a).unwrap().into_lower();
        let back = l.matmul(&l.transpose()).unwrap();
        assert!(rel_frobenius(&back, &a) < 1e-12);
        assert_eq!(l[(0, 1)], 0.0);
        assert!(l.diagonal().iter().all(|&d| d > 0.0));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]);
        assert!(matches!(
            cholesky(&a),
            Err(LinalgError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn cholesky_rejects_asymmetric() {
        let a = DenseMatrix::from_rows(&[[2.0, 1.0], [0.0, 2.0]]);
        assert!(matches!(cholesky(&a), Err(LinalgError::NotSymmetric { .. })));
    }

    #[test]
    fn cholesky_rejects_non_square() {
        let a = DenseMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            cholesky(&a),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tiny_pivot_rejected() {
        let a = DenseMatrix::from_diagonal(&[1.0, 1e-15]);
        assert!(cholesky(&a).is_err());
        let a = DenseMatrix::from_diagonal(&[1.0, 1e-13]);
        assert!(cholesky(&a).is_ok());
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let b = DenseMatrix::column(&[1.5, -2.0, 3.0]);
        let x = solve_spd(&DenseMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);

        let x: Vec<f64> = solve_spd_vec(&DenseMatrix::from_diagonal(&[2.0, 4.0]), &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn solve_dimension_mismatch() {
        let a = DenseMatrix::<f64>::identity(3);
        let b = DenseMatrix::column(&[1.0, 2.0]);
        assert!(matches!(
            solve_spd(&a, &b),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn solve_random_5x5_residual() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = DenseMatrix::from_vec(5, 5, (0..25).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap();
        let a = gram_plus(&g, 1.0);
        let b = DenseMatrix::column(&(0..5).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
        let x = solve_spd(&a, &b).unwrap();
        let resid = a.matmul(&x).unwrap().sub(&b).unwrap().frobenius_norm() / b.frobenius_norm();
        assert!(resid < 1e-10, "residual {resid}");
    }

    #[test]
    fn symmetrize_examples() {
        let s = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 5.0]]);
        assert_eq!(symmetrize(&s).unwrap(), s);
        let a = DenseMatrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        let out = symmetrize(&a).unwrap();
        assert_eq!(out, DenseMatrix::from_rows(&[[0.0, 0.5], [0.5, 0.0]]));
        assert_eq!(out.sub(&out.transpose()).unwrap(), DenseMatrix::zeros(2, 2));
        assert!(symmetrize(&DenseMatrix::<f64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let a = DenseMatrix::from_rows(&[[4.0f32, 2.0], [2.0, 3.0]]);
        let x = solve_spd_vec(&a, &[6.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6);
    }

    fn matrix_strategy(max: usize) -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
        (1..=max, 1..=max).prop_flat_map(|(r, c)| {
            (Just(r), Just(c), prop::collection::vec(-3.0f64..3.0, r * c))
        })
    }

    proptest! {
        #[test]
        fn gram_plus_eps_factors((r, c, v) in matrix_strategy(6), eps_exp in -8i32..0) {
            let g = DenseMatrix::from_vec(r, c, v).unwrap();
            let a = gram_plus(&g, 10f64.powi(eps_exp));
            let l = cholesky(&a).unwrap().into_lower();
            let back = l.matmul(&l.transpose()).unwrap();
            prop_assert!(rel_frobenius(&back, &a) < 1e-12);
        }

        #[test]
        fn spd_solve_residual((r, c, v) in matrix_strategy(6), k in 1usize..4, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let g = DenseMatrix::from_vec(r, c, v).unwrap();
            let a = gram_plus(&g, 1e-2);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let b = DenseMatrix::from_vec(c, k, (0..c * k).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let x = solve_spd(&a, &b).unwrap();
            let resid = a.matmul(&x).unwrap().sub(&b).unwrap().frobenius_norm();
            prop_assert!(resid <= 1e-10 * b.frobenius_norm().max(1e-300));
        }

        #[test]
        fn symmetrize_idempotent((n, _c, v) in matrix_strategy(5).prop_flat_map(|(n, _, _)| {
            (Just(n), Just(n), prop::collection::vec(-3.0f64..3.0, n * n))
        })) {
            let a = DenseMatrix::from_vec(n, n, v).unwrap();
            let once = symmetrize(&a).unwrap();
            prop_assert_eq!(symmetrize(&once).unwrap(), once.clone());
            prop_assert_eq!(once.max_asymmetry(), 0.0);
        }
    }
}
