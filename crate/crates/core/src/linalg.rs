//! Dense matrices with a floating-point and an exact rational solver.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Relative pivot threshold of the floating-point solver.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        if rows * cols != data.len() {
            return Err(LinalgError::DimensionMismatch(format!(
                "{rows}x{cols} matrix given {} entries",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from its rows; every row must have `cols` entries.
    pub fn from_rows(rows: &[Vec<T>], cols: usize) -> Result<Self, LinalgError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        Matrix { rows: self.cols, cols: self.rows, data }
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                data.push(self.get(i, j).clone());
            }
        }
        Matrix { rows: rows.len(), cols: cols.len(), data }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let all: Vec<usize> = (0..self.rows).collect();
        self.select(&all, cols)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let all: Vec<usize> = (0..self.cols).collect();
        self.select(rows, &all)
    }

    pub fn map<U, F: Fn(&T) -> U>(&self, f: F) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }
}

impl Matrix<f64> {
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

impl Matrix<BigRational> {
    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(BigRational::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    pub fn mul(&self, other: &Matrix<BigRational>) -> Matrix<BigRational> {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = Matrix::filled(self.rows, other.cols, BigRational::zero());
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}

pub fn int_to_rational(m: &Matrix<i64>) -> Matrix<BigRational> {
    m.map(|&v| BigRational::from_integer(BigInt::from(v)))
}

pub fn int_to_bigint(m: &Matrix<i64>) -> Matrix<BigInt> {
    m.map(|&v| BigInt::from(v))
}

pub fn rational_to_f64(v: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap_or_else(|| {
        if v.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact rational value of a finite float.
pub fn f64_to_rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite float")
}

/// Solves `m x = rhs` by Gaussian elimination with partial pivoting.
pub fn solve_linear(m: &Matrix<f64>, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if m.rows != m.cols || m.rows != rhs.len() {
        return Err(LinalgError::DimensionMismatch(format!(
            "{}x{} system with rhs of length {}",
            m.rows,
            m.cols,
            rhs.len()
        )));
    }
    let mut a = m.data.clone();
    let mut x = rhs.to_vec();
    solve_in_place(&mut a, m.rows, &mut x)?;
    Ok(x)
}

/// In-place variant of [`solve_linear`] on a row-major `n x n` buffer.
/// On success `rhs` holds the solution and `a` is overwritten.
pub fn solve_in_place(a: &mut [f64], n: usize, rhs: &mut [f64]) -> Result<(), LinalgError> {
    solve_in_place_with(a, n, rhs, PIVOT_TOLERANCE)
}

/// [`solve_in_place`] with an explicit relative pivot threshold.
pub fn solve_in_place_with(a: &mut [f64], n: usize, rhs: &mut [f64], tol: f64) -> Result<(), LinalgError> {
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if n == 0 {
        return Ok(());
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(LinalgError::SingularMatrix);
    }
    let threshold = tol * scale;
    for k in 0..n {
        let mut piv = k;
        let mut best = a[k * n + k].abs();
        for i in k + 1..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best < threshold {
            return Err(LinalgError::SingularMatrix);
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            rhs.swap(k, piv);
        }
        let d = a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] / d;
            if f == 0.0 {
                continue;
            }
            for j in k + 1..n {
                a[i * n + j] -= f * a[k * n + j];
            }
            rhs[i] -= f * rhs[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for j in k + 1..n {
            s -= a[k * n + j] * rhs[j];
        }
        rhs[k] = s / a[k * n + k];
    }
    Ok(())
}

/// Solves `m x = rhs` exactly.
pub fn solve_linear_exact(
    m: &Matrix<BigRational>,
    rhs: &[BigRational],
) -> Result<Vec<BigRational>, LinalgError> {
    if m.rows != m.cols || m.rows != rhs.len() {
        return Err(LinalgError::DimensionMismatch(format!(
            "{}x{} system with rhs of length {}",
            m.rows,
            m.cols,
            rhs.len()
        )));
    }
    let n = m.rows;
    let mut a = m.data.clone();
    let mut x = rhs.to_vec();
    for k in 0..n {
        let piv = (k..n).find(|&i| !a[i * n + k].is_zero()).ok_or(LinalgError::SingularMatrix)?;
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            x.swap(k, piv);
        }
        let d = a[k * n + k].clone();
        for i in k + 1..n {
            if a[i * n + k].is_zero() {
                continue;
            }
            let f = &a[i * n + k] / &d;
            for j in k + 1..n {
                let t = &f * &a[k * n + j];
                a[i * n + j] -= t;
            }
            let t = &f * &x[k];
            x[i] -= t;
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k].clone();
        for j in k + 1..n {
            s -= &a[k * n + j] * &x[j];
        }
        x[k] = s / &a[k * n + k];
    }
    Ok(x)
}

/// Exact inverse, or `SingularMatrix`.
pub fn inverse_exact(m: &Matrix<BigRational>) -> Result<Matrix<BigRational>, LinalgError> {
    let n = m.rows;
    if m.cols != n {
        return Err(LinalgError::DimensionMismatch("inverse of a non-square matrix".into()));
    }
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![BigRational::zero(); n];
        e[j] = BigRational::one();
        cols.push(solve_linear_exact(m, &e)?);
    }
    let mut out = Matrix::filled(n, n, BigRational::zero());
    for (j, col) in cols.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Result of Bareiss elimination: the determinant and the successive
/// leading pivots, all of which are integers for integer input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bareiss {
    pub determinant: BigInt,
    pub pivots: Vec<BigInt>,
}

/// Fraction-free Bareiss elimination with row swaps.
pub fn bareiss(m: &Matrix<BigInt>) -> Bareiss {
    assert_eq!(m.rows, m.cols, "determinant of a non-square matrix");
    let n = m.rows;
    let mut a = m.data.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    let mut pivots = Vec::with_capacity(n);
    for k in 0..n {
        let Some(piv) = (k..n).find(|&i| !a[i * n + k].is_zero()) else {
            return Bareiss { determinant: BigInt::zero(), pivots };
        };
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            sign = -sign;
        }
        let akk = a[k * n + k].clone();
        pivots.push(akk.clone());
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &akk * &a[i * n + j] - &a[i * n + k] * &a[k * n + j];
                debug_assert!((&num % &prev).is_zero());
                a[i * n + j] = num / &prev;
            }
            a[i * n + k] = BigInt::zero();
        }
        prev = akk;
    }
    let determinant = if n == 0 { BigInt::one() } else { sign * &a[(n - 1) * n + n - 1] };
    Bareiss { determinant, pivots }
}

/// Exact determinant; the empty matrix has determinant 1.
pub fn determinant(m: &Matrix<BigInt>) -> BigInt {
    bareiss(m).determinant
}

/// Exact determinant of a rational matrix.
pub fn determinant_rational(m: &Matrix<BigRational>) -> BigRational {
    assert_eq!(m.rows, m.cols, "determinant of a non-square matrix");
    let n = m.rows;
    let mut a = m.data.clone();
    let mut det = BigRational::one();
    for k in 0..n {
        let Some(piv) = (k..n).find(|&i| !a[i * n + k].is_zero()) else {
            return BigRational::zero();
        };
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            det = -det;
        }
        let d = a[k * n + k].clone();
        det *= &d;
        for i in k + 1..n {
            if a[i * n + k].is_zero() {
                continue;
            }
            let f = &a[i * n + k] / &d;
            for j in k + 1..n {
                let t = &f * &a[k * n + j];
                a[i * n + j] -= t;
            }
        }
    }
    det
}

/// Floating-point determinant with partial pivoting.
pub fn determinant_f64(m: &Matrix<f64>) -> f64 {
    assert_eq!(m.rows, m.cols, "determinant of a non-square matrix");
    let n = m.rows;
    let mut a = m.data.clone();
    let mut det = 1.0;
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if a[i * n + k].abs() > a[piv * n + k].abs() {
                piv = i;
            }
        }
        if a[piv * n + k] == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            det = -det;
        }
        let d = a[k * n + k];
        det *= d;
        for i in k + 1..n {
            let f = a[i * n + k] / d;
            for j in k + 1..n {
                a[i * n + j] -= f * a[k * n + j];
            }
        }
    }
    det
}

/// Reduced row echelon form and the pivot columns.
pub fn rref(m: &Matrix<BigRational>) -> (Matrix<BigRational>, Vec<usize>) {
    let (rows, cols) = (m.rows, m.cols);
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| !a.get(i, c).is_zero()) else {
            continue;
        };
        if piv != r {
            for j in 0..cols {
                a.data.swap(r * cols + j, piv * cols + j);
            }
        }
        let d = a.get(r, c).clone();
        for j in 0..cols {
            let v = a.get(r, j) / &d;
            a.set(r, j, v);
        }
        for i in 0..rows {
            if i == r || a.get(i, c).is_zero() {
                continue;
            }
            let f = a.get(i, c).clone();
            for j in 0..cols {
                let v = a.get(i, j) - &f * a.get(r, j);
                a.set(i, j, v);
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

/// Exact rank.
pub fn rank(m: &Matrix<BigRational>) -> usize {
    rref(m).1.len()
}

pub fn rank_int(m: &Matrix<i64>) -> usize {
    rank(&int_to_rational(m))
}

/// Basis of the right nullspace `{v : m v = 0}`.
pub fn nullspace(m: &Matrix<BigRational>) -> Vec<Vec<BigRational>> {
    let (r, pivots) = rref(m);
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); m.cols];
            v[f] = BigRational::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -r.get(i, f).clone();
            }
            v
        })
        .collect()
}

/// Greedily selects a maximal set of linearly independent rows, scanning
/// rows in order.
pub fn independent_rows(m: &Matrix<BigRational>) -> Vec<usize> {
    let mut basis: Vec<Vec<BigRational>> = Vec::new();
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut chosen = Vec::new();
    for i in 0..m.rows {
        let mut v = m.row(i).to_vec();
        for (b, &pc) in basis.iter().zip(&pivot_cols) {
            if v[pc].is_zero() {
                continue;
            }
            let f = v[pc].clone() / &b[pc];
            for (vj, bj) in v.iter_mut().zip(b) {
                *vj -= &f * bj;
            }
        }
        if let Some(pc) = v.iter().position(|e| !e.is_zero()) {
            basis.push(v);
            pivot_cols.push(pc);
            chosen.push(i);
        }
    }
    chosen
}

/// Iterates over all `k`-subsets of `0..n` in lexicographic order.
pub struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Combinations { n, idx: (0..k).collect(), done: k > n }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Binomial coefficient saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn solve_identity_scale() {
        let m = Matrix::new(1, 1, vec![1.0]).unwrap();
        assert_eq!(solve_linear(&m, &[5.0]).unwrap(), vec![5.0]);
    }

    #[test]
    fn solve_two_by_two_exact() {
        let m = Matrix::new(2, 2, vec![q(4, 3), q(-1, 1), q(-1, 1), q(2, 1)]).unwrap();
        let x = solve_linear_exact(&m, &[q(1, 1), q(0, 1)]).unwrap();
        assert_eq!(x, vec![q(6, 5), q(3, 5)]);
        let mf = m.map(rational_to_f64);
        let xf = solve_linear(&mf, &[1.0, 0.0]).unwrap();
        assert!((xf[0] - 1.2).abs() < 1e-14 && (xf[1] - 0.6).abs() < 1e-14);
    }

    #[test]
    fn singular_systems_are_reported() {
        let m = Matrix::new(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(solve_linear(&m, &[1.0, 0.0]), Err(LinalgError::SingularMatrix));
        let mq = m.map(|&v| f64_to_rational(v));
        assert_eq!(solve_linear_exact(&mq, &[q(1, 1), q(0, 1)]), Err(LinalgError::SingularMatrix));
    }

    #[test]
    fn determinant_examples() {
        let m = Matrix::new(2, 2, vec![1, 1, -1, 0]).unwrap();
        assert_eq!(determinant(&int_to_bigint(&m)), BigInt::from(1));
        let e: Matrix<BigInt> = Matrix::new(0, 0, vec![]).unwrap();
        assert_eq!(determinant(&e), BigInt::from(1));
        let p = Matrix::new(2, 2, vec![0, 1, 1, 0]).unwrap();
        assert_eq!(determinant(&int_to_bigint(&p)), BigInt::from(-1));
    }

    #[test]
    fn rank_examples() {
        let id = Matrix::new(2, 2, vec![1, 0, 0, 1]).unwrap();
        assert_eq!(rank_int(&id), 2);
        let dup = Matrix::new(2, 2, vec![1, 1, 2, 2]).unwrap();
        assert_eq!(rank_int(&dup), 1);
        let tri = Matrix::new(2, 3, vec![1, 0, 1, -1, 1, 0]).unwrap();
        assert_eq!(rank_int(&tri), 2);
    }

    #[test]
    fn nullspace_vectors_are_in_kernel() {
        let tri = int_to_rational(&Matrix::new(2, 3, vec![1, 0, 1, -1, 1, 0]).unwrap());
        let ns = nullspace(&tri);
        assert_eq!(ns.len(), 1);
        assert!(tri.mul_vec(&ns[0]).iter().all(|v| v.is_zero()));
    }

    #[test]
    fn combinations_enumerate_all_subsets() {
        let all: Vec<_> = Combinations::new(4, 2).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 1]);
        assert_eq!(all[5], vec![2, 3]);
        assert_eq!(Combinations::new(3, 0).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
        assert_eq!(binomial(7, 3), 35);
    }

    #[test]
    fn independent_rows_skips_duplicates() {
        let m = int_to_rational(&Matrix::new(3, 2, vec![1, 1, 2, 2, 0, 1]).unwrap());
        assert_eq!(independent_rows(&m), vec![0, 2]);
    }
}
