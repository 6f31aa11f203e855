//! Dense complex matrices and a Hermitian (LLᴴ) Cholesky solver.
//!
//! The receiver only ever solves small Hermitian positive definite systems
//! (M×M with M in the tens, or τ×τ for pilots), so everything here is a plain
//! row-major buffer with no blocking. The in-place slice routines exist so the
//! per-symbol filter path can run without allocating.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix data",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().iter().sum()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "matrix addition")?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "matrix subtraction")?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matrix product",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (k, a) in self.row(r).iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self::from_fn(self.rows * other.rows, self.cols * other.cols, |r, c| {
            self[(r / other.rows, c / other.cols)] * other[(r % other.rows, c % other.cols)]
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest `|A - Aᴴ|` entry relative to the largest entry of `A`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev / scale
    }

    /// `(A + Aᴴ) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self[(r, c)] + self[(c, r)].conj()) * 0.5
        })
    }

    fn check_same_shape(&self, other: &Self, context: &'static str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

/// `aᴴ b`.
pub fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Smallest accepted ratio of a Cholesky pivot to its diagonal entry.
pub const PIVOT_FLOOR: f64 = 1e-14;

/// Factors the Hermitian matrix held in `a` (row-major, n×n) into `L Lᴴ`,
/// overwriting the lower triangle with `L`. Only the lower triangle of the
/// input is read. Returns `false` if a pivot drops below `PIVOT_FLOOR` times
/// its diagonal entry.
pub fn cholesky_in_place(a: &mut [C64], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let row_j = &mut a[j * n..j * n + n];
        let diag = row_j[j].re;
        let mut d = diag;
        for v in &row_j[..j] {
            d -= v.norm_sqr();
        }
        // a pivot that lost nearly all of its diagonal signals numerical singularity
        if !(d > PIVOT_FLOOR * diag && d.is_finite()) {
            return false;
        }
        let ljj = d.sqrt();
        row_j[j] = C64::new(ljj, 0.0);
        let inv = 1.0 / ljj;
        let (head, tail) = a.split_at_mut((j + 1) * n);
        let lj = &head[j * n..j * n + j];
        for row_i in tail.chunks_exact_mut(n) {
            let mut s = row_i[j];
            for (x, y) in row_i[..j].iter().zip(lj) {
                s -= x * y.conj();
            }
            row_i[j] = s * inv;
        }
    }
    true
}

/// Solves `L Lᴴ x = b` in place given the factor produced by [`cholesky_in_place`].
pub fn cholesky_solve_in_place(l: &[C64], n: usize, b: &mut [C64]) {
    // forward: L z = b
    for i in 0..n {
        let row = &l[i * n..i * n + n];
        let mut s = b[i];
        for (lij, bj) in row[..i].iter().zip(&b[..i]) {
            s -= lij * bj;
        }
        b[i] = s / row[i].re;
    }
    // backward: Lᴴ x = z
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in (i + 1)..n {
            s -= l[j * n + i].conj() * b[j];
        }
        b[i] = s / l[i * n + i].re;
    }
}

/// Cholesky factor of a Hermitian positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    factor: Vec<C64>,
}

impl Cholesky {
    /// Factors `a`, reading only its lower triangle.
    pub fn new(a: &CMatrix) -> Option<Self> {
        if !a.is_square() {
            return None;
        }
        let n = a.rows();
        let mut factor = a.as_slice().to_vec();
        cholesky_in_place(&mut factor, n).then_some(Self { n, factor })
    }

    /// Factors `a` as is; if that fails, factors `a + λI` and then `a + 100λI`
    /// with `λ = rel · trace(a) / n`.
    pub fn regularized(a: &CMatrix, rel: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidDimensions(format!(
                "Cholesky needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let lambda = rel * a.trace().re / n as f64;
        let mut buf = vec![C64::new(0.0, 0.0); n * n];
        for boost in [0.0, 1.0, 100.0] {
            buf.copy_from_slice(a.as_slice());
            for i in 0..n {
                buf[i * n + i] += lambda * boost;
            }
            if cholesky_in_place(&mut buf, n) {
                return Ok(Self { n, factor: buf });
            }
        }
        Err(Error::SingularCovariance)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        cholesky_solve_in_place(&self.factor, self.n, &mut x);
        x
    }

    /// Solves for every column of `b`.
    pub fn solve_matrix(&self, b: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(b.rows(), b.cols());
        let mut col = vec![C64::new(0.0, 0.0); self.n];
        for c in 0..b.cols() {
            for r in 0..self.n {
                col[r] = b[(r, c)];
            }
            cholesky_solve_in_place(&self.factor, self.n, &mut col);
            for r in 0..self.n {
                out[(r, c)] = col[r];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn cholesky_solves_small_hermitian_system() {
        let a = CMatrix::from_row_major(
            2,
            2,
            vec![c(4.0, 0.0), c(1.0, -1.0), c(1.0, 1.0), c(3.0, 0.0)],
        )
        .unwrap();
        let b = vec![c(1.0, 2.0), c(-1.0, 0.5)];
        let x = Cholesky::new(&a).unwrap().solve(&b);
        let back = a.mul_vec(&x).unwrap();
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = CMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(Cholesky::new(&a).is_none());
    }

    #[test]
    fn regularization_rescues_semidefinite() {
        // rank-one PSD matrix
        let v = [c(1.0, 0.0), c(0.0, 1.0)];
        let a = CMatrix::from_fn(2, 2, |r, col| v[r] * v[col].conj());
        assert!(Cholesky::regularized(&a, 1e-10).is_ok());
        let zero = CMatrix::zeros(2, 2);
        assert!(matches!(
            Cholesky::regularized(&zero, 1e-10),
            Err(Error::SingularCovariance)
        ));
    }

    #[test]
    fn kron_of_identities() {
        let a = CMatrix::identity(2).kron(&CMatrix::identity(3));
        assert_eq!(a, CMatrix::identity(6));
    }

    #[test]
    fn hermitian_part_is_hermitian() {
        let a = CMatrix::from_fn(3, 3, |r, col| c(r as f64, col as f64 * 2.0 - 1.0));
        assert!(a.hermitian_deviation() > 0.1);
        assert!(a.hermitian_part().hermitian_deviation() < 1e-15);
    }
}
