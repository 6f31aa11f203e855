//! Helpers shared by the integration and acceptance tests: nalgebra
//! conversions, random test matrices and Monte-Carlo estimators.

#![allow(dead_code)]

use nalgebra::DMatrix;
use onebit_idd::linalg::{CMatrix, C64};
use onebit_idd::modem::complex_gaussian;
use onebit_idd::quantization::quantize_sample;
use rand::Rng;

pub fn to_na(m: &CMatrix) -> DMatrix<C64> {
    DMatrix::from_fn(m.rows(), m.cols(), |r, c| m[(r, c)])
}

pub fn from_na(m: &DMatrix<C64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

pub fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, 1.0))
}

/// A random Hermitian positive definite matrix `A Aᴴ / n + floor I` with
/// unequal diagonal entries.
pub fn random_hpd<R: Rng>(n: usize, floor: f64, rng: &mut R) -> CMatrix {
    let a = random_matrix(n, n, rng);
    let scales: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let a = CMatrix::from_fn(n, n, |r, c| a[(r, c)] * scales[r]);
    let mut c = a.mul(&a.adjoint()).unwrap().scale(1.0 / n as f64).hermitian_part();
    for i in 0..n {
        c[(i, i)] += floor;
    }
    c
}

/// Monte-Carlo estimates of `E[y_Q y_Qᴴ]` and `E[y_Q yᴴ]` for `y ~ CN(0, C)`.
pub fn quantized_moments<R: Rng>(c: &CMatrix, draws: usize, rng: &mut R) -> (CMatrix, CMatrix) {
    let n = c.rows();
    let l = to_na(c).cholesky().expect("positive definite").l();
    let mut qq = vec![C64::new(0.0, 0.0); n * n];
    let mut qy = vec![C64::new(0.0, 0.0); n * n];
    let mut z = vec![C64::new(0.0, 0.0); n];
    let mut y = vec![C64::new(0.0, 0.0); n];
    let mut yq = vec![C64::new(0.0, 0.0); n];
    for _ in 0..draws {
        for v in z.iter_mut() {
            *v = complex_gaussian(rng, 1.0);
        }
        for r in 0..n {
            y[r] = (0..=r).map(|k| l[(r, k)] * z[k]).sum();
            yq[r] = quantize_sample(y[r]);
        }
        for r in 0..n {
            for col in 0..n {
                qq[r * n + col] += yq[r] * yq[col].conj();
                qy[r * n + col] += yq[r] * y[col].conj();
            }
        }
    }
    let scale = 1.0 / draws as f64;
    let qq = CMatrix::from_row_major(n, n, qq.into_iter().map(|v| v * scale).collect()).unwrap();
    let qy = CMatrix::from_row_major(n, n, qy.into_iter().map(|v| v * scale).collect()).unwrap();
    (qq, qy)
}
