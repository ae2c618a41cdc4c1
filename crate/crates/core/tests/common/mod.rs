#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// `scale * rho^|i-j|`.
pub fn ar1(p: usize, rho: f64, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| scale * rho.powi(i.abs_diff(j) as i32))
}

pub fn cholesky(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    sigma.clone().cholesky().expect("positive definite").l()
}

/// `n` Gaussian columns with mean `mu` and covariance `l l^T`.
pub fn gaussian_columns<R: Rng>(rng: &mut R, mu: &DVector<f64>, l: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let p = mu.len();
    let z = DMatrix::from_fn(p, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut x = l * z;
    for mut c in x.column_iter_mut() {
        c += mu;
    }
    x
}

pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}
