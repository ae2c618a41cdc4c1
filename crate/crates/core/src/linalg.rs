//! Dense kernels used on the hot paths.
//!
//! Matrices holding observations are column-major `p x n` with one
//! observation per column, so every observation is a contiguous slice.

use nalgebra::DMatrix;

use crate::weights::WeightMatrix;

/// `a^T b` for column-major `a` (`k x m`) and `b` (`k x n`).
pub fn gram(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows(), "inner dimensions differ");
    let (k, m, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut out = DMatrix::<f64>::zeros(m, n);
    if k == 0 || m == 0 || n == 0 {
        return out;
    }
    // a^T viewed as m x k: row stride k, column stride 1
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            1,
            k as isize,
            0.0,
            out.as_mut_ptr(),
            1,
            m as isize,
        );
    }
    out
}

/// `a b` for column-major `a` (`m x k`) and `b` (`k x n`).
pub fn matmul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut out = DMatrix::<f64>::zeros(m, n);
    if k == 0 || m == 0 || n == 0 {
        return out;
    }
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            1,
            m as isize,
            b.as_ptr(),
            1,
            k as isize,
            0.0,
            out.as_mut_ptr(),
            1,
            m as isize,
        );
    }
    out
}

/// Observations pre-multiplied by `diag(omega)` together with their
/// projections onto `alpha`, so that
/// `x_j^T W y_k = (omega . x_j)^T (omega . y_k) + (alpha^T x_j)(alpha^T y_k)`.
#[derive(Debug, Clone)]
pub struct WeightedColumns {
    scaled: DMatrix<f64>,
    proj: Option<Vec<f64>>,
}

impl WeightedColumns {
    pub fn new(w: &WeightMatrix, cols: &DMatrix<f64>) -> Self {
        let omega = w.omega();
        let mut scaled = cols.clone();
        for mut c in scaled.column_iter_mut() {
            for (v, o) in c.iter_mut().zip(omega) {
                *v *= o;
            }
        }
        let proj = w.has_rank_one().then(|| {
            cols.column_iter()
                .map(|c| c.iter().zip(w.alpha()).map(|(x, a)| x * a).sum())
                .collect()
        });
        Self { scaled, proj }
    }

    pub fn ncols(&self) -> usize {
        self.scaled.ncols()
    }

    /// Matrix of `x_j^T W y_k` over all column pairs.
    pub fn weighted_gram(&self, other: &WeightedColumns) -> DMatrix<f64> {
        let mut g = gram(&self.scaled, &other.scaled);
        if let (Some(a), Some(b)) = (&self.proj, &other.proj) {
            for (k, bk) in b.iter().enumerate() {
                for (j, aj) in a.iter().enumerate() {
                    g[(j, k)] += aj * bk;
                }
            }
        }
        g
    }

    /// `x_j^T W x_j` for every column.
    pub fn diag_quadratic(&self) -> Vec<f64> {
        self.scaled
            .column_iter()
            .enumerate()
            .map(|(j, c)| {
                let d = c.norm_squared();
                match &self.proj {
                    Some(a) => d + a[j] * a[j],
                    None => d,
                }
            })
            .collect()
    }
}

/// Symmetric square root through the eigendecomposition, clamping
/// eigenvalues in `[-tol, 0)` to zero.
pub fn symmetric_sqrt(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let mut q = eig.eigenvectors.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam < -tol {
            log::warn!("eigenvalue {lam:e} below -{tol:e} clamped to zero");
        }
        let s = lam.max(0.0).sqrt();
        q.column_mut(j).scale_mut(s);
    }
    let root = &q * eig.eigenvectors.transpose();
    (&root + root.transpose()) * 0.5
}

pub fn largest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.max()
}

/// `tr(a b)` without forming the product.
pub fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.ncols(), b.nrows());
    assert_eq!(a.nrows(), b.ncols());
    let mut t = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            t += a[(i, k)] * b[(k, i)];
        }
    }
    t
}
