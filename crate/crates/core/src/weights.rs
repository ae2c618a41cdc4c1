//! The weight matrix `W = diag(omega_sq) + alpha alpha^T` induced by a
//! product weight density with per-coordinate means `alpha` and variances
//! `omega_sq`.
//!
//! `W` is never materialised on production paths. Everything goes through
//! [`WeightMatrix::bilinear`] or through the column scaling used by the Gram
//! routines in [`crate::linalg`]; [`WeightMatrix::dense`] exists for oracles
//! and for the validation-scale power calculations.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_len, Error, Result};

/// Means and variances of the weight density, one entry per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    alpha: Vec<f64>,
    omega_sq: Vec<f64>,
}

impl WeightSpec {
    pub fn new(alpha: Vec<f64>, omega_sq: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidDimension("weight dimension must be >= 1".into()));
        }
        ensure_len(alpha.len(), omega_sq.len())?;
        if let Some(k) = omega_sq.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "omega_sq[{}] = {} must be finite and > 0",
                k + 1,
                omega_sq[k]
            )));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter("alpha entries must be finite".into()));
        }
        Ok(Self { alpha, omega_sq })
    }

    /// Tuning used throughout the simulation study:
    /// `alpha_k = sqrt(5) p^{-3/8}` and `omega_k = sqrt(2) (1 + 2k / (3p))`
    /// for `k = 1..=p`.
    pub fn default_for(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidDimension("p must be >= 1".into()));
        }
        let pf = p as f64;
        let a = 5f64.sqrt() * pf.powf(-3.0 / 8.0);
        let omega_sq = (1..=p)
            .map(|k| {
                let omega = std::f64::consts::SQRT_2 * (1.0 + 2.0 * k as f64 / (3.0 * pf));
                omega * omega
            })
            .collect();
        Self::new(vec![a; p], omega_sq)
    }

    /// `alpha = 0`, `omega_sq = 1`, so that `W = I` and the statistic reduces
    /// to the unweighted U-statistic.
    pub fn identity(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidDimension("p must be >= 1".into()));
        }
        Self::new(vec![0.0; p], vec![1.0; p])
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn omega_sq(&self) -> &[f64] {
        &self.omega_sq
    }

    /// The common value when every `alpha` entry is equal.
    pub fn common_alpha(&self) -> Option<f64> {
        let a0 = self.alpha[0];
        let tol = 1e-12 * a0.abs().max(1.0);
        self.alpha
            .iter()
            .all(|a| (a - a0).abs() <= tol)
            .then_some(a0)
    }

    pub fn omega_sorted(&self) -> bool {
        self.omega_sq.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Free-function form of [`WeightSpec::default_for`].
pub fn default_weight_spec(p: usize) -> Result<WeightSpec> {
    WeightSpec::default_for(p)
}

/// Free-function form of [`WeightSpec::identity`].
pub fn identity_weight_spec(p: usize) -> Result<WeightSpec> {
    WeightSpec::identity(p)
}

/// Structure-exploiting view of `W = diag(omega_sq) + alpha alpha^T`.
#[derive(Debug, Clone)]
pub struct WeightMatrix {
    spec: WeightSpec,
    omega: Vec<f64>,
    rank_one: bool,
}

impl WeightMatrix {
    pub fn new(spec: WeightSpec) -> Self {
        let omega = spec.omega_sq.iter().map(|v| v.sqrt()).collect();
        let rank_one = spec.alpha.iter().any(|&a| a != 0.0);
        Self {
            spec,
            omega,
            rank_one,
        }
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.spec.alpha
    }

    pub fn omega_sq(&self) -> &[f64] {
        &self.spec.omega_sq
    }

    /// Square roots of `omega_sq`.
    pub(crate) fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// False when `alpha` is identically zero and `W` is diagonal.
    pub(crate) fn has_rank_one(&self) -> bool {
        self.rank_one
    }

    /// `x^T W y`, summed in ascending index order followed by the rank-one
    /// term `(alpha^T x)(alpha^T y)`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        ensure_len(self.dim(), x.len())?;
        ensure_len(self.dim(), y.len())?;
        Ok(self.bilinear_unchecked(x, y))
    }

    pub(crate) fn bilinear_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut diag = 0.0;
        for ((w, a), b) in self.spec.omega_sq.iter().zip(x).zip(y) {
            diag += w * a * b;
        }
        if !self.rank_one {
            return diag;
        }
        let ax = dot(&self.spec.alpha, x);
        let ay = dot(&self.spec.alpha, y);
        diag + ax * ay
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let p = self.dim();
        let alpha = DVector::from_column_slice(&self.spec.alpha);
        let mut w = &alpha * alpha.transpose();
        for (i, v) in self.spec.omega_sq.iter().enumerate() {
            w[(i, i)] += v;
        }
        debug_assert_eq!(w.nrows(), p);
        w
    }

    /// `tr(W^2) = sum omega^4 + 2 sum alpha_i^2 omega_i^2 + (alpha^T alpha)^2`.
    pub fn trace_sq(&self) -> f64 {
        let w4: f64 = self.spec.omega_sq.iter().map(|v| v * v).sum();
        let cross: f64 = self
            .spec
            .alpha
            .iter()
            .zip(&self.spec.omega_sq)
            .map(|(a, w)| a * a * w)
            .sum();
        let aa = dot(&self.spec.alpha, &self.spec.alpha);
        w4 + 2.0 * cross + aa * aa
    }
}

impl From<WeightSpec> for WeightMatrix {
    fn from(spec: WeightSpec) -> Self {
        Self::new(spec)
    }
}

/// Free-function form of [`WeightMatrix::bilinear`].
pub fn bilinear(w: &WeightMatrix, x: &[f64], y: &[f64]) -> Result<f64> {
    w.bilinear(x, y)
}

/// Free-function form of [`WeightMatrix::dense`].
pub fn dense_weight(w: &WeightMatrix) -> DMatrix<f64> {
    w.dense()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn default_spec_p1() {
        let s = WeightSpec::default_for(1).unwrap();
        assert_relative_eq!(s.alpha()[0], 5f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(s.omega_sq()[0], 50.0 / 9.0, max_relative = 1e-14);
    }

    #[test]
    fn default_spec_p200() {
        let s = WeightSpec::default_for(200).unwrap();
        // 40-digit reference: sqrt(5) * 200^(-3/8)
        let alpha_ref = 0.306_618_781_758_651_958_8;
        for a in s.alpha() {
            assert_relative_eq!(*a, alpha_ref, max_relative = 1e-14);
        }
        assert_relative_eq!(s.omega_sq()[199], 50.0 / 9.0, max_relative = 1e-14);
        assert!(s.omega_sorted());
        assert!(s.common_alpha().is_some());
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(
            WeightSpec::default_for(0),
            Err(Error::InvalidDimension(_))
        ));
        assert!(matches!(
            WeightSpec::identity(0),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(WeightSpec::new(vec![0.0, 0.0], vec![1.0, 0.0]).is_err());
        assert!(WeightSpec::new(vec![0.0], vec![1.0, 1.0]).is_err());
        assert!(WeightSpec::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn identity_spec() {
        let s = WeightSpec::identity(3).unwrap();
        assert_eq!(s.alpha(), &[0.0, 0.0, 0.0]);
        assert_eq!(s.omega_sq(), &[1.0, 1.0, 1.0]);
        let w = WeightMatrix::new(WeightSpec::identity(2).unwrap());
        assert_eq!(w.bilinear(&[1.0, 2.0], &[3.0, -1.0]).unwrap(), 1.0);
        assert_eq!(w.dense(), DMatrix::identity(2, 2));
    }

    #[test]
    fn bilinear_hand_values() {
        let w = WeightMatrix::new(WeightSpec::new(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap());
        assert_eq!(w.bilinear(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(w.bilinear(&[0.0, 0.0], &[3.0, 7.0]).unwrap(), 0.0);
        assert!(matches!(
            w.bilinear(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dense_hand_values() {
        let w = WeightMatrix::new(WeightSpec::new(vec![1.0, 2.0], vec![3.0, 4.0]).unwrap());
        assert_eq!(w.dense(), DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 8.0]));
    }

    #[test]
    fn dense_default_is_positive_definite() {
        let w = WeightMatrix::new(WeightSpec::default_for(5).unwrap());
        let d = w.dense();
        assert_eq!(d, d.transpose());
        let min_eig = d.symmetric_eigen().eigenvalues.min();
        let min_w = w.omega_sq().iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min_eig >= min_w * (1.0 - 1e-12), "{min_eig} < {min_w}");
    }

    #[test]
    fn trace_sq_matches_dense() {
        let w = WeightMatrix::new(WeightSpec::default_for(17).unwrap());
        let d = w.dense();
        assert_relative_eq!(w.trace_sq(), (&d * &d).trace(), max_relative = 1e-12);
    }

    #[test]
    fn interlacing_equal_alpha() {
        for p in 2..=32 {
            let spec = WeightSpec::default_for(p).unwrap();
            let a = spec.alpha()[0];
            let w = WeightMatrix::new(spec.clone());
            let mut lam: Vec<f64> = w.dense().symmetric_eigen().eigenvalues.iter().copied().collect();
            lam.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let om = spec.omega_sq();
            let tol = 1e-10 * om[p - 1];
            for i in 0..p - 1 {
                assert!(om[i] - tol <= lam[i] && lam[i] <= om[i + 1] + tol, "p={p} i={i}");
            }
            assert!(lam[p - 1] >= om[p - 1] - tol);
            assert!((lam[p - 1] - om[p - 1]).abs() <= p as f64 * a * a + tol);
        }
    }

    fn spec_and_vectors() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..=64).prop_flat_map(|p| {
            (
                prop::collection::vec(-2.0f64..2.0, p),
                prop::collection::vec(0.05f64..5.0, p),
                prop::collection::vec(-10.0f64..10.0, p),
                prop::collection::vec(-10.0f64..10.0, p),
            )
        })
    }

    proptest! {
        #[test]
        fn bilinear_matches_dense((alpha, omega_sq, x, y) in spec_and_vectors()) {
            let w = WeightMatrix::new(WeightSpec::new(alpha, omega_sq).unwrap());
            let fast = w.bilinear(&x, &y).unwrap();
            let xv = DVector::from_column_slice(&x);
            let yv = DVector::from_column_slice(&y);
            let dense = (xv.transpose() * w.dense() * yv)[(0, 0)];
            // scale guards against catastrophic cancellation in the reference
            let scale: f64 = x.iter().zip(&y).zip(w.omega_sq()).map(|((a, b), o)| (a * b * o).abs()).sum::<f64>()
                + dot(w.alpha(), &x).abs() * dot(w.alpha(), &y).abs();
            prop_assert!((fast - dense).abs() <= 1e-12 * scale.max(dense.abs()) + 1e-300);
        }

        #[test]
        fn bilinear_symmetric_and_positive((alpha, omega_sq, x, y) in spec_and_vectors()) {
            let w = WeightMatrix::new(WeightSpec::new(alpha, omega_sq).unwrap());
            let xy = w.bilinear(&x, &y).unwrap();
            let yx = w.bilinear(&y, &x).unwrap();
            prop_assert!((xy - yx).abs() <= 1e-12 * xy.abs().max(1.0));
            if x.iter().any(|v| *v != 0.0) {
                prop_assert!(w.bilinear(&x, &x).unwrap() > 0.0);
            }
        }
    }
}
