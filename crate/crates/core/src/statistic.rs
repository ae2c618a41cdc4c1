//! The U-statistic `T_n` and its exact first two moments.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_len, Error, Result};
use crate::linalg::{matmul, trace_of_product};
use crate::weights::WeightMatrix;

/// `q` groups of `p`-dimensional observations with the coefficients of the
/// linear hypothesis `sum_i beta_i mu_i = 0`.
///
/// Each group is stored column-major as `p x n_i`, one observation per
/// column.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    groups: Vec<DMatrix<f64>>,
    betas: Vec<f64>,
    p: usize,
}

impl SampleSet {
    /// Groups given as `n_i x p` matrices, one observation per row.
    pub fn new(groups: Vec<DMatrix<f64>>, betas: Vec<f64>) -> Result<Self> {
        Self::from_columns(groups.into_iter().map(|g| g.transpose()).collect(), betas)
    }

    /// Groups given as `p x n_i` matrices, one observation per column.
    pub fn from_columns(groups: Vec<DMatrix<f64>>, betas: Vec<f64>) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::InvalidDimension(format!(
                "need at least 2 groups, got {}",
                groups.len()
            )));
        }
        ensure_len(groups.len(), betas.len())?;
        let p = groups[0].nrows();
        if p == 0 {
            return Err(Error::InvalidDimension("p must be >= 1".into()));
        }
        for (i, g) in groups.iter().enumerate() {
            ensure_len(p, g.nrows())?;
            if g.ncols() < 2 {
                return Err(Error::InsufficientSamples {
                    group: i,
                    n: g.ncols(),
                    required: 2,
                });
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "group {i} contains non-finite values"
                )));
            }
        }
        if betas.iter().any(|b| !b.is_finite()) || betas.iter().all(|&b| b == 0.0) {
            return Err(Error::InvalidParameter(
                "betas must be finite and not all zero".into(),
            ));
        }
        Ok(Self { groups, betas, p })
    }

    /// Groups as lists of observation rows.
    pub fn from_rows(groups: &[Vec<Vec<f64>>], betas: Vec<f64>) -> Result<Self> {
        let mut cols = Vec::with_capacity(groups.len());
        for g in groups {
            let p = g.first().map_or(0, Vec::len);
            for row in g {
                ensure_len(p, row.len())?;
            }
            let flat: Vec<f64> = g.iter().flatten().copied().collect();
            cols.push(DMatrix::from_column_slice(p, g.len(), &flat));
        }
        Self::from_columns(cols, betas)
    }

    pub fn q(&self) -> usize {
        self.groups.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.ncols()).collect()
    }

    /// Group `i` as a `p x n_i` matrix.
    pub fn group(&self, i: usize) -> &DMatrix<f64> {
        &self.groups[i]
    }

    pub fn groups(&self) -> &[DMatrix<f64>] {
        &self.groups
    }

    pub fn observation(&self, group: usize, j: usize) -> &[f64] {
        let g = &self.groups[group];
        &g.as_slice()[j * self.p..(j + 1) * self.p]
    }

    pub fn with_betas(&self, betas: Vec<f64>) -> Result<Self> {
        Self::from_columns(self.groups.clone(), betas)
    }

    pub(crate) fn require_min_size(&self, required: usize) -> Result<()> {
        for (i, g) in self.groups.iter().enumerate() {
            if g.ncols() < required {
                return Err(Error::InsufficientSamples {
                    group: i,
                    n: g.ncols(),
                    required,
                });
            }
        }
        Ok(())
    }
}

/// Population means and covariances, used only by the moment formulas and
/// power calculations.
#[derive(Debug, Clone)]
pub struct PopulationSpec {
    mus: Vec<DVector<f64>>,
    sigmas: Vec<DMatrix<f64>>,
}

impl PopulationSpec {
    pub fn new(mus: Vec<DVector<f64>>, sigmas: Vec<DMatrix<f64>>) -> Result<Self> {
        if mus.is_empty() {
            return Err(Error::InvalidDimension("need at least one population".into()));
        }
        ensure_len(mus.len(), sigmas.len())?;
        let p = mus[0].len();
        for (mu, s) in mus.iter().zip(&sigmas) {
            ensure_len(p, mu.len())?;
            ensure_len(p, s.nrows())?;
            ensure_len(p, s.ncols())?;
            let asym = (s - s.transpose()).amax();
            if asym > 1e-10 {
                return Err(Error::InvalidParameter(format!(
                    "covariance not symmetric (max asymmetry {asym:e})"
                )));
            }
        }
        Ok(Self { mus, sigmas })
    }

    pub fn q(&self) -> usize {
        self.mus.len()
    }

    pub fn p(&self) -> usize {
        self.mus[0].len()
    }

    pub fn mus(&self) -> &[DVector<f64>] {
        &self.mus
    }

    pub fn sigmas(&self) -> &[DMatrix<f64>] {
        &self.sigmas
    }

    /// `mu = sum_i beta_i mu_i`.
    pub fn combined_mean(&self, betas: &[f64]) -> Result<DVector<f64>> {
        ensure_len(self.q(), betas.len())?;
        let mut mu = DVector::zeros(self.p());
        for (b, m) in betas.iter().zip(&self.mus) {
            mu.axpy(*b, m, 1.0);
        }
        Ok(mu)
    }

    pub fn equal_covariances(&self) -> bool {
        let s0 = &self.sigmas[0];
        let tol = 1e-12 * s0.amax().max(1.0);
        self.sigmas[1..].iter().all(|s| (s - s0).amax() <= tol)
    }
}

/// `T_n`, evaluated through per-group observation sums:
/// cross terms as `beta_a beta_b / (n_a n_b) s_a^T W s_b` and within terms as
/// `beta_i^2 / (n_i (n_i - 1)) (s_i^T W s_i - sum_j x_ij^T W x_ij)`.
pub fn compute_tn(s: &SampleSet, w: &WeightMatrix) -> Result<f64> {
    ensure_len(w.dim(), s.p())?;
    let sums: Vec<Vec<f64>> = s
        .groups
        .iter()
        .map(|g| g.column_sum().as_slice().to_vec())
        .collect();
    let q = s.q();
    let mut cross = 0.0;
    for a in 0..q {
        for b in 0..q {
            if a == b {
                continue;
            }
            let na = s.groups[a].ncols() as f64;
            let nb = s.groups[b].ncols() as f64;
            cross += s.betas[a] * s.betas[b] / (na * nb) * w.bilinear_unchecked(&sums[a], &sums[b]);
        }
    }
    let mut within = 0.0;
    for (i, g) in s.groups.iter().enumerate() {
        let n = g.ncols() as f64;
        let total = w.bilinear_unchecked(&sums[i], &sums[i]);
        let diag: f64 = (0..g.ncols())
            .map(|j| {
                let x = s.observation(i, j);
                w.bilinear_unchecked(x, x)
            })
            .sum();
        within += s.betas[i] * s.betas[i] / (n * (n - 1.0)) * (total - diag);
    }
    Ok(cross + within)
}

/// `E(T_n) = mu^T W mu` with `mu = sum_i beta_i mu_i`.
pub fn theoretical_mean(pop: &PopulationSpec, betas: &[f64], w: &WeightMatrix) -> Result<f64> {
    ensure_len(w.dim(), pop.p())?;
    let mu = pop.combined_mean(betas)?;
    w.bilinear(mu.as_slice(), mu.as_slice())
}

/// The two components of `Var(T_n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceParts {
    /// Null-dominant part, driven by the covariance traces.
    pub sigma_q1_sq: f64,
    /// Signal-dependent part, zero under the null.
    pub sigma_q2_sq: f64,
}

impl VarianceParts {
    pub fn total(&self) -> f64 {
        self.sigma_q1_sq + self.sigma_q2_sq
    }
}

/// Exact `Var(T_n) = sigma_q1^2 + sigma_q2^2` from dense covariances.
pub fn theoretical_variance(
    pop: &PopulationSpec,
    betas: &[f64],
    ns: &[usize],
    w: &WeightMatrix,
) -> Result<VarianceParts> {
    let q = pop.q();
    ensure_len(q, betas.len())?;
    ensure_len(q, ns.len())?;
    ensure_len(w.dim(), pop.p())?;
    if let Some(i) = ns.iter().position(|&n| n < 2) {
        return Err(Error::InsufficientSamples {
            group: i,
            n: ns[i],
            required: 2,
        });
    }
    for (i, s) in pop.sigmas.iter().enumerate() {
        let min = s.clone().symmetric_eigen().eigenvalues.min();
        if min < -1e-8 {
            log::warn!("covariance {i} is not PSD (min eigenvalue {min:e}); proceeding");
        }
    }
    let wd = w.dense();
    let ws: Vec<DMatrix<f64>> = pop.sigmas.iter().map(|s| matmul(&wd, s)).collect();
    let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut q1 = 0.0;
    for a in 0..q {
        for b in 0..q {
            if a == b {
                let c = betas[a].powi(4) / (nf[a] * (nf[a] - 1.0));
                q1 += 2.0 * c * trace_of_product(&ws[a], &ws[a]);
            } else {
                let c = (betas[a] * betas[b]).powi(2) / (nf[a] * nf[b]);
                q1 += 2.0 * c * trace_of_product(&ws[a], &ws[b]);
            }
        }
    }
    let mu = pop.combined_mean(betas)?;
    let wmu = &wd * &mu;
    let mut mix = DMatrix::zeros(pop.p(), pop.p());
    for ((b, s), n) in betas.iter().zip(&pop.sigmas).zip(&nf) {
        mix += s * (b * b / n);
    }
    let q2 = 4.0 * (wmu.transpose() * mix * &wmu)[(0, 0)];
    Ok(VarianceParts {
        sigma_q1_sq: q1,
        sigma_q2_sq: q2,
    })
}
