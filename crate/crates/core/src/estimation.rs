//! Plug-in estimators of `tr((W Sigma_i)^2)` and `tr(W Sigma_a W Sigma_b)`
//! and the variance estimate that standardizes `T_n`.
//!
//! Everything is computed from the Gram matrix of centered observations
//! under `W`, `G_jk = d_j^T W d_k`, using
//! `tr(W S) = sum_j G_jj / (n - 1)` and `tr((W S)^2) = sum_jk G_jk^2 / (n - 1)^2`,
//! so no `p x p` product is ever formed.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_len, Error, Result};
use crate::linalg::WeightedColumns;
use crate::statistic::SampleSet;
use crate::weights::WeightMatrix;

/// Sample mean and centered observations of one group.
#[derive(Debug, Clone)]
pub struct GroupSummary {
    mean: DVector<f64>,
    centered: DMatrix<f64>,
}

impl GroupSummary {
    /// `cols` is `p x n`, one observation per column.
    pub fn new(cols: &DMatrix<f64>) -> Self {
        let n = cols.ncols();
        if n == 0 {
            return Self {
                mean: DVector::zeros(cols.nrows()),
                centered: cols.clone(),
            };
        }
        // Averaging offsets from the first column keeps constant groups exact.
        let anchor = cols.column(0).into_owned();
        let mut centered = cols.clone();
        for mut c in centered.column_iter_mut() {
            c -= &anchor;
        }
        let offset = centered.column_sum() / n as f64;
        for mut c in centered.column_iter_mut() {
            c -= &offset;
        }
        Self {
            mean: anchor + offset,
            centered,
        }
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Deviations `x_j - xbar`, one per column.
    pub fn centered(&self) -> &DMatrix<f64> {
        &self.centered
    }

    pub fn n(&self) -> usize {
        self.centered.ncols()
    }

    pub fn p(&self) -> usize {
        self.centered.nrows()
    }

    /// Dense `S = D D^T / (n - 1)`; for oracles only.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.centered * self.centered.transpose() / (self.n() as f64 - 1.0)
    }
}

fn require(g: &GroupSummary, group: usize, required: usize) -> Result<()> {
    if g.n() < required {
        return Err(Error::InsufficientSamples {
            group,
            n: g.n(),
            required,
        });
    }
    Ok(())
}

fn sum_sq(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

fn tr_sq_from_gram(gram: &DMatrix<f64>, n: usize) -> f64 {
    let n = n as f64;
    let diag_sq: f64 = gram.diagonal().iter().map(|v| v * v).sum();
    let tr_ws = gram.trace() / (n - 1.0);
    let tr_ws_sq = sum_sq(gram) / ((n - 1.0) * (n - 1.0));
    -diag_sq / ((n - 1.0) * (n - 2.0)) + (n - 1.0) * (n - 1.0) / (n * (n - 3.0)) * tr_ws_sq
        + (n - 1.0) / (n * (n - 2.0) * (n - 3.0)) * tr_ws * tr_ws
}

fn tr_cross_from_gram(gram: &DMatrix<f64>, n1: usize, n2: usize) -> f64 {
    sum_sq(gram) / ((n1 as f64 - 1.0) * (n2 as f64 - 1.0))
}

/// Estimate of `tr((W Sigma)^2)` from one group; needs `n >= 4`.
pub fn estimate_tr_wsigma_sq(g: &GroupSummary, w: &WeightMatrix) -> Result<f64> {
    ensure_len(w.dim(), g.p())?;
    require(g, 0, 4)?;
    let wc = WeightedColumns::new(w, &g.centered);
    Ok(tr_sq_from_gram(&wc.weighted_gram(&wc), g.n()))
}

/// Estimate of `tr(W Sigma_1 W Sigma_2)` as `tr(W S_1 W S_2)`.
pub fn estimate_tr_cross(g1: &GroupSummary, g2: &GroupSummary, w: &WeightMatrix) -> Result<f64> {
    ensure_len(w.dim(), g1.p())?;
    ensure_len(w.dim(), g2.p())?;
    require(g1, 0, 2)?;
    require(g2, 1, 2)?;
    let a = WeightedColumns::new(w, &g1.centered);
    let b = WeightedColumns::new(w, &g2.centered);
    Ok(tr_cross_from_gram(&a.weighted_gram(&b), g1.n(), g2.n()))
}

/// Ratio-consistent estimate of the null variance of `T_n`.
///
/// A nonpositive estimate is returned as [`Error::DegenerateVariance`]
/// carrying the raw value; it is never clamped.
pub fn sigma_hat_sq(s: &SampleSet, w: &WeightMatrix) -> Result<f64> {
    ensure_len(w.dim(), s.p())?;
    s.require_min_size(4)?;
    let q = s.q();
    let betas = s.betas();
    let cols: Vec<WeightedColumns> = s
        .groups()
        .iter()
        .map(|g| WeightedColumns::new(w, GroupSummary::new(g).centered()))
        .collect();
    let ns = s.sizes();
    let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut total = 0.0;
    for a in 0..q {
        let c = betas[a].powi(4) / (nf[a] * (nf[a] - 1.0));
        total += 2.0 * c * tr_sq_from_gram(&cols[a].weighted_gram(&cols[a]), ns[a]);
        for b in a + 1..q {
            let c = (betas[a] * betas[b]).powi(2) / (nf[a] * nf[b]);
            // the (a, b) and (b, a) terms are equal
            total += 4.0 * c * tr_cross_from_gram(&cols[a].weighted_gram(&cols[b]), ns[a], ns[b]);
        }
    }
    if total > 0.0 {
        Ok(total)
    } else {
        Err(Error::DegenerateVariance { value: total })
    }
}
