use nalgebra::DMatrix;

use crate::error::{ensure_len, Result};
use crate::linalg::{matmul, trace_of_product};
use crate::statistic::PopulationSpec;
use crate::weights::WeightMatrix;

/// Finite-sample size of the two asymptotic conditions; both should be
/// small. No verdict is attached since the conditions are limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionReport {
    /// `max tr(W S_a W S_b W S_c W S_d) / tr^2((sum_i W S_i)^2)` over all
    /// index tuples.
    pub trace_ratio: f64,
    /// `mu^T W (sum beta_i^2 S_i) W mu` divided by
    /// `n^{-1} sum_{a,b} beta_a^2 beta_b^2 tr(W S_a W S_b)`.
    pub local_alternative_ratio: f64,
}

pub fn assumption_diagnostics(
    pop: &PopulationSpec,
    betas: &[f64],
    ns: &[usize],
    w: &WeightMatrix,
) -> Result<AssumptionReport> {
    let q = pop.q();
    let p = pop.p();
    ensure_len(q, betas.len())?;
    ensure_len(q, ns.len())?;
    ensure_len(p, w.dim())?;
    let wd = w.dense();
    let ws: Vec<DMatrix<f64>> = pop.sigmas().iter().map(|s| matmul(&wd, s)).collect();

    let mut sum = DMatrix::zeros(p, p);
    for a in &ws {
        sum += a;
    }
    let denom = trace_of_product(&sum, &sum).powi(2);
    let pairs: Vec<Vec<DMatrix<f64>>> = ws
        .iter()
        .map(|a| ws.iter().map(|b| matmul(a, b)).collect())
        .collect();
    let mut worst = 0.0f64;
    for ab in pairs.iter().flatten() {
        for cd in pairs.iter().flatten() {
            worst = worst.max(trace_of_product(ab, cd));
        }
    }

    let mu = pop.combined_mean(betas)?;
    let wmu = &wd * &mu;
    let mut mix = DMatrix::zeros(p, p);
    for (b, s) in betas.iter().zip(pop.sigmas()) {
        mix += s * (b * b);
    }
    let lhs = (wmu.transpose() * mix * &wmu)[(0, 0)];
    let n: usize = ns.iter().sum();
    let mut rhs = 0.0;
    for a in 0..q {
        for b in 0..q {
            rhs += (betas[a] * betas[b]).powi(2) * trace_of_product(&ws[a], &ws[b]);
        }
    }
    rhs /= n as f64;
    let local = if lhs == 0.0 { 0.0 } else { lhs / rhs };

    Ok(AssumptionReport {
        trace_ratio: worst / denom,
        local_alternative_ratio: local,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightSpec;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    #[test]
    fn identity_case() {
        // W = I, S_i = I, q = 2: p / (tr((2I)^2))^2 = p / (4p)^2
        for p in [3usize, 10, 25] {
            let pop = PopulationSpec::new(
                vec![DVector::zeros(p); 2],
                vec![DMatrix::identity(p, p); 2],
            )
            .unwrap();
            let w = WeightMatrix::new(WeightSpec::identity(p).unwrap());
            let r = assumption_diagnostics(&pop, &[1.0, -1.0], &[10, 10], &w).unwrap();
            assert_relative_eq!(r.trace_ratio, 1.0 / (16.0 * p as f64), max_relative = 1e-12);
            assert_eq!(r.local_alternative_ratio, 0.0);
        }
    }

    #[test]
    fn local_alternative_positive_under_signal() {
        let p = 4;
        let pop = PopulationSpec::new(
            vec![DVector::from_element(p, 0.5), DVector::zeros(p)],
            vec![DMatrix::identity(p, p); 2],
        )
        .unwrap();
        let w = WeightMatrix::new(WeightSpec::identity(p).unwrap());
        let r = assumption_diagnostics(&pop, &[1.0, -1.0], &[10, 10], &w).unwrap();
        // lhs = 2 * (0.25 p), rhs = 4 p / 20
        assert_relative_eq!(r.local_alternative_ratio, 0.5 * p as f64 / (4.0 * p as f64 / 20.0), max_relative = 1e-12);
    }
}
