//! Asymptotic power `Phi(-z_level + mu^T W mu / sigma_q1)` and the
//! weak-dense lower bound for equal covariances.

use nalgebra::{DMatrix, DVector};

use super::normal::{normal_cdf, z_quantile};
use crate::error::{ensure_len, Error, Result};
use crate::integer_part;
use crate::linalg::{matmul, trace_of_product};
use crate::statistic::{theoretical_mean, theoretical_variance, PopulationSpec};
use crate::weights::{WeightMatrix, WeightSpec};

/// Signal with `[p^delta]` leading entries equal to `nu` and zeros after.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakDense {
    pub delta: f64,
    pub nu: f64,
}

impl WeakDense {
    pub fn new(delta: f64, nu: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParameter(format!("delta {delta} outside (0, 1]")));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("nu {nu} must be > 0")));
        }
        Ok(Self { delta, nu })
    }

    /// Number of nonzero entries, `[p^delta]`.
    pub fn support(&self, p: usize) -> usize {
        integer_part((p as f64).powf(self.delta)).min(p)
    }

    pub fn signal(&self, p: usize) -> DVector<f64> {
        let m = self.support(p);
        DVector::from_fn(p, |i, _| if i < m { self.nu } else { 0.0 })
    }
}

#[derive(Debug, Clone)]
pub struct PowerScenario {
    pub pop: PopulationSpec,
    pub betas: Vec<f64>,
    pub ns: Vec<usize>,
    pub weight: WeightSpec,
    pub level: f64,
    pub weak_dense: Option<WeakDense>,
}

impl PowerScenario {
    pub fn new(
        pop: PopulationSpec,
        betas: Vec<f64>,
        ns: Vec<usize>,
        weight: WeightSpec,
        level: f64,
    ) -> Result<Self> {
        ensure_len(pop.q(), betas.len())?;
        ensure_len(pop.q(), ns.len())?;
        ensure_len(pop.p(), weight.dim())?;
        if let Some(i) = ns.iter().position(|&n| n < 2) {
            return Err(Error::InsufficientSamples {
                group: i,
                n: ns[i],
                required: 2,
            });
        }
        z_quantile(level)?;
        Ok(Self {
            pop,
            betas,
            ns,
            weight,
            level,
            weak_dense: None,
        })
    }

    /// Equal covariances `sigma` and means arranged so that
    /// `sum_i beta_i mu_i` is the weak-dense signal; the whole signal is
    /// carried by the first group with nonzero coefficient.
    pub fn weak_dense(
        sigma: DMatrix<f64>,
        betas: Vec<f64>,
        ns: Vec<usize>,
        weight: WeightSpec,
        level: f64,
        signal: WeakDense,
    ) -> Result<Self> {
        let p = sigma.nrows();
        let q = betas.len();
        let lead = betas
            .iter()
            .position(|&b| b != 0.0)
            .ok_or_else(|| Error::InvalidParameter("betas must not all be zero".into()))?;
        let mut mus = vec![DVector::zeros(p); q];
        mus[lead] = signal.signal(p) / betas[lead];
        let pop = PopulationSpec::new(mus, vec![sigma; q])?;
        let mut sc = Self::new(pop, betas, ns, weight, level)?;
        sc.weak_dense = Some(signal);
        Ok(sc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPrediction {
    /// `mu^T W mu`.
    pub noncentrality: f64,
    /// Standardizing `sigma_q1`.
    pub sigma: f64,
    /// Signal-dependent variance part, reported but not used for scaling.
    pub sigma_q2_sq: f64,
    pub power: f64,
    /// `Phi((mu^T W mu - z sigma) / sqrt(sigma^2 + sigma_q2_sq))`: the same
    /// normal approximation without dropping the signal variance. NaN when
    /// `sigma_q2_sq` is not available.
    pub refined_power: f64,
}

/// `sum_{a != b} beta_a^2 beta_b^2 / (n_a n_b) + sum_i beta_i^4 / (n_i (n_i - 1))`.
pub fn sample_size_factor(betas: &[f64], ns: &[usize]) -> f64 {
    let mut s = 0.0;
    for (a, (ba, na)) in betas.iter().zip(ns).enumerate() {
        let na = *na as f64;
        for (b, (bb, nb)) in betas.iter().zip(ns).enumerate() {
            if a != b {
                s += (ba * bb).powi(2) / (na * (*nb as f64));
            }
        }
        s += ba.powi(4) / (na * (na - 1.0));
    }
    s
}

/// General-covariance power prediction.
pub fn asymptotic_power(sc: &PowerScenario) -> Result<PowerPrediction> {
    let w = WeightMatrix::new(sc.weight.clone());
    let nc = theoretical_mean(&sc.pop, &sc.betas, &w)?;
    let var = theoretical_variance(&sc.pop, &sc.betas, &sc.ns, &w)?;
    finish(nc, var.sigma_q1_sq, var.sigma_q2_sq, sc.level)
}

/// Same prediction specialised to `Sigma_1 = ... = Sigma_q`:
/// `sigma_q1 = sqrt(2 tr((W Sigma)^2)) sqrt(sample_size_factor)`.
pub fn equal_covariance_power(sc: &PowerScenario) -> Result<PowerPrediction> {
    if !sc.pop.equal_covariances() {
        return Err(Error::UnsupportedScenario(
            "equal-covariance power needs identical covariance matrices".into(),
        ));
    }
    let w = WeightMatrix::new(sc.weight.clone());
    let mu = sc.pop.combined_mean(&sc.betas)?;
    let nc = w.bilinear(mu.as_slice(), mu.as_slice())?;
    let ws = matmul(&w.dense(), &sc.pop.sigmas()[0]);
    let tr = trace_of_product(&ws, &ws);
    let factor = sample_size_factor(&sc.betas, &sc.ns);
    let sigma_sq = 2.0 * tr * factor;
    finish(nc, sigma_sq, f64::NAN, sc.level)
}

fn finish(nc: f64, sigma_sq: f64, q2: f64, level: f64) -> Result<PowerPrediction> {
    if !(sigma_sq > 0.0) {
        return Err(Error::DegenerateVariance { value: sigma_sq });
    }
    let sigma = sigma_sq.sqrt();
    let z = z_quantile(level)?;
    let power = normal_cdf(-z + nc / sigma);
    let refined_power = normal_cdf((nc - z * sigma) / (sigma_sq + q2).sqrt());
    Ok(PowerPrediction {
        noncentrality: nc,
        sigma,
        sigma_q2_sq: q2,
        power,
        refined_power,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBound {
    /// Lower bound on the standardized noncentrality.
    pub bound: f64,
    /// `Phi(-z_level + bound)`.
    pub power: f64,
}

/// Lower bound on the equal-covariance power for a weak-dense signal,
/// replacing `tr((W Sigma)^2)` by `lambda_max^2` times an upper bound on
/// `tr(W^2)`.
///
/// Needs equal `alpha` entries, nondecreasing `omega_sq` and identical
/// covariances with largest eigenvalue `lambda_max`.
pub fn power_lower_bound(sc: &PowerScenario, lambda_max: f64) -> Result<LowerBound> {
    let signal = sc.weak_dense.ok_or_else(|| {
        Error::UnsupportedScenario("lower bound needs a weak-dense signal".into())
    })?;
    if !sc.pop.equal_covariances() {
        return Err(Error::UnsupportedScenario(
            "lower bound needs identical covariance matrices".into(),
        ));
    }
    let alpha = sc.weight.common_alpha().ok_or_else(|| {
        Error::UnsupportedScenario("lower bound needs equal alpha entries".into())
    })?;
    if !sc.weight.omega_sorted() {
        return Err(Error::UnsupportedScenario(
            "lower bound needs nondecreasing omega".into(),
        ));
    }
    if !(lambda_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "largest eigenvalue {lambda_max} must be > 0"
        )));
    }
    let p = sc.weight.dim();
    let pf = p as f64;
    let om = sc.weight.omega_sq();
    let m = signal.support(p);
    let nu2 = signal.nu * signal.nu;
    let a2 = alpha * alpha;
    let head: f64 = om[..m].iter().sum();
    let numerator = a2 * (m * m) as f64 * nu2 + nu2 * head;

    let wp = om[p - 1];
    let tail4: f64 = om[1..].iter().map(|v| v * v).sum();
    let tr_w2_bound = tail4 + wp * wp + 2.0 * pf * wp * a2 + pf * pf * a2 * a2;
    let denominator = (2.0 * lambda_max * lambda_max * tr_w2_bound).sqrt()
        * sample_size_factor(&sc.betas, &sc.ns).sqrt();
    let bound = numerator / denominator;
    Ok(LowerBound {
        bound,
        power: normal_cdf(-z_quantile(sc.level)? + bound),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::largest_eigenvalue;
    use approx::assert_relative_eq;

    const BETAS: [f64; 3] = [2.0, -2.0, -1.0];
    const NS: [usize; 3] = [40, 80, 120];

    fn ar1(p: usize, scale: f64, r: f64) -> DMatrix<f64> {
        DMatrix::from_fn(p, p, |i, j| scale * r.powi((i as i32 - j as i32).abs()))
    }

    fn weak(p: usize, sigma: DMatrix<f64>, delta: f64, nu: f64) -> PowerScenario {
        PowerScenario::weak_dense(
            sigma,
            BETAS.to_vec(),
            NS.to_vec(),
            WeightSpec::default_for(p).unwrap(),
            0.05,
            WeakDense::new(delta, nu).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn null_power_is_level() {
        let p = 20;
        let pop = PopulationSpec::new(vec![DVector::zeros(p); 3], vec![ar1(p, 2.0, 0.4); 3]).unwrap();
        let sc = PowerScenario::new(pop, BETAS.to_vec(), NS.to_vec(), WeightSpec::default_for(p).unwrap(), 0.05)
            .unwrap();
        let pred = asymptotic_power(&sc).unwrap();
        assert_eq!(pred.noncentrality, 0.0);
        assert!((pred.power - 0.05).abs() <= 1e-12);
    }

    #[test]
    fn refined_power_accounts_for_signal_variance() {
        let p = 20;
        let pop = PopulationSpec::new(vec![DVector::zeros(p); 3], vec![ar1(p, 2.0, 0.4); 3]).unwrap();
        let sc = PowerScenario::new(pop, BETAS.to_vec(), NS.to_vec(), WeightSpec::default_for(p).unwrap(), 0.05)
            .unwrap();
        let null = asymptotic_power(&sc).unwrap();
        assert_eq!(null.refined_power, null.power);

        let alt = asymptotic_power(&weak(p, ar1(p, 2.0, 0.4), 1.0, 0.6)).unwrap();
        assert!(alt.sigma_q2_sq > 0.0);
        assert!(alt.power > 0.5 && alt.refined_power < alt.power, "{alt:?}");
        let z = z_quantile(0.05).unwrap();
        let by_hand = normal_cdf(
            (alt.noncentrality - z * alt.sigma) / (alt.sigma.powi(2) + alt.sigma_q2_sq).sqrt(),
        );
        assert_relative_eq!(alt.refined_power, by_hand, max_relative = 1e-14);
        assert!(equal_covariance_power(&weak(p, ar1(p, 2.0, 0.4), 1.0, 0.3))
            .unwrap()
            .refined_power
            .is_nan());
    }

    #[test]
    fn general_and_equal_paths_agree() {
        for (p, delta, nu) in [(10, 0.5, 0.3), (40, 0.75, 0.1), (64, 1.0, 0.05)] {
            let sc = weak(p, ar1(p, 2.0, 0.4), delta, nu);
            let a = asymptotic_power(&sc).unwrap();
            let b = equal_covariance_power(&sc).unwrap();
            assert_relative_eq!(a.sigma, b.sigma, max_relative = 1e-10);
            assert_relative_eq!(a.noncentrality, b.noncentrality, max_relative = 1e-10);
            assert_relative_eq!(a.power, b.power, max_relative = 1e-10);
        }
    }

    #[test]
    fn equal_path_rejects_unequal_covariances() {
        let p = 5;
        let pop = PopulationSpec::new(
            vec![DVector::zeros(p); 2],
            vec![DMatrix::identity(p, p), DMatrix::identity(p, p) * 2.0],
        )
        .unwrap();
        let sc = PowerScenario::new(pop, vec![1.0, -1.0], vec![10, 10], WeightSpec::identity(p).unwrap(), 0.05)
            .unwrap();
        assert!(matches!(equal_covariance_power(&sc), Err(Error::UnsupportedScenario(_))));
        assert!(asymptotic_power(&sc).is_ok());
    }

    #[test]
    fn monotone_in_noncentrality() {
        let p = 30;
        let lo = asymptotic_power(&weak(p, DMatrix::identity(p, p), 0.8, 0.05)).unwrap();
        let hi = asymptotic_power(&weak(p, DMatrix::identity(p, p), 0.8, 0.08)).unwrap();
        assert_eq!(lo.sigma, hi.sigma);
        assert!(hi.noncentrality > lo.noncentrality);
        assert!(hi.power >= lo.power);
    }

    #[test]
    fn lower_bound_below_exact() {
        for (p, delta, nu, sig) in [
            (16, 0.75, 0.2, DMatrix::identity(16, 16)),
            (50, 0.6, 0.1, ar1(50, 2.0, 0.4)),
            (100, 1.0, 0.03, ar1(100, 1.0, 0.5)),
            (256, 0.75, 0.05, DMatrix::identity(256, 256)),
        ] {
            let lam = largest_eigenvalue(&sig);
            let sc = weak(p, sig, delta, nu);
            let exact = equal_covariance_power(&sc).unwrap();
            let lb = power_lower_bound(&sc, lam).unwrap();
            assert!(lb.bound <= exact.noncentrality / exact.sigma + 1e-9, "p={p}");
            assert!(lb.power <= exact.power + 1e-12);
        }
    }

    #[test]
    fn lower_bound_monotone_in_nu_and_zero_signal() {
        let p = 64;
        let mut last = 0.0;
        for k in 1..20 {
            let lb = power_lower_bound(&weak(p, DMatrix::identity(p, p), 1.0, 0.01 * k as f64), 1.0).unwrap();
            assert!(lb.power >= last);
            last = lb.power;
        }
        assert!(last > 0.99);
        // nu -> 0 limit: zero bound leaves the level
        let sc = weak(p, DMatrix::identity(p, p), 1.0, 1e-300);
        let lb = power_lower_bound(&sc, 1.0).unwrap();
        assert_eq!(lb.bound, 0.0);
        assert!((lb.power - 0.05).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_requirements() {
        let p = 8;
        let pop = PopulationSpec::new(
            vec![DVector::from_element(p, 0.1), DVector::zeros(p)],
            vec![DMatrix::identity(p, p), DMatrix::identity(p, p) * 1.5],
        )
        .unwrap();
        let mut sc =
            PowerScenario::new(pop, vec![1.0, -1.0], vec![10, 10], WeightSpec::default_for(p).unwrap(), 0.05)
                .unwrap();
        sc.weak_dense = Some(WeakDense::new(0.5, 0.1).unwrap());
        assert!(matches!(power_lower_bound(&sc, 1.5), Err(Error::UnsupportedScenario(_))));
        assert!(WeakDense::new(0.0, 1.0).is_err());
        assert!(WeakDense::new(0.5, 0.0).is_err());
    }

    #[test]
    fn corollary_rate_at_p400() {
        // nu^2 = sqrt(sample_size_factor): the rate at which the bound diverges
        let p = 400;
        let nu = sample_size_factor(&BETAS, &NS).sqrt().sqrt();
        let lb = power_lower_bound(&weak(p, DMatrix::identity(p, p), 0.75, nu), 1.0).unwrap();
        assert!(lb.power >= 0.99, "{lb:?}");
    }

    #[test]
    fn support_integer_part() {
        let s = WeakDense::new(0.75, 1.0).unwrap();
        assert_eq!(s.support(256), 64);
        assert_eq!(s.support(400), 89);
        assert_eq!(WeakDense::new(1.0, 1.0).unwrap().support(7), 7);
    }
}
