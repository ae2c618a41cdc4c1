//! One-sided normal-approximation test, p-values and power predictions.

mod diagnostics;
mod normal;
mod power;

pub use diagnostics::{assumption_diagnostics, AssumptionReport};
pub use normal::{normal_cdf, normal_pdf, normal_sf, z_quantile};
pub use power::{
    asymptotic_power, equal_covariance_power, power_lower_bound, sample_size_factor,
    LowerBound, PowerPrediction, PowerScenario, WeakDense,
};

use crate::error::Result;
use crate::estimation::sigma_hat_sq;
use crate::statistic::{compute_tn, SampleSet};
use crate::weights::WeightMatrix;

/// Outcome of the test at level `level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub tn: f64,
    pub sigma_hat: f64,
    /// `tn / sigma_hat`.
    pub z: f64,
    /// Upper-tail `1 - Phi(z)`.
    pub p_value: f64,
    /// `z >= z_level`.
    pub reject: bool,
    pub level: f64,
}

impl TestResult {
    pub fn from_parts(tn: f64, sigma_hat: f64, level: f64) -> Result<Self> {
        let critical = z_quantile(level)?;
        let z = tn / sigma_hat;
        Ok(Self {
            tn,
            sigma_hat,
            z,
            p_value: normal_sf(z),
            reject: z >= critical,
            level,
        })
    }
}

/// Reject when `T_n >= sigma_hat z_level`.
pub fn run_test(s: &SampleSet, w: &WeightMatrix, level: f64) -> Result<TestResult> {
    z_quantile(level)?;
    let var = sigma_hat_sq(s, w)?;
    let tn = compute_tn(s, w)?;
    TestResult::from_parts(tn, var.sqrt(), level)
}
