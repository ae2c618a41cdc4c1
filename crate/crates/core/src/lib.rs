//! Weighted L2-norm test for a linear hypothesis `sum_i beta_i mu_i = 0`
//! on the means of several high-dimensional populations.
//!
//! The statistic is a U-statistic built from group sums with the weight
//! matrix `W = diag(omega^2) + alpha alpha^T`. Its variance is estimated from
//! within- and between-group Gram matrices and the decision uses the normal
//! approximation of the standardized statistic.

pub mod datagen;
pub mod error;
pub mod estimation;
pub mod inference;
pub mod linalg;
pub mod methods;
pub mod registry;
pub mod rng;
pub mod simharness;
pub mod statistic;
pub mod weights;

pub use error::{Error, Result};
pub use estimation::{estimate_tr_cross, estimate_tr_wsigma_sq, sigma_hat_sq, GroupSummary};
pub use inference::{
    asymptotic_power, equal_covariance_power, normal_cdf, power_lower_bound, run_test,
    z_quantile, PowerPrediction, PowerScenario, TestResult, WeakDense,
};
pub use methods::{MethodRegistry, TestMethod};
pub use statistic::{
    compute_tn, theoretical_mean, theoretical_variance, PopulationSpec, SampleSet, VarianceParts,
};
pub use weights::{default_weight_spec, identity_weight_spec, WeightMatrix, WeightSpec};

/// `floor(x)` that tolerates a few ulps of rounding below an integer, so that
/// e.g. `400f64.powf(0.75)` style values land on the intended integer.
pub(crate) fn integer_part(x: f64) -> usize {
    (x * (1.0 + 4.0 * f64::EPSILON)).floor() as usize
}
