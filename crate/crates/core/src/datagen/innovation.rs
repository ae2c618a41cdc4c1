//! Standardized innovation laws for the factor model `x = mu + Gamma z`.

use std::fmt::Debug;
use std::sync::Arc;

use rand::distr::Distribution;
use rand_distr::{Gamma, StandardNormal, StudentT};

use crate::registry::Registry;
use crate::rng::SimRng;

/// A mean-zero, unit-variance law for the components of `z`.
pub trait InnovationLaw: Debug + Send + Sync {
    fn name(&self) -> &str;
    /// `E z^3`.
    fn skewness(&self) -> f64;
    /// `E z^4`.
    fn fourth_moment(&self) -> f64;
    /// Fills `out` with i.i.d. draws, in order.
    fn fill(&self, rng: &mut SimRng, out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Normal;

impl InnovationLaw for Normal {
    fn name(&self) -> &str {
        "normal"
    }
    fn skewness(&self) -> f64 {
        0.0
    }
    fn fourth_moment(&self) -> f64 {
        3.0
    }
    fn fill(&self, rng: &mut SimRng, out: &mut [f64]) {
        for v in out {
            *v = StandardNormal.sample(rng);
        }
    }
}

/// `(G - 4) / 2` with `G ~ Gamma(shape 4, scale 1)`.
#[derive(Debug, Clone, Copy)]
pub struct StandardizedGamma {
    dist: Gamma<f64>,
}

impl Default for StandardizedGamma {
    fn default() -> Self {
        Self {
            dist: Gamma::new(4.0, 1.0).expect("valid gamma parameters"),
        }
    }
}

impl InnovationLaw for StandardizedGamma {
    fn name(&self) -> &str {
        "gamma"
    }
    fn skewness(&self) -> f64 {
        1.0
    }
    fn fourth_moment(&self) -> f64 {
        4.5
    }
    fn fill(&self, rng: &mut SimRng, out: &mut [f64]) {
        for v in out {
            *v = (self.dist.sample(rng) - 4.0) / 2.0;
        }
    }
}

/// `T / sqrt(5/3)` with `T ~ t(5)`.
#[derive(Debug, Clone, Copy)]
pub struct StandardizedT {
    dist: StudentT<f64>,
    scale: f64,
}

impl Default for StandardizedT {
    fn default() -> Self {
        Self {
            dist: StudentT::new(5.0).expect("valid t parameters"),
            scale: (5.0f64 / 3.0).sqrt(),
        }
    }
}

impl InnovationLaw for StandardizedT {
    fn name(&self) -> &str {
        "t"
    }
    fn skewness(&self) -> f64 {
        0.0
    }
    fn fourth_moment(&self) -> f64 {
        // 3 + 6 / (nu - 4) at nu = 5
        9.0
    }
    fn fill(&self, rng: &mut SimRng, out: &mut [f64]) {
        for v in out {
            *v = self.dist.sample(rng) / self.scale;
        }
    }
}

/// Point mass at zero. Not a valid innovation law; it exists so tests can
/// produce constant groups and degenerate variance estimates.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, Default)]
pub struct Degenerate;

impl InnovationLaw for Degenerate {
    fn name(&self) -> &str {
        "zero"
    }
    fn skewness(&self) -> f64 {
        0.0
    }
    fn fourth_moment(&self) -> f64 {
        0.0
    }
    fn fill(&self, _rng: &mut SimRng, out: &mut [f64]) {
        out.fill(0.0);
    }
}

pub type InnovationRegistry = Registry<dyn InnovationLaw>;

impl InnovationRegistry {
    /// `normal`, `gamma` and `t`.
    pub fn builtin() -> Self {
        let mut r = Registry::empty("distribution");
        let laws: [Arc<dyn InnovationLaw>; 3] = [
            Arc::new(Normal),
            Arc::new(StandardizedGamma::default()),
            Arc::new(StandardizedT::default()),
        ];
        for law in laws {
            r.register(law.name().to_string(), law);
        }
        r
    }
}

/// `count` draws from `law`.
pub fn draw_innovation(law: &dyn InnovationLaw, rng: &mut SimRng, count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count];
    law.fill(rng, &mut out);
    out
}
