//! Test methods differ only in the weight matrix they plug into the same
//! statistic.

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::Result;
use crate::registry::Registry;
use crate::weights::WeightSpec;

pub trait TestMethod: Debug + Send + Sync {
    fn name(&self) -> &str;
    fn weight_spec(&self, p: usize) -> Result<WeightSpec>;
}

/// `T_L`: the default weighted statistic.
#[derive(Debug, Clone, Copy, Default)]
pub struct WeightedL2;

impl TestMethod for WeightedL2 {
    fn name(&self) -> &str {
        "TL"
    }

    fn weight_spec(&self, p: usize) -> Result<WeightSpec> {
        WeightSpec::default_for(p)
    }
}

/// `T_U`: the unweighted U-statistic (`W = I`).
#[derive(Debug, Clone, Copy, Default)]
pub struct Unweighted;

impl TestMethod for Unweighted {
    fn name(&self) -> &str {
        "TU"
    }

    fn weight_spec(&self, p: usize) -> Result<WeightSpec> {
        WeightSpec::identity(p)
    }
}

/// A fixed user-supplied weight spec; only valid for its own dimension.
#[derive(Debug, Clone)]
pub struct FixedWeights {
    name: String,
    spec: WeightSpec,
}

impl FixedWeights {
    pub fn new(name: impl Into<String>, spec: WeightSpec) -> Self {
        Self {
            name: name.into(),
            spec,
        }
    }
}

impl TestMethod for FixedWeights {
    fn name(&self) -> &str {
        &self.name
    }

    fn weight_spec(&self, p: usize) -> Result<WeightSpec> {
        crate::error::ensure_len(self.spec.dim(), p)?;
        Ok(self.spec.clone())
    }
}

pub type MethodRegistry = Registry<dyn TestMethod>;

impl MethodRegistry {
    /// `TL` and `TU`.
    pub fn builtin() -> Self {
        let mut r = Registry::empty("method");
        for m in [Arc::new(WeightedL2) as Arc<dyn TestMethod>, Arc::new(Unweighted)] {
            r.register(m.name().to_string(), m);
        }
        r
    }
}
