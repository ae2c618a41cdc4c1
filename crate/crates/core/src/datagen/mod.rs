//! Synthetic data for the three-group simulation design:
//! `x_ij = mu_i + Sigma_i^{1/2} z_ij` with `beta = (2, -2, -1)`.

mod innovation;

pub use innovation::{
    draw_innovation, Degenerate, InnovationLaw, InnovationRegistry, Normal, StandardizedGamma,
    StandardizedT,
};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_len, Error, Result};
use crate::linalg::{matmul, symmetric_sqrt};
use crate::rng::SimRng;
use crate::statistic::{PopulationSpec, SampleSet};

/// Coefficients of the simulated linear hypothesis.
pub const SIM_BETAS: [f64; 3] = [2.0, -2.0, -1.0];

/// Group sizes `(0.5 n*, n*, 1.5 n*)`, rounded down.
pub fn group_sizes(n_star: usize) -> [usize; 3] {
    [n_star / 2, n_star, 3 * n_star / 2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CaseId {
    /// Common covariance `2 * 0.4^|i-j|`.
    Common,
    /// Banded `0.5^|i-j| 1{|i-j| <= 1}` scaled by 1, 1.5 and 2.
    Different,
}

impl CaseId {
    pub fn number(self) -> u8 {
        match self {
            CaseId::Common => 1,
            CaseId::Different => 2,
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(CaseId::Common),
            "2" => Ok(CaseId::Different),
            other => Err(Error::UnknownName {
                kind: "covariance case",
                name: other.to_string(),
            }),
        }
    }
}

/// Materialised covariances of one case and their symmetric square roots.
#[derive(Debug, Clone)]
pub struct CovarianceCase {
    id: CaseId,
    sigmas: Vec<DMatrix<f64>>,
    roots: Vec<DMatrix<f64>>,
}

impl CovarianceCase {
    pub fn build(id: CaseId, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidDimension("p must be >= 1".into()));
        }
        let (sigmas, roots) = match id {
            CaseId::Common => {
                let s = DMatrix::from_fn(p, p, |i, j| 2.0 * 0.4f64.powi(i.abs_diff(j) as i32));
                let r = symmetric_sqrt(&s, 1e-10);
                (vec![s; 3], vec![r; 3])
            }
            CaseId::Different => {
                let base = DMatrix::from_fn(p, p, |i, j| match i.abs_diff(j) {
                    0 => 1.0,
                    1 => 0.5,
                    _ => 0.0,
                });
                let root = symmetric_sqrt(&base, 1e-10);
                let scales = [1.0f64, 1.5, 2.0];
                (
                    scales.iter().map(|c| &base * *c).collect(),
                    scales.iter().map(|c| &root * c.sqrt()).collect(),
                )
            }
        };
        Ok(Self { id, sigmas, roots })
    }

    pub fn id(&self) -> CaseId {
        self.id
    }

    pub fn p(&self) -> usize {
        self.sigmas[0].nrows()
    }

    pub fn sigmas(&self) -> &[DMatrix<f64>] {
        &self.sigmas
    }

    pub fn roots(&self) -> &[DMatrix<f64>] {
        &self.roots
    }
}

/// Free-function form of [`CovarianceCase::build`].
pub fn build_case(id: CaseId, p: usize) -> Result<CovarianceCase> {
    CovarianceCase::build(id, p)
}

/// `kappa = sqrt(3 r ln(p) (1/n1 + 1/n2 + 1/n3))`.
pub fn signal_kappa(p: usize, r: f64, ns: &[usize; 3]) -> f64 {
    let inv: f64 = ns.iter().map(|&n| 1.0 / n as f64).sum();
    (3.0 * r * (p as f64).ln() * inv).sqrt()
}

/// Alternative mean design: `mu_1 = kappa 1`, `mu_2` zero on the first
/// `m = [p^{1-rho}]` coordinates and `kappa` after, `mu_3` the complement, so
/// that `2 mu_1 - 2 mu_2 - mu_3` has exactly `m` leading `kappa`s.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanDesign {
    pub p: usize,
    pub r: f64,
    pub rho: f64,
    pub ns: [usize; 3],
    pub kappa: f64,
    /// `[p^{1-rho}]`.
    pub support: usize,
    mus: [DVector<f64>; 3],
}

impl MeanDesign {
    pub fn new(p: usize, r: f64, rho: f64, ns: [usize; 3]) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidDimension("p must be >= 1".into()));
        }
        if !(r >= 0.0 && r.is_finite()) || !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidParameter(format!("r = {r}, rho = {rho}")));
        }
        let kappa = signal_kappa(p, r, &ns);
        let support = crate::integer_part((p as f64).powf(1.0 - rho)).min(p);
        let mu1 = DVector::from_element(p, kappa);
        let mu2 = DVector::from_fn(p, |i, _| if i < support { 0.0 } else { kappa });
        let mu3 = DVector::from_fn(p, |i, _| if i < support { kappa } else { 0.0 });
        Ok(Self {
            p,
            r,
            rho,
            ns,
            kappa,
            support,
            mus: [mu1, mu2, mu3],
        })
    }

    pub fn mus(&self) -> &[DVector<f64>; 3] {
        &self.mus
    }
}

/// One simulation cell's generative description.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub case: Arc<CovarianceCase>,
    pub innovation: Arc<dyn InnovationLaw>,
    pub ns: [usize; 3],
    /// `None` is the null design with all means zero.
    pub design: Option<MeanDesign>,
}

impl Scenario {
    pub fn new(
        case: Arc<CovarianceCase>,
        innovation: Arc<dyn InnovationLaw>,
        ns: [usize; 3],
        design: Option<MeanDesign>,
    ) -> Result<Self> {
        if let Some(d) = &design {
            ensure_len(case.p(), d.p)?;
        }
        Ok(Self {
            case,
            innovation,
            ns,
            design,
        })
    }

    pub fn p(&self) -> usize {
        self.case.p()
    }

    pub fn means(&self) -> Vec<DVector<f64>> {
        match &self.design {
            Some(d) => d.mus.to_vec(),
            None => vec![DVector::zeros(self.p()); 3],
        }
    }

    pub fn population(&self) -> Result<PopulationSpec> {
        PopulationSpec::new(self.means(), self.case.sigmas.clone())
    }
}

/// Draws one data set. Innovations are consumed group by group, observation
/// by observation, coordinate by coordinate.
pub fn gen_sampleset(sc: &Scenario, rng: &mut SimRng) -> Result<SampleSet> {
    let p = sc.p();
    let means = sc.means();
    let mut groups = Vec::with_capacity(3);
    for (i, &n) in sc.ns.iter().enumerate() {
        let mut z = DMatrix::<f64>::zeros(p, n);
        sc.innovation.fill(rng, z.as_mut_slice());
        let mut x = matmul(&sc.case.roots[i], &z);
        for mut c in x.column_iter_mut() {
            c += &means[i];
        }
        groups.push(x);
    }
    SampleSet::from_columns(groups, SIM_BETAS.to_vec())
}
