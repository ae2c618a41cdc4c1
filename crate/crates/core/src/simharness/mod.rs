//! Monte-Carlo sweeps over simulation cells.
//!
//! Every replication draws from its own stream keyed by
//! `(seed, cell key, replication)`, so results do not depend on the number of
//! worker threads or on which methods are requested alongside each other.

mod config;
mod table;

pub use config::{CellSpec, ExperimentConfig, Hypothesis};
pub use table::{emit_table, read_table, ExperimentTable, TableRow, CSV_HEADER};

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::datagen::{
    gen_sampleset, CaseId, CovarianceCase, InnovationRegistry, MeanDesign, Scenario,
};
use crate::error::{Error, Result};
use crate::inference::{run_test, TestResult};
use crate::methods::{MethodRegistry, TestMethod};
use crate::rng::stream;
use crate::statistic::SampleSet;
use crate::weights::WeightMatrix;

/// Rejection counts of one method in one cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodTally {
    pub method: String,
    pub rejects: usize,
    pub failures: usize,
    pub reps: usize,
}

impl MethodTally {
    pub fn rate(&self) -> f64 {
        let used = self.reps - self.failures;
        if used == 0 {
            f64::NAN
        } else {
            self.rejects as f64 / used as f64
        }
    }
}

/// Method and innovation registries plus a cache of covariance factors.
pub struct Simulator {
    methods: MethodRegistry,
    innovations: InnovationRegistry,
    cases: Mutex<HashMap<(CaseId, usize), Arc<CovarianceCase>>>,
}

impl Default for Simulator {
    fn default() -> Self {
        Self::new(MethodRegistry::builtin(), InnovationRegistry::builtin())
    }
}

impl Simulator {
    pub fn new(methods: MethodRegistry, innovations: InnovationRegistry) -> Self {
        Self {
            methods,
            innovations,
            cases: Mutex::new(HashMap::new()),
        }
    }

    pub fn methods(&self) -> &MethodRegistry {
        &self.methods
    }

    pub fn innovations(&self) -> &InnovationRegistry {
        &self.innovations
    }

    pub fn case(&self, id: CaseId, p: usize) -> Result<Arc<CovarianceCase>> {
        if let Some(c) = self.cases.lock().expect("case cache poisoned").get(&(id, p)) {
            return Ok(Arc::clone(c));
        }
        let built = Arc::new(CovarianceCase::build(id, p)?);
        let mut cache = self.cases.lock().expect("case cache poisoned");
        Ok(Arc::clone(cache.entry((id, p)).or_insert(built)))
    }

    pub fn scenario(&self, cell: &CellSpec) -> Result<Scenario> {
        let ns = cell.group_sizes();
        let design = cell
            .alternative
            .map(|(r, rho)| MeanDesign::new(cell.p, r, rho, ns))
            .transpose()?;
        Scenario::new(
            self.case(cell.case, cell.p)?,
            self.innovations.get(&cell.dist)?,
            ns,
            design,
        )
    }

    /// The data set drawn for replication `rep` of `cell`.
    pub fn sample(&self, cell: &CellSpec, seed: u64, rep: u64) -> Result<SampleSet> {
        let sc = self.scenario(cell)?;
        gen_sampleset(&sc, &mut stream(seed, &cell.key(), rep))
    }

    fn resolve(&self, names: &[String]) -> Result<Vec<Arc<dyn TestMethod>>> {
        names.iter().map(|m| self.methods.get(m)).collect()
    }

    /// Per-replication results, one entry per method; `None` marks a
    /// degenerate variance estimate.
    pub fn replicate(
        &self,
        cell: &CellSpec,
        methods: &[String],
        reps: usize,
        level: f64,
        seed: u64,
    ) -> Result<Vec<Vec<Option<TestResult>>>> {
        let resolved = self.resolve(methods)?;
        let weights: Vec<WeightMatrix> = resolved
            .iter()
            .map(|m| m.weight_spec(cell.p).map(WeightMatrix::new))
            .collect::<Result<_>>()?;
        let sc = self.scenario(cell)?;
        let key = cell.key();
        (0..reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = stream(seed, &key, rep as u64);
                let s = gen_sampleset(&sc, &mut rng)?;
                weights
                    .iter()
                    .map(|w| match run_test(&s, w, level) {
                        Ok(t) => Ok(Some(t)),
                        Err(Error::DegenerateVariance { .. }) => Ok(None),
                        Err(e) => Err(e),
                    })
                    .collect()
            })
            .collect()
    }

    /// Counts rejections without judging failures.
    pub fn tally_cell(
        &self,
        cell: &CellSpec,
        methods: &[String],
        reps: usize,
        level: f64,
        seed: u64,
    ) -> Result<Vec<MethodTally>> {
        let results = self.replicate(cell, methods, reps, level, seed)?;
        Ok(methods
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let (mut rejects, mut failures) = (0, 0);
                for rep in &results {
                    match rep[k] {
                        Some(t) if t.reject => rejects += 1,
                        Some(_) => {}
                        None => failures += 1,
                    }
                }
                MethodTally {
                    method: name.clone(),
                    rejects,
                    failures,
                    reps,
                }
            })
            .collect())
    }

    /// Like [`Simulator::tally_cell`], but a method whose every replication
    /// failed is an error.
    pub fn run_cell(
        &self,
        cell: &CellSpec,
        methods: &[String],
        reps: usize,
        level: f64,
        seed: u64,
    ) -> Result<Vec<MethodTally>> {
        let tallies = self.tally_cell(cell, methods, reps, level, seed)?;
        if let Some(t) = tallies.iter().find(|t| t.failures == t.reps) {
            return Err(Error::CellFailed {
                cell: format!("{} method={}", cell.key(), t.method),
                reps: t.reps,
            });
        }
        Ok(tallies)
    }

    /// Runs every cell of `cfg`. Failed cells stay in the table with
    /// `failures == reps`. `progress(done, total, cell)` fires as cells finish.
    pub fn run(
        &self,
        cfg: &ExperimentConfig,
        progress: &(dyn Fn(usize, usize, &CellSpec) + Sync),
    ) -> Result<ExperimentTable> {
        cfg.validate()?;
        if cfg.methods.is_empty() {
            return Ok(ExperimentTable::default());
        }
        self.resolve(&cfg.methods)?;
        for d in &cfg.dist_list {
            self.innovations.get(d)?;
        }
        let dims: BTreeSet<usize> = cfg.p_list.iter().copied().collect();
        dims.into_par_iter()
            .map(|p| self.case(cfg.case, p).map(drop))
            .collect::<Result<()>>()?;

        let cells = cfg.cells();
        let total = cells.len();
        let done = AtomicUsize::new(0);
        let rows: Vec<TableRow> = cells
            .par_iter()
            .flat_map_iter(|cell| {
                let tallies = match self.tally_cell(cell, &cfg.methods, cfg.reps, cfg.level, cfg.seed) {
                    Ok(t) => t,
                    Err(e) => {
                        log::warn!("cell {} failed: {e}", cell.key());
                        cfg.methods
                            .iter()
                            .map(|m| MethodTally {
                                method: m.clone(),
                                rejects: 0,
                                failures: cfg.reps,
                                reps: cfg.reps,
                            })
                            .collect()
                    }
                };
                progress(done.fetch_add(1, Ordering::Relaxed) + 1, total, cell);
                let (r, rho) = match cell.alternative {
                    Some((r, rho)) => (Some(r), Some(rho)),
                    None => (None, None),
                };
                tallies.into_iter().map(move |t| TableRow {
                    p: cell.p,
                    n_star: cell.n_star,
                    dist: cell.dist.clone(),
                    case: cell.case,
                    r,
                    rho,
                    method: t.method,
                    rejects: t.rejects,
                    reps: t.reps,
                    failures: t.failures,
                })
            })
            .collect();
        Ok(ExperimentTable::new(rows))
    }
}

/// Runs one cell with the built-in registries.
pub fn run_cell(
    cell: &CellSpec,
    methods: &[String],
    reps: usize,
    level: f64,
    seed: u64,
) -> Result<Vec<MethodTally>> {
    Simulator::default().run_cell(cell, methods, reps, level, seed)
}

/// Runs a whole configuration with the built-in registries.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentTable> {
    Simulator::default().run(cfg, &|_, _, _| {})
}
