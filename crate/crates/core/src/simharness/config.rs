//! Plain-text experiment configuration.
//!
//! One `key = value` per line, list values comma-separated, `#` starts a
//! comment. Keys: `p_list, nstar_list, dist_list, case, mode, r_list,
//! rho_list, reps, level, seed, methods, out`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::datagen::{group_sizes, CaseId};
use crate::error::{Error, Result};

const KEYS: [&str; 12] = [
    "p_list",
    "nstar_list",
    "dist_list",
    "case",
    "mode",
    "r_list",
    "rho_list",
    "reps",
    "level",
    "seed",
    "methods",
    "out",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Hypothesis {
    Null,
    Alternative { r_list: Vec<f64>, rho_list: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub p_list: Vec<usize>,
    pub nstar_list: Vec<usize>,
    pub dist_list: Vec<String>,
    pub case: CaseId,
    pub hypothesis: Hypothesis,
    pub reps: usize,
    pub level: f64,
    pub seed: u64,
    pub methods: Vec<String>,
    pub out: Option<PathBuf>,
}

/// One grid point; every requested method is evaluated on the same draws.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub p: usize,
    pub n_star: usize,
    pub dist: String,
    pub case: CaseId,
    /// `(r, rho)` for the alternative design, `None` under the null.
    pub alternative: Option<(f64, f64)>,
}

impl CellSpec {
    /// Stable identifier used to derive the cell's random streams.
    pub fn key(&self) -> String {
        let mut k = format!(
            "p={};nstar={};dist={};case={}",
            self.p, self.n_star, self.dist, self.case
        );
        match self.alternative {
            Some((r, rho)) => k.push_str(&format!(";r={r};rho={rho}")),
            None => k.push_str(";null"),
        }
        k
    }

    pub fn group_sizes(&self) -> [usize; 3] {
        group_sizes(self.n_star)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.reps == 0 {
            return bad("reps must be >= 1".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level {} must lie in (0, 1)", self.level));
        }
        if let Some(&p) = self.p_list.iter().find(|&&p| p == 0) {
            return bad(format!("p = {p} must be >= 1"));
        }
        if let Some(&n) = self.nstar_list.iter().find(|&&n| group_sizes(n)[0] < 4) {
            return bad(format!("n* = {n} gives a group smaller than 4"));
        }
        if let Hypothesis::Alternative { r_list, rho_list } = &self.hypothesis {
            if let Some(r) = r_list.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
                return bad(format!("r = {r} must be >= 0"));
            }
            if let Some(rho) = rho_list.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                return bad(format!("rho = {rho} must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Grid cells in `(p, n*, dist, r, rho)` order.
    pub fn cells(&self) -> Vec<CellSpec> {
        let alts: Vec<Option<(f64, f64)>> = match &self.hypothesis {
            Hypothesis::Null => vec![None],
            Hypothesis::Alternative { r_list, rho_list } => r_list
                .iter()
                .flat_map(|&r| rho_list.iter().map(move |&rho| Some((r, rho))))
                .collect(),
        };
        let mut cells = Vec::new();
        for &p in &self.p_list {
            for &n_star in &self.nstar_list {
                for dist in &self.dist_list {
                    for &alternative in &alts {
                        cells.push(CellSpec {
                            p,
                            n_star,
                            dist: dist.clone(),
                            case: self.case,
                            alternative,
                        });
                    }
                }
            }
        }
        cells
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }
}

fn list<T: FromStr>(value: &str, line: usize, key: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse().map_err(|_| Error::Config {
                line,
                message: format!("cannot parse '{v}' in {key}"),
            })
        })
        .collect()
}

fn scalar<T: FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Config {
        line,
        message: format!("cannot parse '{}' for {key}", value.trim()),
    })
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected 'key = value', got '{content}'"),
            })?;
            let key = key.trim();
            let Some(&known) = KEYS.iter().find(|k| **k == key) else {
                return Err(Error::Config {
                    line,
                    message: format!("unknown key '{key}'"),
                });
            };
            if kv.insert(known, (line, value.trim())).is_some() {
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key '{key}'"),
                });
            }
        }
        let get = |k: &'static str| kv.get(k).copied().ok_or(Error::MissingKey(k));

        let (l, v) = get("p_list")?;
        let p_list = list(v, l, "p_list")?;
        let (l, v) = get("nstar_list")?;
        let nstar_list = list(v, l, "nstar_list")?;
        let (l, v) = get("dist_list")?;
        let dist_list = list(v, l, "dist_list")?;
        let (l, v) = get("case")?;
        let case = v.parse::<CaseId>().map_err(|e| Error::Config {
            line: l,
            message: e.to_string(),
        })?;
        let (l, v) = get("mode")?;
        let hypothesis = match v {
            "null" => Hypothesis::Null,
            "alternative" => {
                let (lr, vr) = get("r_list")?;
                let (lh, vh) = get("rho_list")?;
                Hypothesis::Alternative {
                    r_list: list(vr, lr, "r_list")?,
                    rho_list: list(vh, lh, "rho_list")?,
                }
            }
            other => {
                return Err(Error::Config {
                    line: l,
                    message: format!("mode must be 'null' or 'alternative', got '{other}'"),
                })
            }
        };
        let (l, v) = get("reps")?;
        let reps = scalar(v, l, "reps")?;
        let (l, v) = get("level")?;
        let level = scalar(v, l, "level")?;
        let (l, v) = get("seed")?;
        let seed = scalar(v, l, "seed")?;
        let (l, v) = get("methods")?;
        let methods = list(v, l, "methods")?;
        let out = kv.get("out").map(|(_, v)| PathBuf::from(v));

        let cfg = ExperimentConfig {
            p_list,
            nstar_list,
            dist_list,
            case,
            hypothesis,
            reps,
            level,
            seed,
            methods,
            out,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
