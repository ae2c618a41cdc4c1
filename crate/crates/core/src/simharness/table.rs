//! Rejection-rate tables and their CSV form.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use crate::datagen::CaseId;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "p,n_star,dist,case,r,rho,method,rate,reps,failures";

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub p: usize,
    pub n_star: usize,
    pub dist: String,
    pub case: CaseId,
    pub r: Option<f64>,
    pub rho: Option<f64>,
    pub method: String,
    pub rejects: usize,
    pub reps: usize,
    /// Replications whose variance estimate was degenerate.
    pub failures: usize,
}

impl TableRow {
    /// `rejects / (reps - failures)`; NaN when every replication failed.
    pub fn rate(&self) -> f64 {
        let used = self.reps - self.failures;
        if used == 0 {
            f64::NAN
        } else {
            self.rejects as f64 / used as f64
        }
    }

    pub fn failed(&self) -> bool {
        self.failures >= self.reps
    }

    /// Monte-Carlo standard error of the rate.
    pub fn std_error(&self) -> f64 {
        let used = (self.reps - self.failures) as f64;
        let r = self.rate();
        (r * (1.0 - r) / used).sqrt()
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        fn opt(a: Option<f64>, b: Option<f64>) -> Ordering {
            match (a, b) {
                (None, None) => Ordering::Equal,
                (None, Some(_)) => Ordering::Less,
                (Some(_), None) => Ordering::Greater,
                (Some(x), Some(y)) => x.total_cmp(&y),
            }
        }
        self.p
            .cmp(&other.p)
            .then(self.n_star.cmp(&other.n_star))
            .then_with(|| self.dist.cmp(&other.dist))
            .then(self.case.cmp(&other.case))
            .then(opt(self.r, other.r))
            .then(opt(self.rho, other.rho))
            .then_with(|| self.method.cmp(&other.method))
    }
}

/// Rows kept sorted by `(p, n*, dist, case, r, rho, method)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentTable {
    rows: Vec<TableRow>,
}

impl ExperimentTable {
    pub fn new(mut rows: Vec<TableRow>) -> Self {
        rows.sort_by(TableRow::cmp_key);
        Self { rows }
    }

    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn find(
        &self,
        p: usize,
        n_star: usize,
        dist: &str,
        alternative: Option<(f64, f64)>,
        method: &str,
    ) -> Option<&TableRow> {
        self.rows.iter().find(|r| {
            r.p == p
                && r.n_star == n_star
                && r.dist == dist
                && r.method == method
                && match alternative {
                    None => r.r.is_none(),
                    Some((x, y)) => r.r == Some(x) && r.rho == Some(y),
                }
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for row in &self.rows {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            writeln!(
                s,
                "{},{},{},{},{},{},{},{:.4},{},{}",
                row.p,
                row.n_star,
                row.dist,
                row.case,
                opt(row.r),
                opt(row.rho),
                row.method,
                row.rate(),
                row.reps,
                row.failures
            )
            .expect("writing to a String");
        }
        s
    }

    /// Inverse of [`ExperimentTable::to_csv`]. Reject counts are recovered
    /// from the 4-decimal rate, which is exact while `reps - failures` is
    /// below 10000.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            other => return Err(Error::Table(format!("bad header {other:?}"))),
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(Error::Table(format!("row {}: expected 10 fields", i + 2)));
            }
            let bad = |what: &str| Error::Table(format!("row {}: bad {what}", i + 2));
            let opt = |v: &str, what: &str| -> Result<Option<f64>> {
                if v.is_empty() {
                    Ok(None)
                } else {
                    v.parse().map(Some).map_err(|_| bad(what))
                }
            };
            let reps: usize = f[8].parse().map_err(|_| bad("reps"))?;
            let failures: usize = f[9].parse().map_err(|_| bad("failures"))?;
            let rate: f64 = f[7].parse().map_err(|_| bad("rate"))?;
            let used = reps.saturating_sub(failures);
            let rejects = if used == 0 { 0 } else { (rate * used as f64).round() as usize };
            rows.push(TableRow {
                p: f[0].parse().map_err(|_| bad("p"))?,
                n_star: f[1].parse().map_err(|_| bad("n_star"))?,
                dist: f[2].to_string(),
                case: f[3].parse().map_err(|_| bad("case"))?,
                r: opt(f[4], "r")?,
                rho: opt(f[5], "rho")?,
                method: f[6].to_string(),
                rejects,
                reps,
                failures,
            });
        }
        Ok(Self::new(rows))
    }
}

pub fn emit_table(t: &ExperimentTable, path: &Path) -> Result<()> {
    std::fs::write(path, t.to_csv()).map_err(|e| Error::io(path, e))
}

pub fn read_table(path: &Path) -> Result<ExperimentTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentTable::from_csv(&text)
}
