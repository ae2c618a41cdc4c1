//! `ritest`: run the weighted L2-norm test on CSV data, run simulation
//! sweeps and print power predictions.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ritest::datagen::{group_sizes, CaseId, SIM_BETAS};
use ritest::inference::{
    asymptotic_power, equal_covariance_power, power_lower_bound, run_test, PowerScenario,
    TestResult, WeakDense,
};
use ritest::linalg::largest_eigenvalue;
use ritest::simharness::{emit_table, CellSpec, ExperimentConfig, Simulator};
use ritest::{Error, MethodRegistry, SampleSet, WeightMatrix, WeightSpec};

const MAX_POWER_DIM: usize = 2000;

#[derive(Parser)]
#[command(name = "ritest", version, about = "Weighted L2-norm test for linear hypotheses of high-dimensional means")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test sum_i beta_i mu_i = 0 on a CSV data file.
    Test(TestArgs),
    /// Run a Monte-Carlo experiment described by a config file.
    Simulate(SimulateArgs),
    /// Predicted power for a simulation-design scenario.
    Power(PowerArgs),
}

#[derive(Args)]
struct TestArgs {
    /// CSV with a header row, one group-label column and numeric features.
    #[arg(long)]
    data: PathBuf,
    /// One coefficient per group, in order of first appearance in the file.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    betas: Vec<f64>,
    /// `default`, `identity`, or a CSV of `alpha,omega_sq` rows.
    #[arg(long, default_value = "default")]
    weights: String,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    /// Name of the group column; defaults to `group` if present, else the first column.
    #[arg(long)]
    group_column: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; overrides `out` in the config. Without either the table goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the first replication of the first cell as a data file and stop.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct PowerArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    nstar: usize,
    #[arg(long, default_value = "1")]
    case: CaseId,
    /// Signal strength; omit together with `--rho` for the null.
    #[arg(long, requires = "rho")]
    r: Option<f64>,
    #[arg(long, requires = "r")]
    rho: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    #[arg(long, default_value = "TL")]
    method: String,
    /// Weak-dense signal `nu` on the first `[p^delta]` coordinates instead of `--r/--rho`.
    #[arg(long, requires = "nu", conflicts_with_all = ["r", "rho"])]
    delta: Option<f64>,
    #[arg(long, requires = "delta")]
    nu: Option<f64>,
}

/// Exit status and message of a failed command.
struct Failure {
    code: u8,
    message: String,
}

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;
const EXIT_IO: u8 = 5;

impl Failure {
    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } => EXIT_IO,
            Error::DegenerateVariance { .. } | Error::CellFailed { .. } => EXIT_DEGENERATE,
            Error::InvalidParameter(_) | Error::UnknownName { .. } | Error::UnsupportedScenario(_) => {
                EXIT_USAGE
            }
            _ => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Test(a) => cmd_test(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Power(a) => cmd_power(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// `%g`-style formatting with `digits` significant digits.
fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        let s = format!("{x:.*e}", digits - 1);
        let (mant, e) = s.split_once('e').expect("exponent");
        format!("{}e{e}", trim(mant.to_string()))
    }
}

// ----------------------------------------------------------------------- test

struct DataFile {
    labels: Vec<String>,
    groups: Vec<Vec<Vec<f64>>>,
}

fn read_data(path: &Path, group_column: Option<&str>) -> Result<DataFile, Failure> {
    let file = File::open(path).map_err(|e| Failure::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?
        .clone();
    let gcol = match group_column {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Failure::data(format!("no column named '{name}'")))?,
        None => headers.iter().position(|h| h == "group").unwrap_or(0),
    };
    if headers.len() < 2 {
        return Err(Failure::data("data file needs a group column and at least one feature"));
    }
    let mut labels: Vec<String> = Vec::new();
    let mut groups: Vec<Vec<Vec<f64>>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (c, field) in rec.iter().enumerate() {
            if c == gcol {
                continue;
            }
            if field.is_empty() {
                return Err(Failure::data(format!(
                    "line {line}: missing value in column '{}'",
                    &headers[c]
                )));
            }
            let v: f64 = field.parse().map_err(|_| {
                Failure::data(format!("line {line}: '{field}' in column '{}' is not a number", &headers[c]))
            })?;
            if !v.is_finite() {
                return Err(Failure::data(format!("line {line}: non-finite value in column '{}'", &headers[c])));
            }
            row.push(v);
        }
        let label = &rec[gcol];
        let k = match labels.iter().position(|l| l == label) {
            Some(k) => k,
            None => {
                labels.push(label.to_string());
                groups.push(Vec::new());
                labels.len() - 1
            }
        };
        groups[k].push(row);
    }
    if labels.len() < 2 {
        return Err(Failure::data(format!(
            "need at least 2 groups, found {}",
            labels.len()
        )));
    }
    for (label, g) in labels.iter().zip(&groups) {
        if g.len() < 4 {
            let group = labels.iter().position(|l| l == label).unwrap_or(0);
            return Err(Failure::from(Error::InsufficientSamples {
                group,
                n: g.len(),
                required: 4,
            })
            .with_context(format!("group '{label}'")));
        }
    }
    Ok(DataFile { labels, groups })
}

impl Failure {
    fn with_context(mut self, ctx: String) -> Self {
        self.message = format!("{ctx}: {}", self.message);
        self
    }
}

fn read_weight_file(path: &Path) -> Result<WeightSpec, Failure> {
    let file = File::open(path).map_err(|e| Failure::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let (mut alpha, mut omega_sq) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        if rec.len() != 2 {
            return Err(Failure::data(format!(
                "{} line {}: expected 'alpha,omega_sq'",
                path.display(),
                i + 1
            )));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(a), Ok(o)) => {
                alpha.push(a);
                omega_sq.push(o);
            }
            _ if i == 0 => continue,
            _ => {
                return Err(Failure::data(format!(
                    "{} line {}: not numeric",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    WeightSpec::new(alpha, omega_sq).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn weight_spec(choice: &str, p: usize) -> Result<WeightSpec, Failure> {
    let spec = match choice {
        "default" => WeightSpec::default_for(p)?,
        "identity" => WeightSpec::identity(p)?,
        path => read_weight_file(Path::new(path))?,
    };
    if spec.dim() != p {
        return Err(Failure::data(format!(
            "weight file has {} rows but the data have {p} features",
            spec.dim()
        )));
    }
    Ok(spec)
}

fn render_test(data: &DataFile, weights: &str, r: &TestResult) -> String {
    let mut s = String::new();
    let sizes: Vec<String> = data
        .labels
        .iter()
        .zip(&data.groups)
        .map(|(l, g)| format!("{l} (n={})", g.len()))
        .collect();
    writeln!(s, "groups:    {}", sizes.join(", ")).unwrap();
    writeln!(s, "weights:   {weights}").unwrap();
    writeln!(s, "T_n:       {}", sig(r.tn, 6)).unwrap();
    writeln!(s, "sigma_hat: {}", sig(r.sigma_hat, 6)).unwrap();
    writeln!(s, "z:         {}", sig(r.z, 6)).unwrap();
    writeln!(s, "p-value:   {}", sig(r.p_value, 6)).unwrap();
    let decision = if r.reject { "reject H0" } else { "do not reject H0" };
    writeln!(s, "decision:  {decision} at level {}", sig(r.level, 6)).unwrap();
    writeln!(
        s,
        "result tn={:e} sigma_hat={:e} z={:e} p_value={:e} reject={} level={:e}",
        r.tn, r.sigma_hat, r.z, r.p_value, r.reject, r.level
    )
    .unwrap();
    s
}

fn cmd_test(a: &TestArgs) -> CmdResult {
    let data = read_data(&a.data, a.group_column.as_deref())?;
    if a.betas.len() != data.labels.len() {
        return Err(Failure::data(format!(
            "{} betas given for {} groups ({})",
            a.betas.len(),
            data.labels.len(),
            data.labels.join(", ")
        )));
    }
    let s = SampleSet::from_rows(&data.groups, a.betas.clone())?;
    let w = WeightMatrix::new(weight_spec(&a.weights, s.p())?);
    let r = run_test(&s, &w, a.level)?;
    print!("{}", render_test(&data, &a.weights, &r));
    Ok(())
}

// ------------------------------------------------------------------- simulate

fn dump_sample(s: &SampleSet, path: &Path) -> CmdResult {
    let file = File::create(path).map_err(|e| Failure::io(path, e))?;
    let mut w = csv::Writer::from_writer(io::BufWriter::new(file));
    let io_err = |e: csv::Error| Failure::io(path, e);
    let mut header = vec!["group".to_string()];
    header.extend((1..=s.p()).map(|k| format!("x{k}")));
    w.write_record(&header).map_err(io_err)?;
    for (i, &n) in s.sizes().iter().enumerate() {
        for j in 0..n {
            let mut rec = vec![format!("g{}", i + 1)];
            rec.extend(s.observation(i, j).iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(io_err)?;
        }
    }
    w.flush().map_err(|e| Failure::io(path, e))
}

fn cmd_simulate(a: &SimulateArgs) -> CmdResult {
    let cfg = ExperimentConfig::load(&a.config)
        .map_err(|e| Failure::from(e).with_context(a.config.display().to_string()))?;
    let sim = Simulator::default();
    if let Some(path) = &a.dump {
        let cell = cfg
            .cells()
            .into_iter()
            .next()
            .ok_or_else(|| Failure::usage("config has no cells"))?;
        let s = sim.sample(&cell, cfg.seed, 0)?;
        dump_sample(&s, path)?;
        eprintln!("wrote {} ({})", path.display(), cell.key());
        return Ok(());
    }
    let table = sim.run(&cfg, &|done, total, cell: &CellSpec| {
        eprintln!("[{done}/{total}] {}", cell.key());
    })?;
    for row in table.rows().iter().filter(|r| r.failures > 0) {
        eprintln!(
            "warning: {} of {} replications failed for {} p={} n*={} dist={}",
            row.failures, row.reps, row.method, row.p, row.n_star, row.dist
        );
    }
    match a.out.as_ref().or(cfg.out.as_ref()) {
        Some(path) => emit_table(&table, path)?,
        None => io::stdout()
            .write_all(table.to_csv().as_bytes())
            .map_err(|e| Failure::io(Path::new("<stdout>"), e))?,
    }
    Ok(())
}

// ---------------------------------------------------------------------- power

fn cmd_power(a: &PowerArgs) -> CmdResult {
    if a.p > MAX_POWER_DIM {
        return Err(Failure::usage(format!(
            "p = {} exceeds the dense-covariance limit of {MAX_POWER_DIM}",
            a.p
        )));
    }
    let ns = group_sizes(a.nstar);
    if ns[0] < 2 {
        return Err(Failure::usage(format!("n* = {} is too small", a.nstar)));
    }
    let weight = MethodRegistry::builtin().get(&a.method)?.weight_spec(a.p)?;
    let sim = Simulator::default();
    let case = sim.case(a.case, a.p)?;

    let mut lower = None;
    let sc = match (a.delta, a.nu) {
        (Some(delta), Some(nu)) => {
            if a.case != CaseId::Common {
                return Err(Failure::usage("the weak-dense bound needs case 1 (equal covariances)"));
            }
            let sigma = case.sigmas()[0].clone();
            let lambda = largest_eigenvalue(&sigma);
            let sc = PowerScenario::weak_dense(
                sigma,
                SIM_BETAS.to_vec(),
                ns.to_vec(),
                weight,
                a.level,
                WeakDense::new(delta, nu)?,
            )?;
            lower = Some((power_lower_bound(&sc, lambda)?, lambda));
            sc
        }
        _ => {
            let cell = CellSpec {
                p: a.p,
                n_star: a.nstar,
                dist: "normal".into(),
                case: a.case,
                alternative: a.r.zip(a.rho),
            };
            let pop = sim.scenario(&cell)?.population()?;
            PowerScenario::new(pop, SIM_BETAS.to_vec(), ns.to_vec(), weight, a.level)?
        }
    };
    let pred = asymptotic_power(&sc)?;
    println!("scenario:      p={} n=({}, {}, {}) case={} method={}", a.p, ns[0], ns[1], ns[2], a.case, a.method);
    println!("noncentrality: {}", sig(pred.noncentrality, 6));
    println!("sigma:         {}", sig(pred.sigma, 6));
    println!("power:         {}", sig(pred.power, 6));
    println!("sigma_q2:      {}", sig(pred.sigma_q2_sq.sqrt(), 6));
    println!("power (incl. signal variance): {}", sig(pred.refined_power, 6));
    if sc.pop.equal_covariances() {
        let eq = equal_covariance_power(&sc)?;
        println!("power (equal-covariance form): {}", sig(eq.power, 6));
    }
    if let Some((lb, lambda)) = lower {
        println!(
            "lower bound:   {} (power >= {}, lambda_max = {})",
            sig(lb.bound, 6),
            sig(lb.power, 6),
            sig(lambda, 6)
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::sig;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(0.0, 6), "0");
        assert_eq!(sig(1.0, 6), "1");
        assert_eq!(sig(123.456789, 6), "123.457");
        assert_eq!(sig(-0.000123456789, 6), "-0.000123457");
        assert_eq!(sig(1234567.0, 6), "1.23457e6");
        assert_eq!(sig(2.5e-9, 6), "2.5e-9");
        assert_eq!(sig(0.05, 6), "0.05");
    }
}
