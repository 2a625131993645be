//! Iteration-count benchmarks against expected table values.
//!
//! A suite is a TOML file with an optional `[defaults]` table and a list of
//! `[[row]]` entries; see `suites/paper.toml` for the annotated format.
//! Counts follow the table convention: a run with `K` steps counts `K + 1`.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use cubic_newton::objectives::by_name;
use cubic_newton::optimizers::Termination;
use cubic_newton::OptimizerConfigF64;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Deserialize;

use crate::method::Method;
use crate::{CliError, EXIT_BAND_MISS, EXIT_OK};

/// The built-in `paper` suite: reference iteration counts for the four
/// benchmark objectives.
pub const BUILTIN_SUITE: &str = include_str!("../suites/paper.toml");

pub const REPORT_HEADER: &str = "objective,optimizer,x0,iterations,termination,expected,within_band";

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// `paper` or the path of a suite file.
    #[arg(long, default_value = "paper")]
    pub suite: String,
    /// Write the CSV report here instead of standard output.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// An expected table entry: a count, or `>=N` for a run that must not
/// converge within `N` steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    Count(usize),
    AtLeast(usize),
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expected::Count(n) => write!(f, "{n}"),
            Expected::AtLeast(n) => write!(f, ">={n}"),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawExpected {
    Count(usize),
    Text(String),
}

impl RawExpected {
    fn parse(&self) -> Result<Expected, String> {
        match self {
            RawExpected::Count(n) => Ok(Expected::Count(*n)),
            RawExpected::Text(s) => s
                .trim()
                .strip_prefix(">=")
                .and_then(|n| n.trim().parse().ok())
                .map(Expected::AtLeast)
                .ok_or_else(|| format!("expected entry `{s}` is neither a count nor `>=N`")),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Defaults {
    eps: Option<f64>,
    max_iters: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    objective: String,
    optimizer: Method,
    starts: Vec<Vec<f64>>,
    expected: Vec<RawExpected>,
    step: Option<f64>,
    eps: Option<f64>,
    max_iters: Option<usize>,
    shifts: Option<Vec<f64>>,
    band: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSuite {
    #[serde(default)]
    defaults: Defaults,
    #[serde(default)]
    row: Vec<RawRow>,
}

/// One run of the suite.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchCase {
    pub objective: String,
    pub optimizer: Method,
    pub x0: Vec<f64>,
    pub expected: Expected,
    pub config: OptimizerConfigF64,
    /// Absolute tolerance overriding the optimizer's band policy.
    pub band: Option<usize>,
}

impl BenchCase {
    /// Label used in the report, e.g. `gd(c=0.035)`.
    pub fn optimizer_label(&self) -> String {
        match self.optimizer {
            Method::Gd => format!("gd(c={})", self.config.step_size),
            m => m.to_string(),
        }
    }

    /// Allowed deviation from an expected count.
    pub fn tolerance(&self, expected: usize) -> f64 {
        if let Some(b) = self.band {
            return b as f64;
        }
        let e = expected as f64;
        match self.optimizer {
            Method::Newton2 | Method::Ton => 2.0,
            Method::Gd => (0.15 * e).max(3.0),
            Method::Qfit => 0.5 * e,
        }
    }

    pub fn within_band(&self, count: usize, termination: Termination) -> bool {
        match self.expected {
            Expected::Count(n) => {
                termination == Termination::Converged && (count as f64 - n as f64).abs() <= self.tolerance(n)
            }
            Expected::AtLeast(_) => termination != Termination::Converged,
        }
    }
}

/// Parses suite text into cases in file order.
pub fn parse_suite(text: &str) -> Result<Vec<BenchCase>, String> {
    let raw: RawSuite = toml::from_str(text).map_err(|e| e.to_string())?;
    let mut cases = Vec::new();
    for (i, row) in raw.row.into_iter().enumerate() {
        let at = |msg: String| format!("row {}: {msg}", i + 1);
        let f = by_name::<f64>(&row.objective).ok_or_else(|| at(format!("unknown objective `{}`", row.objective)))?;
        if row.starts.len() != row.expected.len() {
            return Err(at(format!("{} starts but {} expected entries", row.starts.len(), row.expected.len())));
        }
        if row.optimizer == Method::Gd && row.step.is_none() {
            return Err(at("gd rows need `step`".into()));
        }
        let mut base = OptimizerConfigF64::default();
        if let Some(e) = row.eps.or(raw.defaults.eps) {
            base.grad_eps = e;
        }
        if let Some(k) = row.max_iters.or(raw.defaults.max_iters) {
            base.max_iters = k;
        }
        if let Some(c) = row.step {
            base.step_size = c;
        }
        if let Some(s) = &row.shifts {
            base.shifts = s.clone();
        }
        base.validate().map_err(|e| at(e.to_string()))?;
        for (x0, exp) in row.starts.iter().zip(&row.expected) {
            if x0.len() != f.dim() {
                return Err(at(format!("start {x0:?} has dimension {}, expected {}", x0.len(), f.dim())));
            }
            let expected = exp.parse().map_err(at)?;
            let mut config = base.clone();
            if let Expected::AtLeast(n) = expected {
                config.max_iters = n;
            }
            cases.push(BenchCase {
                objective: row.objective.clone(),
                optimizer: row.optimizer,
                x0: x0.clone(),
                expected,
                config,
                band: row.band,
            });
        }
    }
    Ok(cases)
}

/// Result of one case.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub case: BenchCase,
    /// Table-convention count `K + 1`, or `None` if the run errored.
    pub count: Option<usize>,
    pub termination: String,
    pub within_band: bool,
}

impl BenchRow {
    pub fn csv_line(&self) -> String {
        let x0: Vec<String> = self.case.x0.iter().map(|v| v.to_string()).collect();
        format!(
            "{},{},{},{},{},{},{}",
            self.case.objective,
            self.case.optimizer_label(),
            x0.join(";"),
            self.count.map_or_else(String::new, |c| c.to_string()),
            self.termination,
            self.case.expected,
            self.within_band
        )
    }
}

fn run_case(case: &BenchCase) -> BenchRow {
    let f = by_name::<f64>(&case.objective).expect("objective checked while parsing");
    let x0 = DVector::from_column_slice(&case.x0);
    match case.optimizer.run(f.as_ref(), &x0, &case.config) {
        Ok(t) => {
            let count = t.iterations() + 1;
            BenchRow {
                case: case.clone(),
                count: Some(count),
                termination: t.termination.to_string(),
                within_band: case.within_band(count, t.termination),
            }
        }
        Err(e) => BenchRow { case: case.clone(), count: None, termination: format!("error: {e}"), within_band: false },
    }
}

/// Runs every case in parallel; rows come back in suite order.
pub fn run_suite(cases: &[BenchCase]) -> Vec<BenchRow> {
    cases.par_iter().map(run_case).collect()
}

pub fn write_report(rows: &[BenchRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_line())?;
    }
    w.flush()
}

fn load(suite: &str) -> Result<Vec<BenchCase>, CliError> {
    let text = if suite == "paper" {
        BUILTIN_SUITE.to_string()
    } else {
        fs::read_to_string(suite).map_err(|e| CliError::usage_msg(&format!("cannot read suite `{suite}`: {e}")))?
    };
    parse_suite(&text).map_err(|e| CliError::usage_msg(&format!("suite `{suite}`: {e}")))
}

fn write_report_file(rows: &[BenchRow], path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_report(rows, BufWriter::new(file)).map_err(|e| CliError::io(path, e))
}

pub fn run(args: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let cases = load(&args.suite)?;
    let rows = run_suite(&cases);
    let misses = rows.iter().filter(|r| !r.within_band).count();
    let summary = format!("BENCH cases={} within_band={} missed={misses}", rows.len(), rows.len() - misses);
    match &args.report {
        Some(path) => {
            write_report_file(&rows, path)?;
            writeln!(out, "{summary}").map_err(CliError::stdout)?;
        }
        None => {
            write_report(&rows, &mut *out).map_err(CliError::stdout)?;
            writeln!(err, "{summary}").map_err(CliError::stdout)?;
        }
    }
    Ok(if misses == 0 { EXIT_OK } else { EXIT_BAND_MISS })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_suite_parses() {
        let cases = parse_suite(BUILTIN_SUITE).unwrap();
        // Seven rows of four starts per table; Himmelblau has one step size fewer.
        assert_eq!(cases.len(), 3 * 7 * 4 + 6 * 4);
        assert!(cases.iter().all(|c| by_name::<f64>(&c.objective).is_some()));
    }

    #[test]
    fn at_least_entries_set_the_budget() {
        let text = r#"
            [[row]]
            objective = "beale"
            optimizer = "gd"
            step = 0.045
            starts = [[2.8, 0.2], [3.0, 0.2]]
            expected = [">=5000", 10]
        "#;
        let cases = parse_suite(text).unwrap();
        assert_eq!(cases[0].expected, Expected::AtLeast(5000));
        assert_eq!(cases[0].config.max_iters, 5000);
        assert_eq!(cases[1].expected, Expected::Count(10));
        assert_eq!(cases[1].config.max_iters, OptimizerConfigF64::default().max_iters);
    }

    #[test]
    fn bands_follow_the_policy() {
        let mut case = parse_suite(
            "[[row]]\nobjective = \"himmelblau\"\noptimizer = \"gd\"\nstep = 0.02\nstarts = [[2.0, 1.0]]\nexpected = [100]\n",
        )
        .unwrap()
        .remove(0);
        assert_eq!(case.tolerance(100), 15.0);
        assert_eq!(case.tolerance(10), 3.0);
        assert!(case.within_band(115, Termination::Converged));
        assert!(!case.within_band(116, Termination::Converged));
        assert!(!case.within_band(100, Termination::MaxIterations));
        case.optimizer = Method::Ton;
        assert_eq!(case.tolerance(100), 2.0);
        case.optimizer = Method::Qfit;
        assert_eq!(case.tolerance(100), 50.0);
        case.band = Some(7);
        assert_eq!(case.tolerance(100), 7.0);
        case.expected = Expected::AtLeast(4000);
        assert!(case.within_band(4001, Termination::MaxIterations));
        assert!(case.within_band(3, Termination::StepFailed));
        assert!(!case.within_band(30, Termination::Converged));
    }

    #[test]
    fn malformed_suites_are_rejected() {
        let base = "[[row]]\nobjective = \"beale\"\noptimizer = \"ton\"\nstarts = [[1.0, 1.0]]\n";
        assert!(parse_suite(&format!("{base}expected = [1, 2]\n")).unwrap_err().contains("2 expected"));
        assert!(parse_suite(&format!("{base}expected = [\"~4\"]\n")).is_err());
        assert!(parse_suite(&format!("{base}expected = [4]\ncolour = 1\n")).is_err());
        assert!(parse_suite(&base.replace("beale", "rosenbrock").replace("starts", "expected = [1]\nstarts")).is_err());
        let gd = "[[row]]\nobjective = \"beale\"\noptimizer = \"gd\"\nstarts = [[1.0, 1.0]]\nexpected = [1]\n";
        assert!(parse_suite(gd).unwrap_err().contains("step"));
        let dim = "[[row]]\nobjective = \"beale\"\noptimizer = \"ton\"\nstarts = [[1.0]]\nexpected = [1]\n";
        assert!(parse_suite(dim).unwrap_err().contains("dimension"));
    }

    #[test]
    fn empty_suite_has_no_cases() {
        assert!(parse_suite("").unwrap().is_empty());
        let mut buf = Vec::new();
        write_report(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{REPORT_HEADER}\n"));
    }

    #[test]
    fn rows_keep_suite_order() {
        let text = r#"
            [defaults]
            eps = 1e-5
            [[row]]
            objective = "himmelblau"
            optimizer = "newton2"
            starts = [[2.0, 1.0], [4.0, 1.5]]
            expected = [7, 5]
            [[row]]
            objective = "quadratic"
            optimizer = "ton"
            starts = [[1.0, -1.0]]
            expected = [2]
        "#;
        let cases = parse_suite(text).unwrap();
        let rows = run_suite(&cases);
        let objectives: Vec<_> = rows.iter().map(|r| (r.case.objective.as_str(), r.case.x0[0])).collect();
        assert_eq!(objectives, [("himmelblau", 2.0), ("himmelblau", 4.0), ("quadratic", 1.0)]);
        assert_eq!(rows[2].count, Some(2));
        assert!(rows[2].within_band);
        assert_eq!(rows[2].csv_line(), "quadratic,ton,1;-1,2,converged,2,true");
    }
}
