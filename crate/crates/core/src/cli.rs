//! Argument handling and report rendering for the `finsler-verify` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::finsler::DiffMode;
use crate::fixtures::{self, Perturbation};
use crate::report::{ResidualReport, RunReport};
use crate::suites::{self, RunOptions, Suite};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_EVALUATION: i32 = 3;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "FINSLER_WORKERS";

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Jet,
    Fd,
}

impl From<Mode> for DiffMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Jet => DiffMode::Jet,
            Mode::Fd => DiffMode::Fd,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "finsler-verify", version, about = "Residual checks for Randers gradient Ricci solitons")]
struct Cli {
    /// Worker threads (defaults to $FINSLER_WORKERS, then the number of cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every applicable check on a registered fixture
    Verify(VerifyArgs),
    /// Run an oracle-equivalence suite on random data
    Crosscheck(CrossArgs),
    /// List fixtures or suites
    List(ListArgs),
}

#[derive(clap::Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    fixture: Option<String>,
    /// JSON run configuration; flags given on the command line win
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum)]
    diff_mode: Option<Mode>,
    /// Negative control, e.g. `f:1e-2`, `W:1e-2`, `kappa:1e-2`, `mu:1e-2`
    #[arg(long)]
    perturb: Vec<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct CrossArgs {
    #[arg(long)]
    suite: String,
    /// Number of random metrics
    #[arg(long)]
    count: Option<usize>,
    /// Flags per metric
    #[arg(long)]
    flags: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct ListArgs {
    /// List crosscheck suites instead of fixtures
    #[arg(long)]
    suites: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

/// Settings of a `verify` run as read from a `--config` file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub fixture: Option<String>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub diff_mode: Option<DiffMode>,
    pub perturb: Vec<String>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Evaluation(GeometryError),
    Io(std::io::Error),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if code == EXIT_PASS { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let workers = cli.workers.or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()));
    let result = match workers {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(Failure::Usage(format!("cannot start {k} workers: {e}"))),
        },
        None => dispatch(cli.command),
    };
    let result = result.and_then(|outcome| match outcome {
        Outcome::Listed(text) => {
            out.write_all(text.as_bytes())?;
            Ok(EXIT_PASS)
        }
        Outcome::Report(report, format, output) => finish(&report, format, output, out, err),
    });
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Evaluation(e)) => {
            let _ = writeln!(err, "evaluation error: {e}");
            EXIT_EVALUATION
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "i/o error: {e}");
            EXIT_EVALUATION
        }
    }
}

enum Outcome {
    Listed(String),
    Report(RunReport, Format, Option<PathBuf>),
}

fn dispatch(cmd: Command) -> Result<Outcome, Failure> {
    match cmd {
        Command::Verify(a) => verify(a),
        Command::Crosscheck(a) => crosscheck(a),
        Command::List(a) => list(a).map(Outcome::Listed),
    }
}

fn read_config(path: &PathBuf) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("bad config {}: {e}", path.display())))
}

fn verify(a: VerifyArgs) -> Result<Outcome, Failure> {
    let cfg = match &a.config {
        Some(p) => read_config(p)?,
        None => RunConfig::default(),
    };
    let defaults = RunOptions::default();
    let name = a.fixture.or(cfg.fixture).ok_or_else(|| Failure::Usage("missing --fixture".into()))?;
    let opts = RunOptions {
        samples: a.samples.or(cfg.samples).unwrap_or(defaults.samples),
        seed: a.seed.or(cfg.seed).unwrap_or(defaults.seed),
        tol: a.tol.or(cfg.tol).unwrap_or(defaults.tol),
        mode: a.diff_mode.map(DiffMode::from).or(cfg.diff_mode).unwrap_or(defaults.mode),
    };
    if opts.samples == 0 {
        return Err(Failure::Usage("--samples must be at least 1".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Failure::Usage("--tol must be positive".into()));
    }
    let format = a.format.or(cfg.format).unwrap_or_default();
    let output = a.output.or(cfg.output);
    let perturb = if a.perturb.is_empty() { cfg.perturb } else { a.perturb };

    let mut fx = fixtures::by_name(&name)
        .map_err(|_| Failure::Usage(format!("unknown fixture `{name}`; known fixtures: {}", fixtures::NAMES.join(", "))))?;
    for p in &perturb {
        let p: Perturbation = p.parse().map_err(|e: GeometryError| Failure::Usage(e.to_string()))?;
        fx = fx.perturbed(p).map_err(Failure::Evaluation)?;
    }
    let checks = suites::verify_fixture(&fx, &opts).map_err(Failure::Evaluation)?;
    let report = RunReport { fixture: Some(fx.name.clone()), suite: None, seed: opts.seed, samples: opts.samples, checks };
    Ok(Outcome::Report(report, format, output))
}

fn crosscheck(a: CrossArgs) -> Result<Outcome, Failure> {
    let suite: Suite = a.suite.parse().map_err(|e: GeometryError| Failure::Usage(e.to_string()))?;
    let (dc, df) = suite.default_count();
    let count = a.count.unwrap_or(dc);
    let flags = a.flags.unwrap_or(df);
    if count == 0 || flags == 0 {
        return Err(Failure::Usage("--count and --flags must be at least 1".into()));
    }
    let tol = a.tol.unwrap_or(suite.default_tol());
    if !(tol > 0.0) {
        return Err(Failure::Usage("--tol must be positive".into()));
    }
    let checks = suites::crosscheck(suite, count, flags, a.seed, tol).map_err(Failure::Evaluation)?;
    let report = RunReport { fixture: None, suite: Some(suite.name().into()), seed: a.seed, samples: count * flags, checks };
    Ok(Outcome::Report(report, a.format, a.output))
}

fn finish(
    report: &RunReport,
    format: Format,
    output: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let text = render(report, format)?;
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    if report.passed() {
        Ok(EXIT_PASS)
    } else {
        for c in report.failures() {
            writeln!(err, "FAILED {}: max |r| = {:.3e} > tol {:.1e}", c.name, c.max_abs, c.tol)?;
        }
        Ok(EXIT_CHECK_FAILED)
    }
}

/// Serialize a report in the requested format.
pub fn render(report: &RunReport, format: Format) -> std::io::Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["name", "paper_ref", "samples", "max_abs", "mean_abs", "max_rel", "tol", "verdict"])
                .map_err(std::io::Error::other)?;
            for c in &report.checks {
                w.write_record(csv_row(c)).map_err(std::io::Error::other)?;
            }
            let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
        }
        Format::Text => {
            let mut s = String::new();
            let head = report.fixture.as_deref().or(report.suite.as_deref()).unwrap_or("");
            s.push_str(&format!("{head}  seed {}  samples {}\n", report.seed, report.samples));
            for c in &report.checks {
                s.push_str(&format!(
                    "{:<15} {:<44} max {:>10.3e}  mean {:>10.3e}  tol {:.1e}\n",
                    c.verdict.as_str(),
                    c.name,
                    c.max_abs,
                    c.mean_abs,
                    c.tol
                ));
            }
            Ok(s)
        }
    }
}

fn csv_row(c: &ResidualReport) -> [String; 8] {
    [
        c.name.clone(),
        c.paper_ref.clone(),
        c.samples.to_string(),
        format!("{:e}", c.max_abs),
        format!("{:e}", c.mean_abs),
        format!("{:e}", c.max_rel),
        format!("{:e}", c.tol),
        c.verdict.as_str().to_string(),
    ]
}

fn list(a: ListArgs) -> Result<String, Failure> {
    use std::fmt::Write;
    let mut out = String::new();
    let rows: Vec<(String, String)> = if a.suites {
        Suite::ALL.iter().map(|s| (s.name().to_string(), s.describe().to_string())).collect()
    } else {
        fixtures::NAMES.iter().map(|n| (n.to_string(), describe_fixture(n).to_string())).collect()
    };
    match a.format {
        Format::Json => {
            let names: Vec<&str> = rows.iter().map(|(n, _)| n.as_str()).collect();
            let _ = writeln!(out, "{}", serde_json::to_string(&names).map_err(std::io::Error::other)?);
        }
        Format::Csv => {
            let _ = writeln!(out, "name,description");
            for (n, d) in &rows {
                let _ = writeln!(out, "{n},\"{d}\"");
            }
        }
        Format::Text => {
            for (n, d) in &rows {
                let _ = writeln!(out, "{n:<16} {d}");
            }
        }
    }
    Ok(out)
}

fn describe_fixture(name: &str) -> &'static str {
    match name {
        "gaussian" => "flat h, W = Qx on the ball where ‖W‖ < 1, f = |x|²/2, shrinking with κ = 1",
        "gaussian-flat" => "Euclidean metric with f = |x|²/2, shrinking with κ = 1",
        "cigar" => "h = dt² + tanh²t dθ², W = ∂θ, f = −2 log cosh t, steady",
        "shrinking" => "ℝ × S³ with a Hopf-type Killing wind, f = t², κ = 2",
        "expanding" => "(0, 1) × S³ warped by t, f = −t², κ = −2",
        _ => "",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["finsler-verify"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn list_outputs() {
        let (code, out, _) = call(&["list"]);
        assert_eq!(code, 0);
        for n in ["gaussian", "cigar", "shrinking", "expanding"] {
            assert!(out.contains(n));
        }
        let (_, out, _) = call(&["list", "--suites"]);
        assert!(out.contains("randers-ricci") && out.contains("jets-vs-fd"));
        let (_, out, _) = call(&["list", "--format", "json"]);
        let v: Vec<String> = serde_json::from_str(&out).unwrap();
        assert_eq!(v.len(), fixtures::NAMES.len());
    }

    #[test]
    fn usage_errors_exit_two() {
        let (code, _, err) = call(&["verify", "--fixture", "nosuch"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("cigar"));
        assert_eq!(call(&["verify"]).0, EXIT_USAGE);
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(call(&["verify", "--fixture", "cigar", "--perturb", "q:1"]).0, EXIT_USAGE);
        assert_eq!(call(&["crosscheck", "--suite", "nope"]).0, EXIT_USAGE);
        assert_eq!(call(&["verify", "--fixture", "cigar", "--samples", "0"]).0, EXIT_USAGE);
    }

    #[test]
    fn verify_and_negative_control() {
        let (code, out, _) = call(&["verify", "--fixture", "cigar", "--samples", "8", "--seed", "42", "--tol", "1e-7"]);
        assert_eq!(code, 0, "{out}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["fixture"], "cigar");
        assert_eq!(v["seed"], 42);
        assert!(v["checks"].as_array().unwrap().len() > 5);
        let (code, _, err) = call(&["verify", "--fixture", "cigar", "--samples", "8", "--perturb", "f:1e-2"]);
        assert_eq!(code, EXIT_CHECK_FAILED);
        assert!(err.contains("FAILED gradient-soliton"));
    }

    #[test]
    fn csv_and_text_render() {
        let (code, out, _) = call(&["verify", "--fixture", "cigar", "--samples", "4", "--format", "csv"]);
        assert_eq!(code, 0);
        let mut rdr = csv::Reader::from_reader(out.as_bytes());
        assert_eq!(rdr.headers().unwrap().len(), 8);
        assert!(rdr.records().count() > 5);
        let (_, out, _) = call(&["verify", "--fixture", "cigar", "--samples", "4", "--format", "text"]);
        assert!(out.starts_with("cigar  seed 42  samples 4"));
    }
}
