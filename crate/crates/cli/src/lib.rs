//! Command-line front end: divergences and derivatives from matrix files,
//! verification suites, and integrand sweeps as CSV.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 malformed input or
//! a violated precondition, 3 a numerical failure or unmet quadrature
//! tolerance.

pub mod matrix_file;
mod sweep;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use opcake_core::verify::{reports_to_json, CheckName};
use opcake_core::{
    default_step, dlog_daleckii_krein, dlog_finite_difference, hockey_stick, layer_cake_two_sided, relative_entropy,
    run_suite, DivergenceMethod, PositiveDefinite, QuadratureConfig, SuiteConfig,
};
use serde_json::json;

pub use matrix_file::{read_matrix, MatrixFile};
pub use sweep::{sweep_rows, Quantity, SweepRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Name of the environment variable capping worker threads.
pub const THREADS_ENV: &str = "OPCAKE_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] opcake_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Core(opcake_core::Error::Input(_)) => EXIT_INPUT,
            CliError::Core(_) => EXIT_NUMERICAL,
        }
    }

    fn context(self, what: &str) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{what}: {m}")),
            CliError::Core(opcake_core::Error::Input(m)) => CliError::Core(opcake_core::Error::Input(format!("{what}: {m}"))),
            other => other,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "opcake", version, about = "Operator layer cake and relative entropy calculator")]
pub struct Cli {
    /// Quadrature settings as JSON. Flags below override values from this file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    #[arg(long, global = true)]
    matrix_abs_tol: Option<f64>,
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    #[arg(long, global = true)]
    max_subdivisions: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a single quantity and print it as JSON.
    Compute {
        #[command(subcommand)]
        what: Compute,
    },
    /// Run verification suites and write a JSON report.
    Verify(VerifyArgs),
    /// Tabulate a γ-dependent quantity as CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Subcommand)]
enum Compute {
    /// Relative entropy D(A‖B).
    Relent {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = RelentMethod::Umegaki)]
        method: RelentMethod,
    },
    /// Fréchet derivative of the logarithm at B in direction H.
    Dlog {
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        h: PathBuf,
        #[arg(long, value_enum, default_value_t = DlogMethod::DaleckiiKrein)]
        method: DlogMethod,
        /// Step for the finite-difference method.
        #[arg(long)]
        step: Option<f64>,
    },
    /// Hockey-stick divergence E_γ(A‖B).
    HockeyStick {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        gamma: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RelentMethod {
    Umegaki,
    FrenkelGamma,
    FrenkelT,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DlogMethod {
    DaleckiiKrein,
    LayerCake,
    FiniteDiff,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// `all`, `equivalence_chain`, or comma-separated check names.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Inclusive range `LO..HI`, or a single dimension.
    #[arg(long, default_value = "1..6")]
    dims: String,
    /// Trials per dimension.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Overrides every check's default tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, value_enum)]
    quantity: Quantity,
    #[arg(long, allow_hyphen_values = true)]
    gamma_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    gamma_max: f64,
    #[arg(long)]
    points: usize,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match configure_threads().and_then(|()| execute(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    // A second call in the same process (tests) finds the pool already built.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

impl Cli {
    /// Defaults, then the config file, then individual flags.
    fn quadrature(&self) -> Result<QuadratureConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("{}: invalid quadrature config: {e}", path.display())))?
            }
            None => QuadratureConfig::default(),
        };
        if let Some(v) = self.abs_tol {
            cfg.abs_tol = v;
        }
        if let Some(v) = self.matrix_abs_tol {
            cfg.matrix_abs_tol = v;
        }
        if let Some(v) = self.rel_tol {
            cfg.rel_tol = v;
        }
        if let Some(v) = self.max_subdivisions {
            cfg.max_subdivisions = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let cfg = cli.quadrature()?;
    match cli.command {
        Command::Compute { what } => compute(what, &cfg),
        Command::Verify(args) => verify(args, cfg),
        Command::Sweep(args) => sweep(args),
    }
}

fn read_pd(path: &Path) -> Result<PositiveDefinite, CliError> {
    PositiveDefinite::new(read_matrix(path)?).map_err(|e| CliError::from(e).context(&path.display().to_string()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|e| CliError::Usage(format!("stdout: {e}")))
        }
    }
}

fn compute(what: Compute, cfg: &QuadratureConfig) -> Result<i32, CliError> {
    let doc = match what {
        Compute::Relent { a, b, method } => {
            let a = read_matrix(&a)?;
            let b = read_pd(&b)?;
            let method = match method {
                RelentMethod::Umegaki => DivergenceMethod::Umegaki,
                RelentMethod::FrenkelGamma => DivergenceMethod::FrenkelGamma,
                RelentMethod::FrenkelT => DivergenceMethod::FrenkelT,
            };
            let report = relative_entropy(&a, &b, method, cfg)?;
            let mut doc = json!({
                "value": report.value,
                "method": report.method.name(),
                "warnings": report.warnings,
            });
            if let Some(q) = &report.quadrature {
                doc["error_estimate"] = json!(q.error_estimate);
            }
            doc
        }
        Compute::Dlog { b, h, method, step } => {
            let b = read_pd(&b)?;
            let h = read_matrix(&h)?;
            if h.dim() != b.dim() {
                return Err(CliError::Usage(format!("dimension mismatch: B is {}, H is {}", b.dim(), h.dim())));
            }
            let (matrix, name, estimate) = match method {
                DlogMethod::DaleckiiKrein => (dlog_daleckii_krein(&b, &h), "daleckii_krein", None),
                DlogMethod::LayerCake => {
                    let r = layer_cake_two_sided(&b, &h, cfg)?;
                    (r.value, "layer_cake", Some(r.error_estimate))
                }
                DlogMethod::FiniteDiff => {
                    let step = match step {
                        Some(s) => s,
                        None => default_step(&b, &h)?,
                    };
                    (dlog_finite_difference(&b, &h, step)?, "finite_diff", None)
                }
            };
            let mut doc = json!({
                "matrix": MatrixFile::from_matrix(&matrix),
                "method": name,
                "warnings": b.warnings(),
            });
            if let Some(e) = estimate {
                doc["error_estimate"] = json!(e);
            }
            doc
        }
        Compute::HockeyStick { a, b, gamma } => {
            let value = hockey_stick(&read_matrix(&a)?, &read_matrix(&b)?, gamma)?;
            json!({ "value": value, "method": "hockey_stick", "warnings": [] })
        }
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("plain data");
    text.push('\n');
    emit(None, &text)?;
    Ok(EXIT_OK)
}

/// `LO..HI` (inclusive) or a single dimension.
pub fn parse_dims(spec: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("invalid --dims '{spec}', expected LO..HI"));
    let (lo, hi) = match spec.split_once("..") {
        Some((lo, hi)) => (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?),
        None => {
            let d: usize = spec.trim().parse().map_err(|_| bad())?;
            (d, d)
        }
    };
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

fn verify(args: VerifyArgs, quadrature: QuadratureConfig) -> Result<i32, CliError> {
    let names: Vec<&str> = args.suite.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Err(CliError::Usage("--suite is empty".into()));
    }
    for name in &names {
        CheckName::expand(name)?;
    }
    let config = SuiteConfig {
        dims: parse_dims(&args.dims)?,
        trials: args.trials,
        seed: args.seed,
        tolerance: args.tol,
        quadrature,
    };
    let reports = run_suite(&names, &config)?;
    for r in &reports {
        eprintln!(
            "{:<26} {} {}/{} failures, max residual {:.3e} (tol {:.0e})",
            r.check_name,
            if r.passed() { "PASS" } else { "FAIL" },
            r.failures,
            r.trials,
            r.max_residual,
            r.tolerance
        );
    }
    let mut text = reports_to_json(&reports);
    text.push('\n');
    emit(args.out.as_deref(), &text)?;
    Ok(if reports.iter().all(|r| r.passed()) { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn sweep(args: SweepArgs) -> Result<i32, CliError> {
    let a = read_matrix(&args.a)?;
    let b = read_pd(&args.b)?;
    let rows = sweep_rows(&a, &b, args.quantity, args.gamma_min, args.gamma_max, args.points)?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(["gamma", "value"]).expect("in-memory write");
    for row in &rows {
        writer
            .write_record([row.gamma.to_string(), row.value.to_string()])
            .expect("in-memory write");
    }
    let bytes = writer.into_inner().expect("in-memory write");
    emit(args.out.as_deref(), &String::from_utf8(bytes).expect("ascii"))?;
    Ok(EXIT_OK)
}
