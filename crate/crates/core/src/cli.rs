//! Command-line surface: four subcommands emitting JSON reports.
//!
//! Exit codes: 0 success, 1 input or parse error, 2 precondition failure
//! (non-complementary subspaces, shape mismatch, singular carrier), 3
//! verification failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::diagmodel::{cross_validate, CrossValidation, DiagSpec};
use crate::error::Error;
use crate::geninv::{build_gi, moore_penrose_with_tol, norm_c, ComplementChoice, GiBundle, GiResiduals};
use crate::matrix::Matrix;
use crate::oracle::{run_battery, BatteryConfig, Regime, MAX_DIM};
use crate::perturb::{analyze, PerturbedSystem, SCHEMA};
use crate::subspace::Subspace;
use crate::DEFAULT_TOL;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "stabgi", version, about = "Generalized inverses and their stable perturbations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a generalized inverse of T with prescribed complements.
    Geninv(GeninvArgs),
    /// Analyze the perturbation T + dT.
    Analyze(AnalyzeArgs),
    /// Run the seeded random battery.
    Battery(BatteryArgs),
    /// Analyze a truncated diagonal operator pair.
    Diag(DiagArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Relative tolerance for rank and subspace decisions.
    #[arg(long, env = "SPGI_TOL", default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, env = "SPGI_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ComplementArgs {
    /// Basis (columns) of a complement of N(T) in the domain.
    #[arg(long)]
    pub m: Option<PathBuf>,
    /// Basis (columns) of a complement of R(T) in the codomain.
    #[arg(long)]
    pub w: Option<PathBuf>,
    /// Orthogonal complements (the default when neither --m nor --w is given).
    #[arg(long, conflicts_with_all = ["m", "w"])]
    pub moore_penrose: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GeninvArgs {
    /// Matrix CSV for T.
    #[arg(long)]
    pub t: PathBuf,
    #[command(flatten)]
    pub complements: ComplementArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Matrix CSV for T.
    #[arg(long)]
    pub t: PathBuf,
    /// Matrix CSV for the perturbation dT.
    #[arg(long)]
    pub dt: PathBuf,
    #[command(flatten)]
    pub complements: ComplementArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BatteryArgs {
    #[arg(long, default_value_t = 1000)]
    pub instances: usize,
    #[arg(long, default_value_t = 8)]
    pub max_dim: usize,
    /// Restrict to these regimes (repeatable); all regimes by default.
    #[arg(long)]
    pub regime: Vec<Regime>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DiagArgs {
    /// Diagonal spec JSON.
    #[arg(long)]
    pub spec: PathBuf,
    /// Override the truncation in the spec.
    #[arg(long)]
    pub truncate: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Exit code, JSON report and an optional human-readable diagnostic.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub report: Value,
    pub diagnostic: Option<String>,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Self {
            code: EXIT_OK,
            report,
            diagnostic: None,
        }
    }

    fn from_error(err: &Error) -> Self {
        let code = exit_code(err);
        let mut body = json!({ "kind": error_kind(err), "message": err.to_string() });
        if let Error::Complement { witness, deficit, .. } = err {
            body["witness"] = json!(witness);
            body["deficit"] = json!(deficit);
        }
        Self {
            code,
            report: json!({ "schema": SCHEMA, "error": body }),
            diagnostic: Some(err.to_string()),
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Input(_) | Error::Parse { .. } | Error::Sampling { .. } => EXIT_INPUT,
        Error::Dimension(_)
        | Error::Complement { .. }
        | Error::Precondition(_)
        | Error::SingularMatrix { .. } => EXIT_PRECONDITION,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Input(_) => "input",
        Error::Parse { .. } => "parse",
        Error::Sampling { .. } => "sampling",
        Error::Dimension(_) => "dimension",
        Error::Complement { .. } => "complement",
        Error::Precondition(_) => "precondition",
        Error::SingularMatrix { .. } => "singular",
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

/// Reads a CSV matrix, prefixing diagnostics with the path.
pub fn read_matrix(path: &Path) -> Result<Matrix, Error> {
    Matrix::parse_csv(&read_text(path)?).map_err(|e| match e {
        Error::Parse {
            line,
            column,
            message,
        } => Error::Parse {
            line,
            column,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn check_tol(tol: f64) -> Result<(), Error> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("--tol must be positive, got {tol}")))
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

/// The generalized inverse selected by the complement flags. A missing
/// `--m` or `--w` falls back to the orthogonal complement on that side.
pub fn select_gi(t: &Matrix, args: &ComplementArgs, tol: f64) -> Result<GiBundle, Error> {
    if args.moore_penrose || (args.m.is_none() && args.w.is_none()) {
        return moore_penrose_with_tol(t, tol);
    }
    let orth = ComplementChoice::orthogonal(t, tol)?;
    let m = match &args.m {
        Some(p) => Subspace::span(&read_matrix(p)?, tol)?,
        None => orth.m,
    };
    let w = match &args.w {
        Some(p) => Subspace::span(&read_matrix(p)?, tol)?,
        None => orth.w,
    };
    build_gi(t, &ComplementChoice::new(m, w))
}

#[derive(Debug, Serialize)]
pub struct GeninvReport {
    pub schema: &'static str,
    #[serde(rename = "S")]
    pub s: Matrix,
    #[serde(rename = "P")]
    pub p: Matrix,
    #[serde(rename = "Q")]
    pub q: Matrix,
    pub residuals: GiResiduals,
    pub rank: usize,
    pub c: f64,
}

impl From<&GiBundle> for GeninvReport {
    fn from(b: &GiBundle) -> Self {
        Self {
            schema: SCHEMA,
            s: b.s.clone(),
            p: b.p.clone(),
            q: b.q.clone(),
            residuals: b.residuals,
            rank: b.rank,
            c: norm_c(b),
        }
    }
}

pub fn run_geninv(args: &GeninvArgs) -> Outcome {
    let run = || -> Result<Outcome, Error> {
        check_tol(args.common.tol)?;
        let t = read_matrix(&args.t)?;
        let bundle = select_gi(&t, &args.complements, args.common.tol)?;
        let report = GeninvReport::from(&bundle);
        let mut out = Outcome::ok(to_value(&report));
        if !report.residuals.pass {
            out.code = EXIT_VERIFICATION;
            out.diagnostic = Some("generalized inverse residuals exceed tolerance".into());
        }
        Ok(out)
    };
    run().unwrap_or_else(|e| Outcome::from_error(&e))
}

/// Builds the perturbed system described by `args`.
pub fn load_system(args: &AnalyzeArgs) -> Result<PerturbedSystem, Error> {
    check_tol(args.common.tol)?;
    let t = read_matrix(&args.t)?;
    let dt = read_matrix(&args.dt)?;
    if dt.shape() != t.shape() {
        return Err(Error::Dimension(format!(
            "dT is {}x{} but T is {}x{}",
            dt.rows(),
            dt.cols(),
            t.rows(),
            t.cols()
        )));
    }
    let bundle = select_gi(&t, &args.complements, args.common.tol)?;
    PerturbedSystem::with_tol(bundle, dt, args.common.tol)
}

/// Exit 0 whenever a report is produced, whatever the stability verdict.
pub fn run_analyze(args: &AnalyzeArgs) -> Outcome {
    let run = || -> Result<Outcome, Error> {
        let sys = load_system(args)?;
        Ok(Outcome::ok(to_value(&analyze(&sys)?)))
    };
    run().unwrap_or_else(|e| Outcome::from_error(&e))
}

pub fn battery_config(args: &BatteryArgs) -> Result<BatteryConfig, Error> {
    let mut config = BatteryConfig::new(args.instances, args.max_dim, args.common.seed);
    if !args.regime.is_empty() {
        config = config.with_regimes(args.regime.clone());
    }
    // reject dimension bounds no regime in the rotation can honor
    if args.max_dim > MAX_DIM || args.max_dim == 0 {
        return Err(Error::Input(format!("--max-dim must lie in 1..={MAX_DIM}")));
    }
    if args.instances > 0 {
        for i in 0..config.regimes.len() {
            config.instance_spec(i)?;
        }
    }
    Ok(config)
}

/// Exit 3 when any instance fails a check; the failing seeds go to the
/// diagnostic.
pub fn run_battery_cmd(args: &BatteryArgs) -> Outcome {
    let config = match battery_config(args) {
        Ok(c) => c,
        Err(e) => return Outcome::from_error(&e),
    };
    let report = run_battery(&config);
    let mut out = Outcome::ok(to_value(&report));
    if !report.passed() {
        out.code = EXIT_VERIFICATION;
        let seeds: Vec<String> = report
            .failures
            .iter()
            .map(|f| format!("#{} seed {} ({})", f.index, f.seed, f.condition))
            .collect();
        out.diagnostic = Some(format!(
            "{} failing checks: {}",
            report.failures.len(),
            seeds.join(", ")
        ));
    }
    out
}

#[derive(Debug, Serialize)]
pub struct DiagReport {
    pub schema: &'static str,
    pub tail_note: String,
    #[serde(flatten)]
    pub validation: CrossValidation,
}

pub fn run_diag(args: &DiagArgs) -> Outcome {
    let run = || -> Result<Outcome, Error> {
        let text = read_text(&args.spec)?;
        let spec: DiagSpec = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: format!("{}: {e}", args.spec.display()),
        })?;
        let (t, d) = spec.build(args.truncate)?;
        let validation = cross_validate(&t, &d)?;
        let agree = validation.agree;
        let report = DiagReport {
            schema: SCHEMA,
            tail_note: t.tail_note.clone(),
            validation,
        };
        let mut out = Outcome::ok(to_value(&report));
        if !agree {
            out.code = EXIT_VERIFICATION;
            out.diagnostic = Some("closed form and matrix pipeline disagree".into());
        }
        Ok(out)
    };
    run().unwrap_or_else(|e| Outcome::from_error(&e))
}

fn out_path(command: &Command) -> Option<&Path> {
    let common = match command {
        Command::Geninv(a) => &a.common,
        Command::Analyze(a) => &a.common,
        Command::Battery(a) => &a.common,
        Command::Diag(a) => &a.common,
    };
    common.out.as_deref()
}

pub fn dispatch(command: &Command) -> Outcome {
    match command {
        Command::Geninv(a) => run_geninv(a),
        Command::Analyze(a) => run_analyze(a),
        Command::Battery(a) => run_battery_cmd(a),
        Command::Diag(a) => run_diag(a),
    }
}

/// Parses `args`, runs the command, writes the report and returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = dispatch(&cli.command);
    let text = serde_json::to_string_pretty(&outcome.report).expect("json") + "\n";
    let written = match out_path(&cli.command) {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    };
    if let Some(msg) = &outcome.diagnostic {
        eprintln!("stabgi: {msg}");
    }
    if let Err(msg) = written {
        eprintln!("stabgi: cannot write report: {msg}");
        return EXIT_INPUT;
    }
    outcome.code
}
