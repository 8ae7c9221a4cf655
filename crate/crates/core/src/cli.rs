//! Command-line front end.
//!
//! Exit codes: 0 pass, 1 input error, 2 the ordered form does not exist
//! (singular T22 and friends), 3 a verification check failed.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::appendix;
use crate::catalog;
use crate::config::Tolerances;
use crate::error::EqoError;
use crate::matrix::ComplexMatrix;
use crate::oracle::{self, GaussianState};
use crate::reorder::{
    block_relation_residual_with, gauss_decompose_with, reconstruct, reconstruct_residual, symplectic_residual,
    transfer_matrix, Factorization, TransferMatrix,
};
use crate::wire::{self, Source, WireError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_FAILED: i32 = 3;

/// Oracle agreement between the factored action and the integrated flow.
pub const ORACLE_TOL: f64 = 1e-6;
pub const DEFAULT_STEPS: usize = appendix::DEFAULT_STEPS;

#[derive(Debug, Parser)]
#[command(name = "eqo", version, about = "Reorder exponential quadratic operators into factored form")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Factor an operator into prefactor, W, Y and Z.
    Decompose(JobArgs),
    /// Run residual and equivalence checks.
    Verify(VerifyArgs),
    /// Named operators.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Rebuild T from a factorization document.
    Reconstruct {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Debug, Subcommand)]
enum CatalogAction {
    List {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
struct JobArgs {
    #[arg(long, conflicts_with = "input")]
    catalog: Option<String>,
    /// K=V, repeatable.
    #[arg(long = "param", value_name = "K=V", requires = "catalog")]
    params: Vec<String>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Residual tolerance; overrides EQO_DEFAULT_TOL.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    job: JobArgs,
    /// Comma-separated subset of symplectic,block_relation,reconstruct,oracle,appendix, or `all`.
    #[arg(long, default_value = "all")]
    checks: String,
    /// Shorthand for adding `appendix` to the check list.
    #[arg(long)]
    appendix: bool,
    /// Step count for the oracle flow and the v(t) integration.
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    Symplectic,
    BlockRelation,
    Reconstruct,
    Oracle,
    Appendix,
}

impl Check {
    pub const ALL: [Check; 5] = [
        Check::Symplectic,
        Check::BlockRelation,
        Check::Reconstruct,
        Check::Oracle,
        Check::Appendix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Symplectic => "symplectic",
            Check::BlockRelation => "block_relation",
            Check::Reconstruct => "reconstruct",
            Check::Oracle => "oracle",
            Check::Appendix => "appendix",
        }
    }

    fn parse_list(list: &str) -> Result<Vec<Check>, WireError> {
        if list.trim() == "all" {
            return Ok(Check::ALL.to_vec());
        }
        let mut out = Vec::new();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let c = Check::ALL
                .into_iter()
                .find(|c| c.name() == item)
                .ok_or_else(|| input_error("checks", format!("unknown check '{item}'")))?;
            out.push(c);
        }
        if out.is_empty() {
            return Err(input_error("checks", "empty check list"));
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

fn input_error(field: &str, message: impl Into<String>) -> WireError {
    WireError {
        field: field.into(),
        message: message.into(),
    }
}

/// One resolved command-line job.
#[derive(Debug, Clone)]
pub struct JobSpec {
    pub source: Source,
    pub checks: Vec<Check>,
    pub tolerances: Tolerances,
    pub steps: usize,
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Not applicable to this source (oracle and appendix need a generator).
    Skipped,
    /// The check could not run because the ordered form does not exist.
    Error,
}

impl Verdict {
    fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Skipped => "skipped",
            Verdict::Error => "error",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub check: Check,
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub note: Option<String>,
}

/// Everything a verify run produced, in check order.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub source: String,
    pub results: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn exit_code(&self) -> i32 {
        if self.results.iter().any(|r| r.verdict == Verdict::Error) {
            EXIT_DOMAIN
        } else if self.results.iter().any(|r| r.verdict == Verdict::Fail) {
            EXIT_FAILED
        } else {
            EXIT_OK
        }
    }
}

enum Failure {
    Input(String),
    Domain { message: String, det_t22: Option<f64> },
}

impl From<WireError> for Failure {
    fn from(e: WireError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn classify(e: EqoError, t: Option<&TransferMatrix>) -> Failure {
    if e.is_domain_error() {
        Failure::Domain {
            message: e.to_string(),
            det_t22: t.and_then(|t| t.t22.det().ok()).map(|d| d.norm()),
        }
    } else {
        Failure::Input(e.to_string())
    }
}

fn resolve_source(job: &JobArgs) -> Result<Source, WireError> {
    match (&job.catalog, &job.input) {
        (Some(name), None) => {
            let mut params = BTreeMap::new();
            for kv in &job.params {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| input_error("param", format!("'{kv}' is not K=V")))?;
                let x: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| input_error(&format!("param.{k}"), format!("'{v}' is not a number")))?;
                if params.insert(k.trim().to_string(), x).is_some() {
                    return Err(input_error(&format!("param.{k}"), "given twice"));
                }
            }
            Ok(Source::Catalog {
                name: name.clone(),
                params,
            })
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| input_error("input", format!("{}: {e}", path.display())))?;
            let doc: Value =
                serde_json::from_str(&text).map_err(|e| input_error("input", format!("invalid JSON: {e}")))?;
            wire::source_from_json(&doc)
        }
        _ => Err(input_error("source", "give exactly one of --catalog or --input")),
    }
}

fn tolerances(tol: Option<f64>) -> Result<Tolerances, WireError> {
    let base = Tolerances::from_env();
    match tol {
        None => Ok(base),
        Some(t) if t > 0.0 && t.is_finite() => Ok(base.with_residual(t)),
        Some(t) => Err(input_error("tol", format!("{t} is not a positive finite number"))),
    }
}

fn job_spec(job: &JobArgs, checks: Vec<Check>, steps: usize) -> Result<JobSpec, WireError> {
    Ok(JobSpec {
        source: resolve_source(job)?,
        checks,
        tolerances: tolerances(job.tol)?,
        steps,
        format: job.format,
    })
}

fn source_transfer(source: &Source) -> Result<TransferMatrix, Failure> {
    match source {
        Source::Transfer(t) => Ok(t.clone()),
        _ => {
            let g = source
                .generator()
                .map_err(|e| classify(e, None))?
                .expect("generator sources build a generator");
            transfer_matrix(&g).map_err(|e| classify(e, None))
        }
    }
}

/// Factorization plus its residuals.
#[derive(Debug, Clone)]
pub struct DecomposeReport {
    pub source: String,
    pub transfer: TransferMatrix,
    pub factorization: Factorization,
    pub symplectic: f64,
    pub block_relation: f64,
    pub reconstruct: f64,
}

impl DecomposeReport {
    pub fn to_json(&self) -> Value {
        let mut doc = wire::factorization_to_json(&self.factorization);
        doc["source"] = json!(self.source);
        doc["residuals"] = json!({
            "symplectic": self.symplectic,
            "block_relation": self.block_relation,
            "reconstruct": self.reconstruct,
            "wz_asymmetry": self.factorization.asymmetry,
        });
        doc["T"] = wire::transfer_to_json(&self.transfer);
        doc
    }
}

fn run_decompose(spec: &JobSpec) -> Result<DecomposeReport, Failure> {
    let t = source_transfer(&spec.source)?;
    let tol = &spec.tolerances;
    let f = gauss_decompose_with(&t, tol).map_err(|e| classify(e, Some(&t)))?;
    let block_relation = block_relation_residual_with(&t, tol).map_err(|e| classify(e, Some(&t)))?;
    let reconstruct = reconstruct_residual(&f, &t).map_err(|e| classify(e, Some(&t)))?;
    Ok(DecomposeReport {
        source: spec.source.label(),
        symplectic: symplectic_residual(&t),
        block_relation,
        reconstruct,
        transfer: t,
        factorization: f,
    })
}

fn measured(check: Check, tolerance: f64, r: crate::Result<f64>) -> CheckResult {
    match r {
        Ok(residual) => CheckResult {
            check,
            residual: Some(residual),
            tolerance,
            verdict: if residual <= tolerance { Verdict::Pass } else { Verdict::Fail },
            note: None,
        },
        Err(e) => CheckResult {
            check,
            residual: None,
            tolerance,
            verdict: if e.is_domain_error() { Verdict::Error } else { Verdict::Fail },
            note: Some(e.to_string()),
        },
    }
}

fn oracle_residual(g: &crate::QuadraticGenerator, steps: usize) -> crate::Result<f64> {
    let f = crate::reorder::decompose(g)?;
    let start = GaussianState::vacuum(g.modes());
    let factored = oracle::apply_factorization(&f, &start)?;
    let flowed = oracle::evolve_generator(g, &start, steps)?;
    Ok(factored.distance(&flowed))
}

/// Runs the requested checks. Input problems surface as `Err`.
pub fn run_verify(spec: &JobSpec) -> Result<VerifyReport, String> {
    let t = match source_transfer(&spec.source) {
        Ok(t) => t,
        Err(Failure::Input(m)) => return Err(m),
        Err(Failure::Domain { message, .. }) => {
            // The transfer matrix itself could not be formed.
            let results = spec
                .checks
                .iter()
                .map(|&check| CheckResult {
                    check,
                    residual: None,
                    tolerance: spec.tolerances.residual,
                    verdict: Verdict::Error,
                    note: Some(message.clone()),
                })
                .collect();
            return Ok(VerifyReport {
                source: spec.source.label(),
                results,
            });
        }
    };
    let g = spec.source.generator().map_err(|e| e.to_string())?;
    let tol = &spec.tolerances;
    let results = spec
        .checks
        .iter()
        .map(|&check| match check {
            Check::Symplectic => measured(check, tol.residual, Ok(symplectic_residual(&t))),
            Check::BlockRelation => measured(check, tol.residual, block_relation_residual_with(&t, tol)),
            Check::Reconstruct => measured(
                check,
                tol.reconstruct(),
                gauss_decompose_with(&t, tol).and_then(|f| reconstruct_residual(&f, &t)),
            ),
            Check::Oracle | Check::Appendix => {
                let tolerance = if check == Check::Oracle {
                    ORACLE_TOL
                } else {
                    appendix::PREFACTOR_TOL
                };
                match &g {
                    None => CheckResult {
                        check,
                        residual: None,
                        tolerance,
                        verdict: Verdict::Skipped,
                        note: Some("needs a generator, not a bare transfer matrix".into()),
                    },
                    Some(g) if check == Check::Oracle => measured(check, tolerance, oracle_residual(g, spec.steps)),
                    Some(g) => measured(
                        check,
                        tolerance,
                        appendix::prefactor_report(g, spec.steps).map(|r| r.residual),
                    ),
                }
            }
        })
        .collect();
    Ok(VerifyReport {
        source: spec.source.label(),
        results,
    })
}

fn fmt_complex(z: Complex64) -> String {
    format!("{:>+.10e} {:>+.10e}i", z.re, z.im)
}

fn fmt_matrix(out: &mut String, name: &str, m: &ComplexMatrix) {
    let _ = writeln!(out, "{name}:");
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|&z| fmt_complex(z)).collect();
        let _ = writeln!(out, "  [{}]", row.join(", "));
    }
}

fn residual_table(rows: &[(&str, Option<f64>, f64, &str)]) -> String {
    let mut out = format!("{:<16} {:>10} {:>10}  {}\n", "check", "residual", "tolerance", "verdict");
    for (name, residual, tol, verdict) in rows {
        let r = residual.map_or_else(|| "-".to_string(), |r| format!("{r:.2e}"));
        let _ = writeln!(out, "{name:<16} {r:>10} {tol:>10.2e}  {verdict}");
    }
    out
}

fn decompose_text(r: &DecomposeReport, tol: &Tolerances) -> String {
    let f = &r.factorization;
    let mut out = format!("source: {}\nn: {}\nprefactor: {}\n", r.source, f.modes(), fmt_complex(f.prefactor));
    fmt_matrix(&mut out, "W", &f.w);
    fmt_matrix(&mut out, "Y", &f.y);
    fmt_matrix(&mut out, "Z", &f.z);
    let verdict = |x: f64, t: f64| if x <= t { "pass" } else { "fail" };
    out.push('\n');
    out.push_str(&residual_table(&[
        ("symplectic", Some(r.symplectic), tol.residual, verdict(r.symplectic, tol.residual)),
        (
            "block_relation",
            Some(r.block_relation),
            tol.residual,
            verdict(r.block_relation, tol.residual),
        ),
        (
            "reconstruct",
            Some(r.reconstruct),
            tol.reconstruct(),
            verdict(r.reconstruct, tol.reconstruct()),
        ),
    ]));
    out
}

fn verify_json(r: &VerifyReport) -> Value {
    let checks: Vec<Value> = r
        .results
        .iter()
        .map(|c| {
            json!({
                "check": c.check.name(),
                "residual": c.residual,
                "tolerance": c.tolerance,
                "verdict": c.verdict.name(),
                "note": c.note,
            })
        })
        .collect();
    json!({"source": r.source, "checks": checks, "pass": r.exit_code() == EXIT_OK})
}

fn verify_text(r: &VerifyReport) -> String {
    let rows: Vec<_> = r
        .results
        .iter()
        .map(|c| (c.check.name(), c.residual, c.tolerance, c.verdict.name()))
        .collect();
    let mut out = format!("source: {}\n", r.source);
    out.push_str(&residual_table(&rows));
    for c in r.results.iter().filter(|c| c.note.is_some()) {
        let _ = writeln!(out, "note[{}]: {}", c.check.name(), c.note.as_deref().unwrap_or(""));
    }
    out
}

fn emit_failure(f: Failure, format: Format, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (code, message, det) = match f {
        Failure::Input(m) => (EXIT_INPUT, m, None),
        Failure::Domain { message, det_t22 } => (EXIT_DOMAIN, message, det_t22),
    };
    let detail = det.map_or_else(String::new, |d| format!(" (|det T22| = {d:.3e})"));
    let _ = writeln!(err, "error: {message}{detail}");
    if format == Format::Json {
        let kind = if code == EXIT_DOMAIN { "domain" } else { "input" };
        let _ = writeln!(out, "{}", json!({"error": message, "kind": kind, "det_t22": det}));
    }
    code
}

fn print_json(out: &mut dyn Write, v: &Value) {
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(v).expect("values serialize"));
}

fn cmd_decompose(job: &JobArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let spec = match job_spec(job, Vec::new(), DEFAULT_STEPS) {
        Ok(s) => s,
        Err(e) => return emit_failure(e.into(), job.format, out, err),
    };
    match run_decompose(&spec) {
        Ok(r) => {
            match spec.format {
                Format::Json => print_json(out, &r.to_json()),
                Format::Text => {
                    let _ = write!(out, "{}", decompose_text(&r, &spec.tolerances));
                }
            }
            EXIT_OK
        }
        Err(f) => emit_failure(f, spec.format, out, err),
    }
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let spec = Check::parse_list(&args.checks)
        .map(|mut c| {
            if args.appendix && !c.contains(&Check::Appendix) {
                c.push(Check::Appendix);
            }
            c
        })
        .and_then(|checks| {
            if args.steps == 0 {
                return Err(input_error("steps", "must be positive"));
            }
            job_spec(&args.job, checks, args.steps)
        });
    let spec = match spec {
        Ok(s) => s,
        Err(e) => return emit_failure(e.into(), args.job.format, out, err),
    };
    let report = match run_verify(&spec) {
        Ok(r) => r,
        Err(m) => return emit_failure(Failure::Input(m), spec.format, out, err),
    };
    match spec.format {
        Format::Json => print_json(out, &verify_json(&report)),
        Format::Text => {
            let _ = write!(out, "{}", verify_text(&report));
        }
    }
    report.exit_code()
}

fn cmd_catalog_list(format: Format, out: &mut dyn Write) -> i32 {
    match format {
        Format::Json => {
            let entries: Vec<Value> = catalog::ENTRIES
                .iter()
                .map(|(name, keys)| json!({"name": name, "params": keys}))
                .collect();
            print_json(out, &Value::Array(entries));
        }
        Format::Text => {
            for (name, keys) in catalog::ENTRIES {
                let _ = writeln!(out, "{name}({})", keys.join(", "));
            }
        }
    }
    EXIT_OK
}

fn cmd_reconstruct(path: &PathBuf, format: Format, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let doc = match std::fs::read_to_string(path)
        .map_err(|e| input_error("input", format!("{}: {e}", path.display())))
        .and_then(|s| serde_json::from_str::<Value>(&s).map_err(|e| input_error("input", format!("invalid JSON: {e}"))))
    {
        Ok(d) => d,
        Err(e) => return emit_failure(e.into(), format, out, err),
    };
    let f = match wire::factorization_from_json(&doc) {
        Ok(f) => f,
        Err(e) => return emit_failure(e.into(), format, out, err),
    };
    let t = match reconstruct(&f) {
        Ok(t) => t,
        Err(e) => return emit_failure(classify(e, None), format, out, err),
    };
    // A decompose document carries its T; report how well it is reproduced.
    let residual = match doc.get("T").map(wire::transfer_from_json) {
        None => None,
        Some(Ok(orig)) if orig.modes() == t.modes() => Some((&t.full() - &orig.full()).max_abs() / orig.full().max_abs().max(1.0)),
        Some(Ok(_)) => return emit_failure(Failure::Input("field 'T': size differs from W/Y/Z".into()), format, out, err),
        Some(Err(e)) => return emit_failure(e.into(), format, out, err),
    };
    match format {
        Format::Json => {
            let mut v = wire::transfer_to_json(&t);
            v["residual"] = json!(residual);
            print_json(out, &v);
        }
        Format::Text => {
            let mut s = String::new();
            fmt_matrix(&mut s, "T", &t.full());
            if let Some(r) = residual {
                let _ = writeln!(s, "residual vs input T: {r:.2e}");
            }
            let _ = write!(out, "{s}");
        }
    }
    EXIT_OK
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let rendered = e.render().to_string();
            if informational {
                let _ = write!(out, "{rendered}");
                return EXIT_OK;
            }
            let _ = write!(err, "{rendered}");
            return EXIT_INPUT;
        }
    };
    match &cli.command {
        Command::Decompose(job) => cmd_decompose(job, out, err),
        Command::Verify(args) => cmd_verify(args, out, err),
        Command::Catalog {
            action: CatalogAction::List { format },
        } => cmd_catalog_list(*format, out),
        Command::Reconstruct { input, format } => cmd_reconstruct(input, *format, out, err),
    }
}
