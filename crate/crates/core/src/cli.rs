//! The `prov` command line: file-based pipeline stages with JSON artifacts.
//!
//! Exit codes: 0 success or policy pass, 1 I/O failure, 2 invalid input,
//! 3 policy failure. Diagnostics go to standard error; standard output is
//! used only when an output path is `-`.

use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::engine::{evaluate, AnnotatedResult, ProvenanceLevel};
use crate::mitigate::{generalize_result, CellSelector, GeneralizationHierarchy, MitigateError, MitigationPlan};
use crate::privacy::{analyze_disclosure, compare_levels, render_comparison, PrivacyPolicy, Verdict};
use crate::query::{parse, validate, ValidatedQuery};
use crate::reconstruct::{reconstruct, ReconstructedDatabase};
use crate::relmodel::{load_catalog, load_database, AttrRef, Catalog, Database, LoadError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_POLICY_FAIL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "prov", version, about = "Provenance-aware queries, reconstruction and disclosure analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate a query and write the annotated result.
    Run {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, value_parser = parse_level)]
        level: ProvenanceLevel,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild the source data a result reveals.
    Reconstruct {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        /// Defaults to the level the result carries.
        #[arg(long, value_parser = parse_level)]
        level: Option<ProvenanceLevel>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a reconstruction against the source and a privacy policy.
    Analyze {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        /// Evaluate and reconstruct this query in process.
        #[arg(long, required_unless_present = "result", conflicts_with_all = ["result", "reconstruction"])]
        query: Option<PathBuf>,
        /// A result written by `run`; needs `--reconstruction`.
        #[arg(long, requires = "reconstruction")]
        result: Option<PathBuf>,
        #[arg(long, requires = "result")]
        reconstruction: Option<PathBuf>,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, value_parser = parse_level, default_value = "how")]
        level: ProvenanceLevel,
        /// Summarize every level instead of reporting one.
        #[arg(long, requires = "query")]
        all_levels: bool,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Generalize, suppress or permute a result or reconstruction.
    Mitigate {
        /// A result or a reconstruction.
        #[arg(long)]
        result: PathBuf,
        #[arg(long, value_enum)]
        strategy: Strategy,
        #[arg(long)]
        hierarchy: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        gen_level: usize,
        /// Attribute to suppress or permute, as Relation.Attribute.
        #[arg(long)]
        attr: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Needed to reconstruct a result before suppressing or permuting.
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// With `--db` and `--catalog`, report leakage before and after.
        #[arg(long, requires_all = ["db", "catalog"])]
        policy: Option<PathBuf>,
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Generalize,
    Suppress,
    Permute,
}

fn parse_level(s: &str) -> Result<ProvenanceLevel, String> {
    s.parse()
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn io(message: impl Into<String>) -> Self {
        CliError { code: EXIT_IO, message: message.into() }
    }

    fn input(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        CliError { code: if e.is_io() { EXIT_IO } else { EXIT_INPUT }, message: e.to_string() }
    }
}

impl From<MitigateError> for CliError {
    fn from(e: MitigateError) -> Self {
        let code = if matches!(e, MitigateError::Io { .. }) { EXIT_IO } else { EXIT_INPUT };
        CliError { code, message: e.to_string() }
    }
}

macro_rules! input_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::input(e.to_string())
            }
        }
    )*};
}

input_errors!(
    crate::query::SyntaxError,
    crate::query::ValidationError,
    crate::reconstruct::ReconstructError,
    crate::reconstruct::ReconstructionFormatError,
    crate::engine::ResultFormatError,
    crate::privacy::PrivacyError
);

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if path.as_os_str() == "-" {
        let mut out = std::io::stdout().lock();
        return out
            .write_all(contents.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| CliError::io(format!("cannot write to standard output: {e}")));
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

fn load_query(path: &Path, catalog: &Catalog) -> Result<ValidatedQuery, CliError> {
    let text = read(path)?;
    let expr = parse(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(validate(&expr, catalog)?)
}

fn load_policy(path: &Path, catalog: &Catalog) -> Result<PrivacyPolicy, CliError> {
    let policy = PrivacyPolicy::from_json(&read(path)?)?;
    policy.check(catalog)?;
    Ok(policy)
}

fn load_source(db: &Path, catalog: &Path) -> Result<(Catalog, Database), CliError> {
    let catalog = load_catalog(catalog)?;
    let db = load_database(db, &catalog)?;
    Ok((catalog, db))
}

enum Artifact {
    Result(AnnotatedResult),
    Reconstruction(ReconstructedDatabase),
}

fn load_artifact(path: &Path) -> Result<Artifact, CliError> {
    let text = read(path)?;
    let json: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    if json.get("tuples").is_some() {
        Ok(Artifact::Result(AnnotatedResult::from_json(&text)?))
    } else {
        Ok(Artifact::Reconstruction(ReconstructedDatabase::from_json(&text)?))
    }
}

/// Runs one command and returns its exit code.
pub fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { db, catalog, query, level, out } => {
            let (catalog, db) = load_source(&db, &catalog)?;
            let query = load_query(&query, &catalog)?;
            write(&out, &evaluate(&db, &query, level).to_json())?;
            Ok(EXIT_OK)
        }
        Command::Reconstruct { result, catalog, level, out } => {
            let catalog = load_catalog(catalog)?;
            let result = AnnotatedResult::from_json(&read(&result)?)?;
            let level = level.unwrap_or_else(|| result.available_level());
            write(&out, &reconstruct(&result, &catalog, level)?.to_json())?;
            Ok(EXIT_OK)
        }
        Command::Analyze { db, catalog, query, result, reconstruction, policy, level, all_levels, out } => {
            let (catalog, db) = load_source(&db, &catalog)?;
            let policy = load_policy(&policy, &catalog)?;
            if all_levels {
                let query = load_query(query.as_deref().expect("required by clap"), &catalog)?;
                let rows = compare_levels(&db, &query, &policy)?;
                write(&out, &render_comparison(&rows))?;
                let failed = rows.iter().any(|r| r.verdict == Verdict::Fail);
                return Ok(if failed { EXIT_POLICY_FAIL } else { EXIT_OK });
            }
            let (result, rec) = match (query, result, reconstruction) {
                (Some(q), _, _) => {
                    let query = load_query(&q, &catalog)?;
                    let result = evaluate(&db, &query, level);
                    let rec = reconstruct(&result, &catalog, level)?;
                    (result, rec)
                }
                (None, Some(r), Some(rec)) => (
                    AnnotatedResult::from_json(&read(&r)?)?,
                    ReconstructedDatabase::from_json(&read(&rec)?)?,
                ),
                _ => unreachable!("enforced by clap"),
            };
            let report = analyze_disclosure(&rec, &db, &result, &policy)?;
            write(&out, &report.to_json())?;
            eprintln!(
                "{} at {} level: leakage {}, k-anonymity {}",
                report.verdict,
                report.level,
                report.leakage,
                report.k_anonymity.map_or("n/a".to_string(), |k| k.to_string())
            );
            Ok(if report.verdict == Verdict::Fail { EXIT_POLICY_FAIL } else { EXIT_OK })
        }
        Command::Mitigate { result, strategy, hierarchy, gen_level, attr, seed, catalog, policy, db, out } => {
            let artifact = load_artifact(&result)?;
            let catalog = catalog.as_deref().map(load_catalog).transpose()?;
            let attr = attr
                .map(|a| a.parse::<AttrRef>().map_err(|e| CliError::input(e.to_string())))
                .transpose()?;
            let need_attr = || attr.clone().ok_or_else(|| CliError::input("--attr is required for this strategy"));
            let plan = match strategy {
                Strategy::Generalize => {
                    let path = hierarchy.ok_or_else(|| CliError::input("--hierarchy is required to generalize"))?;
                    MitigationPlan::Generalize { hierarchy: GeneralizationHierarchy::load(path)?, level: gen_level }
                }
                Strategy::Suppress => MitigationPlan::Suppress(CellSelector::attribute(&need_attr()?)),
                Strategy::Permute => MitigationPlan::Permute { attribute: need_attr()?, seed },
            };

            // Generalizing a result keeps it a result; everything else works
            // on the reconstruction at the artifact's level.
            let (before, after_result, after_rec) = match (artifact, &plan) {
                (Artifact::Result(r), MitigationPlan::Generalize { hierarchy, level }) => {
                    let g = generalize_result(&r, hierarchy, *level)?;
                    write(&out, &g.to_json())?;
                    (Artifact::Result(r), Some(g), None)
                }
                (Artifact::Result(r), _) => {
                    let catalog = catalog.as_ref().ok_or_else(|| CliError::input("--catalog is required to reconstruct a result"))?;
                    let rec = reconstruct(&r, catalog, r.available_level())?;
                    let m = plan.apply(&rec)?;
                    write(&out, &m.to_json())?;
                    (Artifact::Reconstruction(rec), None, Some(m))
                }
                (Artifact::Reconstruction(rec), _) => {
                    let m = plan.apply(&rec)?;
                    write(&out, &m.to_json())?;
                    (Artifact::Reconstruction(rec), None, Some(m))
                }
            };

            if let (Some(policy), Some(db), Some(catalog)) = (policy, db, catalog) {
                let db = load_database(db, &catalog)?;
                let policy = load_policy(&policy, &catalog)?;
                let (b, a) = match (before, after_result, after_rec) {
                    (Artifact::Result(r), Some(g), _) => {
                        let level = r.available_level();
                        let b = analyze_disclosure(&reconstruct(&r, &catalog, level)?, &db, &r, &policy)?;
                        let a = analyze_disclosure(&reconstruct(&g, &catalog, level)?, &db, &g, &policy)?;
                        (b, a)
                    }
                    (Artifact::Reconstruction(rec), _, Some(m)) => {
                        let query = validate(&parse(&rec.query)?, &catalog)?;
                        let r = evaluate(&db, &query, rec.level);
                        (analyze_disclosure(&rec, &db, &r, &policy)?, analyze_disclosure(&m, &db, &r, &policy)?)
                    }
                    _ => unreachable!("every plan yields a result or a reconstruction"),
                };
                eprintln!(
                    "{}: leakage {} -> {}, verdict {} -> {}",
                    plan.name(),
                    b.leakage,
                    a.leakage,
                    b.verdict,
                    a.verdict
                );
            }
            Ok(EXIT_OK)
        }
    }
}

fn report_error(message: &str) {
    let styled = std::env::var_os("PROV_NO_COLOR").is_none() && std::io::stderr().is_terminal();
    if styled {
        eprintln!("\x1b[1;31merror:\x1b[0m {message}");
    } else {
        eprintln!("error: {message}");
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            report_error(&e.message);
            e.code
        }
    }
}

pub fn main() -> ! {
    std::process::exit(run(std::env::args_os()))
}
