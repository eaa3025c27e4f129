//! Command-line front end.
//!
//! Every subcommand emits an [`AnalysisReport`]. Exit codes: 0 success,
//! 1 usage, 2 input/parse/validation errors, 3 numeric failures.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::define::{
    greedy_define, lp_define, majority_define, uniform_majority_bound, verify_definition,
    Definition, Instance, TargetSpec,
};
use crate::error::{Error, Result};
use crate::kernel::{self, sample_table, KernelExpr, PointSet};
use crate::order::{double_limit, find_ladder, ladder_index, ladder_lower_bound};
use crate::report::{AnalysisReport, ReportBuilder};
use crate::table::{FormulaTable, GroupFunction};
use crate::types::{density_character, realized_types};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "stabdef",
    version,
    about = "Stability and definability analysis of formula tables"
)]
pub struct Cli {
    /// Seed for randomized searches.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for batch work (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Write the JSON report to this path instead of stdout.
    #[arg(long = "json", global = true, value_name = "PATH")]
    pub json_out: Option<PathBuf>,
    /// Suppress the summary line printed when --json is used.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ladder index, realized types and density characters of a table.
    Analyze(AnalyzeArgs),
    /// Defining predicates for target types.
    Define(DefineArgs),
    /// Iterated double limits of a kernel along two sequences.
    Doublelimit(DoubleLimitArgs),
    /// Uniform majority size across a family of tables.
    Uniform(UniformArgs),
    /// Kernel expression utilities.
    #[command(subcommand)]
    Kernel(KernelCommand),
}

#[derive(Debug, Args)]
pub struct TableSource {
    /// CSV table file.
    pub table: Option<PathBuf>,
    /// Kernel expression to sample instead of reading a table.
    #[arg(long, requires_all = ["x", "y"], conflicts_with_all = ["table", "group"])]
    pub kernel: Option<String>,
    /// Point file for the x side (rows).
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Point file for the y side (columns).
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Group function file (JSON with order, cayley, f_values).
    #[arg(long, conflicts_with = "table")]
    pub group: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: TableSource,
    /// Ladder margin δ in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub margin: f64,
    /// Comma-separated ε values for density characters.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.25, 0.5])]
    pub eps: Vec<f64>,
    /// Tolerance for merging rows into realized types.
    #[arg(long, default_value_t = 0.0)]
    pub type_tol: f64,
    /// Largest min(rows, cols) searched exhaustively. Defaults to 12 for
    /// Boolean tables at margin 1 and 8 otherwise.
    #[arg(long)]
    pub exhaustive_max: Option<usize>,
    /// Iterations of the randomized ladder search above the threshold.
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Lp,
    Greedy,
    Majority,
    All,
}

#[derive(Debug, Args)]
pub struct DefineArgs {
    #[command(flatten)]
    pub source: TableSource,
    /// Target as `row:<i>` or comma-separated values. Repeatable.
    #[arg(long = "target", allow_hyphen_values = true)]
    pub targets: Vec<String>,
    /// JSON target file: an array of numbers, {"row": i}, or a list.
    #[arg(long)]
    pub target_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::All)]
    pub mode: Mode,
    /// Verification tolerance τ for convex definitions.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Greedy rounds T.
    #[arg(long, default_value_t = 1000)]
    pub rounds: usize,
    /// Largest odd majority size.
    #[arg(long, default_value_t = 5)]
    pub k_max: usize,
}

#[derive(Debug, Args)]
pub struct DoubleLimitArgs {
    #[arg(long)]
    pub kernel: String,
    /// Sequence a_n, one point per line.
    #[arg(long)]
    pub x: PathBuf,
    /// Sequence b_m, one point per line.
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct UniformArgs {
    /// JSON manifest: {"instances": [{"table": path, "targets": path | [...]}]}.
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub k_max: usize,
}

#[derive(Debug, Subcommand)]
pub enum KernelCommand {
    /// Parse an expression and report its canonical form.
    Parse { expr: String },
    /// Print the canonical form of an expression.
    Print { expr: String },
    /// Sample a table from a kernel and two point files.
    Sample {
        expr: String,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// Write the sampled table as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Entry point used by the binary. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let echo = command_echo(&args);
    match execute(&cli, echo) {
        Ok(Output::Report(report)) => match emit(&cli, &report) {
            Ok(()) => 0,
            Err(e) => fail(&e),
        },
        Ok(Output::Text(text)) => {
            print!("{text}");
            0
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    if e.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_NUMERIC
    }
}

/// Arguments after the program name, without the report destination.
fn command_echo(args: &[std::ffi::OsString]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = it.next() {
        if a == "--json" {
            it.next();
        } else if !a.starts_with("--json=") {
            out.push(a);
        }
    }
    out
}

fn emit(cli: &Cli, report: &AnalysisReport) -> Result<()> {
    let text = report.to_json();
    match &cli.json_out {
        Some(path) => {
            std::fs::write(path, text).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            if !cli.quiet {
                println!("report written to {}", path.display());
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}

pub enum Output {
    Report(AnalysisReport),
    Text(String),
}

pub fn execute(cli: &Cli, echo: Vec<String>) -> Result<Output> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::Numeric(format!("cannot start worker pool: {e}")))?;
    let mut rb = ReportBuilder::new(echo, cli.seed);
    pool.install(|| match &cli.command {
        Command::Analyze(a) => analyze(a, cli.seed, &mut rb).map(|_| Output::Report(rb.finish())),
        Command::Define(a) => define(a, &mut rb).map(|_| Output::Report(rb.finish())),
        Command::Doublelimit(a) => doublelimit(a, &mut rb).map(|_| Output::Report(rb.finish())),
        Command::Uniform(a) => uniform(a, &mut rb).map(|_| Output::Report(rb.finish())),
        Command::Kernel(KernelCommand::Print { expr }) => {
            Ok(Output::Text(format!("{}\n", kernel::parse(expr)?)))
        }
        Command::Kernel(k) => kernel_cmd(k, &mut rb).map(|_| Output::Report(rb.finish())),
    })
}

fn read(path: &Path, rb: &mut ReportBuilder) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    rb.input(text.as_bytes());
    Ok(text)
}

fn load_points(path: &Path, rb: &mut ReportBuilder) -> Result<PointSet> {
    PointSet::parse_csv(&read(path, rb)?)
}

fn load_table(src: &TableSource, rb: &mut ReportBuilder) -> Result<(FormulaTable, &'static str)> {
    if let Some(expr) = &src.kernel {
        rb.input(expr.as_bytes());
        let e = kernel::parse(expr)?;
        let xs = load_points(src.x.as_deref().expect("clap requires --x"), rb)?;
        let ys = load_points(src.y.as_deref().expect("clap requires --y"), rb)?;
        let t = rb.timed("sample", || sample_table(&e, &xs, &ys))?;
        return Ok((t, "kernel"));
    }
    if let Some(path) = &src.group {
        let text = read(path, rb)?;
        let g: GroupFunction = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        return Ok((FormulaTable::from_group(&g)?, "group"));
    }
    match &src.table {
        Some(path) => Ok((FormulaTable::parse_csv(&read(path, rb)?)?, "csv")),
        None => Err(Error::validation(
            "no table given: pass a CSV file, --kernel with --x/--y, or --group",
        )),
    }
}

fn table_summary(t: &FormulaTable, source: &str) -> serde_json::Value {
    json!({ "source": source, "rows": t.n_rows(), "cols": t.n_cols(), "boolean": t.is_boolean() })
}

fn analyze(a: &AnalyzeArgs, seed: u64, rb: &mut ReportBuilder) -> Result<()> {
    let (t, source) = load_table(&a.source, rb)?;
    rb.section("table", table_summary(&t, source));

    let min_dim = t.n_rows().min(t.n_cols());
    let threshold = a
        .exhaustive_max
        .unwrap_or(if t.is_boolean() && a.margin == 1.0 {
            12
        } else {
            8
        });
    let ladder = if min_dim <= threshold {
        rb.timed("ladder", || -> Result<_> {
            let index = ladder_index(&t, a.margin)?;
            let witness = if index > 0 {
                find_ladder(&t, index, a.margin)?
            } else {
                None
            };
            Ok(json!({
                "index": index,
                "exact": true,
                "margin": a.margin,
                "exhaustive_threshold": threshold,
                "witness": witness,
            }))
        })?
    } else {
        rb.timed("ladder", || -> Result<_> {
            let witness = ladder_lower_bound(&t, a.margin, seed, a.budget)?;
            Ok(json!({
                "index": witness.as_ref().map_or(0, |l| l.len()),
                "exact": false,
                "margin": a.margin,
                "exhaustive_threshold": threshold,
                "budget": a.budget,
                "witness": witness,
            }))
        })?
    };
    rb.section("ladder", ladder);

    let types = rb.timed("types", || realized_types(&t, a.type_tol))?;
    rb.section(
        "types",
        json!({
            "tolerance": a.type_tol,
            "count": types.len(),
            "representatives": types.iter().map(|t| t.representative).collect::<Vec<_>>(),
            "multiplicities": types.iter().map(|t| t.multiplicity()).collect::<Vec<_>>(),
        }),
    );

    let density = rb.timed("density", || {
        a.eps
            .iter()
            .map(|&e| density_character(&t, e))
            .collect::<Result<Vec<_>>>()
    })?;
    rb.section("density", density);
    Ok(())
}

#[derive(Serialize)]
struct ConvexOutcome {
    definition: Definition,
    verified: bool,
    error: f64,
}

#[derive(Serialize)]
struct TargetOutcome {
    target: TargetSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    lp: Option<ConvexOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    greedy: Option<ConvexOutcome>,
    /// `Some(None)` when no majority rule of size <= k_max exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    majority: Option<Option<Definition>>,
}

fn define(a: &DefineArgs, rb: &mut ReportBuilder) -> Result<()> {
    use rayon::prelude::*;

    let (t, source) = load_table(&a.source, rb)?;
    rb.section("table", table_summary(&t, source));
    if a.mode == Mode::Majority && !t.is_boolean() {
        return Err(Error::validation("majority mode needs a Boolean table"));
    }

    let mut targets = a
        .targets
        .iter()
        .map(|s| TargetSpec::parse(s))
        .collect::<Result<Vec<_>>>()?;
    if let Some(path) = &a.target_file {
        let text = read(path, rb)?;
        let parsed =
            serde_json::from_str::<serde_json::Value>(&text).map_err(|e| Error::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        match parsed {
            serde_json::Value::Array(items) if items.iter().all(|v| !v.is_number()) => {
                for v in items {
                    targets.push(
                        serde_json::from_value(v).map_err(|e| Error::validation(e.to_string()))?,
                    );
                }
            }
            v => targets
                .push(serde_json::from_value(v).map_err(|e| Error::validation(e.to_string()))?),
        }
    }
    if targets.is_empty() {
        targets = realized_types(&t, 0.0)?
            .iter()
            .map(|ty| TargetSpec::Row {
                row: ty.representative,
            })
            .collect();
    }
    for target in &targets {
        target.resolve(&t)?;
    }

    let all: Vec<usize> = (0..t.n_rows()).collect();
    let run_lp = matches!(a.mode, Mode::Lp | Mode::All);
    let run_greedy = matches!(a.mode, Mode::Greedy | Mode::All);
    let run_majority = a.mode == Mode::Majority || (a.mode == Mode::All && t.is_boolean());
    let convex =
        |d: crate::define::ConvexDefinition, target: &TargetSpec| -> Result<ConvexOutcome> {
            let def = Definition::Convex(d);
            let v = verify_definition(&t, &def, target, a.tol)?;
            Ok(ConvexOutcome {
                definition: def,
                verified: v.ok,
                error: v.error,
            })
        };
    let outcomes = rb.timed("define", || {
        targets
            .par_iter()
            .map(|target| {
                Ok(TargetOutcome {
                    target: target.clone(),
                    lp: run_lp
                        .then(|| convex(lp_define(&t, target, &all)?, target))
                        .transpose()?,
                    greedy: run_greedy
                        .then(|| convex(greedy_define(&t, target, a.rounds)?, target))
                        .transpose()?,
                    majority: run_majority
                        .then(|| {
                            majority_define(&t, target, a.k_max)
                                .map(|m| m.map(Definition::Majority))
                        })
                        .transpose()?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    rb.section(
        "define",
        json!({
            "mode": a.mode,
            "tolerance": a.tol,
            "rounds": a.rounds,
            "k_max": a.k_max,
            "targets": outcomes,
        }),
    );
    Ok(())
}

fn doublelimit(a: &DoubleLimitArgs, rb: &mut ReportBuilder) -> Result<()> {
    rb.input(a.kernel.as_bytes());
    let e: KernelExpr = kernel::parse(&a.kernel)?;
    let xs = load_points(&a.x, rb)?;
    let ys = load_points(&a.y, rb)?;
    let report = rb.timed("doublelimit", || {
        double_limit(&e, &xs, &ys, a.window, a.tol)
    })?;
    rb.section("kernel", e.to_string());
    rb.section("doublelimit", report);
    Ok(())
}

#[derive(Deserialize)]
struct Manifest {
    instances: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
struct ManifestEntry {
    table: PathBuf,
    targets: ManifestTargets,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ManifestTargets {
    File(PathBuf),
    Inline(Vec<TargetSpec>),
}

fn uniform(a: &UniformArgs, rb: &mut ReportBuilder) -> Result<()> {
    let text = read(&a.manifest, rb)?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let base = a.manifest.parent().unwrap_or(Path::new("."));
    let mut instances = Vec::with_capacity(manifest.instances.len());
    for entry in &manifest.instances {
        let table = FormulaTable::parse_csv(&read(&base.join(&entry.table), rb)?)?;
        let targets = match &entry.targets {
            ManifestTargets::Inline(ts) => ts.clone(),
            ManifestTargets::File(p) => {
                let path = base.join(p);
                rb.input(&std::fs::read(&path).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?);
                TargetSpec::load_json(&path)?
            }
        };
        instances.push(Instance { table, targets });
    }
    let bound = rb.timed("uniform", || uniform_majority_bound(&instances, a.k_max))?;
    rb.section(
        "uniform",
        json!({
            "k_max": a.k_max,
            "k": bound.k.map_or(json!("none"), |k| json!(k)),
            "per_target": bound.per_target,
            "failing": bound.failing.map(|(i, j)| json!({
                "instance": i,
                "table": manifest.instances[i].table,
                "target": j,
            })),
        }),
    );
    Ok(())
}

fn kernel_cmd(k: &KernelCommand, rb: &mut ReportBuilder) -> Result<()> {
    match k {
        KernelCommand::Parse { expr } => {
            rb.input(expr.as_bytes());
            let e = kernel::parse(expr)?;
            let (dx, dy) = e.required_dims();
            rb.section(
                "kernel",
                json!({ "canonical": e.to_string(), "min_dim_x": dx, "min_dim_y": dy }),
            );
        }
        KernelCommand::Sample { expr, x, y, out } => {
            rb.input(expr.as_bytes());
            let e = kernel::parse(expr)?;
            let xs = load_points(x, rb)?;
            let ys = load_points(y, rb)?;
            let t = rb.timed("sample", || sample_table(&e, &xs, &ys))?;
            if let Some(path) = out {
                std::fs::write(path, t.to_csv()).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?;
            }
            rb.section("kernel", json!({ "canonical": e.to_string() }));
            rb.section("table", table_summary(&t, "kernel"));
            rb.section("values", t.rows().collect::<Vec<_>>());
        }
        KernelCommand::Print { .. } => unreachable!("handled without a report"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_drops_report_path() {
        let args: Vec<std::ffi::OsString> = [
            "stabdef", "analyze", "t.csv", "--json", "out.json", "--margin", "0.5", "--json=x",
        ]
        .iter()
        .map(Into::into)
        .collect();
        assert_eq!(
            command_echo(&args),
            vec!["analyze", "t.csv", "--margin", "0.5"]
        );
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(main_with_args(["stabdef", "bogus"]), EXIT_USAGE);
        assert_eq!(
            main_with_args(["stabdef", "analyze", "--margin"]),
            EXIT_USAGE
        );
    }
}
