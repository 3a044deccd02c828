//! Command-line front end.
//!
//! Exit codes: 0 success, 1 i/o or file format error, 2 bad arguments,
//! 3 unsatisfiable generation config, 4 no oracle for the task,
//! 5 predictions do not match the dataset, 6 split violations found.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::automata::{oracle_for, run_transducer};
use crate::dataset::{
    generate_dataset, CatalogTask, Dataset, GenerateOptions, Level, PredictionHeader, PredictionLine, PredictionMode,
    PredictionSet, PredictionValues,
};
use crate::digitstream::{list_digit_catalog, DigitTask};
use crate::harness::{check_split, evaluate, render_breakdown, Violation};
use crate::logicwidth::{
    build_digit_op_table, complexity_search, estimate_width_growth, BinaryCatalog, SearchOptions, WidthError,
};
use crate::numgrid::list_rule_catalog;
use crate::sequence::SplitRole;

pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNSATISFIABLE: i32 = 3;
pub const EXIT_NO_ORACLE: i32 = 4;
pub const EXIT_SHAPE: i32 = 5;
pub const EXIT_SPLIT: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "nsp", version, about = "Number sequence prediction tasks: generate, solve, analyze and score")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset as JSON lines.
    Generate(GenerateArgs),
    /// Run the reference machine over a digit-level dataset.
    Oracle(OracleArgs),
    /// Width growth and decomposition complexity of a linear rule.
    Analyze(AnalyzeArgs),
    /// Score a prediction file against a dataset.
    Evaluate(EvaluateArgs),
    /// Check datasets against the declared split ranges.
    Splitcheck(SplitcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    #[value(alias = "validation")]
    Val,
}

impl From<SplitArg> for SplitRole {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => SplitRole::Train,
            SplitArg::Val => SplitRole::Validation,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Catalog task name, e.g. fib-number or reverse.
    #[arg(long)]
    pub task: String,
    #[arg(long, value_enum)]
    pub split: SplitArg,
    /// Instance count [default: 32 for train, 1024 for val].
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, env = "NSP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub base: Option<u32>,
    /// Output path (standard output if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Recurrence coefficients, most recent term first.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub coeffs: Vec<i64>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
    pub bases: Vec<u32>,
    #[arg(long, default_value_t = 4)]
    pub max_functions: usize,
    /// Coefficient bound of the binary operation catalog.
    #[arg(long, default_value_t = 8)]
    pub bound: i64,
    /// Base of the tables that price each operation in a decomposition.
    #[arg(long, default_value_t = 2)]
    pub width_base: u32,
    /// Give the growth tables a carry-in input.
    #[arg(long)]
    pub carry_in: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub dataset: PathBuf,
    pub predictions: PathBuf,
    /// Include the per-position error map.
    #[arg(long)]
    pub breakdown: bool,
}

#[derive(Debug, Args)]
pub struct SplitcheckArgs {
    /// Dataset files; with none, every catalog task and split is generated and checked.
    pub datasets: Vec<PathBuf>,
    /// Instances per generated dataset.
    #[arg(long, default_value_t = 256)]
    pub count: usize,
    #[arg(long, env = "NSP_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::new(EXIT_IO, e.to_string())
    }
}

type CliResult = Result<(), CliError>;

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Splitcheck(a) => cmd_splitcheck(a),
    }
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    let file = File::open(path).map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", path.display())))?;
    Dataset::read_from(BufReader::new(file)).map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", path.display())))
}

pub fn cmd_generate(a: GenerateArgs) -> CliResult {
    let role: SplitRole = a.split.into();
    let count = a.count.unwrap_or(match role {
        SplitRole::Train => 32,
        SplitRole::Validation => 1024,
    });
    let opts = GenerateOptions {
        task: a.task,
        role,
        count,
        master_seed: a.seed,
        n: a.n,
        l: a.l,
        s: a.s,
        base: a.base,
    };
    let dataset = generate_dataset(&opts).map_err(|e| {
        let code = if e.is_unsatisfiable() { EXIT_UNSATISFIABLE } else { EXIT_USAGE };
        CliError::new(code, e.to_string())
    })?;
    dataset.write_to(output(a.out.as_deref())?)?;
    Ok(())
}

/// Register count for a counter oracle: enough digits for the largest
/// term a stream of `length` tokens can reach from the split range.
fn counter_digits(difference: i64, base: u32, upper: u64, length: usize) -> usize {
    // each term takes at least two tokens
    let largest = upper as u128 + difference.unsigned_abs() as u128 * (length as u128 / 2 + 1);
    let mut digits = 1;
    let mut v = largest / base as u128;
    while v > 0 {
        digits += 1;
        v /= base as u128;
    }
    digits
}

/// Runs the reference machine over every instance of a digit-level dataset.
pub fn oracle_predictions(dataset: &Dataset) -> Result<PredictionSet, CliError> {
    let h = &dataset.header;
    let task = match CatalogTask::resolve(&h.task) {
        Some(CatalogTask::Digit(entry)) if h.level == Level::Digit => entry.task,
        _ => return Err(CliError::new(EXIT_NO_ORACLE, format!("no oracle for task `{}`", h.task))),
    };
    let length = h.n.unwrap_or(0) + h.s.unwrap_or(0);
    let max_digits = match task {
        DigitTask::FixedDifference { difference } => counter_digits(difference, h.base, h.split.upper, length),
        _ => 0,
    };
    let mut machine = oracle_for(&task, h.base, max_digits).map_err(|e| CliError::new(EXIT_NO_ORACLE, e.to_string()))?;
    let lines = dataset
        .instances
        .iter()
        .map(|inst| {
            let values = run_transducer(machine.as_mut(), &inst.input)
                .map_err(|e| CliError::new(EXIT_IO, format!("instance {}: {e}", inst.id)))?;
            Ok(PredictionLine {
                id: inst.id,
                values: PredictionValues::Tokens(values),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(PredictionSet {
        header: PredictionHeader {
            dataset_ref: h.reference(),
            mode: PredictionMode::Tokens,
        },
        lines,
    })
}

pub fn cmd_oracle(a: OracleArgs) -> CliResult {
    let dataset = read_dataset(&a.dataset)?;
    let predictions = oracle_predictions(&dataset)?;
    predictions.write_to(output(a.out.as_deref())?)?;
    Ok(())
}

pub fn cmd_analyze(a: AnalyzeArgs) -> CliResult {
    let usage = |e: WidthError| CliError::new(EXIT_USAGE, e.to_string());
    let (feasible, skipped): (Vec<u32>, Vec<u32>) = a.bases.iter().partition(|&&b| {
        !matches!(
            build_digit_op_table(&a.coeffs, b, a.carry_in),
            Err(WidthError::BudgetExceeded { .. })
        )
    });
    let growth = estimate_width_growth(&a.coeffs, &feasible, a.carry_in).map_err(usage)?;
    let options = SearchOptions {
        max_functions: a.max_functions,
        width_base: a.width_base,
        carry_in: true,
    };
    let complexity = complexity_search(&a.coeffs, &BinaryCatalog::bounded(a.bound), &options).map_err(usage)?;

    let mut err = io::stderr().lock();
    writeln!(err, "coefficients {:?}", a.coeffs)?;
    writeln!(err, "base  input bits  terms")?;
    for p in &growth.points {
        writeln!(err, "{:>4}  {:>10}  {:>5}", p.base, p.input_bits, p.term_count)?;
    }
    if !skipped.is_empty() {
        writeln!(err, "skipped (over the exact budget): {skipped:?}")?;
    }
    writeln!(
        err,
        "log-log slope {:.3}, strictly increasing: {}",
        growth.slope, growth.strictly_increasing
    )?;
    writeln!(
        err,
        "complexity {} difficulty {} plan {}",
        complexity.complexity, complexity.difficulty, complexity.plan.root
    )?;
    writeln!(
        err,
        "chain complexity {} difficulty {} plan {}",
        complexity.chain_complexity, complexity.chain_difficulty, complexity.chain_plan.root
    )?;
    let report = json!({
        "coefficients": a.coeffs,
        "growth": growth,
        "skipped_bases": skipped,
        "complexity": complexity,
    });
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, &report).map_err(|e| CliError::new(EXIT_IO, e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

pub fn cmd_evaluate(a: EvaluateArgs) -> CliResult {
    let dataset = read_dataset(&a.dataset)?;
    let file = File::open(&a.predictions).map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", a.predictions.display())))?;
    let predictions = PredictionSet::read_from(BufReader::new(file))
        .map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", a.predictions.display())))?;
    if predictions.header.dataset_ref != dataset.header.reference() {
        eprintln!(
            "warning: predictions refer to `{}`, dataset is `{}`",
            predictions.header.dataset_ref,
            dataset.header.reference()
        );
    }
    let report = evaluate(&dataset, &predictions).map_err(|e| {
        let code = if e.is_shape_error() { EXIT_SHAPE } else { EXIT_IO };
        CliError::new(code, e.to_string())
    })?;
    let rate = report.error_rate();

    let mut err = io::stderr().lock();
    writeln!(err, "task         {}", dataset.header.task)?;
    writeln!(err, "instances    {}", report.instances.len())?;
    writeln!(err, "predictions  {}", report.total_predictions)?;
    writeln!(err, "wrong        {}", report.wrong_predictions)?;
    writeln!(err, "error rate   {rate}")?;
    if a.breakdown {
        write!(err, "{}", render_breakdown(&report))?;
    }

    let mut value = json!({
        "dataset_ref": dataset.header.reference(),
        "total_predictions": report.total_predictions,
        "wrong_predictions": report.wrong_predictions,
        "error_rate": rate,
        "instances": report.instances,
    });
    if a.breakdown {
        value["positions"] = json!(report.positions);
    }
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, &value).map_err(|e| CliError::new(EXIT_IO, e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

/// Violations of a dataset against the catalog ranges of its task.
pub fn split_violations(dataset: &Dataset) -> Result<Vec<Violation>, CliError> {
    let task = CatalogTask::resolve(&dataset.header.task)
        .ok_or_else(|| CliError::new(EXIT_USAGE, format!("unknown task `{}`", dataset.header.task)))?;
    check_split(
        dataset,
        &task.split(SplitRole::Train),
        &task.split(SplitRole::Validation),
    )
    .map_err(|e| CliError::new(EXIT_IO, e.to_string()))
}

pub fn cmd_splitcheck(a: SplitcheckArgs) -> CliResult {
    let mut checked: Vec<(String, Dataset)> = Vec::new();
    if a.datasets.is_empty() {
        let names = list_rule_catalog()
            .into_iter()
            .map(|e| e.name)
            .chain(list_digit_catalog().into_iter().map(|e| e.name));
        for name in names {
            for role in [SplitRole::Train, SplitRole::Validation] {
                let ds = generate_dataset(&GenerateOptions::new(name, role, a.count, a.seed))
                    .map_err(|e| CliError::new(EXIT_UNSATISFIABLE, format!("{name} {role}: {e}")))?;
                checked.push((format!("{name} {role}"), ds));
            }
        }
    } else {
        for path in &a.datasets {
            checked.push((path.display().to_string(), read_dataset(path)?));
        }
    }
    let mut total = 0;
    let mut out = io::stdout().lock();
    for (label, ds) in &checked {
        let violations = split_violations(ds)?;
        if violations.is_empty() {
            writeln!(out, "{label}: ok ({} instances)", ds.instances.len())?;
        } else {
            writeln!(out, "{label}: {} violations", violations.len())?;
            for v in &violations {
                writeln!(out, "  {v}")?;
            }
        }
        total += violations.len();
    }
    if total > 0 {
        return Err(CliError::new(EXIT_SPLIT, format!("{total} split violations")));
    }
    Ok(())
}
