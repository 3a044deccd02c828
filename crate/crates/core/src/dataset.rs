//! JSON-lines dataset and prediction files, and catalog-driven generation.
//!
//! A dataset file is a header line followed by one line per instance.
//! Number-level grids are stored row-major (`n*l` input cells, `s*l` target
//! cells); digit-level instances store the full `n+s` token sequences.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digitstream::{find_digit_entry, make_digit_instance, DigitCatalogEntry, DigitTask, StreamConfig, StreamError, BLANK_CONVENTION};
use crate::numgrid::{find_catalog_entry, make_number_grid_instance, GridConfig, GridError, RuleCatalogEntry};
use crate::sequence::{SeedContext, SequenceRule, SplitRole, SplitSpec};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Number,
    Digit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub format_version: u32,
    pub task: String,
    pub level: Level,
    pub base: u32,
    /// Input rows (number level) or leading tokens (digit level); null for reverse.
    pub n: Option<usize>,
    /// Digits per row; null at digit level.
    pub l: Option<usize>,
    pub s: Option<usize>,
    pub split: SplitSpec,
    pub master_seed: u64,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blank_convention: Option<String>,
}

impl DatasetHeader {
    /// Identifier copied into prediction headers.
    pub fn reference(&self) -> String {
        format!(
            "{}:{}:seed={}:count={}",
            self.task, self.split.role, self.master_seed, self.count
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetInstance {
    pub id: u64,
    pub rule: SequenceRule,
    pub initial_terms: Vec<u64>,
    /// Digit count `m` of a reverse instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    pub input: Vec<u32>,
    pub target: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub instances: Vec<DatasetInstance>,
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("missing header line")]
    MissingHeader,
    #[error("unsupported format_version {0}")]
    Version(u32),
    #[error("header declares {declared} instances, found {found}")]
    Count { declared: usize, found: usize },
    #[error("line {line}: expected id {expected}, found {found}")]
    Id { line: usize, expected: u64, found: u64 },
}

fn parse_line<T: for<'de> Deserialize<'de>>(line: &str, lineno: usize) -> Result<T, FormatError> {
    serde_json::from_str(line).map_err(|e| FormatError::Json {
        line: lineno,
        message: e.to_string(),
    })
}

fn write_line<W: Write, T: Serialize>(out: &mut W, value: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")
}

impl Dataset {
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write_line(&mut out, &self.header)?;
        for inst in &self.instances {
            write_line(&mut out, inst)?;
        }
        out.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        buf
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self, FormatError> {
        let mut lines = reader.lines().enumerate();
        let header: DatasetHeader = match lines.next() {
            Some((_, line)) => parse_line(&line?, 1)?,
            None => return Err(FormatError::MissingHeader),
        };
        if header.format_version != FORMAT_VERSION {
            return Err(FormatError::Version(header.format_version));
        }
        let mut instances = Vec::with_capacity(header.count);
        for (i, line) in lines {
            let line = line?;
            let inst: DatasetInstance = parse_line(&line, i + 1)?;
            let expected = instances.len() as u64;
            if inst.id != expected {
                return Err(FormatError::Id {
                    line: i + 1,
                    expected,
                    found: inst.id,
                });
            }
            instances.push(inst);
        }
        if instances.len() != header.count {
            return Err(FormatError::Count {
                declared: header.count,
                found: instances.len(),
            });
        }
        Ok(Dataset { header, instances })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMode {
    Tokens,
    Probs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionHeader {
    pub dataset_ref: String,
    pub mode: PredictionMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PredictionValues {
    Tokens(Vec<u32>),
    Probs(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionLine {
    pub id: u64,
    pub values: PredictionValues,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub header: PredictionHeader,
    pub lines: Vec<PredictionLine>,
}

impl PredictionSet {
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write_line(&mut out, &self.header)?;
        for line in &self.lines {
            write_line(&mut out, line)?;
        }
        out.flush()
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self, FormatError> {
        let mut lines = reader.lines().enumerate();
        let header: PredictionHeader = match lines.next() {
            Some((_, line)) => parse_line(&line?, 1)?,
            None => return Err(FormatError::MissingHeader),
        };
        let mut out = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(parse_line(&line, i + 1)?);
        }
        Ok(PredictionSet { header, lines: out })
    }
}

/// A task name resolved against the two catalogs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CatalogTask {
    Number(RuleCatalogEntry),
    Digit(DigitCatalogEntry),
}

impl CatalogTask {
    pub fn resolve(name: &str) -> Option<Self> {
        find_catalog_entry(name)
            .map(CatalogTask::Number)
            .or_else(|| find_digit_entry(name).map(CatalogTask::Digit))
    }

    pub fn name(&self) -> &'static str {
        match self {
            CatalogTask::Number(e) => e.name,
            CatalogTask::Digit(e) => e.name,
        }
    }

    pub fn split(&self, role: SplitRole) -> SplitSpec {
        match self {
            CatalogTask::Number(e) => e.split(role),
            CatalogTask::Digit(e) => e.split(role),
        }
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Stream(#[from] StreamError),
}

impl GenerateError {
    pub fn is_unsatisfiable(&self) -> bool {
        matches!(
            self,
            GenerateError::Grid(GridError::Unsatisfiable { .. }) | GenerateError::Stream(StreamError::Unsatisfiable { .. })
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerateOptions {
    pub task: String,
    pub role: SplitRole,
    pub count: usize,
    pub master_seed: u64,
    pub n: Option<usize>,
    pub l: Option<usize>,
    pub s: Option<usize>,
    pub base: Option<u32>,
}

impl GenerateOptions {
    pub fn new(task: &str, role: SplitRole, count: usize, master_seed: u64) -> Self {
        GenerateOptions {
            task: task.to_string(),
            role,
            count,
            master_seed,
            n: None,
            l: None,
            s: None,
            base: None,
        }
    }
}

/// Generates `count` instances; instance `i` draws from keystream `i`.
pub fn generate_dataset(opts: &GenerateOptions) -> Result<Dataset, GenerateError> {
    let task = CatalogTask::resolve(&opts.task).ok_or_else(|| GenerateError::UnknownTask(opts.task.clone()))?;
    let split = task.split(opts.role);
    let seed = |i: usize| SeedContext::new(opts.master_seed, i as u64);
    match task {
        CatalogTask::Number(entry) => {
            let mut config: GridConfig = entry.default_config(opts.base);
            config.n = opts.n.unwrap_or(config.n);
            config.l = opts.l.unwrap_or(config.l);
            config.s = opts.s.unwrap_or(config.s);
            config.validate(entry.rule.order())?;
            let instances = (0..opts.count)
                .map(|i| {
                    let g = make_number_grid_instance(&entry, &config, &split, &seed(i))?;
                    Ok(DatasetInstance {
                        id: i as u64,
                        rule: g.rule,
                        initial_terms: g.initial_terms.iter().map(term_u64).collect(),
                        length: None,
                        input: g.input.concat(),
                        target: g.target.concat(),
                    })
                })
                .collect::<Result<Vec<_>, GenerateError>>()?;
            Ok(Dataset {
                header: DatasetHeader {
                    format_version: FORMAT_VERSION,
                    task: entry.name.to_string(),
                    level: Level::Number,
                    base: config.base,
                    n: Some(config.n),
                    l: Some(config.l),
                    s: Some(config.s),
                    split,
                    master_seed: opts.master_seed,
                    count: opts.count,
                    blank_convention: None,
                },
                instances,
            })
        }
        CatalogTask::Digit(entry) => {
            if opts.l.is_some() {
                return Err(GenerateError::InvalidOption("digit-level tasks have no row width".into()));
            }
            let reverse = entry.task == DigitTask::Reverse;
            if reverse && (opts.n.is_some() || opts.s.is_some()) {
                return Err(GenerateError::InvalidOption(
                    "reverse lengths come from the split range, not --n/--s".into(),
                ));
            }
            let defaults = StreamConfig::default();
            let config = StreamConfig {
                n: opts.n.unwrap_or(defaults.n),
                s: opts.s.unwrap_or(defaults.s),
                base: opts.base.unwrap_or(defaults.base),
            };
            let instances = (0..opts.count)
                .map(|i| {
                    let d = make_digit_instance(&entry.task, &config, &split, &seed(i))?;
                    Ok(DatasetInstance {
                        id: i as u64,
                        rule: d.task.rule(),
                        initial_terms: d.initial_terms.iter().map(term_u64).collect(),
                        length: reverse.then_some(d.n),
                        input: d.input,
                        target: d.target,
                    })
                })
                .collect::<Result<Vec<_>, GenerateError>>()?;
            Ok(Dataset {
                header: DatasetHeader {
                    format_version: FORMAT_VERSION,
                    task: entry.name.to_string(),
                    level: Level::Digit,
                    base: config.base,
                    n: (!reverse).then_some(config.n),
                    l: None,
                    s: (!reverse).then_some(config.s),
                    split,
                    master_seed: opts.master_seed,
                    count: opts.count,
                    blank_convention: Some(BLANK_CONVENTION.to_string()),
                },
                instances,
            })
        }
    }
}

fn term_u64(t: &crate::sequence::Term) -> u64 {
    // initial terms are drawn from u64 split ranges
    u64::try_from(t).expect("initial term fits in u64")
}
