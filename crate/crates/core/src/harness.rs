//! Scoring and split checks.
//!
//! Number-level instances are scored on all `s*l` target cells. Digit-level
//! instances are scored on the tokens after the `n` leading delimiters; the
//! leading part of a prediction is checked and reported but not counted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use num_integer::Integer;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetInstance, Level, PredictionMode, PredictionSet, PredictionValues};
use crate::sequence::{SplitRole, SplitSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("empty probability vector")]
    EmptyVector,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("predictions missing for ids {0:?}")]
    MissingPredictions(Vec<u64>),
    #[error("missing metadata: {0}")]
    MissingMetadata(String),
}

impl HarnessError {
    /// Errors that mean the predictions do not line up with the dataset.
    pub fn is_shape_error(&self) -> bool {
        matches!(self, HarnessError::ShapeMismatch(_) | HarnessError::MissingPredictions(_))
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_decode(values: &[f64]) -> Result<usize, HarnessError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if !v.is_nan() && best.map_or(true, |(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    match best {
        Some((i, _)) => Ok(i),
        None if values.is_empty() => Err(HarnessError::EmptyVector),
        // all NaN
        None => Ok(0),
    }
}

/// How an instance is laid out for scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    /// Target grid of `s` rows by `l` digits.
    NumberLevel { l: usize, s: usize },
    /// `n` leading delimiters followed by `s` scored tokens.
    DigitLevel { n: usize, s: usize },
}

impl TaskKind {
    pub fn scored(&self) -> usize {
        match *self {
            TaskKind::NumberLevel { l, s } => l * s,
            TaskKind::DigitLevel { s, .. } => s,
        }
    }

    fn target_len(&self) -> usize {
        match *self {
            TaskKind::NumberLevel { l, s } => l * s,
            TaskKind::DigitLevel { n, s } => n + s,
        }
    }

    fn position(&self, offset: usize) -> Position {
        match *self {
            TaskKind::NumberLevel { l, .. } => Position::Cell {
                row: offset / l,
                digit: offset % l,
            },
            TaskKind::DigitLevel { .. } => Position::Token(offset),
        }
    }
}

/// Location of a scored prediction: a target-grid cell, or a token offset
/// from the start of the scored region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Position {
    Cell { row: usize, digit: usize },
    Token(usize),
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Cell { row, digit } => write!(f, "{row},{digit}"),
            Position::Token(t) => write!(f, "{t}"),
        }
    }
}

impl Serialize for Position {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `wrong / total` kept as integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorRate {
    pub wrong: u64,
    pub total: u64,
}

impl ErrorRate {
    /// The ratio in lowest terms; `0/0` is reported as `0/1`.
    pub fn reduced(&self) -> (u64, u64) {
        if self.total == 0 {
            return (0, 1);
        }
        let g = self.wrong.gcd(&self.total);
        (self.wrong / g, self.total / g)
    }

    pub fn value(&self) -> f64 {
        let (n, d) = self.reduced();
        n as f64 / d as f64
    }
}

impl fmt::Display for ErrorRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = self.reduced();
        write!(f, "{n}/{d} ({:.6})", self.value())
    }
}

impl Serialize for ErrorRate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let (n, d) = self.reduced();
        let mut st = s.serialize_struct("ErrorRate", 3)?;
        st.serialize_field("numerator", &n)?;
        st.serialize_field("denominator", &d)?;
        st.serialize_field("decimal", &format!("{:.6}", self.value()))?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceResult {
    pub id: u64,
    pub total: u64,
    pub wrong: u64,
    /// Leading positions of a digit-level prediction that are not delimiters.
    #[serde(skip_serializing_if = "is_zero")]
    pub leading_mismatches: u64,
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EvalReport {
    pub total_predictions: u64,
    pub wrong_predictions: u64,
    /// Error counts by position; positions without errors are absent.
    pub positions: BTreeMap<Position, u64>,
    /// Scored predictions per position.
    #[serde(skip)]
    pub position_totals: BTreeMap<Position, u64>,
    pub instances: Vec<InstanceResult>,
}

impl EvalReport {
    pub fn error_rate(&self) -> ErrorRate {
        ErrorRate {
            wrong: self.wrong_predictions,
            total: self.total_predictions,
        }
    }

    /// Scores one decoded prediction against its target.
    pub fn add(&mut self, id: u64, prediction: &[u32], target: &[u32], kind: TaskKind) -> Result<(), HarnessError> {
        let expected = kind.target_len();
        if target.len() != expected || prediction.len() != expected {
            return Err(HarnessError::ShapeMismatch(format!(
                "instance {id}: expected {expected} values, target has {}, prediction has {}",
                target.len(),
                prediction.len()
            )));
        }
        let (lead, scored_from) = match kind {
            TaskKind::NumberLevel { .. } => (0, 0),
            TaskKind::DigitLevel { n, .. } => {
                let delim = target.first().copied();
                let lead = prediction[..n].iter().filter(|&&p| Some(p) != delim).count() as u64;
                (lead, n)
            }
        };
        let mut wrong = 0;
        for (offset, (p, t)) in prediction[scored_from..].iter().zip(&target[scored_from..]).enumerate() {
            let pos = kind.position(offset);
            *self.position_totals.entry(pos).or_default() += 1;
            if p != t {
                wrong += 1;
                *self.positions.entry(pos).or_default() += 1;
            }
        }
        let total = kind.scored() as u64;
        self.total_predictions += total;
        self.wrong_predictions += wrong;
        self.instances.push(InstanceResult {
            id,
            total,
            wrong,
            leading_mismatches: lead,
        });
        Ok(())
    }

    /// Combines two reports over disjoint instances.
    pub fn merge(mut self, other: EvalReport) -> EvalReport {
        self.total_predictions += other.total_predictions;
        self.wrong_predictions += other.wrong_predictions;
        for (k, v) in other.positions {
            *self.positions.entry(k).or_default() += v;
        }
        for (k, v) in other.position_totals {
            *self.position_totals.entry(k).or_default() += v;
        }
        self.instances.extend(other.instances);
        self.instances.sort_by_key(|i| i.id);
        self
    }
}

/// Scores aligned predictions and targets that share one layout.
pub fn error_rate(predictions: &[Vec<u32>], targets: &[Vec<u32>], kind: TaskKind) -> Result<EvalReport, HarnessError> {
    if predictions.len() != targets.len() {
        return Err(HarnessError::ShapeMismatch(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    let mut report = EvalReport::default();
    for (i, (p, t)) in predictions.iter().zip(targets).enumerate() {
        report.add(i as u64, p, t, kind)?;
    }
    Ok(report)
}

/// Per-position error counts of a report.
pub fn position_breakdown(report: &EvalReport) -> BTreeMap<Position, u64> {
    report.positions.clone()
}

/// Text view of the error map: one line per target row with the error
/// count of each digit (least significant first), `.` for none.
pub fn render_breakdown(report: &EvalReport) -> String {
    let mut out = String::new();
    let cells: Vec<(usize, usize)> = report
        .position_totals
        .keys()
        .filter_map(|p| match *p {
            Position::Cell { row, digit } => Some((row, digit)),
            Position::Token(_) => None,
        })
        .collect();
    let count = |pos: &Position| report.positions.get(pos).copied().unwrap_or(0);
    let mark = |c: u64| if c == 0 { ".".to_string() } else { c.to_string() };
    if !cells.is_empty() {
        let rows = cells.iter().map(|c| c.0).max().unwrap_or(0) + 1;
        let digits = cells.iter().map(|c| c.1).max().unwrap_or(0) + 1;
        let width = report.positions.values().map(|c| c.to_string().len()).max().unwrap_or(1);
        for row in 0..rows {
            let line: Vec<String> = (0..digits)
                .map(|digit| format!("{:>width$}", mark(count(&Position::Cell { row, digit }))))
                .collect();
            let _ = writeln!(out, "row {row}: {}", line.join(" "));
        }
    } else {
        let tokens = report.position_totals.len();
        let width = report.positions.values().map(|c| c.to_string().len()).max().unwrap_or(1);
        let line: Vec<String> = (0..tokens)
            .map(|t| format!("{:>width$}", mark(count(&Position::Token(t)))))
            .collect();
        let _ = writeln!(out, "tokens: {}", line.join(" "));
    }
    out
}

/// Layout of a dataset instance.
pub fn instance_kind(dataset: &Dataset, inst: &DatasetInstance) -> Result<TaskKind, HarnessError> {
    let h = &dataset.header;
    let missing = |what: &str| HarnessError::MissingMetadata(format!("{what} in header of {}", h.task));
    match h.level {
        Level::Number => Ok(TaskKind::NumberLevel {
            l: h.l.ok_or_else(|| missing("l"))?,
            s: h.s.ok_or_else(|| missing("s"))?,
        }),
        Level::Digit => match (h.n, h.s, inst.length) {
            (Some(n), Some(s), _) => Ok(TaskKind::DigitLevel { n, s }),
            (_, _, Some(m)) => Ok(TaskKind::DigitLevel { n: m, s: m }),
            _ => Err(HarnessError::MissingMetadata(format!("length of instance {}", inst.id))),
        },
    }
}

/// Decodes a prediction line to one symbol per position.
fn decode_values(values: &PredictionValues, mode: PredictionMode, channels: usize, id: u64) -> Result<Vec<u32>, HarnessError> {
    match (values, mode) {
        (PredictionValues::Tokens(t), PredictionMode::Tokens) => Ok(t.clone()),
        (PredictionValues::Probs(rows), PredictionMode::Probs) => rows
            .iter()
            .map(|v| {
                if v.len() != channels {
                    return Err(HarnessError::ShapeMismatch(format!(
                        "instance {id}: probability vector of length {}, expected {channels}",
                        v.len()
                    )));
                }
                argmax_decode(v).map(|i| i as u32)
            })
            .collect(),
        // an empty list parses as tokens
        (PredictionValues::Tokens(t), PredictionMode::Probs) if t.is_empty() => Ok(Vec::new()),
        _ => Err(HarnessError::ShapeMismatch(format!(
            "instance {id}: values do not match mode {mode:?}"
        ))),
    }
}

/// Scores a prediction file against a dataset. Every dataset id needs
/// exactly one prediction.
pub fn evaluate(dataset: &Dataset, predictions: &PredictionSet) -> Result<EvalReport, HarnessError> {
    let channels = match dataset.header.level {
        Level::Number => dataset.header.base as usize,
        Level::Digit => dataset.header.base as usize + 2,
    };
    let mut by_id: BTreeMap<u64, &PredictionValues> = BTreeMap::new();
    for line in &predictions.lines {
        if line.id >= dataset.instances.len() as u64 {
            return Err(HarnessError::ShapeMismatch(format!("unknown id {}", line.id)));
        }
        if by_id.insert(line.id, &line.values).is_some() {
            return Err(HarnessError::ShapeMismatch(format!("duplicate id {}", line.id)));
        }
    }
    let missing: Vec<u64> = dataset
        .instances
        .iter()
        .map(|i| i.id)
        .filter(|id| !by_id.contains_key(id))
        .collect();
    if !missing.is_empty() {
        return Err(HarnessError::MissingPredictions(missing));
    }
    let mut report = EvalReport::default();
    for inst in &dataset.instances {
        let kind = instance_kind(dataset, inst)?;
        let decoded = decode_values(by_id[&inst.id], predictions.header.mode, channels, inst.id)?;
        report.add(inst.id, &decoded, &inst.target, kind)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Declared train and validation ranges intersect.
    OverlappingRanges { train: SplitSpec, validation: SplitSpec },
    /// The header range differs from the declared one for its role.
    HeaderRange { declared: SplitSpec, header: SplitSpec },
    /// An instance's initial term (or reverse length) lies outside the range.
    OutOfRange { id: u64, value: u64, split: SplitSpec },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let range = |s: &SplitSpec| format!("{} [{}, {})", s.role, s.lower, s.upper);
        match self {
            Violation::OverlappingRanges { train, validation } => {
                write!(f, "ranges overlap: {} and {}", range(train), range(validation))
            }
            Violation::HeaderRange { declared, header } => {
                write!(f, "header range {} differs from declared {}", range(header), range(declared))
            }
            Violation::OutOfRange { id, value, split } => {
                write!(f, "instance {id}: {value} outside {}", range(split))
            }
        }
    }
}

/// Checks every instance against the declared range of the dataset's role
/// and the declared ranges against each other.
///
/// Numeric tasks check initial terms; reverse instances check their length.
pub fn check_split(dataset: &Dataset, train: &SplitSpec, validation: &SplitSpec) -> Result<Vec<Violation>, HarnessError> {
    let mut violations = Vec::new();
    if train.overlaps(validation) {
        violations.push(Violation::OverlappingRanges {
            train: *train,
            validation: *validation,
        });
    }
    let declared = match dataset.header.split.role {
        SplitRole::Train => train,
        SplitRole::Validation => validation,
    };
    if dataset.header.split != *declared {
        violations.push(Violation::HeaderRange {
            declared: *declared,
            header: dataset.header.split,
        });
    }
    let mut seen = BTreeSet::new();
    for inst in &dataset.instances {
        let values: Vec<u64> = match inst.length {
            Some(m) => vec![m as u64],
            None if inst.initial_terms.is_empty() => {
                return Err(HarnessError::MissingMetadata(format!("initial terms of instance {}", inst.id)))
            }
            None => inst.initial_terms.clone(),
        };
        for value in values {
            if !declared.contains(value) && seen.insert((inst.id, value)) {
                violations.push(Violation::OutOfRange {
                    id: inst.id,
                    value,
                    split: *declared,
                });
            }
        }
    }
    Ok(violations)
}
