//! Reference transducers for digit-level tasks.
//!
//! Every machine reads one token and writes one token per step, in a single
//! left-to-right pass. While the input is in its leading (non-delimiter)
//! part a machine answers with delimiters; once delimiters arrive it writes
//! the continuation. Numeric machines also check every observed input token
//! against the value they expect, so a stream that does not follow the rule
//! is rejected rather than silently continued.

mod counter;
mod pushdown;
mod queue;

use std::fmt;

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::digitstream::{Alphabet, DigitTask, Token};

pub use counter::{build_counter_transducer, CounterTransducer};
pub use pushdown::{build_bounded_reverse_fsm, build_reverse_pda, BoundedReverseFsm, ReversePda};
pub use queue::{build_queue_transducer, QueueKind, QueueTransducer};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("term needs more than {capacity} digit registers")]
    RegisterOverflow { capacity: usize },
    #[error("pop from an empty stack")]
    StackUnderflow,
    #[error("more than {capacity} symbols for a bounded machine")]
    CapacityExceeded { capacity: usize },
    #[error("malformed stream: {0}")]
    MalformedStream(String),
    #[error("token {token} outside the base-{base} alphabet")]
    InvalidToken { token: Token, base: u32 },
    #[error("invalid machine parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown task kind `{0}`")]
    UnknownKind(String),
}

/// A machine error together with the input offset where it occurred.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at token {position}: {error}")]
pub struct RunError {
    pub position: usize,
    #[source]
    pub error: MachineError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MachineClass {
    Finite,
    Pushdown,
    Queue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Grammar {
    Regular,
    ContextFree,
    ContextSensitive,
}

impl fmt::Display for MachineClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MachineClass::Finite => "finite",
            MachineClass::Pushdown => "pushdown",
            MachineClass::Queue => "queue",
        })
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Grammar::Regular => "regular",
            Grammar::ContextFree => "context-free",
            Grammar::ContextSensitive => "context-sensitive",
        })
    }
}

/// Storage accounting for a machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StorageReport {
    /// Storage cells fixed at construction (finite machines), if any.
    pub fixed_cells: Option<usize>,
    /// Largest stack/queue length reached since the last reset.
    pub high_water: usize,
    /// Upper bound on the equivalent finite-state count (finite machines).
    pub state_bound: Option<BigUint>,
}

pub trait Transducer {
    fn class(&self) -> MachineClass;
    fn alphabet(&self) -> Alphabet;
    /// Returns the machine to its initial configuration.
    fn reset(&mut self);
    fn step(&mut self, token: Token) -> Result<Token, MachineError>;
    fn storage(&self) -> StorageReport;
}

/// Resets `machine` and runs it over `input`, one output token per input token.
pub fn run_transducer<M: Transducer + ?Sized>(machine: &mut M, input: &[Token]) -> Result<Vec<Token>, RunError> {
    machine.reset();
    let alphabet = machine.alphabet();
    input
        .iter()
        .enumerate()
        .map(|(position, &tok)| {
            if !alphabet.contains(tok) {
                return Err(RunError {
                    position,
                    error: MachineError::InvalidToken {
                        token: tok,
                        base: alphabet.base,
                    },
                });
            }
            machine.step(tok).map_err(|error| RunError { position, error })
        })
        .collect()
}

/// Input phase shared by all machines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Phase {
    Read,
    Emit,
}

impl Phase {
    /// Advances the phase on `token`; non-delimiters after a delimiter are rejected.
    pub(crate) fn advance(&mut self, token: Token, alphabet: Alphabet) -> Result<(), MachineError> {
        let is_delim = token == alphabet.delimiter();
        match (*self, is_delim) {
            (Phase::Read, true) => *self = Phase::Emit,
            (Phase::Emit, false) => {
                return Err(MachineError::MalformedStream(
                    "symbol after the delimiter block".into(),
                ))
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub class: MachineClass,
    pub grammar: Grammar,
}

pub fn classify(task: &DigitTask) -> Classification {
    let (class, grammar) = match task {
        DigitTask::FixedDifference { .. } => (MachineClass::Finite, Grammar::Regular),
        DigitTask::Reverse => (MachineClass::Pushdown, Grammar::ContextFree),
        DigitTask::Arithmetic | DigitTask::Fibonacci | DigitTask::Geometric { .. } => {
            (MachineClass::Queue, Grammar::ContextSensitive)
        }
    };
    Classification { class, grammar }
}

/// Classifies a task by catalog name (`fib-digit`) or kind name (`fibonacci`).
pub fn classify_task(kind: &str) -> Result<Classification, MachineError> {
    if let Some(entry) = crate::digitstream::find_digit_entry(kind) {
        return Ok(classify(&entry.task));
    }
    let task = match kind {
        "fixed_difference" | "fixed-difference" => DigitTask::FixedDifference { difference: 1 },
        "arithmetic" => DigitTask::Arithmetic,
        "fibonacci" => DigitTask::Fibonacci,
        "geometric" => DigitTask::Geometric {
            ratio_num: 13,
            ratio_den: 10,
        },
        "reverse" | "reverse_order" => DigitTask::Reverse,
        _ => return Err(MachineError::UnknownKind(kind.to_string())),
    };
    Ok(classify(&task))
}

/// Builds the reference machine for a digit-level task.
///
/// `max_digits` sizes the counter registers for fixed-difference tasks.
pub fn oracle_for(task: &DigitTask, base: u32, max_digits: usize) -> Result<Box<dyn Transducer>, MachineError> {
    Ok(match *task {
        DigitTask::FixedDifference { difference } => {
            Box::new(build_counter_transducer(difference, base, max_digits)?)
        }
        DigitTask::Reverse => Box::new(build_reverse_pda(base)),
        DigitTask::Arithmetic => Box::new(build_queue_transducer(QueueKind::Arithmetic, base)?),
        DigitTask::Fibonacci => Box::new(build_queue_transducer(QueueKind::Fibonacci, base)?),
        DigitTask::Geometric { ratio_num, ratio_den } => Box::new(build_queue_transducer(
            QueueKind::Geometric {
                num: ratio_num,
                den: ratio_den,
            },
            base,
        )?),
    })
}

pub(crate) fn to_digit(token: Token) -> u8 {
    token as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_order() {
        assert!(MachineClass::Finite < MachineClass::Pushdown);
        assert!(MachineClass::Pushdown < MachineClass::Queue);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_task("fixed_difference").unwrap().grammar, Grammar::Regular);
        assert_eq!(classify_task("reverse").unwrap().grammar, Grammar::ContextFree);
        assert_eq!(classify_task("fibonacci").unwrap().grammar, Grammar::ContextSensitive);
        assert_eq!(classify_task("fib-digit").unwrap().class, MachineClass::Queue);
        assert_eq!(classify_task("geometric").unwrap().class, MachineClass::Queue);
        assert_eq!(classify_task("arithmetic").unwrap().class, MachineClass::Queue);
        assert!(matches!(classify_task("fib-number"), Err(MachineError::UnknownKind(_))));
    }

    #[test]
    fn empty_input_gives_empty_output() {
        let mut pda = build_reverse_pda(10);
        assert_eq!(run_transducer(&mut pda, &[]).unwrap(), Vec::<Token>::new());
        let mut q = build_queue_transducer(QueueKind::Fibonacci, 10).unwrap();
        assert!(run_transducer(&mut q, &[]).unwrap().is_empty());
    }

    #[test]
    fn tokens_outside_alphabet_are_rejected() {
        let mut pda = build_reverse_pda(10);
        let err = run_transducer(&mut pda, &[1, 12]).unwrap_err();
        assert_eq!(err.position, 1);
        assert_eq!(err.error, MachineError::InvalidToken { token: 12, base: 10 });
    }
}
