use std::collections::VecDeque;

use super::{to_digit, MachineClass, MachineError, Phase, StorageReport, Transducer};
use crate::digitstream::{Alphabet, Token};

const MAX_TRACKS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueKind {
    /// `A_n = 2 A_{n-1} - A_{n-2}`
    Arithmetic,
    /// `A_n = A_{n-1} + A_{n-2}`
    Fibonacci,
    /// `A_n = floor(num * A_{n-1} / den)`; only `den == base` is supported.
    Geometric { num: u64, den: u64 },
}

/// One queue symbol: a multi-track digit column, or the end-of-round marker.
///
/// Track `k-1` holds the newest term, track 0 the oldest retained one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Item {
    Cell([u8; MAX_TRACKS]),
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rule {
    /// `c_1` first, as in the recurrence notation
    Linear { coefficients: [i64; MAX_TRACKS], order: usize },
    Scale { num: u64 },
}

impl Rule {
    fn tracks(&self) -> usize {
        match self {
            Rule::Linear { order, .. } => *order,
            Rule::Scale { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Reading initial term `term`; `end_owed` is set once the round marker
    /// has been consumed because the term is longer than the earlier ones.
    Boot { term: usize, end_owed: bool, digits: usize },
    Generate { need_round: bool },
}

/// Queue transducer for rules that need the previous term(s) in full.
///
/// The queue holds one column per digit position of the retained terms
/// followed by an `End` marker. Starting a new term runs one round over the
/// queue: each column is dequeued, the new digit is computed with a carry
/// register, and the shifted column is enqueued. Writing (or checking) the
/// term then rotates the queue one column per token.
#[derive(Debug, Clone)]
pub struct QueueTransducer {
    alphabet: Alphabet,
    rule: Rule,
    queue: VecDeque<Item>,
    mode: Mode,
    phase: Phase,
    term_len: usize,
    cursor: usize,
    high_water: usize,
}

pub fn build_queue_transducer(kind: QueueKind, base: u32) -> Result<QueueTransducer, MachineError> {
    if !(2..=36).contains(&base) {
        return Err(MachineError::InvalidParameter(format!("base {base} outside [2, 36]")));
    }
    let linear = |cs: &[i64]| {
        let mut coefficients = [0; MAX_TRACKS];
        coefficients[..cs.len()].copy_from_slice(cs);
        Rule::Linear {
            coefficients,
            order: cs.len(),
        }
    };
    let rule = match kind {
        QueueKind::Arithmetic => linear(&[2, -1]),
        QueueKind::Fibonacci => linear(&[1, 1]),
        QueueKind::Geometric { num, den } => {
            if den != base as u64 || num == 0 {
                return Err(MachineError::InvalidParameter(format!(
                    "geometric ratio {num}/{den} needs a positive numerator and den == base ({base})"
                )));
            }
            Rule::Scale { num }
        }
    };
    let mut machine = QueueTransducer {
        alphabet: Alphabet::new(base),
        rule,
        queue: VecDeque::new(),
        mode: Mode::Boot {
            term: 0,
            end_owed: true,
            digits: 0,
        },
        phase: Phase::Read,
        term_len: 0,
        cursor: 0,
        high_water: 0,
    };
    machine.reset();
    Ok(machine)
}

impl QueueTransducer {
    fn push(&mut self, item: Item) {
        self.queue.push_back(item);
        self.high_water = self.high_water.max(self.queue.len());
    }

    fn pop(&mut self) -> Item {
        self.queue.pop_front().expect("queue always holds an End marker")
    }

    fn shifted(&self, column: [u8; MAX_TRACKS], digit: u8) -> Item {
        let k = self.rule.tracks();
        let mut next = [0; MAX_TRACKS];
        next[..k - 1].copy_from_slice(&column[1..k]);
        next[k - 1] = digit;
        Item::Cell(next)
    }

    fn boot_digit(&mut self, term: usize, end_owed: &mut bool, digit: u8) {
        let mut fresh = [0; MAX_TRACKS];
        fresh[term] = digit;
        if *end_owed {
            self.push(Item::Cell(fresh));
            return;
        }
        match self.pop() {
            Item::Cell(mut column) => {
                column[term] = digit;
                self.push(Item::Cell(column));
            }
            Item::End => {
                *end_owed = true;
                self.push(Item::Cell(fresh));
            }
        }
    }

    /// Moves the rest of the current round (through `End`) to the back.
    fn finish_round(&mut self) {
        loop {
            let item = self.pop();
            self.push(item);
            if item == Item::End {
                break;
            }
        }
    }

    /// Replaces the retained columns with those of the next term.
    fn run_round(&mut self) -> Result<(), MachineError> {
        let base = self.alphabet.base as i64;
        let mut carry: i64 = 0;
        let mut written = 0;
        let mut last_nonzero = 0;
        let mut dropped_low_digit = false;
        loop {
            let column = match self.pop() {
                Item::Cell(column) => column,
                Item::End => break,
            };
            let value = match self.rule {
                Rule::Linear { coefficients, order } => {
                    (0..order)
                        .map(|j| coefficients[j] * column[order - 1 - j] as i64)
                        .sum::<i64>()
                        + carry
                }
                Rule::Scale { num } => num as i64 * column[0] as i64 + carry,
            };
            let digit = value.rem_euclid(base) as u8;
            carry = value.div_euclid(base);
            if matches!(self.rule, Rule::Scale { .. }) && !dropped_low_digit {
                // dividing by the base drops the least significant product digit
                dropped_low_digit = true;
                continue;
            }
            let item = self.shifted(column, digit);
            self.push(item);
            written += 1;
            if digit != 0 {
                last_nonzero = written;
            }
        }
        if carry < 0 {
            return Err(MachineError::MalformedStream("sequence would go negative".into()));
        }
        while carry > 0 {
            let digit = (carry % base) as u8;
            carry /= base;
            if matches!(self.rule, Rule::Scale { .. }) && !dropped_low_digit {
                dropped_low_digit = true;
                continue;
            }
            let item = self.shifted([0; MAX_TRACKS], digit);
            self.push(item);
            written += 1;
            if digit != 0 {
                last_nonzero = written;
            }
        }
        if written == 0 {
            let item = self.shifted([0; MAX_TRACKS], 0);
            self.push(item);
        }
        self.push(Item::End);
        self.term_len = last_nonzero.max(1);
        self.cursor = 0;
        Ok(())
    }

    /// Digit at the cursor of the current term, rotating its column.
    fn next_digit(&mut self) -> Token {
        let k = self.rule.tracks();
        match self.pop() {
            Item::Cell(column) => {
                self.push(Item::Cell(column));
                column[k - 1] as Token
            }
            Item::End => unreachable!("term_len never exceeds the round length"),
        }
    }

    pub fn high_water(&self) -> usize {
        self.high_water
    }
}

impl Transducer for QueueTransducer {
    fn class(&self) -> MachineClass {
        MachineClass::Queue
    }

    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn reset(&mut self) {
        self.queue.clear();
        self.mode = Mode::Boot {
            term: 0,
            end_owed: true,
            digits: 0,
        };
        self.phase = Phase::Read;
        self.term_len = 0;
        self.cursor = 0;
        self.high_water = 0;
    }

    fn step(&mut self, token: Token) -> Result<Token, MachineError> {
        let alphabet = self.alphabet;
        self.phase.advance(token, alphabet)?;
        let delim = alphabet.delimiter();

        match self.mode {
            Mode::Boot {
                term,
                mut end_owed,
                digits,
            } => {
                if self.phase == Phase::Emit {
                    return Err(MachineError::MalformedStream(
                        "delimiters before the retained terms were read".into(),
                    ));
                }
                if alphabet.is_digit(token) {
                    self.boot_digit(term, &mut end_owed, to_digit(token));
                    self.mode = Mode::Boot {
                        term,
                        end_owed,
                        digits: digits + 1,
                    };
                } else {
                    if digits == 0 {
                        return Err(MachineError::MalformedStream("empty term".into()));
                    }
                    if !end_owed {
                        self.finish_round();
                    } else {
                        self.push(Item::End);
                    }
                    self.mode = if term + 1 == self.rule.tracks() {
                        Mode::Generate { need_round: true }
                    } else {
                        Mode::Boot {
                            term: term + 1,
                            end_owed: false,
                            digits: 0,
                        }
                    };
                }
                Ok(delim)
            }
            Mode::Generate { need_round } => {
                if need_round {
                    self.run_round()?;
                }
                let expected = if self.cursor < self.term_len {
                    self.next_digit()
                } else {
                    alphabet.blank()
                };
                if self.phase == Phase::Read && token != expected {
                    return Err(MachineError::MalformedStream(format!(
                        "expected {expected}, read {token}"
                    )));
                }
                if expected == alphabet.blank() {
                    self.finish_round();
                    self.mode = Mode::Generate { need_round: true };
                } else {
                    self.cursor += 1;
                    self.mode = Mode::Generate { need_round: false };
                }
                Ok(match self.phase {
                    Phase::Read => delim,
                    Phase::Emit => expected,
                })
            }
        }
    }

    fn storage(&self) -> StorageReport {
        StorageReport {
            fixed_cells: None,
            high_water: self.high_water,
            state_bound: None,
        }
    }
}
