//! Exact term generation for sequence rules, little-endian digit codecs and
//! seeded sampling of initial terms.
//!
//! All arithmetic is done on arbitrary-precision integers. Terms are
//! non-negative; a rule that would produce a negative term reports
//! [`SequenceError::NegativeTerm`] and the caller resamples.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A sequence term. Always non-negative.
pub type Term = BigUint;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequenceError {
    #[error("term {index} would be negative")]
    NegativeTerm { index: usize },
    #[error("rule needs {expected} initial terms, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("requested {count} terms but {initial} initial terms were given")]
    CountTooSmall { count: usize, initial: usize },
    #[error("rule `{0}` does not generate numeric terms")]
    NotNumeric(String),
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("base {0} outside [2, 36]")]
    InvalidBase(u32),
    #[error("term needs more than {width} base-{base} digits")]
    Overflow { base: u32, width: usize },
    #[error("empty sampling range [{lower}, {upper})")]
    EmptyRange { lower: u64, upper: u64 },
}

/// Generation rule of a sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceRule {
    /// `A_n = c_1 A_{n-1} + ... + c_k A_{n-k}`; `coefficients[0]` is `c_1`.
    LinearRecurrence { coefficients: Vec<i64> },
    /// `A_n = A_{n-1} + difference`.
    FixedDifference { difference: i64 },
    /// `A_n = floor(A_{n-1} * ratio_num / ratio_den)`.
    RoundedGeometric { ratio_num: u64, ratio_den: u64 },
    /// Reverse-order task; carries no numeric parameters.
    ReverseOrder,
}

impl SequenceRule {
    pub fn linear(coefficients: &[i64]) -> Self {
        SequenceRule::LinearRecurrence {
            coefficients: coefficients.to_vec(),
        }
    }

    /// Number of initial terms the rule consumes (0 for reverse-order).
    pub fn order(&self) -> usize {
        match self {
            SequenceRule::LinearRecurrence { coefficients } => coefficients.len(),
            SequenceRule::FixedDifference { .. } | SequenceRule::RoundedGeometric { .. } => 1,
            SequenceRule::ReverseOrder => 0,
        }
    }

    pub fn validate(&self) -> Result<(), SequenceError> {
        match self {
            SequenceRule::LinearRecurrence { coefficients } if coefficients.is_empty() => Err(
                SequenceError::InvalidRule("linear recurrence needs order >= 1".into()),
            ),
            SequenceRule::RoundedGeometric { ratio_num, ratio_den }
                if *ratio_den == 0 || *ratio_num == 0 =>
            {
                Err(SequenceError::InvalidRule(
                    "geometric ratio must have positive numerator and denominator".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SequenceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceRule::LinearRecurrence { coefficients } => {
                let cs: Vec<String> = coefficients.iter().map(|c| c.to_string()).collect();
                write!(f, "linear({})", cs.join(","))
            }
            SequenceRule::FixedDifference { difference } => write!(f, "fixed_difference({difference})"),
            SequenceRule::RoundedGeometric { ratio_num, ratio_den } => {
                write!(f, "rounded_geometric({ratio_num}/{ratio_den})")
            }
            SequenceRule::ReverseOrder => write!(f, "reverse_order"),
        }
    }
}

/// Lazily evaluated terms of a rule, starting with the initial terms.
///
/// Yields `Err(NegativeTerm)` once and then stops if a term goes negative.
#[derive(Debug, Clone)]
pub struct Terms {
    rule: SequenceRule,
    // most recent `order` terms, oldest first
    window: Vec<BigInt>,
    pending_initial: usize,
    index: usize,
    failed: bool,
}

impl Terms {
    pub fn new(rule: &SequenceRule, initial_terms: &[Term]) -> Result<Self, SequenceError> {
        rule.validate()?;
        if matches!(rule, SequenceRule::ReverseOrder) {
            return Err(SequenceError::NotNumeric(rule.to_string()));
        }
        let expected = rule.order();
        if initial_terms.len() != expected {
            return Err(SequenceError::ArityMismatch {
                expected,
                got: initial_terms.len(),
            });
        }
        Ok(Terms {
            rule: rule.clone(),
            window: initial_terms.iter().map(|t| BigInt::from(t.clone())).collect(),
            pending_initial: expected,
            index: 0,
            failed: false,
        })
    }

    fn next_value(&self) -> BigInt {
        match &self.rule {
            SequenceRule::LinearRecurrence { coefficients } => {
                // window is oldest first; c_1 multiplies the newest term
                coefficients
                    .iter()
                    .zip(self.window.iter().rev())
                    .map(|(c, t)| BigInt::from(*c) * t)
                    .sum()
            }
            SequenceRule::FixedDifference { difference } => &self.window[0] + BigInt::from(*difference),
            SequenceRule::RoundedGeometric { ratio_num, ratio_den } => {
                // terms are non-negative, so truncating division is floor
                &self.window[0] * BigInt::from(*ratio_num) / BigInt::from(*ratio_den)
            }
            SequenceRule::ReverseOrder => unreachable!("rejected in Terms::new"),
        }
    }
}

impl Iterator for Terms {
    type Item = Result<Term, SequenceError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let index = self.index;
        self.index += 1;
        if self.pending_initial > 0 {
            let pos = self.window.len() - self.pending_initial;
            self.pending_initial -= 1;
            return Some(Ok(self.window[pos].to_biguint().expect("initial terms are non-negative")));
        }
        let value = self.next_value();
        if value.sign() == Sign::Minus {
            self.failed = true;
            return Some(Err(SequenceError::NegativeTerm { index }));
        }
        self.window.remove(0);
        let term = value.to_biguint().expect("checked sign");
        self.window.push(value);
        Some(Ok(term))
    }
}

/// Returns exactly `count` terms, the first `order` of which are `initial_terms`.
pub fn eval_recurrence(
    rule: &SequenceRule,
    initial_terms: &[Term],
    count: usize,
) -> Result<Vec<Term>, SequenceError> {
    let terms = Terms::new(rule, initial_terms)?;
    if count < initial_terms.len() {
        return Err(SequenceError::CountTooSmall {
            count,
            initial: initial_terms.len(),
        });
    }
    terms.take(count).collect()
}

fn check_base(base: u32) -> Result<(), SequenceError> {
    if (2..=36).contains(&base) {
        Ok(())
    } else {
        Err(SequenceError::InvalidBase(base))
    }
}

/// Minimal little-endian digit expansion; zero is `[0]`.
pub fn digits_le_minimal(term: &Term, base: u32) -> Result<Vec<u32>, SequenceError> {
    check_base(base)?;
    Ok(term.to_radix_le(base).into_iter().map(u32::from).collect())
}

/// Exactly `width` little-endian digits, zero-padded at the high end.
pub fn digits_le(term: &Term, base: u32, width: usize) -> Result<Vec<u32>, SequenceError> {
    let mut digits = digits_le_minimal(term, base)?;
    if term.is_zero() {
        digits.clear();
    }
    if digits.len() > width {
        return Err(SequenceError::Overflow { base, width });
    }
    digits.resize(width, 0);
    Ok(digits)
}

/// Positional value of little-endian digits.
pub fn from_digits_le(digits: &[u32], base: u32) -> Term {
    digits
        .iter()
        .rev()
        .fold(Term::zero(), |acc, &d| acc * base + d)
}

/// Whether a term fits in `width` base-`base` digits.
pub fn fits_width(term: &Term, base: u32, width: usize) -> bool {
    term.bits() == 0 || term < &num_traits::pow(BigUint::from(base), width)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRole {
    Train,
    Validation,
}

impl fmt::Display for SplitRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitRole::Train => f.write_str("train"),
            SplitRole::Validation => f.write_str("validation"),
        }
    }
}

/// Half-open sampling range `[lower, upper)` for initial terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplitSpec {
    pub role: SplitRole,
    pub lower: u64,
    pub upper: u64,
}

impl SplitSpec {
    pub fn new(role: SplitRole, lower: u64, upper: u64) -> Self {
        SplitSpec { role, lower, upper }
    }

    pub fn contains(&self, value: u64) -> bool {
        self.lower <= value && value < self.upper
    }

    pub fn contains_term(&self, term: &Term) -> bool {
        term.to_u64().is_some_and(|v| self.contains(v))
    }

    pub fn is_empty(&self) -> bool {
        self.lower >= self.upper
    }

    pub fn overlaps(&self, other: &SplitSpec) -> bool {
        !self.is_empty() && !other.is_empty() && self.lower < other.upper && other.lower < self.upper
    }
}

/// Seed material for one generated instance.
///
/// The ChaCha8 key is derived from `master_seed` and `stream_id` selects an
/// independent keystream, so instances can be generated in any order or in
/// parallel with identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedContext {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedContext {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        SeedContext {
            master_seed,
            stream_id,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Draws `arity` terms independently and uniformly from the split range.
pub fn sample_initial_terms(
    split: &SplitSpec,
    arity: usize,
    seed: &SeedContext,
) -> Result<Vec<Term>, SequenceError> {
    sample_initial_terms_with(&mut seed.rng(), split, arity)
}

pub(crate) fn sample_initial_terms_with<R: Rng + ?Sized>(
    rng: &mut R,
    split: &SplitSpec,
    arity: usize,
) -> Result<Vec<Term>, SequenceError> {
    if split.is_empty() {
        return Err(SequenceError::EmptyRange {
            lower: split.lower,
            upper: split.upper,
        });
    }
    Ok((0..arity)
        .map(|_| Term::from(rng.gen_range(split.lower..split.upper)))
        .collect())
}
