//! Digit-level task instances over the alphabet `{0..b-1, blank = b, delimiter = b+1}`.
//!
//! A numeric stream is the little-endian minimal expansion of each term
//! followed by one blank. The first `n` tokens form the input, followed by
//! `s` delimiters; the target is `n` delimiters followed by the next `s`
//! stream tokens. `n` counts tokens, so the cut can fall inside a term.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sequence::{
    digits_le_minimal, sample_initial_terms_with, SeedContext, SequenceError, SequenceRule,
    SplitRole, SplitSpec, Term, Terms,
};

pub type Token = u32;

/// Blank placement convention recorded in dataset headers.
pub const BLANK_CONVENTION: &str = "separator-after";

pub const MAX_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StreamError {
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error("invalid stream configuration: {0}")]
    InvalidConfig(String),
    #[error("split {got:?} does not match the declared {role} range of `{task}`")]
    SplitMismatch {
        task: String,
        role: SplitRole,
        got: SplitSpec,
    },
    #[error("no representable instance after {attempts} attempts")]
    Unsatisfiable { attempts: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Alphabet {
    pub base: u32,
}

impl Alphabet {
    pub fn new(base: u32) -> Self {
        Alphabet { base }
    }

    pub fn blank(&self) -> Token {
        self.base
    }

    pub fn delimiter(&self) -> Token {
        self.base + 1
    }

    pub fn size(&self) -> usize {
        self.base as usize + 2
    }

    pub fn is_digit(&self, token: Token) -> bool {
        token < self.base
    }

    pub fn contains(&self, token: Token) -> bool {
        token <= self.delimiter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DigitTask {
    FixedDifference { difference: i64 },
    Arithmetic,
    Fibonacci,
    Geometric { ratio_num: u64, ratio_den: u64 },
    Reverse,
}

impl DigitTask {
    pub fn rule(&self) -> SequenceRule {
        match *self {
            DigitTask::FixedDifference { difference } => SequenceRule::FixedDifference { difference },
            DigitTask::Arithmetic => SequenceRule::linear(&[2, -1]),
            DigitTask::Fibonacci => SequenceRule::linear(&[1, 1]),
            DigitTask::Geometric { ratio_num, ratio_den } => {
                SequenceRule::RoundedGeometric { ratio_num, ratio_den }
            }
            DigitTask::Reverse => SequenceRule::ReverseOrder,
        }
    }
}

impl fmt::Display for DigitTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DigitTask::FixedDifference { difference } => write!(f, "fixed-difference({difference})"),
            DigitTask::Arithmetic => f.write_str("arithmetic"),
            DigitTask::Fibonacci => f.write_str("fibonacci"),
            DigitTask::Geometric { ratio_num, ratio_den } => write!(f, "geometric({ratio_num}/{ratio_den})"),
            DigitTask::Reverse => f.write_str("reverse"),
        }
    }
}

/// A digit-level task with its declared split ranges. For the reverse task
/// the ranges apply to the digit count `m`, not to term values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitCatalogEntry {
    pub name: &'static str,
    pub task: DigitTask,
    pub train: SplitSpec,
    pub validation: SplitSpec,
}

impl DigitCatalogEntry {
    pub fn split(&self, role: SplitRole) -> SplitSpec {
        match role {
            SplitRole::Train => self.train,
            SplitRole::Validation => self.validation,
        }
    }
}

pub fn list_digit_catalog() -> Vec<DigitCatalogEntry> {
    let ranges = |tl, tu, vl, vu| {
        (
            SplitSpec::new(SplitRole::Train, tl, tu),
            SplitSpec::new(SplitRole::Validation, vl, vu),
        )
    };
    let entry = |name, task, (train, validation)| DigitCatalogEntry {
        name,
        task,
        train,
        validation,
    };
    vec![
        entry(
            "fixed-difference-17",
            DigitTask::FixedDifference { difference: 17 },
            ranges(0, 9000, 9000, 9900),
        ),
        entry("arith-digit", DigitTask::Arithmetic, ranges(0, 4000, 4000, 6000)),
        entry("fib-digit", DigitTask::Fibonacci, ranges(0, 4000, 4000, 6000)),
        entry(
            "geometric-digit",
            DigitTask::Geometric {
                ratio_num: 13,
                ratio_den: 10,
            },
            ranges(0, 4000, 4000, 6000),
        ),
        entry("reverse", DigitTask::Reverse, ranges(1, 13, 16, 17)),
    ]
}

pub fn find_digit_entry(name: &str) -> Option<DigitCatalogEntry> {
    list_digit_catalog().into_iter().find(|e| e.name == name)
}

pub fn digit_entry_for(task: &DigitTask) -> Option<DigitCatalogEntry> {
    list_digit_catalog().into_iter().find(|e| e.task == *task)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamConfig {
    /// input tokens before the delimiters
    pub n: usize,
    /// continuation tokens to predict
    pub s: usize,
    pub base: u32,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig { n: 12, s: 12, base: 10 }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<(), StreamError> {
        if self.n == 0 || self.s == 0 {
            return Err(StreamError::InvalidConfig("n and s must be positive".into()));
        }
        if !(2..=36).contains(&self.base) {
            return Err(StreamError::InvalidConfig(format!("base {} outside [2, 36]", self.base)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitInstance {
    pub task: DigitTask,
    pub base: u32,
    /// Leading input tokens (for reverse, the digit count `m`).
    pub n: usize,
    /// Scored continuation tokens (for reverse, also `m`).
    pub s: usize,
    pub initial_terms: Vec<Term>,
    pub input: Vec<Token>,
    pub target: Vec<Token>,
    pub role: Option<SplitRole>,
    pub seed: Option<SeedContext>,
}

impl DigitInstance {
    /// Target tokens that are scored (everything after the leading delimiters).
    pub fn scored_target(&self) -> &[Token] {
        &self.target[self.n..]
    }
}

/// The first `min_length` tokens of the stream of `rule` from `initial_terms`.
pub fn token_stream(
    rule: &SequenceRule,
    initial_terms: &[Term],
    base: u32,
    min_length: usize,
) -> Result<Vec<Token>, StreamError> {
    let alphabet = Alphabet::new(base);
    let mut out = Vec::with_capacity(min_length + 8);
    let mut terms = Terms::new(rule, initial_terms)?;
    while out.len() < min_length {
        let term = terms.next().expect("numeric rules are unbounded")?;
        out.extend(digits_le_minimal(&term, base)?);
        out.push(alphabet.blank());
    }
    out.truncate(min_length);
    Ok(out)
}

/// Splits a stream into input/target halves around `n`.
pub fn frame_stream(stream: &[Token], n: usize, base: u32) -> (Vec<Token>, Vec<Token>) {
    let delim = Alphabet::new(base).delimiter();
    let s = stream.len() - n;
    let mut input = stream[..n].to_vec();
    input.extend(std::iter::repeat(delim).take(s));
    let mut target = vec![delim; n];
    target.extend_from_slice(&stream[n..]);
    (input, target)
}

/// Samples a digit-level instance from the catalog ranges of `task`.
pub fn make_digit_instance(
    task: &DigitTask,
    config: &StreamConfig,
    split: &SplitSpec,
    seed: &SeedContext,
) -> Result<DigitInstance, StreamError> {
    config.validate()?;
    let entry = digit_entry_for(task)
        .ok_or_else(|| StreamError::InvalidConfig(format!("task {task} is not in the catalog")))?;
    if *split != entry.split(split.role) {
        return Err(StreamError::SplitMismatch {
            task: entry.name.to_string(),
            role: split.role,
            got: *split,
        });
    }
    let mut rng = seed.rng();
    if let DigitTask::Reverse = task {
        let m = rng.gen_range(split.lower..split.upper) as usize;
        let mut inst = reverse_with(&mut rng, m, config.base);
        inst.role = Some(split.role);
        inst.seed = Some(*seed);
        return Ok(inst);
    }
    let rule = task.rule();
    let length = config.n + config.s;
    for _ in 0..MAX_RESAMPLES {
        let initial = sample_initial_terms_with(&mut rng, split, rule.order())?;
        let stream = match token_stream(&rule, &initial, config.base, length) {
            Ok(stream) => stream,
            Err(StreamError::Sequence(SequenceError::NegativeTerm { .. })) => continue,
            Err(e) => return Err(e),
        };
        let (input, target) = frame_stream(&stream, config.n, config.base);
        return Ok(DigitInstance {
            task: *task,
            base: config.base,
            n: config.n,
            s: config.s,
            initial_terms: initial,
            input,
            target,
            role: Some(split.role),
            seed: Some(*seed),
        });
    }
    Err(StreamError::Unsatisfiable {
        attempts: MAX_RESAMPLES,
    })
}

/// Reverse-order instance over `m` uniformly random digits.
pub fn make_reverse_instance(m: usize, base: u32, seed: &SeedContext) -> Result<DigitInstance, StreamError> {
    if m == 0 {
        return Err(StreamError::InvalidConfig("reverse length must be at least 1".into()));
    }
    let mut inst = reverse_with(&mut seed.rng(), m, base);
    inst.seed = Some(*seed);
    Ok(inst)
}

fn reverse_with<R: Rng + ?Sized>(rng: &mut R, m: usize, base: u32) -> DigitInstance {
    let digits: Vec<Token> = (0..m).map(|_| rng.gen_range(0..base)).collect();
    reverse_from_digits(&digits, base)
}

pub fn reverse_from_digits(digits: &[Token], base: u32) -> DigitInstance {
    let m = digits.len();
    let mut stream = digits.to_vec();
    stream.extend(digits.iter().rev());
    let (input, target) = frame_stream(&stream, m, base);
    DigitInstance {
        task: DigitTask::Reverse,
        base,
        n: m,
        s: m,
        initial_terms: Vec::new(),
        input,
        target,
        role: None,
        seed: None,
    }
}

/// Decodes the complete terms in a token prefix (a trailing partial term is dropped).
pub fn decode_terms(tokens: &[Token], base: u32) -> Vec<Term> {
    let alphabet = Alphabet::new(base);
    let mut out = Vec::new();
    let mut digits = Vec::new();
    for &tok in tokens {
        if tok == alphabet.blank() {
            out.push(crate::sequence::from_digits_le(&digits, base));
            digits.clear();
        } else if alphabet.is_digit(tok) {
            digits.push(tok);
        } else {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: Token = 10;
    const D: Token = 11;

    fn t(v: u64) -> Term {
        Term::from(v)
    }

    #[test]
    fn arithmetic_stream_prefix() {
        let s = token_stream(&SequenceRule::linear(&[2, -1]), &[t(12), t(15)], 10, 9).unwrap();
        assert_eq!(s, vec![2, 1, B, 5, 1, B, 8, 1, B]);
    }

    #[test]
    fn zero_term_is_one_digit() {
        let rule = SequenceRule::FixedDifference { difference: 0 };
        assert_eq!(token_stream(&rule, &[t(0)], 10, 4).unwrap(), vec![0, B, 0, B]);
    }

    #[test]
    fn geometric_stream() {
        let rule = SequenceRule::RoundedGeometric { ratio_num: 13, ratio_den: 10 };
        assert_eq!(
            token_stream(&rule, &[t(10)], 10, 12).unwrap(),
            vec![0, 1, B, 3, 1, B, 6, 1, B, 0, 2, B]
        );
    }

    #[test]
    fn instance_layout() {
        let task = DigitTask::FixedDifference { difference: 17 };
        let entry = digit_entry_for(&task).unwrap();
        let inst = make_digit_instance(&task, &StreamConfig::default(), &entry.train, &SeedContext::new(5, 1))
            .unwrap();
        assert_eq!(inst.input.len(), 24);
        assert_eq!(inst.target.len(), 24);
        assert!(inst.input[12..].iter().all(|&x| x == D));
        assert!(inst.target[..12].iter().all(|&x| x == D));
        assert!(entry.train.contains_term(&inst.initial_terms[0]));
    }

    #[test]
    fn fibonacci_validation_range() {
        let task = DigitTask::Fibonacci;
        let entry = digit_entry_for(&task).unwrap();
        assert_eq!((entry.validation.lower, entry.validation.upper), (4000, 6000));
        let inst =
            make_digit_instance(&task, &StreamConfig::default(), &entry.validation, &SeedContext::new(0, 0))
                .unwrap();
        assert_eq!(inst.initial_terms.len(), 2);
        assert!(inst.initial_terms.iter().all(|x| entry.validation.contains_term(x)));
    }

    #[test]
    fn reverse_examples() {
        let inst = reverse_from_digits(&[4, 0, 7], 10);
        assert_eq!(inst.input, vec![4, 0, 7, D, D, D]);
        assert_eq!(inst.target, vec![D, D, D, 7, 0, 4]);
        let one = reverse_from_digits(&[5], 10);
        assert_eq!((one.input, one.target), (vec![5, D], vec![D, 5]));
    }

    #[test]
    fn reverse_split_lengths() {
        let entry = find_digit_entry("reverse").unwrap();
        let cfg = StreamConfig::default();
        for id in 0..50 {
            let val = make_digit_instance(&DigitTask::Reverse, &cfg, &entry.validation, &SeedContext::new(2, id))
                .unwrap();
            assert_eq!(val.n, 16);
            let train =
                make_digit_instance(&DigitTask::Reverse, &cfg, &entry.train, &SeedContext::new(2, id)).unwrap();
            assert!((1..=12).contains(&train.n));
        }
        assert!(make_reverse_instance(0, 10, &SeedContext::new(0, 0)).is_err());
    }

    #[test]
    fn split_must_match_catalog() {
        let bad = SplitSpec::new(SplitRole::Train, 0, 10);
        assert!(matches!(
            make_digit_instance(&DigitTask::Arithmetic, &StreamConfig::default(), &bad, &SeedContext::new(0, 0)),
            Err(StreamError::SplitMismatch { .. })
        ));
    }

    #[test]
    fn decode_round_trip() {
        let s = token_stream(&SequenceRule::linear(&[1, 1]), &[t(2), t(3)], 10, 14).unwrap();
        assert_eq!(decode_terms(&s, 10), vec![t(2), t(3), t(5), t(8), t(13), t(21)]);
        assert_eq!(decode_terms(&s[..13], 10).len(), 5);
    }
}
