use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::{MachineClass, MachineError, Phase, StorageReport, Transducer};
use crate::digitstream::{Alphabet, Token};

/// Pushdown transducer for the reverse-order task: pushes digits while
/// reading, pops one digit per delimiter afterwards. Exact for every length.
#[derive(Debug, Clone)]
pub struct ReversePda {
    alphabet: Alphabet,
    stack: Vec<Token>,
    high_water: usize,
    phase: Phase,
}

pub fn build_reverse_pda(base: u32) -> ReversePda {
    ReversePda {
        alphabet: Alphabet::new(base),
        stack: Vec::new(),
        high_water: 0,
        phase: Phase::Read,
    }
}

impl ReversePda {
    pub fn high_water(&self) -> usize {
        self.high_water
    }
}

impl Transducer for ReversePda {
    fn class(&self) -> MachineClass {
        MachineClass::Pushdown
    }

    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn reset(&mut self) {
        self.stack.clear();
        self.high_water = 0;
        self.phase = Phase::Read;
    }

    fn step(&mut self, token: Token) -> Result<Token, MachineError> {
        self.phase.advance(token, self.alphabet)?;
        match self.phase {
            Phase::Read => {
                if !self.alphabet.is_digit(token) {
                    return Err(MachineError::MalformedStream("blank in a reverse-order input".into()));
                }
                self.stack.push(token);
                self.high_water = self.high_water.max(self.stack.len());
                Ok(self.alphabet.delimiter())
            }
            Phase::Emit => self.stack.pop().ok_or(MachineError::StackUnderflow),
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

/// Finite-state reverser for inputs of at most `max_len` digits. The buffer
/// is part of the finite control, giving `2 * sum_{j<=M} b^j` states.
#[derive(Debug, Clone)]
pub struct BoundedReverseFsm {
    inner: ReversePda,
    max_len: usize,
}

pub fn build_bounded_reverse_fsm(base: u32, max_len: usize) -> BoundedReverseFsm {
    BoundedReverseFsm {
        inner: build_reverse_pda(base),
        max_len,
    }
}

impl BoundedReverseFsm {
    pub fn state_count(&self) -> BigUint {
        let b = BigUint::from(self.inner.alphabet.base);
        let mut total = BigUint::zero();
        let mut power = BigUint::one();
        for _ in 0..=self.max_len {
            total += &power;
            power *= &b;
        }
        total * 2u32
    }
}

impl Transducer for BoundedReverseFsm {
    fn class(&self) -> MachineClass {
        MachineClass::Finite
    }

    fn alphabet(&self) -> Alphabet {
        self.inner.alphabet
    }

    fn reset(&mut self) {
        self.inner.reset();
    }

    fn step(&mut self, token: Token) -> Result<Token, MachineError> {
        if self.inner.phase == Phase::Read
            && self.inner.alphabet.is_digit(token)
            && self.inner.stack.len() == self.max_len
        {
            return Err(MachineError::CapacityExceeded { capacity: self.max_len });
        }
        self.inner.step(token)
    }

    fn storage(&self) -> StorageReport {
        StorageReport {
            fixed_cells: Some(self.max_len),
            high_water: self.inner.high_water,
            state_bound: Some(self.state_count()),
        }
    }
}
