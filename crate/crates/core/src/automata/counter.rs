use num_bigint::BigUint;

use super::{to_digit, MachineClass, MachineError, Phase, StorageReport, Transducer};
use crate::digitstream::{Alphabet, Token};

/// Bounded-register machine for fixed-difference streams.
///
/// Storage is `L` digit registers holding the term being read or written,
/// a digit cursor, and the phase. When a new term starts the registers are
/// advanced by the difference in one carry-propagating sweep. The storage is
/// fixed at construction, so the machine is a finite-state device with at
/// most `b^L * (L + 1) * 4` control states.
#[derive(Debug, Clone)]
pub struct CounterTransducer {
    alphabet: Alphabet,
    difference: Vec<u8>,
    registers: Vec<u8>,
    term_len: usize,
    cursor: usize,
    booting: bool,
    need_advance: bool,
    phase: Phase,
}

pub fn build_counter_transducer(difference: i64, base: u32, max_digits: usize) -> Result<CounterTransducer, MachineError> {
    if difference < 1 {
        return Err(MachineError::InvalidParameter(format!(
            "counter difference must be >= 1, got {difference}"
        )));
    }
    if !(2..=36).contains(&base) || max_digits == 0 {
        return Err(MachineError::InvalidParameter(format!(
            "base {base} with {max_digits} registers"
        )));
    }
    let difference: Vec<u8> = BigUint::from(difference as u64)
        .to_radix_le(base)
        .into_iter()
        .collect();
    if difference.len() > max_digits {
        return Err(MachineError::RegisterOverflow { capacity: max_digits });
    }
    let mut machine = CounterTransducer {
        alphabet: Alphabet::new(base),
        difference,
        registers: vec![0; max_digits],
        term_len: 0,
        cursor: 0,
        booting: true,
        need_advance: false,
        phase: Phase::Read,
    };
    machine.reset();
    Ok(machine)
}

impl CounterTransducer {
    pub fn capacity(&self) -> usize {
        self.registers.len()
    }

    /// Register count in the one-hot view: `L * b`.
    pub fn register_count(&self) -> usize {
        self.registers.len() * self.alphabet.base as usize
    }

    fn advance(&mut self) -> Result<(), MachineError> {
        let base = self.alphabet.base;
        let mut carry = 0u32;
        let mut last_nonzero = 0;
        for i in 0..self.registers.len() {
            let d = self.difference.get(i).copied().unwrap_or(0) as u32;
            let v = self.registers[i] as u32 + d + carry;
            self.registers[i] = (v % base) as u8;
            carry = v / base;
            if self.registers[i] != 0 {
                last_nonzero = i + 1;
            }
        }
        if carry != 0 {
            return Err(MachineError::RegisterOverflow {
                capacity: self.registers.len(),
            });
        }
        self.term_len = last_nonzero.max(1);
        self.cursor = 0;
        Ok(())
    }
}

impl Transducer for CounterTransducer {
    fn class(&self) -> MachineClass {
        MachineClass::Finite
    }

    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn reset(&mut self) {
        self.registers.iter_mut().for_each(|r| *r = 0);
        self.term_len = 0;
        self.cursor = 0;
        self.booting = true;
        self.need_advance = false;
        self.phase = Phase::Read;
    }

    fn step(&mut self, token: Token) -> Result<Token, MachineError> {
        let alphabet = self.alphabet;
        self.phase.advance(token, alphabet)?;
        let delim = alphabet.delimiter();

        if self.booting {
            if self.phase == Phase::Emit {
                return Err(MachineError::MalformedStream(
                    "delimiters before the first complete term".into(),
                ));
            }
            if alphabet.is_digit(token) {
                if self.cursor >= self.registers.len() {
                    return Err(MachineError::RegisterOverflow {
                        capacity: self.registers.len(),
                    });
                }
                self.registers[self.cursor] = to_digit(token);
                self.cursor += 1;
            } else {
                if self.cursor == 0 {
                    return Err(MachineError::MalformedStream("empty term".into()));
                }
                self.booting = false;
                self.need_advance = true;
            }
            return Ok(delim);
        }

        if self.need_advance {
            self.advance()?;
            self.need_advance = false;
        }
        let expected = if self.cursor < self.term_len {
            self.registers[self.cursor] as Token
        } else {
            alphabet.blank()
        };
        if self.phase == Phase::Read && token != expected {
            return Err(MachineError::MalformedStream(format!(
                "expected {expected}, read {token}"
            )));
        }
        if expected == alphabet.blank() {
            self.need_advance = true;
        } else {
            self.cursor += 1;
        }
        Ok(match self.phase {
            Phase::Read => delim,
            Phase::Emit => expected,
        })
    }

    fn storage(&self) -> StorageReport {
        let l = self.registers.len();
        let bound = num_traits::pow(BigUint::from(self.alphabet.base), l) * BigUint::from((l + 1) * 4);
        StorageReport {
            fixed_cells: Some(l),
            high_water: l,
            state_bound: Some(bound),
        }
    }
}
