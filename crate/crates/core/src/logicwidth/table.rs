use std::fmt::Write as _;

use super::WidthError;

/// Largest input width a table may have (2^24 rows).
pub const MAX_TABLE_INPUTS: usize = 24;
/// Input width within which exact minimization is attempted.
pub const EXACT_BUDGET: usize = 16;

/// Multi-output boolean function. Row `r` is the assignment whose variable
/// `i` is bit `i` of `r`; output `j` is bit `j` of the row's output word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    input_bits: usize,
    output_bits: usize,
    on: Vec<u32>,
    dc: Vec<u32>,
    pub encoding: Option<DigitEncoding>,
}

/// How a digit-operation table maps operands and carries to bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitEncoding {
    pub base: u32,
    pub coefficients: Vec<i64>,
    pub bits_per_digit: usize,
    /// Carry-in range and its bit width, if carry-in is an input.
    pub carry_in: Option<CarryRange>,
    pub carry_out: CarryRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CarryRange {
    pub min: i64,
    pub max: i64,
    pub bits: usize,
}

impl CarryRange {
    fn new(min: i64, max: i64) -> Self {
        CarryRange {
            min,
            max,
            bits: bits_for((max - min + 1) as u64),
        }
    }
}

/// Bits needed to encode `count` distinct values.
pub fn bits_for(count: u64) -> usize {
    if count <= 1 {
        0
    } else {
        (64 - (count - 1).leading_zeros()) as usize
    }
}

impl TruthTable {
    /// A table with every output 0 and nothing don't-care.
    pub fn new(input_bits: usize, output_bits: usize) -> Result<Self, WidthError> {
        if input_bits > MAX_TABLE_INPUTS || output_bits == 0 || output_bits > 32 {
            return Err(WidthError::BudgetExceeded {
                input_bits,
                budget: MAX_TABLE_INPUTS,
            });
        }
        let rows = 1usize << input_bits;
        Ok(TruthTable {
            input_bits,
            output_bits,
            on: vec![0; rows],
            dc: vec![0; rows],
            encoding: None,
        })
    }

    /// Single-output table from a predicate over row indices.
    pub fn from_fn(input_bits: usize, f: impl Fn(u32) -> bool) -> Result<Self, WidthError> {
        let mut table = TruthTable::new(input_bits, 1)?;
        for r in 0..table.rows() {
            if f(r as u32) {
                table.on[r] = 1;
            }
        }
        Ok(table)
    }

    pub fn input_bits(&self) -> usize {
        self.input_bits
    }

    pub fn output_bits(&self) -> usize {
        self.output_bits
    }

    pub fn rows(&self) -> usize {
        self.on.len()
    }

    pub fn output_mask(&self) -> u32 {
        if self.output_bits == 32 {
            u32::MAX
        } else {
            (1u32 << self.output_bits) - 1
        }
    }

    /// Outputs that are 1 on row `r`.
    pub fn on(&self, r: usize) -> u32 {
        self.on[r]
    }

    /// Outputs that are don't-care on row `r`.
    pub fn dc(&self, r: usize) -> u32 {
        self.dc[r]
    }

    pub fn set_row(&mut self, r: usize, on: u32, dc: u32) {
        let mask = self.output_mask();
        self.dc[r] = dc & mask;
        self.on[r] = on & mask & !self.dc[r];
    }

    pub fn set_dont_care(&mut self, r: usize, outputs: u32) {
        let dc = self.dc[r] | outputs;
        let on = self.on[r];
        self.set_row(r, on, dc);
    }

    /// Plain-text form: one line per row, `<input bits> <output bits>`,
    /// each field written most significant bit first, `-` for don't-care.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.rows() * (self.input_bits + self.output_bits + 2));
        for r in 0..self.rows() {
            for i in (0..self.input_bits).rev() {
                out.push(if r >> i & 1 == 1 { '1' } else { '0' });
            }
            out.push(' ');
            for j in (0..self.output_bits).rev() {
                let c = if self.dc[r] >> j & 1 == 1 {
                    '-'
                } else if self.on[r] >> j & 1 == 1 {
                    '1'
                } else {
                    '0'
                };
                out.push(c);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, WidthError> {
        let mut table: Option<TruthTable> = None;
        let mut seen: Vec<bool> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| WidthError::Parse(format!("line {}: {msg}", lineno + 1));
            let mut fields = line.split_whitespace();
            let (Some(inputs), Some(outputs), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(bad("expected `<inputs> <outputs>`"));
            };
            let t = match &mut table {
                Some(t) => t,
                None => {
                    let t = TruthTable::new(inputs.len(), outputs.len())?;
                    seen = vec![false; t.rows()];
                    table.insert(t)
                }
            };
            if inputs.len() != t.input_bits || outputs.len() != t.output_bits {
                return Err(bad("row width differs from the first row"));
            }
            let mut r = 0usize;
            for c in inputs.chars() {
                r = (r << 1)
                    | match c {
                        '0' => 0,
                        '1' => 1,
                        _ => return Err(bad("input bits must be 0 or 1")),
                    };
            }
            let (mut on, mut dc) = (0u32, 0u32);
            for c in outputs.chars() {
                on <<= 1;
                dc <<= 1;
                match c {
                    '0' => {}
                    '1' => on |= 1,
                    '-' => dc |= 1,
                    _ => return Err(bad("output bits must be 0, 1 or -")),
                }
            }
            if std::mem::replace(&mut seen[r], true) {
                return Err(bad("duplicate row"));
            }
            t.set_row(r, on, dc);
        }
        let table = table.ok_or_else(|| WidthError::Parse("empty table".into()))?;
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(WidthError::Parse(format!("row {missing} is missing")));
        }
        Ok(table)
    }

    /// Human-readable summary line.
    pub fn describe(&self) -> String {
        let mut s = format!("{} inputs, {} outputs", self.input_bits, self.output_bits);
        if let Some(enc) = &self.encoding {
            let _ = write!(
                s,
                " (coefficients {:?}, base {}, {} bits/digit",
                enc.coefficients, enc.base, enc.bits_per_digit
            );
            if let Some(cin) = enc.carry_in {
                let _ = write!(s, ", carry-in {}..={}", cin.min, cin.max);
            }
            let _ = write!(s, ", carry-out {}..={})", enc.carry_out.min, enc.carry_out.max);
        }
        s
    }
}

/// Carry values reachable at one digit position when carry-in is free.
fn carry_closure(smin: i64, smax: i64, base: i64) -> (i64, i64) {
    let (mut lo, mut hi) = (0i64, 0i64);
    loop {
        let nlo = lo.min((smin + lo).div_euclid(base));
        let nhi = hi.max((smax + hi).div_euclid(base));
        if (nlo, nhi) == (lo, hi) {
            return (lo, hi);
        }
        (lo, hi) = (nlo, nhi);
    }
}

/// Table of one digit position of `sum_i coeffs[i] * d_i (+ carry_in)`.
///
/// Operand `i` occupies input bits `[i*w, (i+1)*w)` with `w = ceil(log2 b)`,
/// the carry-in (offset by its minimum) follows. Outputs are the result
/// digit in bits `[0, w)` and the offset carry-out above it. Digit or carry
/// codes that are out of range make the whole row don't-care.
pub fn build_digit_op_table(coeffs: &[i64], base: u32, include_carry_in: bool) -> Result<TruthTable, WidthError> {
    if coeffs.is_empty() {
        return Err(WidthError::InvalidOperation("no operands".into()));
    }
    if !(2..=36).contains(&base) {
        return Err(WidthError::InvalidOperation(format!("base {base} outside [2, 36]")));
    }
    let b = base as i64;
    let w = bits_for(base as u64);
    let smin: i64 = coeffs.iter().map(|&c| c.min(0) * (b - 1)).sum();
    let smax: i64 = coeffs.iter().map(|&c| c.max(0) * (b - 1)).sum();
    let (carry_in, carry_out) = if include_carry_in {
        let (lo, hi) = carry_closure(smin, smax, b);
        let range = CarryRange::new(lo, hi);
        (Some(range), range)
    } else {
        (None, CarryRange::new(smin.div_euclid(b), smax.div_euclid(b)))
    };
    let input_bits = coeffs.len() * w + carry_in.map_or(0, |c| c.bits);
    if input_bits > EXACT_BUDGET {
        return Err(WidthError::BudgetExceeded {
            input_bits,
            budget: EXACT_BUDGET,
        });
    }
    let output_bits = w + carry_out.bits;
    let mut table = TruthTable::new(input_bits, output_bits)?;
    let digit_mask = (1usize << w) - 1;
    let all = table.output_mask();
    'rows: for r in 0..table.rows() {
        let mut value = 0i64;
        for (i, &c) in coeffs.iter().enumerate() {
            let d = (r >> (i * w)) & digit_mask;
            if d >= base as usize {
                table.set_row(r, 0, all);
                continue 'rows;
            }
            value += c * d as i64;
        }
        if let Some(cin) = carry_in {
            let code = (r >> (coeffs.len() * w)) as i64;
            if code > cin.max - cin.min {
                table.set_row(r, 0, all);
                continue 'rows;
            }
            value += cin.min + code;
        }
        let digit = value.rem_euclid(b) as u32;
        let carry = (value.div_euclid(b) - carry_out.min) as u32;
        table.set_row(r, digit | carry << w, 0);
    }
    table.encoding = Some(DigitEncoding {
        base,
        coefficients: coeffs.to_vec(),
        bits_per_digit: w,
        carry_in,
        carry_out,
    });
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_adder() {
        let t = build_digit_op_table(&[1, 1], 2, false).unwrap();
        assert_eq!((t.input_bits(), t.output_bits()), (2, 2));
        // outputs: bit 0 sum, bit 1 carry
        assert_eq!((t.on(0), t.on(1), t.on(2), t.on(3)), (0b00, 0b01, 0b01, 0b10));
    }

    #[test]
    fn full_adder_with_carry_in() {
        let t = build_digit_op_table(&[1, 1], 2, true).unwrap();
        assert_eq!(t.input_bits(), 3);
        for r in 0..8usize {
            let total = (r & 1) + (r >> 1 & 1) + (r >> 2 & 1);
            assert_eq!(t.on(r) as usize, (total & 1) | (total >> 1) << 1);
        }
    }

    #[test]
    fn decimal_addition_is_bcd() {
        let t = build_digit_op_table(&[1, 1], 10, false).unwrap();
        assert_eq!(t.input_bits(), 8);
        assert_eq!(t.output_bits(), 5);
        // 7 + 5 = 12 -> digit 2, carry 1
        let r = 7 | 5 << 4;
        assert_eq!(t.on(r), 2 | 1 << 4);
        // 12 is not a decimal digit
        assert_eq!(t.dc(12), 0b11111);
    }

    #[test]
    fn arithmetic_rule_digit_step() {
        let t = build_digit_op_table(&[2, -1], 10, false).unwrap();
        let enc = t.encoding.clone().unwrap();
        assert_eq!((enc.carry_out.min, enc.carry_out.max), (-1, 1));
        for a in 0..10i64 {
            for b in 0..10i64 {
                let v = 2 * a - b;
                let r = (a | b << 4) as usize;
                let expect = v.rem_euclid(10) as u32 | ((v.div_euclid(10) + 1) as u32) << 4;
                assert_eq!(t.on(r), expect);
            }
        }
    }

    #[test]
    fn signed_carry_closure() {
        // 2a - b + c with c in [-1, 1]: extremes 18 + 1 and -9 - 1
        let t = build_digit_op_table(&[2, -1], 10, true).unwrap();
        let cin = t.encoding.unwrap().carry_in.unwrap();
        assert_eq!((cin.min, cin.max), (-1, 1));
    }

    #[test]
    fn budget() {
        assert!(matches!(
            build_digit_op_table(&[1, 1, 1, 1, 1], 10, false),
            Err(WidthError::BudgetExceeded { input_bits: 20, .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let t = build_digit_op_table(&[1, 1], 3, true).unwrap();
        let text = t.to_text();
        assert!(text.lines().next().unwrap().starts_with("00000 "));
        let mut back = TruthTable::from_text(&text).unwrap();
        back.encoding = t.encoding.clone();
        assert_eq!(back, t);
        assert!(TruthTable::from_text("00 1\n01 1\n").is_err());
        assert!(TruthTable::from_text("0 x\n1 1\n").is_err());
    }

    #[test]
    fn bits_needed() {
        assert_eq!(
            [1, 2, 3, 4, 5, 10, 16, 17].map(bits_for),
            [0, 1, 2, 2, 3, 4, 4, 5]
        );
    }
}
