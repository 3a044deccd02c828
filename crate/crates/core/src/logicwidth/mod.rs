//! Combinatorial width of digit operations and complexity of linear rules.

mod complexity;
mod minimize;
mod table;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use complexity::{complexity_search, BinaryCatalog, ComplexityReport, DecompositionPlan, PlanNode, SearchOptions};
pub use minimize::{minimize_sop, prime_implicants, Cube, MinimizeMode, ProductTerm, SopCover};
pub use table::{bits_for, build_digit_op_table, CarryRange, DigitEncoding, TruthTable, EXACT_BUDGET, MAX_TABLE_INPUTS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WidthError {
    #[error("table needs {input_bits} input bits, budget is {budget}")]
    BudgetExceeded { input_bits: usize, budget: usize },
    #[error("truth table parse error: {0}")]
    Parse(String),
    #[error("invalid operation: {0}")]
    InvalidOperation(String),
    #[error("empty width list")]
    EmptyList,
    #[error("growth fit needs at least two feasible bases, got {0}")]
    DegenerateFit(usize),
    #[error("no decomposition with at most {max_functions} functions")]
    NoPlanFound { max_functions: usize },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
}

/// Asymptotic class assigned to a width measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AsymptoticTag {
    /// Pure copy: one single-literal term per digit bit.
    DigitBits { bits: usize },
    /// Θ(b^exponent), from a log-log fit over small bases.
    Polynomial { exponent: u32, slope: f64 },
}

impl fmt::Display for AsymptoticTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AsymptoticTag::DigitBits { bits } => write!(f, "Θ(log b) ({bits} digit bits)"),
            AsymptoticTag::Polynomial { exponent: 1, slope } => write!(f, "Θ(b) (slope {slope:.3})"),
            AsymptoticTag::Polynomial { exponent, slope } => write!(f, "Θ(b^{exponent}) (slope {slope:.3})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthReport {
    pub coefficients: Vec<i64>,
    pub base: u32,
    pub carry_in: bool,
    pub input_bits: usize,
    pub output_bits: usize,
    pub term_count: usize,
    pub exact: bool,
    pub tag: AsymptoticTag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthPoint {
    pub base: u32,
    pub input_bits: usize,
    pub term_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthGrowth {
    pub coefficients: Vec<i64>,
    pub carry_in: bool,
    pub points: Vec<GrowthPoint>,
    /// Least-squares slope of ln(term_count) against ln(base).
    pub slope: f64,
    pub strictly_increasing: bool,
}

/// Bases used to fit the asymptotic tag.
pub const FIT_BASES: [u32; 4] = [2, 3, 4, 5];

/// Exact minimized term count of the digit operation in `base`.
pub fn digit_op_width(coeffs: &[i64], base: u32, carry_in: bool) -> Result<SopCover, WidthError> {
    let table = build_digit_op_table(coeffs, base, carry_in)?;
    minimize_sop(&table, MinimizeMode::Exact)
}

pub fn combinatorial_width(coeffs: &[i64], base: u32, carry_in: bool) -> Result<WidthReport, WidthError> {
    let table = build_digit_op_table(coeffs, base, carry_in)?;
    let cover = minimize_sop(&table, MinimizeMode::Exact)?;
    let tag = if coeffs == [1] && !carry_in {
        AsymptoticTag::DigitBits { bits: table.input_bits() }
    } else {
        let feasible: Vec<u32> = FIT_BASES
            .into_iter()
            .filter(|&b| fits_budget(coeffs, b, carry_in))
            .collect();
        let growth = estimate_width_growth(coeffs, &feasible, carry_in)?;
        AsymptoticTag::Polynomial {
            exponent: growth.slope.round().max(0.0) as u32,
            slope: growth.slope,
        }
    };
    Ok(WidthReport {
        coefficients: coeffs.to_vec(),
        base,
        carry_in,
        input_bits: table.input_bits(),
        output_bits: table.output_bits(),
        term_count: cover.term_count(),
        exact: cover.exact,
        tag,
    })
}

fn fits_budget(coeffs: &[i64], base: u32, carry_in: bool) -> bool {
    !matches!(
        build_digit_op_table(coeffs, base, carry_in),
        Err(WidthError::BudgetExceeded { .. })
    )
}

pub fn estimate_width_growth(coeffs: &[i64], bases: &[u32], carry_in: bool) -> Result<WidthGrowth, WidthError> {
    if bases.len() < 2 {
        return Err(WidthError::DegenerateFit(bases.len()));
    }
    let mut points = Vec::with_capacity(bases.len());
    for &base in bases {
        let table = build_digit_op_table(coeffs, base, carry_in)?;
        let cover = minimize_sop(&table, MinimizeMode::Exact)?;
        points.push(GrowthPoint {
            base,
            input_bits: table.input_bits(),
            term_count: cover.term_count(),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.base as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| (p.term_count.max(1) as f64).ln()).collect();
    let slope = least_squares_slope(&xs, &ys).ok_or(WidthError::DegenerateFit(bases.len()))?;
    let strictly_increasing = points.windows(2).all(|w| w[0].term_count < w[1].term_count);
    Ok(WidthGrowth {
        coefficients: coeffs.to_vec(),
        carry_in,
        points,
        slope,
        strictly_increasing,
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn compound_width(widths: &[u64]) -> Result<u64, WidthError> {
    if widths.is_empty() {
        return Err(WidthError::EmptyList);
    }
    Ok(widths.iter().sum())
}
