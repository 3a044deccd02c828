//! Number-level task instances: each term is one row of `l` little-endian
//! digits, the input grid holds `A_1..A_n` and the target grid `A_{n+1}..A_{n+s}`.

use rand::Rng;
use thiserror::Error;

use crate::sequence::{
    digits_le, eval_recurrence, fits_width, from_digits_le, sample_initial_terms_with, SeedContext,
    SequenceError, SequenceRule, SplitRole, SplitSpec, Term,
};

/// Resampling attempts before a configuration is declared unsatisfiable.
pub const MAX_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error("invalid grid configuration: {0}")]
    InvalidConfig(String),
    #[error("split {got:?} does not match the declared {role} range of `{entry}`")]
    SplitMismatch {
        entry: String,
        role: SplitRole,
        got: SplitSpec,
    },
    #[error("no representable instance after {attempts} attempts")]
    Unsatisfiable { attempts: usize },
    #[error("digit {digit} is not valid in base {base}")]
    InvalidDigit { digit: u32, base: u32 },
    #[error("cell ({row}, {col}) has {active} active channels")]
    MalformedOneHot { row: usize, col: usize, active: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridConfig {
    /// input rows
    pub n: usize,
    /// digits per row
    pub l: usize,
    /// target rows
    pub s: usize,
    pub base: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n: 8,
            l: 8,
            s: 4,
            base: 10,
        }
    }
}

impl GridConfig {
    pub fn validate(&self, order: usize) -> Result<(), GridError> {
        if self.n < order {
            return Err(GridError::InvalidConfig(format!(
                "n = {} is smaller than the rule order {order}",
                self.n
            )));
        }
        if self.l == 0 || self.s == 0 {
            return Err(GridError::InvalidConfig("l and s must be positive".into()));
        }
        if !(2..=36).contains(&self.base) {
            return Err(GridError::InvalidConfig(format!("base {} outside [2, 36]", self.base)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CatalogRule {
    Single(SequenceRule),
    /// One member is drawn uniformly per instance.
    Mixture(Vec<SequenceRule>),
}

impl CatalogRule {
    pub fn order(&self) -> usize {
        match self {
            CatalogRule::Single(rule) => rule.order(),
            CatalogRule::Mixture(rules) => rules.iter().map(SequenceRule::order).max().unwrap_or(0),
        }
    }

    pub fn members(&self) -> &[SequenceRule] {
        match self {
            CatalogRule::Single(rule) => std::slice::from_ref(rule),
            CatalogRule::Mixture(rules) => rules,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleCatalogEntry {
    pub name: &'static str,
    pub rule: CatalogRule,
    /// Declared number-level complexity.
    pub complexity: u32,
    pub base: u32,
    /// Alternative base studied for this family, with its row width.
    pub variant: Option<GridVariant>,
    pub train: SplitSpec,
    pub validation: SplitSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridVariant {
    pub base: u32,
    pub l: usize,
}

impl RuleCatalogEntry {
    pub fn split(&self, role: SplitRole) -> SplitSpec {
        match role {
            SplitRole::Train => self.train,
            SplitRole::Validation => self.validation,
        }
    }

    /// Default grid for the entry in the given base (`None` = the entry's own base).
    pub fn default_config(&self, base: Option<u32>) -> GridConfig {
        let mut config = GridConfig {
            base: self.base,
            ..GridConfig::default()
        };
        if let Some(base) = base {
            config.base = base;
            if let Some(variant) = self.variant.filter(|v| v.base == base) {
                config.l = variant.l;
            }
        }
        config
    }
}

const TRAIN: SplitSpec = SplitSpec {
    role: SplitRole::Train,
    lower: 0,
    upper: 20_000,
};
const VALIDATION: SplitSpec = SplitSpec {
    role: SplitRole::Validation,
    lower: 20_000,
    upper: 30_000,
};

fn entry(name: &'static str, rule: CatalogRule, complexity: u32) -> RuleCatalogEntry {
    RuleCatalogEntry {
        name,
        rule,
        complexity,
        base: 10,
        variant: None,
        train: TRAIN,
        validation: VALIDATION,
    }
}

/// The eight number-level rule families.
pub fn list_rule_catalog() -> Vec<RuleCatalogEntry> {
    let binary: Vec<SequenceRule> = [[1, 1], [2, -1], [3, -2], [1, 2]]
        .iter()
        .map(|pq| SequenceRule::linear(pq))
        .collect();
    let mut quaternary = entry(
        "quaternary-number",
        CatalogRule::Single(SequenceRule::linear(&[4, -6, 4, -1])),
        3,
    );
    // base-5 rows need 12 digits to hold the same numeric range as 8 decimal digits
    quaternary.variant = Some(GridVariant { base: 5, l: 12 });
    vec![
        entry("fib-number", CatalogRule::Single(binary[0].clone()), 1),
        entry("arith-number", CatalogRule::Single(binary[1].clone()), 1),
        entry("doubling-number", CatalogRule::Single(binary[2].clone()), 1),
        entry("jacobsthal-number", CatalogRule::Single(binary[3].clone()), 1),
        entry("skip-number", CatalogRule::Single(SequenceRule::linear(&[1, 0, 1])), 2),
        entry("mixture-number", CatalogRule::Mixture(binary), 1),
        entry("ternary-number", CatalogRule::Single(SequenceRule::linear(&[2, -1, 1])), 2),
        quaternary,
    ]
}

pub fn find_catalog_entry(name: &str) -> Option<RuleCatalogEntry> {
    list_rule_catalog().into_iter().find(|e| e.name == name)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberGridInstance {
    /// Catalog entry name, if generated from the catalog.
    pub entry: Option<String>,
    /// The rule actually used (the drawn member for mixtures).
    pub rule: SequenceRule,
    pub initial_terms: Vec<Term>,
    pub base: u32,
    /// `n` rows of `l` little-endian digits.
    pub input: Vec<Vec<u32>>,
    /// `s` rows of `l` little-endian digits.
    pub target: Vec<Vec<u32>>,
    pub role: Option<SplitRole>,
    pub seed: Option<SeedContext>,
}

impl NumberGridInstance {
    pub fn input_terms(&self) -> Vec<Term> {
        self.input.iter().map(|row| from_digits_le(row, self.base)).collect()
    }

    pub fn target_terms(&self) -> Vec<Term> {
        self.target.iter().map(|row| from_digits_le(row, self.base)).collect()
    }
}

/// Builds a grid from explicit initial terms.
pub fn grid_from_terms(
    rule: &SequenceRule,
    initial_terms: &[Term],
    config: &GridConfig,
) -> Result<NumberGridInstance, GridError> {
    config.validate(rule.order())?;
    let terms = eval_recurrence(rule, initial_terms, config.n + config.s)?;
    let rows = terms
        .iter()
        .map(|t| digits_le(t, config.base, config.l))
        .collect::<Result<Vec<_>, _>>()?;
    let (input, target) = rows.split_at(config.n);
    Ok(NumberGridInstance {
        entry: None,
        rule: rule.clone(),
        initial_terms: initial_terms.to_vec(),
        base: config.base,
        input: input.to_vec(),
        target: target.to_vec(),
        role: None,
        seed: None,
    })
}

/// Samples a number-level instance, resampling initial terms until every
/// term is non-negative and fits in `l` digits.
pub fn make_number_grid_instance(
    entry: &RuleCatalogEntry,
    config: &GridConfig,
    split: &SplitSpec,
    seed: &SeedContext,
) -> Result<NumberGridInstance, GridError> {
    config.validate(entry.rule.order())?;
    if *split != entry.split(split.role) {
        return Err(GridError::SplitMismatch {
            entry: entry.name.to_string(),
            role: split.role,
            got: *split,
        });
    }
    let mut rng = seed.rng();
    let rule = match &entry.rule {
        CatalogRule::Single(rule) => rule.clone(),
        CatalogRule::Mixture(rules) => rules[rng.gen_range(0..rules.len())].clone(),
    };
    for _ in 0..MAX_RESAMPLES {
        let initial = sample_initial_terms_with(&mut rng, split, rule.order())?;
        let terms = match eval_recurrence(&rule, &initial, config.n + config.s) {
            Ok(terms) => terms,
            Err(SequenceError::NegativeTerm { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        if !terms.iter().all(|t| fits_width(t, config.base, config.l)) {
            continue;
        }
        let mut instance = grid_from_terms(&rule, &initial, config)?;
        instance.entry = Some(entry.name.to_string());
        instance.role = Some(split.role);
        instance.seed = Some(*seed);
        return Ok(instance);
    }
    Err(GridError::Unsatisfiable {
        attempts: MAX_RESAMPLES,
    })
}

/// Dense `rows × cols × channels` one-hot tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHot {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl OneHot {
    pub fn cell(&self, row: usize, col: usize) -> &[u8] {
        let start = (row * self.cols + col) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn cell_mut(&mut self, row: usize, col: usize) -> &mut [u8] {
        let start = (row * self.cols + col) * self.channels;
        &mut self.data[start..start + self.channels]
    }
}

pub fn onehot_encode(digits: &[Vec<u32>], base: u32) -> Result<OneHot, GridError> {
    let rows = digits.len();
    let cols = digits.first().map_or(0, Vec::len);
    if digits.iter().any(|r| r.len() != cols) {
        return Err(GridError::InvalidConfig("ragged digit grid".into()));
    }
    let channels = base as usize;
    let mut out = OneHot {
        rows,
        cols,
        channels,
        data: vec![0; rows * cols * channels],
    };
    for (r, row) in digits.iter().enumerate() {
        for (c, &digit) in row.iter().enumerate() {
            if digit >= base {
                return Err(GridError::InvalidDigit { digit, base });
            }
            out.cell_mut(r, c)[digit as usize] = 1;
        }
    }
    Ok(out)
}

pub fn onehot_decode(tensor: &OneHot) -> Result<Vec<Vec<u32>>, GridError> {
    (0..tensor.rows)
        .map(|row| {
            (0..tensor.cols)
                .map(|col| {
                    let cell = tensor.cell(row, col);
                    let active: Vec<usize> = cell
                        .iter()
                        .enumerate()
                        .filter(|(_, &v)| v != 0)
                        .map(|(i, _)| i)
                        .collect();
                    match active.as_slice() {
                        [hot] if cell[*hot] == 1 => Ok(*hot as u32),
                        _ => Err(GridError::MalformedOneHot {
                            row,
                            col,
                            active: active.len(),
                        }),
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: u64) -> Term {
        Term::from(v)
    }

    #[test]
    fn catalog_has_eight_families() {
        let catalog = list_rule_catalog();
        assert_eq!(catalog.len(), 8);
        let has = |coeffs: &[i64]| {
            catalog
                .iter()
                .any(|e| e.rule.members().contains(&SequenceRule::linear(coeffs)))
        };
        for pq in [[1, 1], [2, -1], [3, -2], [1, 2]] {
            assert!(has(&pq));
        }
        let skip = find_catalog_entry("skip-number").unwrap();
        assert_eq!(skip.complexity, 2);
        let ternary = find_catalog_entry("ternary-number").unwrap();
        assert_eq!(ternary.complexity, 2);
        let quaternary = find_catalog_entry("quaternary-number").unwrap();
        assert_eq!(quaternary.complexity, 3);
        assert_eq!(quaternary.variant.map(|v| v.base), Some(5));
        let mixture = find_catalog_entry("mixture-number").unwrap();
        assert_eq!(mixture.rule.members().len(), 4);
        assert_eq!(mixture.complexity, 1);
        assert!(catalog.iter().all(|e| e.base == 10 && !e.train.overlaps(&e.validation)));
    }

    #[test]
    fn default_grid_shape() {
        let entry = find_catalog_entry("fib-number").unwrap();
        let config = GridConfig::default();
        let inst =
            make_number_grid_instance(&entry, &config, &entry.train, &SeedContext::new(1, 0)).unwrap();
        assert_eq!(inst.input.len(), 8);
        assert!(inst.input.iter().all(|r| r.len() == 8));
        assert_eq!(inst.target.len(), 4);
        assert!(inst.target.iter().all(|r| r.len() == 8));
    }

    #[test]
    fn explicit_fibonacci_grid() {
        let config = GridConfig { n: 4, l: 3, s: 2, base: 10 };
        let inst = grid_from_terms(&SequenceRule::linear(&[1, 1]), &[t(2), t(3)], &config).unwrap();
        assert_eq!(inst.input_terms(), vec![t(2), t(3), t(5), t(8)]);
        assert_eq!(inst.target_terms(), vec![t(13), t(21)]);
        assert_eq!(inst.target[0], vec![3, 1, 0]);
    }

    #[test]
    fn constant_fixed_point() {
        let config = GridConfig::default();
        let inst = grid_from_terms(&SequenceRule::linear(&[2, -1]), &[t(0), t(0)], &config).unwrap();
        assert!(inst.input.iter().chain(&inst.target).flatten().all(|&d| d == 0));
    }

    #[test]
    fn mismatched_split_is_rejected() {
        let entry = find_catalog_entry("fib-number").unwrap();
        let split = SplitSpec::new(SplitRole::Train, 0, 100);
        assert!(matches!(
            make_number_grid_instance(&entry, &GridConfig::default(), &split, &SeedContext::new(0, 0)),
            Err(GridError::SplitMismatch { .. })
        ));
    }

    #[test]
    fn impossible_width_is_unsatisfiable() {
        let entry = find_catalog_entry("fib-number").unwrap();
        let config = GridConfig { n: 8, l: 2, s: 4, base: 10 };
        assert_eq!(
            make_number_grid_instance(&entry, &config, &entry.train, &SeedContext::new(0, 0)),
            Err(GridError::Unsatisfiable {
                attempts: MAX_RESAMPLES
            })
        );
    }

    #[test]
    fn base_five_quaternary_variant() {
        let entry = find_catalog_entry("quaternary-number").unwrap();
        let config = entry.default_config(Some(5));
        assert_eq!((config.base, config.l), (5, 12));
        let inst =
            make_number_grid_instance(&entry, &config, &entry.validation, &SeedContext::new(3, 9)).unwrap();
        assert!(inst.input.iter().flatten().all(|&d| d < 5));
    }

    #[test]
    fn onehot_examples() {
        let tensor = onehot_encode(&[vec![3]], 10).unwrap();
        assert_eq!(tensor.cell(0, 0), &[0, 0, 0, 1, 0, 0, 0, 0, 0, 0]);
        let mut bad = tensor.clone();
        bad.cell_mut(0, 0)[0] = 1;
        assert_eq!(
            onehot_decode(&bad),
            Err(GridError::MalformedOneHot { row: 0, col: 0, active: 2 })
        );
        let mut empty = tensor;
        empty.cell_mut(0, 0)[3] = 0;
        assert!(matches!(onehot_decode(&empty), Err(GridError::MalformedOneHot { active: 0, .. })));
        assert!(matches!(
            onehot_encode(&[vec![10]], 10),
            Err(GridError::InvalidDigit { digit: 10, base: 10 })
        ));
    }
}
