//! Two-level multi-output minimization.
//!
//! Primes are generated Quine–McCluskey style on tagged cubes: a cube's tag
//! is the set of outputs it may drive without touching an OFF row, and a
//! cube is a multi-output prime when no single-literal expansion keeps its
//! full tag. The minimum cover over (row, output) pairs is then found by
//! branch and bound with essential-column extraction, column dominance and
//! a disjoint-rows lower bound.

use std::collections::HashMap;
use std::fmt;

use super::table::{TruthTable, EXACT_BUDGET};
use super::WidthError;

/// A product term: variables in `dashes` are absent, the others must equal `bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    pub bits: u32,
    pub dashes: u32,
}

impl Cube {
    pub fn minterm(row: u32) -> Self {
        Cube { bits: row, dashes: 0 }
    }

    pub fn contains(&self, row: u32) -> bool {
        row & !self.dashes == self.bits
    }

    pub fn literal_count(&self, input_bits: usize) -> usize {
        input_bits - self.dashes.count_ones() as usize
    }

    /// Rows covered by the cube.
    pub fn rows(&self) -> impl Iterator<Item = u32> + '_ {
        // enumerate subsets of the dash mask
        let dashes = self.dashes;
        let mut sub = 0u32;
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let row = self.bits | sub;
            sub = sub.wrapping_sub(dashes) & dashes;
            done = sub == 0;
            Some(row)
        })
    }

    /// Renders the cube most significant variable first, e.g. `1-0`.
    pub fn render(&self, input_bits: usize) -> String {
        (0..input_bits)
            .rev()
            .map(|i| {
                if self.dashes >> i & 1 == 1 {
                    '-'
                } else if self.bits >> i & 1 == 1 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimizeMode {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductTerm {
    pub cube: Cube,
    /// Outputs that use this term.
    pub outputs: u32,
}

/// Sum-of-products cover of a multi-output table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SopCover {
    pub input_bits: usize,
    pub output_bits: usize,
    pub terms: Vec<ProductTerm>,
    /// `true` if `terms.len()` is proven minimum.
    pub exact: bool,
}

impl SopCover {
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn evaluate(&self, row: u32) -> u32 {
        self.terms
            .iter()
            .filter(|t| t.cube.contains(row))
            .fold(0, |acc, t| acc | t.outputs)
    }

    /// Number of terms feeding each output.
    pub fn usage(&self) -> Vec<usize> {
        (0..self.output_bits)
            .map(|j| self.terms.iter().filter(|t| t.outputs >> j & 1 == 1).count())
            .collect()
    }

    /// Whether the cover agrees with `table` on every care bit.
    pub fn implements(&self, table: &TruthTable) -> bool {
        (0..table.rows()).all(|r| {
            let care = table.output_mask() & !table.dc(r);
            self.evaluate(r as u32) & care == table.on(r)
        })
    }
}

impl fmt::Display for SopCover {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            let outs: String = (0..self.output_bits)
                .rev()
                .map(|j| if t.outputs >> j & 1 == 1 { '1' } else { '0' })
                .collect();
            writeln!(f, "{} {}", t.cube.render(self.input_bits), outs)?;
        }
        Ok(())
    }
}

/// Multi-output primes of `table` with their tags, sorted.
pub fn prime_implicants(table: &TruthTable) -> Vec<(Cube, u32)> {
    let n = table.input_bits();
    let mut level: HashMap<Cube, u32> = (0..table.rows())
        .filter_map(|r| {
            let tag = table.on(r) | table.dc(r);
            (tag != 0).then(|| (Cube::minterm(r as u32), tag))
        })
        .collect();
    let mut primes = Vec::new();
    while !level.is_empty() {
        let mut next: HashMap<Cube, u32> = HashMap::new();
        let mut covered: HashMap<Cube, bool> = HashMap::new();
        for (&cube, &tag) in &level {
            for i in 0..n {
                let bit = 1u32 << i;
                if cube.dashes & bit != 0 || cube.bits & bit != 0 {
                    continue;
                }
                let partner = Cube {
                    bits: cube.bits | bit,
                    dashes: cube.dashes,
                };
                let Some(&ptag) = level.get(&partner) else {
                    continue;
                };
                let merged = tag & ptag;
                if merged == 0 {
                    continue;
                }
                next.insert(
                    Cube {
                        bits: cube.bits,
                        dashes: cube.dashes | bit,
                    },
                    merged,
                );
                if merged == tag {
                    covered.insert(cube, true);
                }
                if merged == ptag {
                    covered.insert(partner, true);
                }
            }
        }
        for (&cube, &tag) in &level {
            if !covered.contains_key(&cube) && cube.rows().any(|r| table.on(r as usize) & tag != 0) {
                primes.push((cube, tag));
            }
        }
        level = next;
    }
    primes.sort();
    primes
}

#[derive(Clone)]
struct BitSet(Vec<u64>);

impl BitSet {
    fn new(len: usize) -> Self {
        BitSet(vec![0; len.div_ceil(64)])
    }

    fn full(len: usize) -> Self {
        let mut s = BitSet::new(len);
        for i in 0..len {
            s.insert(i);
        }
        s
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    fn count_and(&self, other: &BitSet) -> usize {
        self.0.iter().zip(&other.0).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    fn subtract(&mut self, other: &BitSet) {
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a &= !b);
    }

    /// `self ∩ mask ⊆ other`
    fn subset_within(&self, other: &BitSet, mask: &BitSet) -> bool {
        self.0
            .iter()
            .zip(&other.0)
            .zip(&mask.0)
            .all(|((a, b), m)| a & m & !b == 0)
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }
}

/// Minimum-cardinality set cover by branch and bound.
struct CoverSearch<'a> {
    columns: &'a [BitSet],
    rows: Vec<Vec<usize>>,
    best: Vec<usize>,
    nodes: u64,
}

impl CoverSearch<'_> {
    fn lower_bound(&self, uncovered: &BitSet, active: &[bool]) -> usize {
        // rows that share no active column need distinct columns
        let mut used = vec![false; self.columns.len()];
        let mut rows: Vec<(usize, usize)> = uncovered
            .iter()
            .map(|e| (self.rows[e].iter().filter(|&&c| active[c]).count(), e))
            .collect();
        rows.sort_unstable();
        let mut bound = 0;
        for (_, e) in rows {
            let cols = self.rows[e].iter().filter(|&&c| active[c]);
            if cols.clone().all(|&c| !used[c]) {
                bound += 1;
                cols.for_each(|&c| used[c] = true);
            }
        }
        bound
    }

    fn search(&mut self, mut uncovered: BitSet, mut active: Vec<bool>, chosen: &mut Vec<usize>) {
        self.nodes += 1;
        let depth = chosen.len();
        loop {
            if uncovered.is_empty() {
                if chosen.len() < self.best.len() {
                    self.best = chosen.clone();
                }
                chosen.truncate(depth);
                return;
            }
            // essential columns
            let mut forced = None;
            for e in uncovered.iter() {
                let mut covering = self.rows[e].iter().filter(|&&c| active[c]);
                match (covering.next(), covering.next()) {
                    (None, _) => {
                        chosen.truncate(depth);
                        return;
                    }
                    (Some(&c), None) => {
                        forced = Some(c);
                        break;
                    }
                    _ => {}
                }
            }
            match forced {
                Some(c) => {
                    chosen.push(c);
                    active[c] = false;
                    uncovered.subtract(&self.columns[c]);
                    if chosen.len() >= self.best.len() {
                        chosen.truncate(depth);
                        return;
                    }
                }
                None => break,
            }
        }

        // column dominance
        let live: Vec<usize> = (0..self.columns.len())
            .filter(|&c| active[c] && self.columns[c].count_and(&uncovered) > 0)
            .collect();
        for c in 0..active.len() {
            if active[c] && !live.contains(&c) {
                active[c] = false;
            }
        }
        for (i, &a) in live.iter().enumerate() {
            for (j, &b) in live.iter().enumerate() {
                if i == j || !active[a] || !active[b] {
                    continue;
                }
                if self.columns[a].subset_within(&self.columns[b], &uncovered) {
                    let equal = self.columns[b].subset_within(&self.columns[a], &uncovered);
                    if !equal || a > b {
                        active[a] = false;
                        break;
                    }
                }
            }
        }

        if chosen.len() + self.lower_bound(&uncovered, &active) >= self.best.len() {
            chosen.truncate(depth);
            return;
        }

        // branch on the row with fewest covering columns
        let branch_row = uncovered
            .iter()
            .min_by_key(|&e| self.rows[e].iter().filter(|&&c| active[c]).count())
            .expect("uncovered is non-empty");
        let mut options: Vec<usize> = self.rows[branch_row].iter().copied().filter(|&c| active[c]).collect();
        options.sort_by_key(|&c| (std::cmp::Reverse(self.columns[c].count_and(&uncovered)), c));
        for c in options {
            let mut next_uncovered = uncovered.clone();
            next_uncovered.subtract(&self.columns[c]);
            let mut next_active = active.clone();
            next_active[c] = false;
            chosen.push(c);
            self.search(next_uncovered, next_active, chosen);
            chosen.pop();
            // later siblings need not consider c again
            active[c] = false;
            if chosen.len() + 1 >= self.best.len() {
                break;
            }
        }
        chosen.truncate(depth);
    }
}

fn greedy_cover(columns: &[BitSet], universe: usize) -> Vec<usize> {
    let mut uncovered = BitSet::full(universe);
    let mut chosen = Vec::new();
    while !uncovered.is_empty() {
        let best = (0..columns.len())
            .max_by_key(|&c| (columns[c].count_and(&uncovered), std::cmp::Reverse(c)))
            .expect("every element is covered by some prime");
        chosen.push(best);
        uncovered.subtract(&columns[best]);
    }
    chosen
}

/// Minimizes `table` into a multi-output sum of products.
///
/// Exact mode returns a cover with the minimum number of distinct product
/// terms; heuristic mode returns a greedy prime cover flagged as non-minimal.
pub fn minimize_sop(table: &TruthTable, mode: MinimizeMode) -> Result<SopCover, WidthError> {
    if mode == MinimizeMode::Exact && table.input_bits() > EXACT_BUDGET {
        return Err(WidthError::BudgetExceeded {
            input_bits: table.input_bits(),
            budget: EXACT_BUDGET,
        });
    }
    let primes = prime_implicants(table);

    // elements are (row, output) pairs that must be 1
    let mut element_base = vec![0usize; table.rows() + 1];
    for r in 0..table.rows() {
        element_base[r + 1] = element_base[r] + table.on(r).count_ones() as usize;
    }
    let universe = element_base[table.rows()];
    let element = |r: usize, j: usize| {
        let below = table.on(r) & ((1u32 << j) - 1);
        element_base[r] + below.count_ones() as usize
    };

    let columns: Vec<BitSet> = primes
        .iter()
        .map(|&(cube, tag)| {
            let mut set = BitSet::new(universe);
            for r in cube.rows() {
                let hits = table.on(r as usize) & tag;
                for j in 0..table.output_bits() {
                    if hits >> j & 1 == 1 {
                        set.insert(element(r as usize, j));
                    }
                }
            }
            set
        })
        .collect();

    let chosen = if universe == 0 {
        Vec::new()
    } else {
        let greedy = greedy_cover(&columns, universe);
        match mode {
            MinimizeMode::Heuristic => greedy,
            MinimizeMode::Exact => {
                let mut rows = vec![Vec::new(); universe];
                for (c, col) in columns.iter().enumerate() {
                    for e in col.iter() {
                        rows[e].push(c);
                    }
                }
                let mut search = CoverSearch {
                    columns: &columns,
                    rows,
                    best: greedy,
                    nodes: 0,
                };
                // sentinel one larger so an equal-size cover is still recorded
                let upper = search.best.clone();
                search.best = (0..=upper.len()).collect();
                search.search(BitSet::full(universe), vec![true; columns.len()], &mut Vec::new());
                if search.best.len() > upper.len() {
                    upper
                } else {
                    search.best
                }
            }
        }
    };

    let mut terms: Vec<ProductTerm> = chosen
        .into_iter()
        .map(|c| {
            let (cube, tag) = primes[c];
            let used = cube.rows().fold(0, |acc, r| acc | (table.on(r as usize) & tag));
            ProductTerm { cube, outputs: used }
        })
        .collect();
    terms.sort_by_key(|t| t.cube);
    Ok(SopCover {
        input_bits: table.input_bits(),
        output_bits: table.output_bits(),
        terms,
        exact: mode == MinimizeMode::Exact,
    })
}
