//! Minimum decompositions of a linear rule into binary linear operations.
//!
//! A plan is a tree whose leaves are the previous terms `A, B, C, D`
//! (`A` is the most recent) and whose inner nodes compute `p*left + q*right`.
//! Carries are ignored: only the linear form matters for correctness, and
//! each inner node is charged the width of its single-position digit table.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::{Serialize, Serializer};

use super::{digit_op_width, WidthError};

pub const MAX_ARITY: usize = 4;
/// Largest supported tree size. Any target of arity four is reachable
/// with three operations when the catalog contains `(1, 1)`.
pub const MAX_FUNCTIONS: usize = 4;

type Form = [i64; MAX_ARITY];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlanNode {
    Op {
        p: i64,
        q: i64,
        left: Box<PlanNode>,
        right: Box<PlanNode>,
    },
    Leaf(usize),
}

impl PlanNode {
    pub fn function_count(&self) -> usize {
        match self {
            PlanNode::Leaf(_) => 0,
            PlanNode::Op { left, right, .. } => 1 + left.function_count() + right.function_count(),
        }
    }

    /// Coefficient vector of the linear form computed by the tree.
    pub fn coefficients(&self, arity: usize) -> Vec<i64> {
        let f = self.form();
        f[..arity].to_vec()
    }

    fn form(&self) -> Form {
        match self {
            PlanNode::Leaf(i) => unit(*i),
            PlanNode::Op { p, q, left, right } => combine(*p, &left.form(), *q, &right.form()),
        }
    }

    pub fn evaluate(&self, terms: &[i64]) -> i64 {
        match self {
            PlanNode::Leaf(i) => terms[*i],
            PlanNode::Op { p, q, left, right } => p * left.evaluate(terms) + q * right.evaluate(terms),
        }
    }

    /// `(p, q)` of every inner node, in pre-order.
    pub fn operations(&self) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        self.collect_ops(&mut out);
        out
    }

    fn collect_ops(&self, out: &mut Vec<(i64, i64)>) {
        if let PlanNode::Op { p, q, left, right } = self {
            out.push((*p, *q));
            left.collect_ops(out);
            right.collect_ops(out);
        }
    }

    fn leaves(&self, out: &mut Vec<usize>) {
        match self {
            PlanNode::Leaf(i) => out.push(*i),
            PlanNode::Op { left, right, .. } => {
                left.leaves(out);
                right.leaves(out);
            }
        }
    }

    fn is_chain(&self) -> bool {
        match self {
            PlanNode::Leaf(_) => true,
            PlanNode::Op { left, right, .. } => match (&**left, &**right) {
                (PlanNode::Leaf(_), r) => r.is_chain(),
                (l, PlanNode::Leaf(_)) => l.is_chain(),
                _ => false,
            },
        }
    }
}

fn variable(i: usize) -> char {
    (b'A' + i as u8) as char
}

fn scaled(f: &mut fmt::Formatter<'_>, c: i64, node: &PlanNode) -> fmt::Result {
    match c {
        1 => write!(f, "{node}"),
        -1 => write!(f, "-{node}"),
        _ => write!(f, "{c}{node}"),
    }
}

impl fmt::Display for PlanNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanNode::Leaf(i) => write!(f, "{}", variable(*i)),
            PlanNode::Op { p, q, left, right } => {
                write!(f, "(")?;
                scaled(f, *p, left)?;
                write!(f, " {} ", if *q < 0 { '-' } else { '+' })?;
                scaled(f, q.abs(), right)?;
                write!(f, ")")
            }
        }
    }
}

impl Serialize for PlanNode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemberWidth {
    pub p: i64,
    pub q: i64,
    pub width: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecompositionPlan {
    pub root: PlanNode,
    pub function_count: usize,
    pub compound_width: u64,
    pub members: Vec<MemberWidth>,
    pub is_chain: bool,
}

/// Binary linear operations `(A, B) -> pA + qB`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCatalog {
    members: Vec<(i64, i64)>,
}

impl BinaryCatalog {
    /// All `(p, q)` with nonzero `|p|, |q| <= bound`.
    pub fn bounded(bound: i64) -> Self {
        let range = (-bound..=bound).filter(|&c| c != 0);
        let members = range
            .clone()
            .flat_map(|p| range.clone().map(move |q| (p, q)))
            .collect();
        BinaryCatalog { members }
    }

    pub fn from_members(members: Vec<(i64, i64)>) -> Self {
        BinaryCatalog { members }
    }

    pub fn members(&self) -> &[(i64, i64)] {
        &self.members
    }

    pub fn bound(&self) -> i64 {
        self.members.iter().map(|&(p, q)| p.abs().max(q.abs())).max().unwrap_or(0)
    }
}

impl Default for BinaryCatalog {
    fn default() -> Self {
        BinaryCatalog::bounded(8)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOptions {
    pub max_functions: usize,
    /// Base of the digit tables used to price each operation.
    pub width_base: u32,
    /// Whether member tables take a free carry-in input.
    pub carry_in: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_functions: MAX_FUNCTIONS,
            width_base: 2,
            carry_in: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplexityReport {
    pub target: Vec<i64>,
    pub width_base: u32,
    pub carry_in: bool,
    pub complexity: usize,
    pub difficulty: u64,
    pub plan: DecompositionPlan,
    /// Same search restricted to chains, where every operation has a leaf operand.
    pub chain_complexity: usize,
    pub chain_difficulty: u64,
    pub chain_plan: DecompositionPlan,
}

fn unit(i: usize) -> Form {
    let mut f = [0; MAX_ARITY];
    f[i] = 1;
    f
}

fn combine(p: i64, a: &Form, q: i64, b: &Form) -> Form {
    std::array::from_fn(|i| p * a[i] + q * b[i])
}

fn support(f: &Form) -> usize {
    f.iter().filter(|&&c| c != 0).count()
}

/// `(t - c*u) / d` if exact.
fn solve(t: &Form, c: i64, u: &Form, d: i64) -> Option<Form> {
    let mut out = [0; MAX_ARITY];
    for i in 0..MAX_ARITY {
        let r = t[i] - c * u[i];
        if r % d != 0 {
            return None;
        }
        out[i] = r / d;
    }
    Some(out)
}

#[derive(Clone)]
struct Best {
    width: u64,
    negated: usize,
    leaves: Vec<usize>,
    node: PlanNode,
}

impl Best {
    // ties prefer fewer negated left operands, then leaves in order
    fn key(&self) -> (u64, usize, &[usize], &PlanNode) {
        (self.width, self.negated, &self.leaves, &self.node)
    }

    fn better_than(&self, other: &Best) -> bool {
        self.key().cmp(&other.key()) == Ordering::Less
    }
}

struct Search<'a> {
    catalog: &'a BinaryCatalog,
    arity: usize,
    chain_only: bool,
    options: &'a SearchOptions,
    widths: &'a mut HashMap<(i64, i64), u64>,
    memo: HashMap<(Form, usize), Option<Best>>,
    single_ops: Option<Vec<(Form, PlanNode)>>,
}

impl Search<'_> {
    fn width(&mut self, p: i64, q: i64) -> Result<u64, WidthError> {
        if let Some(&w) = self.widths.get(&(p, q)) {
            return Ok(w);
        }
        let cover = digit_op_width(&[p, q], self.options.width_base, self.options.carry_in)?;
        let w = cover.term_count() as u64;
        self.widths.insert((p, q), w);
        Ok(w)
    }

    /// Trees of exactly `j1` operations used as the smaller operand.
    fn operands(&mut self, j1: usize) -> Vec<(Form, PlanNode)> {
        match j1 {
            0 => (0..self.arity).map(|i| (unit(i), PlanNode::Leaf(i))).collect(),
            1 => {
                if self.single_ops.is_none() {
                    let mut ops = Vec::new();
                    for &(p, q) in self.catalog.members() {
                        for a in 0..self.arity {
                            for b in 0..self.arity {
                                ops.push((
                                    combine(p, &unit(a), q, &unit(b)),
                                    PlanNode::Op {
                                        p,
                                        q,
                                        left: Box::new(PlanNode::Leaf(a)),
                                        right: Box::new(PlanNode::Leaf(b)),
                                    },
                                ));
                            }
                        }
                    }
                    self.single_ops = Some(ops);
                }
                self.single_ops.clone().unwrap_or_default()
            }
            _ => unreachable!("operand subtrees have at most one operation when j <= {MAX_FUNCTIONS}"),
        }
    }

    /// Cheapest tree with exactly `j` operations computing `t`.
    fn best(&mut self, t: Form, j: usize) -> Result<Option<Best>, WidthError> {
        if support(&t) > j + 1 || t.iter().all(|&c| c == 0) {
            return Ok(None);
        }
        if j == 0 {
            return Ok((0..self.arity).find(|&i| t == unit(i)).map(|i| Best {
                width: 0,
                negated: 0,
                leaves: vec![i],
                node: PlanNode::Leaf(i),
            }));
        }
        if let Some(hit) = self.memo.get(&(t, j)) {
            return Ok(hit.clone());
        }
        let mut best: Option<Best> = None;
        let max_small = if self.chain_only { 0 } else { (j - 1) / 2 };
        for j1 in 0..=max_small {
            let j2 = j - 1 - j1;
            let small = self.operands(j1);
            let members = self.catalog.members().to_vec();
            for (u, u_node) in &small {
                let u_width: u64 = {
                    let mut w = 0;
                    for (p, q) in u_node.operations() {
                        w += self.width(p, q)?;
                    }
                    w
                };
                for &(p, q) in &members {
                    // small operand on the right, then on the left
                    for small_left in [false, true] {
                        let v = if small_left { solve(&t, p, u, q) } else { solve(&t, q, u, p) };
                        let Some(v) = v else { continue };
                        if support(&v) > j2 + 1 {
                            continue;
                        }
                        let Some(sub) = self.best(v, j2)? else { continue };
                        let (left, right) = if small_left {
                            (u_node.clone(), sub.node.clone())
                        } else {
                            (sub.node.clone(), u_node.clone())
                        };
                        let node = PlanNode::Op {
                            p,
                            q,
                            left: Box::new(left),
                            right: Box::new(right),
                        };
                        if self.chain_only && !node.is_chain() {
                            continue;
                        }
                        let mut leaves = Vec::new();
                        node.leaves(&mut leaves);
                        let negated = node.operations().iter().filter(|(p, _)| *p < 0).count();
                        let candidate = Best {
                            width: self.width(p, q)? + u_width + sub.width,
                            negated,
                            leaves,
                            node,
                        };
                        if best.as_ref().map_or(true, |b| candidate.better_than(b)) {
                            best = Some(candidate);
                        }
                    }
                }
            }
        }
        self.memo.insert((t, j), best.clone());
        Ok(best)
    }

    fn minimum(&mut self, t: Form) -> Result<Option<(usize, Best)>, WidthError> {
        for j in 0..=self.options.max_functions {
            if let Some(b) = self.best(t, j)? {
                return Ok(Some((j, b)));
            }
        }
        Ok(None)
    }
}

fn plan_of(best: Best, widths: &HashMap<(i64, i64), u64>) -> DecompositionPlan {
    let members = best
        .node
        .operations()
        .into_iter()
        .map(|(p, q)| MemberWidth { p, q, width: widths[&(p, q)] })
        .collect();
    DecompositionPlan {
        function_count: best.node.function_count(),
        compound_width: best.width,
        is_chain: best.node.is_chain(),
        root: best.node,
        members,
    }
}

/// Minimum number of catalog operations computing `target`, and among
/// those the plan with the smallest compound width.
pub fn complexity_search(
    target: &[i64],
    catalog: &BinaryCatalog,
    options: &SearchOptions,
) -> Result<ComplexityReport, WidthError> {
    if target.is_empty() || target.len() > MAX_ARITY {
        return Err(WidthError::InvalidTarget(format!(
            "arity {} outside 1..={MAX_ARITY}",
            target.len()
        )));
    }
    if target.iter().all(|&c| c == 0) {
        return Err(WidthError::InvalidTarget("all coefficients are zero".into()));
    }
    let bound = catalog.bound();
    if let Some(c) = target.iter().find(|c| c.abs() > bound) {
        return Err(WidthError::InvalidTarget(format!(
            "coefficient {c} exceeds the catalog bound {bound}"
        )));
    }
    if options.max_functions > MAX_FUNCTIONS {
        return Err(WidthError::InvalidTarget(format!(
            "max_functions {} above {MAX_FUNCTIONS}",
            options.max_functions
        )));
    }
    let mut t = [0; MAX_ARITY];
    t[..target.len()].copy_from_slice(target);

    let mut widths = HashMap::new();
    let run = |chain_only: bool, widths: &mut HashMap<(i64, i64), u64>| {
        let mut search = Search {
            catalog,
            arity: target.len(),
            chain_only,
            options,
            widths,
            memo: HashMap::new(),
            single_ops: None,
        };
        search.minimum(t)?.ok_or(WidthError::NoPlanFound {
            max_functions: options.max_functions,
        })
    };
    let (complexity, tree) = run(false, &mut widths)?;
    let (chain_complexity, chain) = run(true, &mut widths)?;
    Ok(ComplexityReport {
        target: target.to_vec(),
        width_base: options.width_base,
        carry_in: options.carry_in,
        complexity,
        difficulty: tree.width,
        plan: plan_of(tree, &widths),
        chain_complexity,
        chain_difficulty: chain.width,
        chain_plan: plan_of(chain, &widths),
    })
}
