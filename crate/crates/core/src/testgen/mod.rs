//! Random forests and rules, the positional rule oracle, and exhaustive
//! string enumeration. The oracle uses the regex matcher only, never the
//! automata.

mod selftest;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::regex::{matches_prefix, matches_suffix, Atom, AtomLabel, Regex};
use crate::rules::{RuleError, WeightedRule};
use crate::symbols::{Alphabet, PairId, SymbolId, SymbolTable};
use crate::tree::{interpret, Branch, DecisionTree, Forest, Leaf, NodeId, TreeNode};

pub use selftest::{best_path_agrees, selftest, CheckResult};

const NAMES: [&str; 4] = ["a", "b", "c", "d"];

/// Largest number of strings [`enumerate_pairs`] will produce.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("{0}")]
    Config(String),
    #[error("enumeration would produce about {estimate} strings, over the budget of {ENUMERATION_BUDGET}")]
    TooMany { estimate: u128 },
}

/// Bounds for random forests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub num_input_symbols: usize,
    pub outputs_per_symbol: usize,
    pub max_depth: usize,
    pub max_string_len: usize,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            num_input_symbols: 3,
            outputs_per_symbol: 2,
            max_depth: 2,
            max_string_len: 4,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn check(&self) -> Result<(), GenError> {
        let bad = |what: &str, v: usize, lo: usize, hi: usize| {
            if v < lo || v > hi {
                Err(GenError::Config(format!("{what} = {v} is outside {lo}..={hi}")))
            } else {
                Ok(())
            }
        };
        bad("num_input_symbols", self.num_input_symbols, 1, 4)?;
        bad("outputs_per_symbol", self.outputs_per_symbol, 1, 3)?;
        bad("max_depth", self.max_depth, 0, 3)?;
        bad("max_string_len", self.max_string_len, 1, 5)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        GenConfig { seed, ..self }
    }
}

fn atom(t: &SymbolTable, name: &str) -> Regex {
    Regex::Atom(Atom {
        label: AtomLabel::Name(name.to_string()),
        members: t.resolve(name).expect("generator names exist"),
    })
}

/// `(. | #)*`, any string at all.
fn anything() -> Regex {
    Regex::Star(Box::new(Regex::Union(vec![Regex::Any, Regex::Boundary])))
}

/// A small random expression over `names`, with `.` and `#` mixed in.
pub fn gen_regex(rng: &mut ChaCha8Rng, t: &SymbolTable, names: &[&str], depth: usize) -> Regex {
    if depth == 0 || rng.gen_bool(0.35) {
        return match rng.gen_range(0..10) {
            0 => Regex::Any,
            1 => Regex::Boundary,
            _ => atom(t, names.choose(rng).expect("names are non-empty")),
        };
    }
    let op = rng.gen_range(0..9);
    let mut sub = || gen_regex(rng, t, names, depth - 1);
    match op {
        0..=2 => Regex::Concat(vec![sub(), sub()]),
        3 | 4 => Regex::Union(vec![sub(), sub()]),
        5 => Regex::Star(Box::new(sub())),
        6 => Regex::Optional(Box::new(sub())),
        7 => Regex::Plus(Box::new(sub())),
        _ => Regex::complement(sub()),
    }
}

/// A node question on one side and its exact complement among the
/// contexts a word position can have.
fn question(rng: &mut ChaCha8Rng, t: &SymbolTable, names: &[&str]) -> (Branch, Branch) {
    let r = gen_regex(rng, t, names, 2);
    let any = Regex::any_string;
    let (left, right) = if rng.gen_bool(0.5) {
        // left contexts are `# .*`
        let not_r = Regex::Intersect(vec![
            Regex::complement(Regex::Concat(vec![anything(), r.clone()])),
            Regex::Concat(vec![Regex::Boundary, any()]),
        ]);
        ((r, any()), (not_r, any()))
    } else {
        // right contexts are `.* #`
        let not_r = Regex::Intersect(vec![
            Regex::complement(Regex::Concat(vec![r.clone(), anything()])),
            Regex::Concat(vec![any(), Regex::Boundary]),
        ]);
        ((any(), r), (any(), not_r))
    };
    let b = |(lambda, rho): (Regex, Regex)| Branch { lambda, rho, child: 0 };
    (b(left), b(right))
}

fn gen_leaf(rng: &mut ChaCha8Rng, outputs: &[SymbolId]) -> Leaf {
    let k = rng.gen_range(1..=outputs.len());
    let chosen: Vec<SymbolId> = outputs.choose_multiple(rng, k).copied().collect();
    let raw: Vec<f64> = chosen.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    Leaf::new(chosen.into_iter().zip(raw.into_iter().map(|r| r / sum))).expect("normalized")
}

fn gen_nodes(
    rng: &mut ChaCha8Rng,
    t: &SymbolTable,
    names: &[&str],
    outputs: &[SymbolId],
    id: NodeId,
    depth: usize,
    nodes: &mut BTreeMap<NodeId, TreeNode>,
) {
    if depth == 0 || !rng.gen_bool(0.75) {
        nodes.insert(id, TreeNode::Leaf(gen_leaf(rng, outputs)));
        return;
    }
    let (mut left, mut right) = question(rng, t, names);
    left.child = 2 * id;
    right.child = 2 * id + 1;
    gen_nodes(rng, t, names, outputs, 2 * id, depth - 1, nodes);
    gen_nodes(rng, t, names, outputs, 2 * id + 1, depth - 1, nodes);
    nodes.insert(id, TreeNode::Internal { left, right });
}

/// Leaves reached by some position of some string no longer than `max_len`.
fn reached_leaves(tree: &DecisionTree, symbols: &[SymbolId], max_len: usize) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::new();
    for x in input_strings(symbols, max_len) {
        let mut w = vec![SymbolId::BOUNDARY];
        w.extend(&x);
        w.push(SymbolId::BOUNDARY);
        for i in 1..=x.len() {
            if w[i] == tree.phone() {
                if let Ok(r) = interpret(tree, &w, i) {
                    seen.insert(r.leaf);
                }
            }
        }
    }
    seen
}

/// Every string over `symbols` of length `0..=max_len`, shortest first.
pub fn input_strings(symbols: &[SymbolId], max_len: usize) -> Vec<Vec<SymbolId>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &c in symbols {
                let mut v: Vec<SymbolId> = s.clone();
                v.push(c);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// A random forest whose branches are exact complements, so every
/// position reaches exactly one leaf. Trees with a leaf no short string
/// reaches are redrawn.
pub fn gen_forest(cfg: &GenConfig) -> Result<Forest, GenError> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let names = &NAMES[..cfg.num_input_symbols];
    let mut t = SymbolTable::with_symbols(names.iter().copied()).expect("valid names");
    if names.len() >= 2 {
        t.define_class("V", [SymbolId(1), SymbolId(2)]).expect("fresh class");
    }
    let mut atoms: Vec<&str> = names.to_vec();
    if names.len() >= 2 {
        atoms.push("V");
    }
    let symbols: Vec<SymbolId> = t.ids().skip(1).collect();
    let mut phones: Vec<SymbolId> = symbols.iter().copied().filter(|_| rng.gen_bool(0.75)).collect();
    if phones.is_empty() {
        phones.push(*symbols.choose(&mut rng).expect("at least one symbol"));
    }
    let reach_len = cfg.max_string_len.min(4);
    let mut trees = Vec::new();
    for phone in phones {
        let k = rng.gen_range(1..=cfg.outputs_per_symbol);
        let outputs: Vec<SymbolId> = symbols.choose_multiple(&mut rng, k).copied().collect();
        let mut tree = None;
        for _attempt in 0..50 {
            let mut nodes = BTreeMap::new();
            gen_nodes(&mut rng, &t, &atoms, &outputs, 1, cfg.max_depth, &mut nodes);
            let candidate = DecisionTree::new(&t, phone, nodes).expect("generated trees are well formed");
            let leaves = candidate.leaves().len();
            if reached_leaves(&candidate, &symbols, reach_len).len() == leaves {
                tree = Some(candidate);
                break;
            }
        }
        trees.push(tree.unwrap_or_else(|| DecisionTree::single_leaf(phone, gen_leaf(&mut rng, &outputs))));
    }
    Ok(Forest::new(Arc::new(t), trees).expect("generated forests are valid"))
}

/// The small alphabet for random rules: inputs `a b`, outputs `a b c`.
pub fn rule_alphabet() -> Arc<Alphabet> {
    let t = Arc::new(SymbolTable::with_symbols(["a", "b", "c"]).expect("valid names"));
    let pairs = (1..=2).flat_map(|i| (1..=3).map(move |o| (SymbolId(i), SymbolId(o))));
    Alphabet::new(t, pairs).expect("valid pairs")
}

/// A random rule over `alphabet` with one or two context expressions per
/// side, each over the alphabet's input symbols.
pub fn gen_rule(alphabet: &Arc<Alphabet>, seed: u64) -> Result<WeightedRule, RuleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = alphabet.symbols();
    let inputs: BTreeSet<SymbolId> = alphabet.non_boundary().map(|p| alphabet.input(p)).collect();
    let outputs: Vec<SymbolId> = alphabet
        .non_boundary()
        .map(|p| alphabet.output(p))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let inputs: Vec<SymbolId> = inputs.into_iter().collect();
    let names: Vec<&str> = inputs.iter().map(|&s| t.name(s)).collect();
    let phi = *inputs.choose(&mut rng).expect("non-empty alphabet");
    let psi = gen_leaf(&mut rng, &outputs).weights().collect();
    let side = |rng: &mut ChaCha8Rng| {
        (0..rng.gen_range(1..=2))
            .map(|_| gen_regex(rng, t, &names, 2))
            .collect::<Vec<_>>()
    };
    let lambdas = side(&mut rng);
    let rhos = side(&mut rng);
    WeightedRule::new(alphabet, phi, psi, lambdas, rhos)
}

/// The weight a rule gives a boundary-wrapped pair string, evaluated
/// position by position with the regex matcher.
pub fn oracle_rule_weight(rule: &WeightedRule, alphabet: &Alphabet, s: &[PairId]) -> f64 {
    let x = alphabet.inputs(s);
    let mut total = 0.0;
    for (i, &p) in s.iter().enumerate() {
        if x[i] != rule.phi {
            continue;
        }
        let applies = rule.lambda_exprs.iter().all(|r| matches_suffix(r, &x[..i]))
            && rule.rho_exprs.iter().all(|r| matches_prefix(r, &x[i + 1..]));
        if applies {
            match rule.psi.get(&alphabet.output(p)) {
                Some(w) => total += w,
                None => return f64::INFINITY,
            }
        }
    }
    total
}

/// Boundary-wrapped pair strings `# p1 .. pk #` for `k` in `1..=max_len`,
/// shortest first, in label order within a length.
pub struct PairStrings {
    boundary: PairId,
    labels: Vec<PairId>,
    max_len: usize,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for PairStrings {
    type Item = Vec<PairId>;

    fn next(&mut self) -> Option<Vec<PairId>> {
        if self.done {
            return None;
        }
        let mut out = Vec::with_capacity(self.digits.len() + 2);
        out.push(self.boundary);
        out.extend(self.digits.iter().map(|&d| self.labels[d]));
        out.push(self.boundary);
        let n = self.labels.len();
        match (0..self.digits.len()).rev().find(|&k| self.digits[k] + 1 < n) {
            Some(k) => {
                self.digits[k] += 1;
                self.digits[k + 1..].iter_mut().for_each(|d| *d = 0);
            }
            None if self.digits.len() < self.max_len => {
                self.digits = vec![0; self.digits.len() + 1];
            }
            None => self.done = true,
        }
        Some(out)
    }
}

/// All pair strings up to `max_len`, refusing when there would be more than
/// [`ENUMERATION_BUDGET`].
pub fn enumerate_pairs(alphabet: &Alphabet, max_len: usize) -> Result<PairStrings, GenError> {
    let labels: Vec<PairId> = alphabet.non_boundary().collect();
    let n = labels.len() as u128;
    let estimate: u128 = (1..=max_len as u32).map(|k| n.saturating_pow(k)).fold(0u128, u128::saturating_add);
    if estimate > ENUMERATION_BUDGET {
        return Err(GenError::TooMany { estimate });
    }
    Ok(PairStrings {
        boundary: alphabet.boundary(),
        done: labels.is_empty() || max_len == 0,
        labels,
        max_len,
        digits: vec![0],
    })
}
