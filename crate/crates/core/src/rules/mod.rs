//! Leaf rules and their compilation. Each leaf of a tree becomes a weighted
//! rewrite rule `phi -> psi / lambda __ rho`; a tree is the intersection of
//! its leaf rules and a forest the intersection of its trees.

mod decode;
mod validate;
mod verify;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::fst::{self, FstError, StateId, Wfsa};
use crate::regex::{compile_regex, Regex, RegexError};
use crate::symbols::{Alphabet, PairId, SymbolId};
use crate::tree::{DecisionTree, Forest, NodeId, TreeNode};
use crate::weight::{Scalar, Tropical};

pub use decode::{decode, Decoded, PAD};
pub use validate::{shortest_string, validate_forest, validate_tree, Issue, IssueKind};
pub use verify::{verify_forest, Mismatch, VerifyReport};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("tree `{phone}`: leaf {leaf} can never be reached")]
    UnreachableLeaf { phone: String, leaf: NodeId },
    #[error("node {0} is not a leaf of this tree")]
    NotALeaf(NodeId),
    #[error("the forest accepts no string; its trees are inconsistent")]
    DegenerateForest,
    #[error("no path through the decoding cascade")]
    NoParse,
    #[error(transparent)]
    Regex(#[from] RegexError),
    #[error(transparent)]
    Fst(#[from] FstError),
}

/// `phi -> psi / lambda __ rho`. The contexts are kept both as the source
/// expressions (one per branch on the leaf's path) and as machines for
/// `Σ*λ` and `ρΣ*`.
#[derive(Clone, Debug)]
pub struct WeightedRule {
    pub phi: SymbolId,
    /// Output symbol to weight `-ln p`.
    pub psi: BTreeMap<SymbolId, f64>,
    pub lambda_exprs: Vec<Regex>,
    pub rho_exprs: Vec<Regex>,
    pub lambda: Wfsa,
    pub rho: Wfsa,
}

impl WeightedRule {
    /// Compiles the contexts: `λ = ∩ Σ*λ_p` and `ρ = ∩ ρ_pΣ*`.
    pub fn new(
        alphabet: &Arc<Alphabet>,
        phi: SymbolId,
        psi: BTreeMap<SymbolId, f64>,
        lambda_exprs: Vec<Regex>,
        rho_exprs: Vec<Regex>,
    ) -> Result<Self, RuleError> {
        let sigma = Wfsa::universal(alphabet.clone());
        let mut lambda = sigma.clone();
        for r in &lambda_exprs {
            let m = fst::concat(&sigma, &compile_regex(r, alphabet)?)?;
            lambda = fst::intersect(&lambda, &m)?;
        }
        let mut rho = sigma.clone();
        for r in &rho_exprs {
            let m = fst::concat(&compile_regex(r, alphabet)?, &sigma)?;
            rho = fst::intersect(&rho, &m)?;
        }
        Ok(WeightedRule {
            phi,
            psi,
            lambda,
            rho,
            lambda_exprs,
            rho_exprs,
        })
    }

    /// True when no boundary-wrapped string has a position matching both
    /// contexts.
    pub fn can_never_fire(&self) -> Result<bool, RuleError> {
        let ab = self.lambda.alphabet();
        let (left, right) = word_contexts(ab);
        Ok(fst::intersect(&self.lambda, &left)?.is_empty_language()
            || fst::intersect(&self.rho, &right)?.is_empty_language())
    }
}

/// Machines for the possible left contexts `# .*` and right contexts `.* #`
/// of a position inside a wrapped word.
pub(crate) fn word_contexts(ab: &Arc<Alphabet>) -> (Wfsa, Wfsa) {
    let boundary = Wfsa::symbol_set(ab.clone(), [ab.boundary()]);
    let inner = Wfsa::closure_of(ab.clone(), ab.non_boundary());
    let left = fst::concat(&boundary, &inner).expect("shared alphabet");
    let right = fst::concat(&inner, &boundary).expect("shared alphabet");
    (left, right)
}

/// The rule for `leaf`: contexts intersected along the root-to-leaf path.
pub fn extract_rule(tree: &DecisionTree, leaf: NodeId, alphabet: &Arc<Alphabet>) -> Result<WeightedRule, RuleError> {
    let (Some(path), TreeNode::Leaf(l)) = (tree.path_to(leaf), tree.node(leaf)) else {
        return Err(RuleError::NotALeaf(leaf));
    };
    let lambdas = path.iter().map(|b| b.lambda.clone()).collect();
    let rhos = path.iter().map(|b| b.rho.clone()).collect();
    let rule = WeightedRule::new(alphabet, tree.phone(), l.weights().collect(), lambdas, rhos)?;
    if rule.can_never_fire()? {
        return Err(RuleError::UnreachableLeaf {
            phone: alphabet.symbols().name(tree.phone()).to_string(),
            leaf,
        });
    }
    Ok(rule)
}

/// A complete deterministic machine as a transition table.
struct Table {
    start: StateId,
    next: Vec<Vec<StateId>>,
    fin: Vec<bool>,
}

impl Table {
    fn new(m: &Wfsa) -> Result<Self, FstError> {
        let d = fst::complete(&fst::determinize_unweighted(m)?);
        let n = d.num_states();
        let mut next = vec![vec![0; d.alphabet().len()]; n];
        for q in d.state_ids() {
            for t in d.arcs(q) {
                next[q as usize][t.label.index()] = t.next;
            }
        }
        Ok(Table {
            start: d.start().expect("completed machines have a start"),
            fin: d.state_ids().map(|q| d.is_final(q)).collect(),
            next,
        })
    }
}

/// Compiles a rule to a machine giving each string the sum of `psi` weights
/// over positions where the rule applies, and infinity when such a position
/// has an output outside `psi`. Other positions are unconstrained.
///
/// The left context is tracked by a DFA for `Σ*λ` read forwards. The right
/// context is tracked by a DFA for the reversal of `ρΣ*`, read backwards:
/// each arc guesses the state that DFA reaches on the rest of the string,
/// and only the guess consistent with the true suffix reaches a final
/// state. So every string has at most one accepting path.
pub fn compile_rule<T: Scalar>(rule: &WeightedRule) -> Result<Wfsa<T>, RuleError> {
    let ab = rule.lambda.alphabet().clone();
    rule.lambda.check_same_alphabet(&rule.rho)?;
    let left = Table::new(&rule.lambda)?;
    let right = Table::new(&fst::reverse(&rule.rho))?;
    let nl = ab.len();
    // prev[r][label] = states r' with next[r'][label] == r
    let mut prev: Vec<Vec<Vec<StateId>>> = vec![vec![Vec::new(); nl]; right.next.len()];
    for (r, row) in right.next.iter().enumerate() {
        for (label, &to) in row.iter().enumerate() {
            prev[to as usize][label].push(r as StateId);
        }
    }
    let psi: Vec<Option<Tropical<T>>> = ab
        .ids()
        .map(|p| {
            if ab.input(p) != rule.phi {
                return None;
            }
            Some(
                rule.psi
                    .get(&ab.output(p))
                    .map_or(Tropical::zero(), |&w| Tropical::new(T::from_f64_lossy(w)).expect("weights are valid")),
            )
        })
        .collect();

    let mut out = Wfsa::new(ab.clone());
    let init = out.add_state();
    out.set_start(init);
    out.set_final(init, Tropical::one());
    let mut ids: HashMap<(StateId, StateId), StateId> = HashMap::new();
    let mut queue: Vec<((StateId, StateId), StateId)> = Vec::new();
    let mut intern = |out: &mut Wfsa<T>, key: (StateId, StateId), queue: &mut Vec<_>| {
        *ids.entry(key).or_insert_with(|| {
            let s = out.add_state();
            if key.1 == right.start {
                out.set_final(s, Tropical::one());
            }
            queue.push((key, s));
            s
        })
    };
    let arc_weight = |l: StateId, r_next: StateId, label: PairId| -> Tropical<T> {
        match psi[label.index()] {
            Some(w) if left.fin[l as usize] && right.fin[r_next as usize] => w,
            _ => Tropical::one(),
        }
    };
    for label in ab.ids() {
        let l_next = left.next[left.start as usize][label.index()];
        for r_next in 0..right.next.len() as StateId {
            let w = arc_weight(left.start, r_next, label);
            if !w.is_zero() {
                let dst = intern(&mut out, (l_next, r_next), &mut queue);
                out.add_arc(init, label, w, dst);
            }
        }
    }
    let mut head = 0;
    while head < queue.len() {
        let ((l, r), src) = queue[head];
        head += 1;
        for label in ab.ids() {
            let l_next = left.next[l as usize][label.index()];
            for &r_next in &prev[r as usize][label.index()] {
                let w = arc_weight(l, r_next, label);
                if !w.is_zero() {
                    let dst = intern(&mut out, (l_next, r_next), &mut queue);
                    out.add_arc(src, label, w, dst);
                }
            }
        }
    }
    Ok(out.trim())
}

/// Intersection of the tree's leaf rules, over `alphabet`.
pub fn compile_tree<T: Scalar>(tree: &DecisionTree, alphabet: &Arc<Alphabet>) -> Result<Wfsa<T>, RuleError> {
    let mut acc: Option<Wfsa<T>> = None;
    for (leaf, _) in tree.leaves() {
        let m = compile_rule(&extract_rule(tree, leaf, alphabet)?)?;
        acc = Some(match acc {
            None => m,
            Some(a) => fst::intersect(&a, &m)?,
        });
    }
    Ok(acc.expect("a tree has at least one leaf").trim())
}

/// Pairs a symbol without a tree may use: only its identity pair.
fn untreed_constraint<T: Scalar>(forest: &Forest) -> Wfsa<T> {
    let ab = forest.alphabet();
    let allowed: Vec<PairId> = ab
        .ids()
        .filter(|&p| ab.input(p) == ab.output(p) || forest.tree_for(ab.input(p)).is_some())
        .collect();
    Wfsa::closure_of(ab.clone(), allowed)
}

/// Intersection of every tree machine and the identity constraint for
/// symbols without a tree.
pub fn compile_forest<T: Scalar>(forest: &Forest) -> Result<Wfsa<T>, RuleError> {
    let mut acc = untreed_constraint(forest);
    for t in forest.trees() {
        acc = fst::intersect(&acc, &compile_tree(t, forest.alphabet())?)?;
    }
    finish_forest(acc)
}

fn finish_forest<T: Scalar>(m: Wfsa<T>) -> Result<Wfsa<T>, RuleError> {
    let m = m.trim();
    if m.is_empty_language() {
        return Err(RuleError::DegenerateForest);
    }
    Ok(m)
}

/// One row of the compile report.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub phone: String,
    pub leaves: usize,
    pub states: usize,
    pub arcs: usize,
    pub seconds: f64,
}

/// Per-tree sizes and compile times, the compiled tree machines in forest
/// order, and the forest machine.
pub struct CompileOutput<T: Scalar> {
    pub rows: Vec<ReportRow>,
    pub trees: Vec<Wfsa<T>>,
    pub forest: Wfsa<T>,
}

/// Compiles a forest while timing each tree.
pub fn compile_report<T: Scalar>(forest: &Forest) -> Result<CompileOutput<T>, RuleError> {
    let symbols = forest.symbols();
    let mut rows = Vec::new();
    let mut trees = Vec::new();
    let mut acc = untreed_constraint(forest);
    for t in forest.trees() {
        let clock = Instant::now();
        let m: Wfsa<T> = compile_tree(t, forest.alphabet())?;
        let seconds = clock.elapsed().as_secs_f64();
        let stats = m.stats();
        rows.push(ReportRow {
            phone: symbols.name(t.phone()).to_string(),
            leaves: t.leaves().len(),
            states: stats.states,
            arcs: stats.arcs,
            seconds,
        });
        acc = fst::intersect(&acc, &m)?;
        trees.push(m);
    }
    Ok(CompileOutput {
        rows,
        trees,
        forest: finish_forest(acc)?,
    })
}

/// Column sums of a report.
pub fn report_totals(rows: &[ReportRow]) -> ReportRow {
    rows.iter().fold(
        ReportRow {
            phone: "total".into(),
            leaves: 0,
            states: 0,
            arcs: 0,
            seconds: 0.0,
        },
        |acc, r| ReportRow {
            phone: acc.phone,
            leaves: acc.leaves + r.leaves,
            states: acc.states + r.states,
            arcs: acc.arcs + r.arcs,
            seconds: acc.seconds + r.seconds,
        },
    )
}
