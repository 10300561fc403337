//! Checks that the two branches of every node split the contexts reaching
//! that node exactly: no context matches both, and none matches neither.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use super::{word_contexts, RuleError};
use crate::fst::{self, Wfsa};
use crate::regex::compile_regex;
use crate::symbols::{Alphabet, PairId, SymbolId};
use crate::tree::{Branch, DecisionTree, Forest, NodeId, TreeNode};
use crate::weight::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IssueKind {
    /// Some position matches both branches.
    Overlap,
    /// Some position matches neither branch.
    Gap,
    /// No position ever reaches this node.
    Unreachable,
}

/// A failed check with a wrapped input string showing it. For
/// `Unreachable` the witness is empty.
#[derive(Clone, Debug, PartialEq)]
pub struct Issue {
    pub phone: String,
    pub node: NodeId,
    pub kind: IssueKind,
    pub witness: Vec<SymbolId>,
    pub position: usize,
    pub rendered: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            IssueKind::Overlap => "both branches match",
            IssueKind::Gap => "neither branch matches",
            IssueKind::Unreachable => return write!(f, "tree {}, node {}: unreachable", self.phone, self.node),
        };
        write!(
            f,
            "tree {}, node {}: {what} position {} of `{}`",
            self.phone, self.node, self.position, self.rendered
        )
    }
}

/// A shortest accepted string, found breadth first.
pub fn shortest_string<T: Scalar>(m: &Wfsa<T>) -> Option<Vec<PairId>> {
    let start = m.start()?;
    let mut back: Vec<Option<(u32, PairId)>> = vec![None; m.num_states()];
    let mut seen = vec![false; m.num_states()];
    seen[start as usize] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(q) = queue.pop_front() {
        if m.is_final(q) {
            let mut out = Vec::new();
            let mut cur = q;
            while let Some((p, l)) = back[cur as usize] {
                out.push(l);
                cur = p;
            }
            out.reverse();
            return Some(out);
        }
        for t in m.arcs(q) {
            if !t.weight.is_zero() && !seen[t.next as usize] {
                seen[t.next as usize] = true;
                back[t.next as usize] = Some((q, t.label));
                queue.push_back(t.next);
            }
        }
    }
    None
}

struct Checker<'a> {
    ab: &'a Arc<Alphabet>,
    tree: &'a DecisionTree,
    sigma: Wfsa,
    issues: Vec<Issue>,
}

impl Checker<'_> {
    fn meet(&self, a: &Wfsa, b: &Wfsa) -> Result<Wfsa, RuleError> {
        Ok(fst::intersect(a, b)?.trim())
    }

    fn minus(&self, a: &Wfsa, b: &Wfsa) -> Result<Wfsa, RuleError> {
        let not_b = fst::complement(&fst::determinize_unweighted(b)?)?;
        self.meet(a, &not_b)
    }

    fn sides(&self, b: &Branch) -> Result<(Wfsa, Wfsa), RuleError> {
        let left = fst::concat(&self.sigma, &compile_regex(&b.lambda, self.ab)?)?;
        let right = fst::concat(&compile_regex(&b.rho, self.ab)?, &self.sigma)?;
        Ok((left, right))
    }

    fn report(&mut self, node: NodeId, kind: IssueKind, left: &Wfsa, right: &Wfsa) {
        let l = shortest_string(left).expect("checked non-empty");
        let r = shortest_string(right).expect("checked non-empty");
        let mut witness = self.ab.inputs(&l);
        let position = witness.len();
        witness.push(self.tree.phone());
        witness.extend(self.ab.inputs(&r));
        let t = self.ab.symbols();
        let rendered = witness.iter().map(|&s| t.name(s)).collect::<Vec<_>>().join(" ");
        self.issues.push(Issue {
            phone: t.name(self.tree.phone()).to_string(),
            node,
            kind,
            witness,
            position,
            rendered,
        });
    }

    /// `(a, b)` are the left and right contexts that reach `node`.
    fn check(&mut self, node: NodeId, a: &Wfsa, b: &Wfsa) -> Result<(), RuleError> {
        if a.is_empty_language() || b.is_empty_language() {
            self.issues.push(Issue {
                phone: self.ab.symbols().name(self.tree.phone()).to_string(),
                node,
                kind: IssueKind::Unreachable,
                witness: Vec::new(),
                position: 0,
                rendered: String::new(),
            });
            return Ok(());
        }
        let TreeNode::Internal { left, right } = self.tree.node(node) else {
            return Ok(());
        };
        let (al, bl) = self.sides(left)?;
        let (ar, br) = self.sides(right)?;
        let a_l = self.meet(a, &al)?;
        let b_l = self.meet(b, &bl)?;
        let a_r = self.meet(a, &ar)?;
        let b_r = self.meet(b, &br)?;

        let both_a = self.meet(&a_l, &a_r)?;
        let both_b = self.meet(&b_l, &b_r)?;
        if !both_a.is_empty_language() && !both_b.is_empty_language() {
            self.report(node, IssueKind::Overlap, &both_a, &both_b);
        }

        // (x, y) matches neither branch when each branch fails on one side
        let a_not_l = self.minus(a, &al)?;
        let a_not_r = self.minus(a, &ar)?;
        let b_not_l = self.minus(b, &bl)?;
        let b_not_r = self.minus(b, &br)?;
        let a_neither = self.meet(&a_not_l, &a_not_r)?;
        let b_neither = self.meet(&b_not_l, &b_not_r)?;
        let gap = [(&a_neither, b), (&a_not_l, &b_not_r), (&a_not_r, &b_not_l), (a, &b_neither)]
            .into_iter()
            .find(|(x, y)| !x.is_empty_language() && !y.is_empty_language());
        if let Some((x, y)) = gap {
            let (x, y) = (x.clone(), y.clone());
            self.report(node, IssueKind::Gap, &x, &y);
        }

        self.check(left.child, &a_l, &b_l)?;
        self.check(right.child, &a_r, &b_r)
    }
}

/// All partition problems in one tree, in depth-first order.
pub fn validate_tree(tree: &DecisionTree, alphabet: &Arc<Alphabet>) -> Result<Vec<Issue>, RuleError> {
    let (a, b) = word_contexts(alphabet);
    let mut c = Checker {
        ab: alphabet,
        tree,
        sigma: Wfsa::universal(alphabet.clone()),
        issues: Vec::new(),
    };
    c.check(tree.root(), &a, &b)?;
    Ok(c.issues)
}

pub fn validate_forest(forest: &Forest) -> Result<Vec<Issue>, RuleError> {
    let mut out = Vec::new();
    for t in forest.trees() {
        out.extend(validate_tree(t, forest.alphabet())?);
    }
    Ok(out)
}
