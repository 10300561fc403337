//! Direct interpretation of trees on symbol strings, using only the regex
//! matcher. This is the reference the compiled machines are checked against.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{Branch, DecisionTree, Forest, NodeId, TreeNode};
use crate::regex::{matches_prefix, matches_suffix};
use crate::symbols::SymbolId;

#[derive(Debug, Error, PartialEq)]
pub enum InterpretError {
    #[error("at position {position}: neither branch of node {node} matches")]
    PartitionViolation { node: NodeId, position: usize },
    #[error("at position {position}: the tree is for another symbol")]
    WrongPhone { position: usize },
    #[error("position {position} is outside the string or on a boundary")]
    BadPosition { position: usize },
}

/// Outcome at one position: which leaf was reached and its distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub leaf: NodeId,
    /// `(output, probability, weight)`.
    pub outputs: Vec<(SymbolId, f64, f64)>,
}

/// Does position `i` of the wrapped string `x` satisfy the branch? The left
/// context must match a suffix of `x[..i]` and the right one a prefix of
/// `x[i+1..]`.
pub fn match_context(branch: &Branch, x: &[SymbolId], i: usize) -> bool {
    matches_suffix(&branch.lambda, &x[..i]) && matches_prefix(&branch.rho, &x[i + 1..])
}

/// Walks `tree` for position `i` of the wrapped string `x`, taking the left
/// branch when it matches and otherwise the right.
pub fn interpret(tree: &DecisionTree, x: &[SymbolId], i: usize) -> Result<Realization, InterpretError> {
    if i >= x.len() || x[i] == SymbolId::BOUNDARY {
        return Err(InterpretError::BadPosition { position: i });
    }
    if x[i] != tree.phone() {
        return Err(InterpretError::WrongPhone { position: i });
    }
    let mut k = tree.root();
    loop {
        match tree.node(k) {
            TreeNode::Leaf(l) => {
                let outputs = l.dist().iter().map(|&(o, p)| (o, p, -p.ln() + 0.0)).collect();
                return Ok(Realization { leaf: k, outputs });
            }
            TreeNode::Internal { left, right } => {
                k = if match_context(left, x, i) {
                    left.child
                } else if match_context(right, x, i) {
                    right.child
                } else {
                    return Err(InterpretError::PartitionViolation { node: k, position: i });
                };
            }
        }
    }
}

/// Per-symbol output weights for the unwrapped string `x`. Symbols without a
/// tree rewrite to themselves at weight zero.
pub fn interpret_forest(forest: &Forest, x: &[SymbolId]) -> Result<Vec<BTreeMap<SymbolId, f64>>, InterpretError> {
    let wrapped = wrap(x);
    (1..=x.len())
        .map(|i| match forest.tree_for(wrapped[i]) {
            None => Ok(BTreeMap::from([(wrapped[i], 0.0)])),
            Some(t) => Ok(interpret(t, &wrapped, i)?
                .outputs
                .into_iter()
                .map(|(o, _, w)| (o, w))
                .collect()),
        })
        .map(|r| r.map_err(|e| shift(e, 1)))
        .collect()
}

/// Total weight of rewriting `x` as `y`: the sum of per-position weights,
/// or infinity if some output is outside its leaf's support.
pub fn forest_weight(forest: &Forest, x: &[SymbolId], y: &[SymbolId]) -> Result<f64, InterpretError> {
    if x.len() != y.len() {
        return Ok(f64::INFINITY);
    }
    let per = interpret_forest(forest, x)?;
    Ok(per
        .iter()
        .zip(y)
        .map(|(m, o)| m.get(o).copied().unwrap_or(f64::INFINITY))
        .sum())
}

fn wrap(x: &[SymbolId]) -> Vec<SymbolId> {
    let mut w = Vec::with_capacity(x.len() + 2);
    w.push(SymbolId::BOUNDARY);
    w.extend_from_slice(x);
    w.push(SymbolId::BOUNDARY);
    w
}

/// Reports positions relative to the unwrapped string.
fn shift(e: InterpretError, by: usize) -> InterpretError {
    match e {
        InterpretError::PartitionViolation { node, position } => InterpretError::PartitionViolation {
            node,
            position: position - by,
        },
        InterpretError::WrongPhone { position } => InterpretError::WrongPhone { position: position - by },
        InterpretError::BadPosition { position } => InterpretError::BadPosition { position: position - by },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_forest;
    use std::path::Path;

    const FOREST: &str = r##"
(symbols a b)
(tree a
  (node 1 (left :lambda "#" 2) (right :lambda "!(.* #) & .*" :rho "." 3))
  (leaf 2 (b 0.5) (a 0.5))
  (leaf 3 (a 1.0)))
"##;

    fn ids(f: &Forest, s: &str) -> Vec<SymbolId> {
        s.split_whitespace().map(|n| f.symbols().get(n).unwrap()).collect()
    }

    #[test]
    fn word_initial_split() {
        let f = parse_forest(FOREST, Path::new(".")).unwrap();
        let x = ids(&f, "a a b");
        let per = interpret_forest(&f, &x).unwrap();
        let (a, b) = (x[0], x[2]);
        assert_eq!(per[0].len(), 2);
        assert!((per[0][&b] - 2f64.ln()).abs() < 1e-12);
        assert_eq!(per[1], BTreeMap::from([(a, 0.0)]));
        assert_eq!(per[2], BTreeMap::from([(b, 0.0)]));
        assert!((forest_weight(&f, &x, &ids(&f, "b a b")).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(forest_weight(&f, &x, &ids(&f, "a b b")).unwrap(), f64::INFINITY);
        let r = interpret(&f.trees()[0], &[SymbolId(0), a, SymbolId(0)], 1).unwrap();
        assert_eq!(r.leaf, 2);
    }

    #[test]
    fn gap_is_reported() {
        let text = r##"
(symbols a b)
(tree a
  (node 1 (left :lambda "# a" 2) (right :lambda "# b" 3))
  (leaf 2 (a 1.0))
  (leaf 3 (b 1.0)))
"##;
        let f = parse_forest(text, Path::new(".")).unwrap();
        let x = ids(&f, "a");
        assert_eq!(
            interpret_forest(&f, &x).unwrap_err(),
            InterpretError::PartitionViolation { node: 1, position: 0 }
        );
        let tree = &f.trees()[0];
        assert_eq!(
            interpret(tree, &[SymbolId(0), x[0]], 0).unwrap_err(),
            InterpretError::BadPosition { position: 0 }
        );
        let b = f.symbols().get("b").unwrap();
        assert_eq!(
            interpret(tree, &[SymbolId(0), b, SymbolId(0)], 1).unwrap_err(),
            InterpretError::WrongPhone { position: 1 }
        );
    }
}
