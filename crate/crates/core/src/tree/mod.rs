//! Decision trees whose questions are regular expressions over the input
//! string and whose leaves give a distribution over rewrites of one symbol.

mod interp;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::regex::{Regex, RegexError};
use crate::symbols::{Alphabet, SymbolId, SymbolTable};

pub use interp::{forest_weight, interpret, interpret_forest, match_context, InterpretError, Realization};
pub use parse::{load_forest, parse_forest};

pub type NodeId = u32;

/// Leaf probabilities must sum to one within this tolerance.
pub const DIST_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: {source}")]
    Regex {
        line: usize,
        col: usize,
        source: RegexError,
    },
    #[error("{line}:{col}: unknown symbol `{name}`")]
    UnknownSymbol { line: usize, col: usize, name: String },
    #[error("{line}:{col}: a tree for `{phone}` already exists")]
    DuplicatePhone { line: usize, col: usize, phone: String },
    #[error("{line}:{col}: leaf {leaf}: {msg}")]
    Distribution {
        line: usize,
        col: usize,
        leaf: NodeId,
        msg: String,
    },
    #[error("tree `{phone}`: {msg}")]
    Structure { phone: String, msg: String },
    #[error("cannot read `{path}`: {msg}")]
    Io { path: String, msg: String },
}

/// One outgoing edge of an internal node: a partial left and right context.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub lambda: Regex,
    pub rho: Regex,
    pub child: NodeId,
}

/// A leaf's output distribution. Zero-probability outcomes are not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Leaf {
    dist: Vec<(SymbolId, f64)>,
}

impl Leaf {
    pub fn new(dist: impl IntoIterator<Item = (SymbolId, f64)>) -> Result<Self, String> {
        let mut seen = BTreeSet::new();
        let mut kept = Vec::new();
        for (o, p) in dist {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("probability {p} is outside [0, 1]"));
            }
            if !seen.insert(o) {
                return Err("duplicate output symbol".to_string());
            }
            if p > 0.0 {
                kept.push((o, p));
            }
        }
        if kept.is_empty() {
            return Err("empty distribution".to_string());
        }
        let sum: f64 = kept.iter().map(|d| d.1).sum();
        if (sum - 1.0).abs() > DIST_TOLERANCE {
            return Err(format!("probabilities sum to {sum}, not 1"));
        }
        Ok(Leaf { dist: kept })
    }

    pub fn dist(&self) -> &[(SymbolId, f64)] {
        &self.dist
    }

    /// Outputs with their weights `-ln p`.
    pub fn weights(&self) -> impl Iterator<Item = (SymbolId, f64)> + '_ {
        self.dist.iter().map(|&(o, p)| (o, -p.ln() + 0.0))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Internal { left: Branch, right: Branch },
    Leaf(Leaf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    phone: SymbolId,
    root: NodeId,
    nodes: BTreeMap<NodeId, TreeNode>,
}

impl DecisionTree {
    /// Checks that `nodes` form a single tree: every child exists and every
    /// node is reached from the root exactly once.
    pub fn new(
        symbols: &SymbolTable,
        phone: SymbolId,
        nodes: BTreeMap<NodeId, TreeNode>,
    ) -> Result<Self, TreeError> {
        let structure = |msg: String| TreeError::Structure {
            phone: symbols.name(phone).to_string(),
            msg,
        };
        if phone == SymbolId::BOUNDARY {
            return Err(structure("the boundary symbol cannot have a tree".into()));
        }
        let mut parents: BTreeMap<NodeId, usize> = nodes.keys().map(|&k| (k, 0)).collect();
        for node in nodes.values() {
            if let TreeNode::Internal { left, right } = node {
                for c in [left.child, right.child] {
                    *parents
                        .get_mut(&c)
                        .ok_or_else(|| structure(format!("child {c} is not defined")))? += 1;
                }
            }
        }
        let roots: Vec<NodeId> = parents.iter().filter(|(_, &n)| n == 0).map(|(&k, _)| k).collect();
        let [root] = roots[..] else {
            return Err(structure(format!("expected exactly one root, found {}", roots.len())));
        };
        if let Some((k, _)) = parents.iter().find(|(_, &n)| n > 1) {
            return Err(structure(format!("node {k} has more than one parent")));
        }
        // with one root and every other node having one parent, a cycle would
        // leave nodes unreachable
        let mut reached = 0;
        let mut stack = vec![root];
        while let Some(k) = stack.pop() {
            reached += 1;
            if let TreeNode::Internal { left, right } = &nodes[&k] {
                stack.push(left.child);
                stack.push(right.child);
            }
            if reached > nodes.len() {
                break;
            }
        }
        if reached != nodes.len() {
            return Err(structure("nodes are not connected as a tree".into()));
        }
        Ok(DecisionTree { phone, root, nodes })
    }

    /// A tree with one leaf and no questions.
    pub fn single_leaf(phone: SymbolId, leaf: Leaf) -> Self {
        DecisionTree {
            phone,
            root: 1,
            nodes: BTreeMap::from([(1, TreeNode::Leaf(leaf))]),
        }
    }

    pub fn phone(&self) -> SymbolId {
        self.phone
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[&id]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &TreeNode)> {
        self.nodes.iter().map(|(&k, v)| (k, v))
    }

    /// Leaves in depth-first, left-to-right order.
    pub fn leaves(&self) -> Vec<(NodeId, &Leaf)> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(k) = stack.pop() {
            match &self.nodes[&k] {
                TreeNode::Leaf(l) => out.push((k, l)),
                TreeNode::Internal { left, right } => {
                    stack.push(right.child);
                    stack.push(left.child);
                }
            }
        }
        out
    }

    /// Branches traversed from the root to `target`, or `None` if `target`
    /// is not in the tree.
    pub fn path_to(&self, target: NodeId) -> Option<Vec<&Branch>> {
        fn go<'a>(t: &'a DecisionTree, k: NodeId, target: NodeId, path: &mut Vec<&'a Branch>) -> bool {
            if k == target {
                return true;
            }
            if let TreeNode::Internal { left, right } = &t.nodes[&k] {
                for b in [left, right] {
                    path.push(b);
                    if go(t, b.child, target, path) {
                        return true;
                    }
                    path.pop();
                }
            }
            false
        }
        let mut path = Vec::new();
        go(self, self.root, target, &mut path).then_some(path)
    }

    /// Every output symbol mentioned by any leaf.
    pub fn outputs(&self) -> BTreeSet<SymbolId> {
        self.leaves()
            .iter()
            .flat_map(|(_, l)| l.dist().iter().map(|d| d.0))
            .collect()
    }
}

/// A set of trees sharing one symbol table, at most one tree per symbol.
#[derive(Clone, Debug)]
pub struct Forest {
    symbols: Arc<SymbolTable>,
    trees: Vec<DecisionTree>,
    alphabet: Arc<Alphabet>,
}

impl Forest {
    /// The pair alphabet is every identity pair plus `(phone, output)` for
    /// every output of every tree.
    pub fn new(symbols: Arc<SymbolTable>, trees: Vec<DecisionTree>) -> Result<Self, TreeError> {
        let mut phones = BTreeSet::new();
        for t in &trees {
            if !phones.insert(t.phone) {
                return Err(TreeError::Structure {
                    phone: symbols.name(t.phone).to_string(),
                    msg: "more than one tree for this symbol".into(),
                });
            }
        }
        let mut pairs: BTreeSet<(SymbolId, SymbolId)> = symbols.ids().map(|s| (s, s)).collect();
        for t in &trees {
            for o in t.outputs() {
                if o == SymbolId::BOUNDARY {
                    return Err(TreeError::Structure {
                        phone: symbols.name(t.phone).to_string(),
                        msg: "the boundary cannot be an output".into(),
                    });
                }
                pairs.insert((t.phone, o));
            }
        }
        let alphabet = Alphabet::new(symbols.clone(), pairs).map_err(|e| TreeError::Structure {
            phone: String::new(),
            msg: e.to_string(),
        })?;
        Ok(Forest {
            symbols,
            trees,
            alphabet,
        })
    }

    pub fn empty(symbols: Arc<SymbolTable>) -> Self {
        Self::new(symbols, Vec::new()).expect("an empty forest is valid")
    }

    pub fn symbols(&self) -> &Arc<SymbolTable> {
        &self.symbols
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn tree_for(&self, phone: SymbolId) -> Option<&DecisionTree> {
        self.trees.iter().find(|t| t.phone == phone)
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Serializes to the tree-file format with symbols and classes inline.
    pub fn to_tree_file(&self) -> String {
        use std::fmt::Write as _;
        let t = &self.symbols;
        let mut out = String::from("(symbols");
        for s in t.ids().skip(1) {
            let _ = write!(out, " {}", t.name(s));
        }
        out.push_str(")\n");
        for (name, members) in t.classes() {
            let _ = write!(out, "(class {name}");
            for m in members {
                let _ = write!(out, " {}", t.name(*m));
            }
            out.push_str(")\n");
        }
        for tree in &self.trees {
            let _ = writeln!(out, "(tree {}", t.name(tree.phone));
            for (id, node) in &tree.nodes {
                match node {
                    TreeNode::Internal { left, right } => {
                        let _ = writeln!(out, "  (node {id}");
                        for (side, b) in [("left", left), ("right", right)] {
                            let _ = writeln!(
                                out,
                                "    ({side} :lambda \"{}\" :rho \"{}\" {})",
                                b.lambda, b.rho, b.child
                            );
                        }
                        out.truncate(out.len() - 1);
                        out.push_str(")\n");
                    }
                    TreeNode::Leaf(l) => {
                        let _ = write!(out, "  (leaf {id}");
                        for (o, p) in l.dist() {
                            let _ = write!(out, " ({} {p})", t.name(*o));
                        }
                        out.push_str(")\n");
                    }
                }
            }
            out.truncate(out.len() - 1);
            out.push_str(")\n");
        }
        out
    }
}
