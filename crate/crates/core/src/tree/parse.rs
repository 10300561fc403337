//! The tree file format, an s-expression syntax:
//!
//! ```text
//! ; comment
//! (symbols "symbols.txt")            or (symbols a b c)
//! (classes "classes.txt")            or (class NAME a b)
//! (tree PHONE
//!   (node 1 (left :lambda "# '?" :rho "." 2)
//!           (right :lambda "..." :rho "." 3))
//!   (leaf 2 (out 0.5) (other 0.5))
//!   (leaf 3 (PHONE 1.0)))
//! ```
//!
//! Paths are relative to the tree file. A context written as `.` alone
//! means any string, the same as `.*`; an omitted context means the same.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use super::{Branch, DecisionTree, Forest, Leaf, NodeId, TreeError, TreeNode};
use crate::regex::{parse_regex, Regex};
use crate::symbols::{SymbolId, SymbolTable};

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    col: usize,
}

#[derive(Debug)]
enum Sexp {
    Atom(String, Pos),
    Str(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::Str(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

fn syntax(p: Pos, msg: impl Into<String>) -> TreeError {
    TreeError::Syntax {
        line: p.line,
        col: p.col,
        msg: msg.into(),
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn skip_blank(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while self.chars.peek().is_some_and(|&c| c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    /// Reads one expression; `None` at end of input or before a `)`.
    fn read(&mut self) -> Result<Option<Sexp>, TreeError> {
        self.skip_blank();
        let p = self.pos();
        match self.chars.peek().copied() {
            None | Some(')') => Ok(None),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                while let Some(e) = self.read()? {
                    items.push(e);
                }
                if self.bump() != Some(')') {
                    return Err(syntax(p, "unclosed `(`"));
                }
                Ok(Some(Sexp::List(items, p)))
            }
            Some('"') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(syntax(p, "unterminated string")),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some(c) => s.push(c),
                            None => return Err(syntax(p, "unterminated string")),
                        },
                        Some(c) => s.push(c),
                    }
                }
                Ok(Some(Sexp::Str(s, p)))
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || "()\";".contains(c) {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Some(Sexp::Atom(s, p)))
            }
        }
    }
}

fn read_all(text: &str) -> Result<Vec<Sexp>, TreeError> {
    let mut r = Reader {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        if let Some(e) = r.read()? {
            out.push(e);
        } else if r.chars.peek().is_some() {
            return Err(syntax(r.pos(), "unexpected `)`"));
        } else {
            return Ok(out);
        }
    }
}

fn atom(e: &Sexp) -> Result<&str, TreeError> {
    match e {
        Sexp::Atom(s, _) => Ok(s),
        _ => Err(syntax(e.pos(), "expected a name")),
    }
}

fn list(e: &Sexp) -> Result<(&[Sexp], Pos), TreeError> {
    match e {
        Sexp::List(v, p) => Ok((v, *p)),
        _ => Err(syntax(e.pos(), "expected a list")),
    }
}

fn head(items: &[Sexp], p: Pos) -> Result<&str, TreeError> {
    items.first().ok_or_else(|| syntax(p, "empty list")).and_then(atom)
}

fn node_id(e: &Sexp) -> Result<NodeId, TreeError> {
    atom(e)?
        .parse()
        .map_err(|_| syntax(e.pos(), "node ids are non-negative integers"))
}

fn read_file(base: &Path, e: &Sexp) -> Result<String, TreeError> {
    let Sexp::Str(rel, _) = e else {
        return Err(syntax(e.pos(), "expected a quoted path"));
    };
    let path = base.join(rel);
    std::fs::read_to_string(&path).map_err(|err| TreeError::Io {
        path: path.display().to_string(),
        msg: err.to_string(),
    })
}

fn symbol(t: &SymbolTable, e: &Sexp) -> Result<SymbolId, TreeError> {
    let name = atom(e)?;
    t.get(name).ok_or_else(|| TreeError::UnknownSymbol {
        line: e.pos().line,
        col: e.pos().col,
        name: name.to_string(),
    })
}

/// Parses a context. The string's position is reported for regex errors.
fn context(t: &SymbolTable, e: Option<&Sexp>) -> Result<Regex, TreeError> {
    let Some(e) = e else {
        return Ok(Regex::any_string());
    };
    let Sexp::Str(text, p) = e else {
        return Err(syntax(e.pos(), "expected a quoted regular expression"));
    };
    if text.trim() == "." {
        return Ok(Regex::any_string());
    }
    parse_regex(text, t).map_err(|source| TreeError::Regex {
        line: p.line,
        col: p.col,
        source,
    })
}

fn branch(t: &SymbolTable, e: &Sexp, side: &str) -> Result<Branch, TreeError> {
    let (items, p) = list(e)?;
    if head(items, p)? != side {
        return Err(syntax(p, format!("expected `({side} ...)`")));
    }
    let (mut lambda, mut rho, mut child) = (None, None, None);
    let mut k = 1;
    while k < items.len() {
        match &items[k] {
            Sexp::Atom(kw, kp) if kw.starts_with(':') => {
                let value = items.get(k + 1).ok_or_else(|| syntax(*kp, "keyword without a value"))?;
                match kw.as_str() {
                    ":lambda" => lambda = Some(value),
                    ":rho" => rho = Some(value),
                    _ => return Err(syntax(*kp, format!("unknown keyword `{kw}`"))),
                }
                k += 2;
            }
            other => {
                if child.is_some() {
                    return Err(syntax(other.pos(), "more than one child id"));
                }
                child = Some(node_id(other)?);
                k += 1;
            }
        }
    }
    Ok(Branch {
        lambda: context(t, lambda)?,
        rho: context(t, rho)?,
        child: child.ok_or_else(|| syntax(p, "branch without a child id"))?,
    })
}

fn tree(t: &SymbolTable, items: &[Sexp], p: Pos) -> Result<DecisionTree, TreeError> {
    let phone = symbol(t, items.get(1).ok_or_else(|| syntax(p, "tree without a symbol"))?)?;
    let mut nodes = BTreeMap::new();
    for e in &items[2..] {
        let (parts, np) = list(e)?;
        let kind = head(parts, np)?;
        let id = node_id(parts.get(1).ok_or_else(|| syntax(np, "missing node id"))?)?;
        let node = match kind {
            "node" => {
                let [_, _, l, r] = parts else {
                    return Err(syntax(np, "expected `(node ID (left ...) (right ...))`"));
                };
                TreeNode::Internal {
                    left: branch(t, l, "left")?,
                    right: branch(t, r, "right")?,
                }
            }
            "leaf" => {
                let mut dist = Vec::new();
                for o in &parts[2..] {
                    let (op, opos) = list(o)?;
                    let [s, prob] = op else {
                        return Err(syntax(opos, "expected `(output probability)`"));
                    };
                    let prob: f64 = atom(prob)?
                        .parse()
                        .map_err(|_| syntax(prob.pos(), "probability is not a number"))?;
                    dist.push((symbol(t, s)?, prob));
                }
                TreeNode::Leaf(Leaf::new(dist).map_err(|msg| TreeError::Distribution {
                    line: np.line,
                    col: np.col,
                    leaf: id,
                    msg,
                })?)
            }
            _ => return Err(syntax(np, format!("expected `node` or `leaf`, found `{kind}`"))),
        };
        if nodes.insert(id, node).is_some() {
            return Err(syntax(np, format!("node {id} is defined twice")));
        }
    }
    if nodes.is_empty() {
        return Err(syntax(p, "tree without nodes"));
    }
    DecisionTree::new(t, phone, nodes)
}

/// Parses a forest; relative paths in `symbols` and `classes` forms are
/// resolved against `base`.
pub fn parse_forest(text: &str, base: &Path) -> Result<Forest, TreeError> {
    let forms = read_all(text)?;
    let mut table = SymbolTable::new();
    let sym_err = |p: Pos, e: crate::symbols::SymbolError| syntax(p, e.to_string());
    // symbols and classes first, in file order, so trees may come anywhere
    for f in &forms {
        let (items, p) = list(f)?;
        match head(items, p)? {
            "symbols" => match items.get(1) {
                Some(file @ Sexp::Str(..)) => {
                    let loaded = SymbolTable::parse_symbol_file(&read_file(base, file)?)
                        .map_err(|e| sym_err(p, e))?;
                    for s in loaded.ids().skip(1) {
                        table.intern(loaded.name(s)).map_err(|e| sym_err(p, e))?;
                    }
                }
                _ => {
                    for s in &items[1..] {
                        table.intern(atom(s)?).map_err(|e| sym_err(s.pos(), e))?;
                    }
                }
            },
            "classes" => {
                let file = items.get(1).ok_or_else(|| syntax(p, "expected a quoted path"))?;
                table
                    .parse_class_file(&read_file(base, file)?)
                    .map_err(|e| sym_err(p, e))?;
            }
            "class" => {
                let name = atom(items.get(1).ok_or_else(|| syntax(p, "class without a name"))?)?;
                let mut members = Vec::new();
                for m in &items[2..] {
                    let set = table.resolve(atom(m)?).map_err(|_| TreeError::UnknownSymbol {
                        line: m.pos().line,
                        col: m.pos().col,
                        name: atom(m).unwrap_or_default().to_string(),
                    })?;
                    members.extend(set);
                }
                table.define_class(name, members).map_err(|e| sym_err(p, e))?;
            }
            "tree" => {}
            other => return Err(syntax(p, format!("unknown form `{other}`"))),
        }
    }
    let mut trees: Vec<DecisionTree> = Vec::new();
    for f in &forms {
        let (items, p) = list(f)?;
        if head(items, p)? == "tree" {
            let t = tree(&table, items, p)?;
            if trees.iter().any(|u| u.phone() == t.phone()) {
                return Err(TreeError::DuplicatePhone {
                    line: p.line,
                    col: p.col,
                    phone: table.name(t.phone()).to_string(),
                });
            }
            trees.push(t);
        }
    }
    Forest::new(Arc::new(table), trees)
}

/// Reads and parses a tree file.
pub fn load_forest(path: &Path) -> Result<Forest, TreeError> {
    let text = std::fs::read_to_string(path).map_err(|e| TreeError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_forest(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r##"
; two symbols, one tree
(symbols a b c)
(class AB a b)
(tree a
  (node 1 (left :lambda "# AB?" :rho "." 2)
          (right :lambda "!(# AB?) & # .*" 3))
  (leaf 2 (b 0.25) (a 0.75))
  (leaf 3 (a 1.0) (c 0)))
"##;

    fn parse(text: &str) -> Result<Forest, TreeError> {
        parse_forest(text, Path::new("."))
    }

    #[test]
    fn small_forest() {
        let f = parse(SMALL).unwrap();
        let t = f.symbols();
        assert_eq!(t.len(), 4);
        assert_eq!(f.trees().len(), 1);
        let tree = &f.trees()[0];
        assert_eq!(tree.phone(), t.get("a").unwrap());
        let TreeNode::Internal { left, right } = tree.node(1) else {
            panic!("root should be internal")
        };
        assert_eq!(left.rho, Regex::any_string());
        assert_eq!(right.rho, Regex::any_string());
        assert_eq!(left.lambda.to_string(), "# AB?");
        let TreeNode::Leaf(l3) = tree.node(3) else { panic!() };
        assert_eq!(l3.dist().len(), 1);
        // (a,a) (b,b) (c,c) (#,#) plus (a,b); (a,c) has probability zero
        assert_eq!(f.alphabet().len(), 5);
    }

    #[test]
    fn printed_forest_parses_back() {
        let f = parse(SMALL).unwrap();
        let text = f.to_tree_file();
        let g = parse(&text).unwrap();
        assert_eq!(g.trees(), f.trees());
        assert_eq!(g.to_tree_file(), text);
    }

    fn err_at(text: &str) -> (usize, usize) {
        match parse(text).unwrap_err() {
            TreeError::Syntax { line, col, .. }
            | TreeError::Regex { line, col, .. }
            | TreeError::UnknownSymbol { line, col, .. }
            | TreeError::DuplicatePhone { line, col, .. }
            | TreeError::Distribution { line, col, .. } => (line, col),
            e => panic!("no position in {e:?}"),
        }
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(err_at("(symbols a)\n(tree zz (leaf 1 (a 1)))"), (2, 7));
        assert_eq!(err_at("(symbols a)\n(tree a\n (leaf 1 (a 0.5)))"), (3, 2));
        assert_eq!(err_at("(symbols a)\n(tree a (leaf 1 (a 1)))\n(tree a (leaf 1 (a 1)))"), (3, 1));
        assert_eq!(
            err_at("(symbols a)\n(tree a (node 1 (left :lambda \"a (\" 2) (right 3)) (leaf 2 (a 1)) (leaf 3 (a 1)))"),
            (2, 31)
        );
        assert_eq!(err_at("(symbols a"), (1, 1));
        assert_eq!(err_at("(symbols a))"), (1, 12));
        assert!(matches!(
            parse("(symbols a)\n(tree a (node 1 (left 2) (right 3)) (leaf 2 (a 1)))"),
            Err(TreeError::Structure { .. })
        ));
    }

    #[test]
    fn empty_file_is_an_empty_forest() {
        let f = parse("; nothing here\n").unwrap();
        assert!(f.is_empty());
        assert_eq!(f.alphabet().len(), 1);
    }

    #[test]
    fn files_relative_to_tree_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("s.txt"), "# 0\nx 1\ny 2\n").unwrap();
        std::fs::write(dir.path().join("c.txt"), "XY: x y\n").unwrap();
        let tree = "(symbols \"s.txt\")\n(classes \"c.txt\")\n(tree x (leaf 1 (y 1.0)))\n";
        std::fs::write(dir.path().join("f.trees"), tree).unwrap();
        let f = load_forest(&dir.path().join("f.trees")).unwrap();
        assert!(f.symbols().class("XY").is_some());
        assert_eq!(f.alphabet().len(), 4);
    }
}
