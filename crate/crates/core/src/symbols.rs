//! Symbol tables, symbol classes and the pair alphabet shared by all machines.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// The word-boundary symbol. Always present, always id 0.
pub const BOUNDARY: &str = "#";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolId(pub u32);

impl SymbolId {
    pub const BOUNDARY: SymbolId = SymbolId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Index of an (input, output) pair inside an [`Alphabet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairId(pub u32);

impl PairId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SymbolError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unknown symbol or class `{0}`")]
    UnknownName(String),
    #[error("invalid symbol name `{0}`")]
    InvalidName(String),
    #[error("class name `{0}` collides with a symbol or another class")]
    NameCollision(String),
    #[error("class `{0}` is empty")]
    EmptyClass(String),
    #[error("pair ({0}:{1}) mixes the boundary with another symbol")]
    BoundaryPair(String, String),
    #[error("symbol id {0} is not in the table")]
    BadId(u32),
}

/// Ordered inventory of symbol names plus named classes of symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolTable {
    names: Vec<String>,
    index: HashMap<String, SymbolId>,
    classes: BTreeMap<String, BTreeSet<SymbolId>>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        Self::new()
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name.chars().any(|c| c.is_whitespace() || "()[]|&!\":;".contains(c))
        && !name.ends_with(['*', '+', '?'])
}

impl SymbolTable {
    pub fn new() -> Self {
        let mut t = SymbolTable {
            names: Vec::new(),
            index: HashMap::new(),
            classes: BTreeMap::new(),
        };
        t.names.push(BOUNDARY.to_string());
        t.index.insert(BOUNDARY.to_string(), SymbolId::BOUNDARY);
        t
    }

    pub fn with_symbols<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<Self, SymbolError> {
        let mut t = Self::new();
        for n in names {
            t.intern(n)?;
        }
        Ok(t)
    }

    /// Returns the id of `name`, adding it if absent.
    pub fn intern(&mut self, name: &str) -> Result<SymbolId, SymbolError> {
        if let Some(&id) = self.index.get(name) {
            return Ok(id);
        }
        if !valid_name(name) {
            return Err(SymbolError::InvalidName(name.to_string()));
        }
        if self.classes.contains_key(name) {
            return Err(SymbolError::NameCollision(name.to_string()));
        }
        let id = SymbolId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn get(&self, name: &str) -> Option<SymbolId> {
        self.index.get(name).copied()
    }

    pub fn lookup(&self, name: &str) -> Result<SymbolId, SymbolError> {
        self.get(name).ok_or_else(|| SymbolError::UnknownSymbol(name.to_string()))
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.names[id.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains_id(&self, id: SymbolId) -> bool {
        id.index() < self.names.len()
    }

    /// All symbol ids, boundary first.
    pub fn ids(&self) -> impl Iterator<Item = SymbolId> + '_ {
        (0..self.names.len() as u32).map(SymbolId)
    }

    pub fn define_class(
        &mut self,
        name: &str,
        members: impl IntoIterator<Item = SymbolId>,
    ) -> Result<(), SymbolError> {
        if !valid_name(name) {
            return Err(SymbolError::InvalidName(name.to_string()));
        }
        if self.index.contains_key(name) || self.classes.contains_key(name) {
            return Err(SymbolError::NameCollision(name.to_string()));
        }
        let set: BTreeSet<SymbolId> = members.into_iter().collect();
        if set.is_empty() {
            return Err(SymbolError::EmptyClass(name.to_string()));
        }
        if let Some(bad) = set.iter().find(|id| !self.contains_id(**id)) {
            return Err(SymbolError::BadId(bad.0));
        }
        self.classes.insert(name.to_string(), set);
        Ok(())
    }

    pub fn class(&self, name: &str) -> Option<&BTreeSet<SymbolId>> {
        self.classes.get(name)
    }

    pub fn classes(&self) -> impl Iterator<Item = (&str, &BTreeSet<SymbolId>)> {
        self.classes.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Resolves a symbol or class name to a set of symbols.
    pub fn resolve(&self, name: &str) -> Result<BTreeSet<SymbolId>, SymbolError> {
        if let Some(id) = self.get(name) {
            return Ok(BTreeSet::from([id]));
        }
        self.class(name)
            .cloned()
            .ok_or_else(|| SymbolError::UnknownName(name.to_string()))
    }

    /// True when one table's symbols are a prefix of the other's, so ids agree
    /// on every symbol both know.
    pub fn is_compatible(&self, other: &SymbolTable) -> bool {
        let n = self.names.len().min(other.names.len());
        self.names[..n] == other.names[..n]
    }

    /// Parses a symbol file: one `name id` per line. Ids must be dense; `#`
    /// may be omitted, otherwise it must carry id 0.
    pub fn parse_symbol_file(text: &str) -> Result<Self, SymbolError> {
        let mut t = Self::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |msg: &str| SymbolError::Syntax {
                line: n + 1,
                msg: msg.to_string(),
            };
            let mut parts = line.split_whitespace();
            let (Some(name), Some(id), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(syntax("expected `name id`"));
            };
            let id: u32 = id.parse().map_err(|_| syntax("symbol id is not an integer"))?;
            if name == BOUNDARY {
                if id != 0 {
                    return Err(syntax("`#` must have id 0"));
                }
                continue;
            }
            if id as usize != t.len() {
                return Err(syntax("symbol ids must be dense and ascending from 0"));
            }
            if t.get(name).is_some() {
                return Err(syntax("duplicate symbol"));
            }
            t.intern(name).map_err(|e| syntax(&e.to_string()))?;
        }
        Ok(t)
    }

    pub fn to_symbol_file(&self) -> String {
        let mut out = String::new();
        for (i, n) in self.names.iter().enumerate() {
            out.push_str(&format!("{n} {i}\n"));
        }
        out
    }

    /// Adds classes from a class file: `classname: member member ...`, one
    /// class per line. Members are symbols or previously defined classes.
    /// Lines starting with `;` are comments.
    pub fn parse_class_file(&mut self, text: &str) -> Result<(), SymbolError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with(';') {
                continue;
            }
            let syntax = |msg: String| SymbolError::Syntax { line: n + 1, msg };
            let (name, rest) = line
                .split_once(':')
                .ok_or_else(|| syntax("expected `classname: members...`".into()))?;
            let mut members = BTreeSet::new();
            for m in rest.split_whitespace() {
                members.extend(self.resolve(m).map_err(|e| syntax(e.to_string()))?);
            }
            self.define_class(name.trim(), members)
                .map_err(|e| syntax(e.to_string()))?;
        }
        Ok(())
    }

    pub fn to_class_file(&self) -> String {
        let mut out = String::new();
        for (name, members) in &self.classes {
            out.push_str(name);
            out.push(':');
            for m in members {
                out.push(' ');
                out.push_str(self.name(*m));
            }
            out.push('\n');
        }
        out
    }
}

/// The finite, declared inventory of (input, output) pairs that label arcs.
///
/// Pairs are kept sorted, so two alphabets built from the same pair set over
/// the same table are identical. `(#, #)` is always a member and is the only
/// pair that mentions the boundary.
#[derive(Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Arc<SymbolTable>,
    pairs: Vec<(SymbolId, SymbolId)>,
    index: HashMap<(SymbolId, SymbolId), PairId>,
    by_input: Vec<Vec<PairId>>,
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.ids().map(|p| self.pair_name(p)).collect();
        f.debug_struct("Alphabet").field("pairs", &names).finish()
    }
}

impl Alphabet {
    pub fn new(
        symbols: Arc<SymbolTable>,
        pairs: impl IntoIterator<Item = (SymbolId, SymbolId)>,
    ) -> Result<Arc<Self>, SymbolError> {
        let mut set: BTreeSet<(SymbolId, SymbolId)> = pairs.into_iter().collect();
        set.insert((SymbolId::BOUNDARY, SymbolId::BOUNDARY));
        for &(i, o) in &set {
            for s in [i, o] {
                if !symbols.contains_id(s) {
                    return Err(SymbolError::BadId(s.0));
                }
            }
            if (i == SymbolId::BOUNDARY) != (o == SymbolId::BOUNDARY) {
                return Err(SymbolError::BoundaryPair(
                    symbols.name(i).to_string(),
                    symbols.name(o).to_string(),
                ));
            }
        }
        let pairs: Vec<_> = set.into_iter().collect();
        let index = pairs
            .iter()
            .enumerate()
            .map(|(k, &p)| (p, PairId(k as u32)))
            .collect();
        let mut by_input = vec![Vec::new(); symbols.len()];
        for (k, &(i, _)) in pairs.iter().enumerate() {
            by_input[i.index()].push(PairId(k as u32));
        }
        Ok(Arc::new(Alphabet {
            symbols,
            pairs,
            index,
            by_input,
        }))
    }

    /// Identity pairs `(s, s)` for every symbol of the table.
    pub fn identity(symbols: Arc<SymbolTable>) -> Arc<Self> {
        let pairs: Vec<_> = symbols.ids().map(|s| (s, s)).collect();
        Self::new(symbols, pairs).expect("identity pairs are always valid")
    }

    pub fn symbols(&self) -> &Arc<SymbolTable> {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = PairId> + '_ {
        (0..self.pairs.len() as u32).map(PairId)
    }

    pub fn pair(&self, id: PairId) -> (SymbolId, SymbolId) {
        self.pairs[id.index()]
    }

    pub fn input(&self, id: PairId) -> SymbolId {
        self.pairs[id.index()].0
    }

    pub fn output(&self, id: PairId) -> SymbolId {
        self.pairs[id.index()].1
    }

    pub fn find(&self, input: SymbolId, output: SymbolId) -> Option<PairId> {
        self.index.get(&(input, output)).copied()
    }

    pub fn boundary(&self) -> PairId {
        self.find(SymbolId::BOUNDARY, SymbolId::BOUNDARY)
            .expect("boundary pair is always present")
    }

    /// Pairs whose input side is `input`.
    pub fn with_input(&self, input: SymbolId) -> &[PairId] {
        self.by_input
            .get(input.index())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Every pair except `(#, #)`.
    pub fn non_boundary(&self) -> impl Iterator<Item = PairId> + '_ {
        let b = self.boundary();
        self.ids().filter(move |&p| p != b)
    }

    pub fn pair_name(&self, id: PairId) -> String {
        let (i, o) = self.pair(id);
        format!("{}:{}", self.symbols.name(i), self.symbols.name(o))
    }

    /// Same pair set over compatible symbol tables.
    pub fn same_as(&self, other: &Alphabet) -> bool {
        std::ptr::eq(self, other)
            || (self.pairs == other.pairs && self.symbols.is_compatible(&other.symbols))
    }

    /// Input projection of a pair string.
    pub fn inputs(&self, s: &[PairId]) -> Vec<SymbolId> {
        s.iter().map(|&p| self.input(p)).collect()
    }

    pub fn outputs(&self, s: &[PairId]) -> Vec<SymbolId> {
        s.iter().map(|&p| self.output(p)).collect()
    }

    /// Renders a pair string as `in:out in:out ...`.
    pub fn format_pairs(&self, s: &[PairId]) -> String {
        s.iter()
            .map(|&p| self.pair_name(p))
            .collect::<Vec<_>>()
            .join(" ")
    }
}
