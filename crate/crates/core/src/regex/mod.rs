//! Regular expressions over input symbols and symbol classes.
//!
//! Expressions describe the *input* side only. When compiled against a pair
//! alphabet, an atom over input symbols `C` becomes the set of all pairs whose
//! input lies in `C`, whatever their output.

mod compile;
mod matcher;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::symbols::SymbolId;

pub use compile::compile_regex;
pub use matcher::{ends_from, matches, matches_prefix, matches_suffix};
pub use parse::parse_regex;

#[derive(Debug, Error, PartialEq)]
pub enum RegexError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol or class `{name}` at {pos}")]
    UnknownName { pos: usize, name: String },
    #[error("pair-level atom `{0}` is reserved syntax and not supported")]
    PairAtom(String),
    #[error("atom `{0}` matches no pair of the alphabet")]
    EmptyAtom(String),
}

/// How an atom was written, kept so it prints back the same way.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AtomLabel {
    /// A symbol or class name.
    Name(String),
    /// An ad-hoc class `[a b c]`.
    Set(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub label: AtomLabel,
    pub members: BTreeSet<SymbolId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Regex {
    Atom(Atom),
    /// Any single non-boundary symbol.
    Any,
    /// The boundary symbol `#`.
    Boundary,
    Concat(Vec<Regex>),
    Union(Vec<Regex>),
    Intersect(Vec<Regex>),
    Complement(Box<Regex>),
    Star(Box<Regex>),
    Plus(Box<Regex>),
    Optional(Box<Regex>),
}

impl Regex {
    /// `.*`, i.e. every string of non-boundary symbols.
    pub fn any_string() -> Regex {
        Regex::Star(Box::new(Regex::Any))
    }

    pub fn concat(parts: Vec<Regex>) -> Regex {
        if parts.len() == 1 {
            parts.into_iter().next().unwrap()
        } else {
            Regex::Concat(parts)
        }
    }

    pub fn union(parts: Vec<Regex>) -> Regex {
        if parts.len() == 1 {
            parts.into_iter().next().unwrap()
        } else {
            Regex::Union(parts)
        }
    }

    pub fn intersect(parts: Vec<Regex>) -> Regex {
        if parts.len() == 1 {
            parts.into_iter().next().unwrap()
        } else {
            Regex::Intersect(parts)
        }
    }

    pub fn complement(r: Regex) -> Regex {
        Regex::Complement(Box::new(r))
    }

    pub fn has_complement(&self) -> bool {
        match self {
            Regex::Atom(_) | Regex::Any | Regex::Boundary => false,
            Regex::Complement(_) => true,
            Regex::Concat(v) | Regex::Union(v) | Regex::Intersect(v) => {
                v.iter().any(Regex::has_complement)
            }
            Regex::Star(r) | Regex::Plus(r) | Regex::Optional(r) => r.has_complement(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Regex::Union(_) => 0,
            Regex::Intersect(_) => 1,
            Regex::Concat(_) => 2,
            Regex::Complement(_) => 3,
            Regex::Star(_) | Regex::Plus(_) | Regex::Optional(_) => 4,
            Regex::Atom(_) | Regex::Any | Regex::Boundary => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            f.write_str("(")?;
        }
        let join = |f: &mut fmt::Formatter<'_>, v: &[Regex], sep: &str, child: u8| {
            for (k, r) in v.iter().enumerate() {
                if k > 0 {
                    f.write_str(sep)?;
                }
                r.write_at(f, child)?;
            }
            Ok(())
        };
        match self {
            Regex::Atom(a) => match &a.label {
                AtomLabel::Name(n) => f.write_str(n)?,
                AtomLabel::Set(ns) => write!(f, "[{}]", ns.join(" "))?,
            },
            Regex::Any => f.write_str(".")?,
            Regex::Boundary => f.write_str("#")?,
            Regex::Union(v) => join(f, v, " | ", 1)?,
            Regex::Intersect(v) => join(f, v, " & ", 2)?,
            Regex::Concat(v) => join(f, v, " ", 3)?,
            Regex::Complement(r) => {
                f.write_str("!")?;
                r.write_at(f, 3)?;
            }
            Regex::Star(r) => {
                r.write_at(f, 4)?;
                f.write_str("*")?;
            }
            Regex::Plus(r) => {
                r.write_at(f, 4)?;
                f.write_str("+")?;
            }
            Regex::Optional(r) => {
                r.write_at(f, 4)?;
                f.write_str("?")?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Canonical text form; parsing it yields the same tree.
impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}
