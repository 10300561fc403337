use std::collections::BTreeSet;

use super::{Atom, AtomLabel, Regex, RegexError};
use crate::symbols::{SymbolId, SymbolTable};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Bar,
    Amp,
    Bang,
    /// `Opt(`, the function-call spelling of `?`.
    OptCall,
    Name(String),
    Post(char),
}

const SPECIAL: &str = "()[]|&!";

/// Splits text into tokens. A run of ordinary characters is one name, so
/// `q+aa` is a single symbol; trailing `*`, `+`, `?` on a run are postfix
/// operators.
fn lex(text: &str) -> Result<Vec<(usize, Tok)>, RegexError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if SPECIAL.contains(c) {
            let t = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '|' => Tok::Bar,
                '&' => Tok::Amp,
                _ => Tok::Bang,
            };
            out.push((i, t));
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() && !SPECIAL.contains(chars[i]) {
            i += 1;
        }
        let run: String = chars[start..i].iter().collect();
        let name = run.trim_end_matches(['*', '+', '?']);
        if !name.is_empty() {
            if name == "Opt" && name.len() == run.len() && chars.get(i) == Some(&'(') {
                out.push((start, Tok::OptCall));
                i += 1;
                continue;
            }
            if name.contains(':') {
                return Err(RegexError::PairAtom(name.to_string()));
            }
            out.push((start, Tok::Name(name.to_string())));
        }
        for (k, op) in run[name.len()..].chars().enumerate() {
            out.push((start + name.chars().count() + k, Tok::Post(op)));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    symbols: &'a SymbolTable,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn err<X>(&self, msg: &str) -> Result<X, RegexError> {
        Err(RegexError::Syntax {
            pos: self.offset(),
            msg: msg.to_string(),
        })
    }

    fn union(&mut self) -> Result<Regex, RegexError> {
        let mut parts = vec![self.intersect()?];
        while self.peek() == Some(&Tok::Bar) {
            self.pos += 1;
            parts.push(self.intersect()?);
        }
        Ok(Regex::union(parts))
    }

    fn intersect(&mut self) -> Result<Regex, RegexError> {
        let mut parts = vec![self.concat()?];
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            parts.push(self.concat()?);
        }
        Ok(Regex::intersect(parts))
    }

    fn concat(&mut self) -> Result<Regex, RegexError> {
        let mut parts = Vec::new();
        while let Some(t) = self.peek() {
            if matches!(t, Tok::Bar | Tok::Amp | Tok::RParen | Tok::RBracket) {
                break;
            }
            parts.push(self.unary()?);
        }
        if parts.is_empty() {
            return self.err("expected an expression");
        }
        Ok(Regex::concat(parts))
    }

    fn unary(&mut self) -> Result<Regex, RegexError> {
        if self.peek() == Some(&Tok::Bang) {
            self.pos += 1;
            return Ok(Regex::complement(self.unary()?));
        }
        let mut r = self.primary()?;
        while let Some(Tok::Post(op)) = self.peek() {
            let b = Box::new(r);
            r = match op {
                '*' => Regex::Star(b),
                '+' => Regex::Plus(b),
                _ => Regex::Optional(b),
            };
            self.pos += 1;
        }
        Ok(r)
    }

    fn close_paren(&mut self) -> Result<(), RegexError> {
        if self.peek() != Some(&Tok::RParen) {
            return self.err("expected `)`");
        }
        self.pos += 1;
        Ok(())
    }

    fn resolve(&self, pos: usize, name: &str) -> Result<BTreeSet<SymbolId>, RegexError> {
        self.symbols
            .resolve(name)
            .map_err(|_| RegexError::UnknownName {
                pos,
                name: name.to_string(),
            })
    }

    fn primary(&mut self) -> Result<Regex, RegexError> {
        let Some((pos, tok)) = self.toks.get(self.pos).cloned() else {
            return self.err("unexpected end of expression");
        };
        match tok {
            Tok::LParen => {
                self.pos += 1;
                let r = self.union()?;
                self.close_paren()?;
                Ok(r)
            }
            Tok::OptCall => {
                self.pos += 1;
                let r = self.union()?;
                self.close_paren()?;
                Ok(Regex::Optional(Box::new(r)))
            }
            Tok::LBracket => {
                self.pos += 1;
                let mut names = Vec::new();
                let mut members = BTreeSet::new();
                while let Some((p, Tok::Name(n))) = self.toks.get(self.pos).cloned() {
                    members.extend(self.resolve(p, &n)?);
                    names.push(n);
                    self.pos += 1;
                }
                if self.peek() != Some(&Tok::RBracket) {
                    return self.err("expected a name or `]`");
                }
                if names.is_empty() {
                    return self.err("empty class `[]`");
                }
                self.pos += 1;
                Ok(Regex::Atom(Atom {
                    label: AtomLabel::Set(names),
                    members,
                }))
            }
            Tok::Name(n) => {
                self.pos += 1;
                Ok(match n.as_str() {
                    "." => Regex::Any,
                    "#" => Regex::Boundary,
                    _ => Regex::Atom(Atom {
                        members: self.resolve(pos, &n)?,
                        label: AtomLabel::Name(n),
                    }),
                })
            }
            Tok::Post(_) => self.err("postfix operator without an operand"),
            _ => self.err("unexpected token"),
        }
    }
}

/// Parses the expression grammar: names, `[...]` classes, `.` and `#` atoms;
/// postfix `*` `+` `?`; prefix `!`; juxtaposition for concatenation; then `&`
/// and, loosest, `|`. `Opt(x)` means `x?`.
pub fn parse_regex(text: &str, symbols: &SymbolTable) -> Result<Regex, RegexError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.chars().count(),
        symbols,
    };
    let r = p.union()?;
    if p.pos != p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> SymbolTable {
        let mut t = SymbolTable::with_symbols(["'", "aa", "b", "z", "s", "q+aa", "iy"]).unwrap();
        let seg: Vec<_> = ["aa", "b", "z", "s", "iy"].iter().map(|n| t.get(n).unwrap()).collect();
        t.define_class("SEG", seg).unwrap();
        let alv = [t.get("z").unwrap(), t.get("s").unwrap()];
        t.define_class("alv", alv).unwrap();
        t
    }

    fn atom(t: &SymbolTable, n: &str) -> Regex {
        Regex::Atom(Atom {
            label: AtomLabel::Name(n.into()),
            members: t.resolve(n).unwrap(),
        })
    }

    #[test]
    fn word_initial_left_context() {
        let t = table();
        let r = parse_regex("# '?", &t).unwrap();
        assert_eq!(
            r,
            Regex::Concat(vec![Regex::Boundary, Regex::Optional(Box::new(atom(&t, "'")))])
        );
    }

    #[test]
    fn collapsed_segment_context() {
        let t = table();
        let r = parse_regex("('? SEG)+ '?", &t).unwrap();
        let stress = || Box::new(atom(&t, "'"));
        assert_eq!(
            r,
            Regex::Concat(vec![
                Regex::Plus(Box::new(Regex::Concat(vec![
                    Regex::Optional(stress()),
                    atom(&t, "SEG")
                ]))),
                Regex::Optional(stress()),
            ])
        );
        assert_eq!(parse_regex("(Opt(') SEG)+ Opt(')", &t).unwrap(), r);
    }

    #[test]
    fn simple_atoms() {
        let t = table();
        assert_eq!(parse_regex(".", &t).unwrap(), Regex::Any);
        assert_eq!(parse_regex("q+aa", &t).unwrap(), atom(&t, "q+aa"));
        assert_eq!(
            parse_regex("aa+", &t).unwrap(),
            Regex::Plus(Box::new(atom(&t, "aa")))
        );
        assert_eq!(
            parse_regex("q+aa*", &t).unwrap(),
            Regex::Star(Box::new(atom(&t, "q+aa")))
        );
    }

    #[test]
    fn precedence() {
        let t = table();
        let r = parse_regex("aa b | !z & s*", &t).unwrap();
        assert_eq!(
            r,
            Regex::Union(vec![
                Regex::Concat(vec![atom(&t, "aa"), atom(&t, "b")]),
                Regex::Intersect(vec![
                    Regex::complement(atom(&t, "z")),
                    Regex::Star(Box::new(atom(&t, "s"))),
                ]),
            ])
        );
    }

    #[test]
    fn ad_hoc_class_of_classes() {
        let t = table();
        let Regex::Atom(a) = parse_regex("[alv b]", &t).unwrap() else {
            panic!("expected atom")
        };
        assert_eq!(a.members.len(), 3);
    }

    #[test]
    fn errors() {
        let t = table();
        assert_eq!(
            parse_regex("aa nope", &t).unwrap_err(),
            RegexError::UnknownName { pos: 3, name: "nope".into() }
        );
        assert!(matches!(parse_regex("(aa", &t), Err(RegexError::Syntax { pos: 3, .. })));
        assert!(matches!(parse_regex("", &t), Err(RegexError::Syntax { .. })));
        assert!(matches!(parse_regex("aa | ", &t), Err(RegexError::Syntax { .. })));
        assert!(matches!(parse_regex("[]", &t), Err(RegexError::Syntax { .. })));
        assert!(matches!(parse_regex("* aa", &t), Err(RegexError::Syntax { pos: 0, .. })));
        assert_eq!(parse_regex("aa:ao", &t).unwrap_err(), RegexError::PairAtom("aa:ao".into()));
    }

    #[test]
    fn printer_round_trip() {
        let t = table();
        for text in [
            "# '?",
            "('? SEG)+ '?",
            "!(. | #)* & # .*",
            "(aa | b)* z?",
            "[alv b] !!q+aa+",
            "(!aa)* (b z)+",
            "((aa b) z)",
        ] {
            let r = parse_regex(text, &t).unwrap();
            let printed = r.to_string();
            assert_eq!(parse_regex(&printed, &t).unwrap(), r, "{text} -> {printed}");
        }
    }
}
