//! Direct matcher over symbol strings. Shares no code with the automata; the
//! tree interpreter and the rule oracle use it to check compiled machines.

use super::Regex;
use crate::symbols::SymbolId;

/// End positions `j >= i` such that `s[i..j]` is in the language of `r`,
/// as a membership vector indexed by `j`.
pub fn ends_from(r: &Regex, s: &[SymbolId], i: usize) -> Vec<bool> {
    let n = s.len();
    let mut out = vec![false; n + 1];
    match r {
        Regex::Atom(a) => {
            if i < n && a.members.contains(&s[i]) {
                out[i + 1] = true;
            }
        }
        Regex::Any => {
            if i < n && s[i] != SymbolId::BOUNDARY {
                out[i + 1] = true;
            }
        }
        Regex::Boundary => {
            if i < n && s[i] == SymbolId::BOUNDARY {
                out[i + 1] = true;
            }
        }
        Regex::Concat(parts) => {
            out[i] = true;
            for p in parts {
                out = step(p, s, &out);
            }
        }
        Regex::Union(parts) => {
            for p in parts {
                for (o, e) in out.iter_mut().zip(ends_from(p, s, i)) {
                    *o |= e;
                }
            }
        }
        Regex::Intersect(parts) => {
            out[i..].iter_mut().for_each(|o| *o = true);
            for p in parts {
                for (o, e) in out.iter_mut().zip(ends_from(p, s, i)) {
                    *o &= e;
                }
            }
        }
        Regex::Complement(inner) => {
            let e = ends_from(inner, s, i);
            for j in i..=n {
                out[j] = !e[j];
            }
        }
        Regex::Star(inner) => {
            out[i] = true;
            closure(inner, s, &mut out);
        }
        Regex::Plus(inner) => {
            out = ends_from(inner, s, i);
            closure(inner, s, &mut out);
        }
        Regex::Optional(inner) => {
            out = ends_from(inner, s, i);
            out[i] = true;
        }
    }
    out
}

/// All ends reachable by matching `r` once from any start marked in `from`.
fn step(r: &Regex, s: &[SymbolId], from: &[bool]) -> Vec<bool> {
    let mut out = vec![false; s.len() + 1];
    for (k, _) in from.iter().enumerate().filter(|(_, b)| **b) {
        for (o, e) in out.iter_mut().zip(ends_from(r, s, k)) {
            *o |= e;
        }
    }
    out
}

fn closure(r: &Regex, s: &[SymbolId], set: &mut [bool]) {
    let mut frontier: Vec<bool> = set.to_vec();
    loop {
        let next = step(r, s, &frontier);
        let mut changed = false;
        frontier.iter_mut().for_each(|f| *f = false);
        for (k, e) in next.into_iter().enumerate() {
            if e && !set[k] {
                set[k] = true;
                frontier[k] = true;
                changed = true;
            }
        }
        if !changed {
            return;
        }
    }
}

/// `s` is in `L(r)`.
pub fn matches(r: &Regex, s: &[SymbolId]) -> bool {
    ends_from(r, s, 0)[s.len()]
}

/// `s` is in `Σ* L(r)`: some suffix of `s` matches.
pub fn matches_suffix(r: &Regex, s: &[SymbolId]) -> bool {
    (0..=s.len()).any(|i| ends_from(r, s, i)[s.len()])
}

/// `s` is in `L(r) Σ*`: some prefix of `s` matches.
pub fn matches_prefix(r: &Regex, s: &[SymbolId]) -> bool {
    ends_from(r, s, 0).into_iter().any(|b| b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regex::parse_regex;
    use crate::symbols::SymbolTable;

    fn setup() -> (SymbolTable, impl Fn(&str) -> Vec<SymbolId>) {
        let mut t = SymbolTable::with_symbols(["'", "aa", "b", "z"]).unwrap();
        let alv = [t.get("z").unwrap()];
        t.define_class("alv", alv).unwrap();
        let t2 = t.clone();
        (t, move |s: &str| s.split_whitespace().map(|n| t2.get(n).unwrap()).collect())
    }

    #[test]
    fn anchored_contexts() {
        let (t, w) = setup();
        let lam = parse_regex("# '?", &t).unwrap();
        assert!(matches_suffix(&lam, &w("#")));
        assert!(matches_suffix(&lam, &w("# '")));
        assert!(!matches_suffix(&lam, &w("# b")));
        let rho = parse_regex("'? alv", &t).unwrap();
        assert!(matches_prefix(&rho, &w("z #")));
        assert!(matches_prefix(&rho, &w("' z b #")));
        assert!(!matches_prefix(&rho, &w("b z #")));
    }

    #[test]
    fn complement_and_intersection() {
        let (t, w) = setup();
        let not_any = parse_regex("!(.)", &t).unwrap();
        assert!(matches(&not_any, &w("")));
        assert!(!matches(&not_any, &w("b")));
        assert!(matches(&not_any, &w("#")));
        assert!(matches(&not_any, &w("b b")));
        let both = parse_regex("(aa | b)* & .* b", &t).unwrap();
        assert!(matches(&both, &w("aa b")));
        assert!(!matches(&both, &w("b aa")));
    }

    #[test]
    fn nested_star() {
        let (t, w) = setup();
        let r = parse_regex("(b*)* aa", &t).unwrap();
        assert!(matches(&r, &w("b b aa")));
        assert!(matches(&r, &w("aa")));
        assert!(!matches(&r, &w("b")));
    }
}
