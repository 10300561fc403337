use std::sync::Arc;

use super::{AtomLabel, Regex, RegexError};
use crate::fst::{self, Wfsa};
use crate::symbols::{Alphabet, PairId};
use crate::weight::Scalar;

/// Compiles `r` to an unweighted acceptor over `alphabet` by lifting every
/// input-symbol set to all pairs with that input.
pub fn compile_regex<T: Scalar>(r: &Regex, alphabet: &Arc<Alphabet>) -> Result<Wfsa<T>, RegexError> {
    let ab = alphabet.clone();
    // Operands always share `alphabet`, so the automata ops cannot fail.
    let ok = |res: Result<Wfsa<T>, fst::FstError>| res.expect("operands share one alphabet");
    Ok(match r {
        Regex::Atom(a) => {
            let pairs: Vec<PairId> = a
                .members
                .iter()
                .flat_map(|&s| alphabet.with_input(s).iter().copied())
                .collect();
            if pairs.is_empty() {
                let name = match &a.label {
                    AtomLabel::Name(n) => n.clone(),
                    AtomLabel::Set(ns) => format!("[{}]", ns.join(" ")),
                };
                return Err(RegexError::EmptyAtom(name));
            }
            Wfsa::symbol_set(ab, pairs)
        }
        Regex::Any => Wfsa::symbol_set(ab, alphabet.non_boundary()),
        Regex::Boundary => Wfsa::symbol_set(ab, [alphabet.boundary()]),
        Regex::Concat(parts) => {
            let mut m = Wfsa::epsilon(ab);
            for p in parts {
                m = ok(fst::concat(&m, &compile_regex(p, alphabet)?));
            }
            m
        }
        Regex::Union(parts) => {
            let mut m = Wfsa::new(ab);
            for p in parts {
                m = ok(fst::union(&m, &compile_regex(p, alphabet)?));
            }
            m
        }
        Regex::Intersect(parts) => {
            let mut m = Wfsa::universal(ab);
            for p in parts {
                m = ok(fst::intersect(&m, &compile_regex(p, alphabet)?));
            }
            m
        }
        Regex::Complement(inner) => {
            let d = ok(fst::determinize_unweighted(&compile_regex(inner, alphabet)?));
            ok(fst::complement(&d))
        }
        Regex::Star(inner) => fst::star(&compile_regex(inner, alphabet)?),
        Regex::Plus(inner) => fst::plus(&compile_regex(inner, alphabet)?),
        Regex::Optional(inner) => fst::optional(&compile_regex(inner, alphabet)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regex::{matches, parse_regex};
    use crate::symbols::{SymbolId, SymbolTable};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn alveolar_setup() -> (SymbolTable, Arc<Alphabet>) {
        let mut t = SymbolTable::with_symbols(["'", "s", "z", "t", "d", "n", "dx", "b"]).unwrap();
        let alv: Vec<_> = ["s", "z", "t", "d", "n"].iter().map(|n| t.get(n).unwrap()).collect();
        t.define_class("alv", alv.clone()).unwrap();
        let outs: Vec<_> = ["s", "z", "t", "d", "n", "dx"].iter().map(|n| t.get(n).unwrap()).collect();
        let mut pairs: Vec<_> = t.ids().skip(1).map(|s| (s, s)).collect();
        for &i in &alv {
            for &o in &outs {
                pairs.push((i, o));
            }
        }
        let t = Arc::new(t);
        let ab = Alphabet::new(t.clone(), pairs).unwrap();
        ((*t).clone(), ab)
    }

    #[test]
    fn class_lifts_to_every_declared_output() {
        let (t, ab) = alveolar_setup();
        let m: Wfsa = compile_regex(&parse_regex("alv", &t).unwrap(), &ab).unwrap();
        assert_eq!(m.num_states(), 2);
        let got: BTreeSet<PairId> = m.arcs(0).iter().map(|a| a.label).collect();
        let alv = t.class("alv").unwrap();
        let expect: BTreeSet<PairId> = ab.ids().filter(|p| alv.contains(&ab.input(*p))).collect();
        assert_eq!(expect.len(), 5 * 6);
        assert_eq!(got, expect);
    }

    #[test]
    fn complement_of_any_rejects_single_symbols() {
        let (t, ab) = alveolar_setup();
        let m: Wfsa = compile_regex(&parse_regex("!(.)", &t).unwrap(), &ab).unwrap();
        let b = ab.find(t.get("b").unwrap(), t.get("b").unwrap()).unwrap();
        assert!(m.accepts(&[]));
        assert!(!m.accepts(&[b]));
        assert!(m.accepts(&[ab.boundary()]));
        assert!(m.accepts(&[b, b]));
        assert!(m.is_unweighted());
    }

    #[test]
    fn stress_then_alveolar() {
        let (t, ab) = alveolar_setup();
        let r = parse_regex("'? alv", &t).unwrap();
        let m: Wfsa = compile_regex(&r, &ab).unwrap();
        let labels: Vec<_> = ab.ids().collect();
        let stress = t.get("'").unwrap();
        let alv = t.class("alv").unwrap();
        for a in &labels {
            for b in &labels {
                let one = [*a];
                let two = [*a, *b];
                let expect_one = alv.contains(&ab.input(*a));
                let expect_two = ab.input(*a) == stress && alv.contains(&ab.input(*b));
                assert_eq!(m.accepts(&one), expect_one);
                assert_eq!(m.accepts(&two), expect_two);
            }
        }
        assert!(!m.accepts(&[]));
    }

    #[test]
    fn empty_atom_is_reported() {
        let mut t = SymbolTable::with_symbols(["a", "b"]).unwrap();
        t.define_class("B", [SymbolId(2)]).unwrap();
        let t = Arc::new(t);
        let ab = Alphabet::new(t.clone(), [(SymbolId(1), SymbolId(1))]).unwrap();
        let err = compile_regex::<f64>(&parse_regex("a B", &t).unwrap(), &ab).unwrap_err();
        assert_eq!(err, RegexError::EmptyAtom("B".into()));
    }

    fn small_table() -> SymbolTable {
        let mut t = SymbolTable::with_symbols(["a", "b", "c", "d"]).unwrap();
        t.define_class("AB", [SymbolId(1), SymbolId(2)]).unwrap();
        t
    }

    fn regex_strategy() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![
            Just("a".to_string()),
            Just("b".to_string()),
            Just("c".to_string()),
            Just("AB".to_string()),
            Just(".".to_string()),
            Just("#".to_string()),
            Just("[c d]".to_string()),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} | {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} & {b})")),
                inner.clone().prop_map(|a| format!("!({a})")),
                inner.clone().prop_map(|a| format!("({a})*")),
                inner.clone().prop_map(|a| format!("({a})+")),
                inner.prop_map(|a| format!("({a})?")),
            ]
        })
    }

    fn input_strings(max_len: usize) -> Vec<Vec<SymbolId>> {
        let syms: Vec<SymbolId> = (0..5).map(SymbolId).collect();
        let mut out = vec![Vec::new()];
        let mut frontier = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for s in &frontier {
                for &x in &syms {
                    let mut t: Vec<SymbolId> = s.clone();
                    t.push(x);
                    next.push(t);
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn print_parse_fixed_point(text in regex_strategy()) {
            let t = small_table();
            let r = parse_regex(&text, &t).unwrap();
            let again = parse_regex(&r.to_string(), &t).unwrap();
            prop_assert_eq!(&again, &r);
            prop_assert_eq!(again.to_string(), r.to_string());
        }

        #[test]
        fn compiled_membership_matches_reference(text in regex_strategy()) {
            let t = Arc::new(small_table());
            // identity pairs plus one extra output per symbol
            let pairs: Vec<_> = (1..5)
                .flat_map(|i| [(SymbolId(i), SymbolId(i)), (SymbolId(i), SymbolId(1 + i % 4))])
                .collect();
            let ab = Alphabet::new(t.clone(), pairs).unwrap();
            let r = parse_regex(&text, &t).unwrap();
            let m: Wfsa = compile_regex(&r, &ab).unwrap();
            for s in input_strings(4) {
                // every pair string over that input projection must agree
                let lifted: Vec<PairId> = s.iter().map(|&x| ab.with_input(x)[0]).collect();
                prop_assert_eq!(m.accepts(&lifted), matches(&r, &s), "{} on {:?}", text, s);
                let alt: Vec<PairId> = s.iter().map(|&x| *ab.with_input(x).last().unwrap()).collect();
                prop_assert_eq!(m.accepts(&alt), matches(&r, &s));
            }
        }
    }
}
