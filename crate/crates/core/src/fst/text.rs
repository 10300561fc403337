//! Line-oriented text format, one machine per file.
//!
//! ```text
//! src dst in_sym out_sym weight     (arc)
//! state weight                      (final state)
//! ```
//!
//! The source state of the first line is the start state. Weights are
//! written with at least six decimals and enough digits to round-trip.

use std::fmt::Write as _;
use std::sync::Arc;

use super::{FstError, StateId, Wfsa};
use crate::symbols::{Alphabet, SymbolId, SymbolTable};
use crate::weight::{Scalar, Tropical};

/// Formats a weight so that parsing it back gives the same `f64`.
pub fn format_weight(v: f64) -> String {
    if v.is_infinite() {
        return "inf".to_string();
    }
    let mut s = format!("{v}");
    let decimals = s.split_once('.').map_or(0, |(_, d)| d.len());
    if decimals == 0 {
        s.push('.');
    }
    for _ in decimals..6 {
        s.push('0');
    }
    s
}

pub fn write_fst<T: Scalar>(m: &Wfsa<T>) -> String {
    let m = m.trim();
    let ab = m.alphabet();
    let table = ab.symbols();
    let mut out = String::new();
    for q in m.state_ids() {
        for t in m.arcs(q) {
            let (i, o) = ab.pair(t.label);
            let _ = writeln!(
                out,
                "{q} {} {} {} {}",
                t.next,
                table.name(i),
                table.name(o),
                format_weight(t.weight.value().to_f64_lossy())
            );
        }
        if m.is_final(q) {
            let _ = writeln!(out, "{q} {}", format_weight(m.final_weight(q).value().to_f64_lossy()));
        }
    }
    out
}

/// A parsed machine whose symbols have been interned but whose alphabet is
/// not yet fixed.
#[derive(Clone, Debug, Default)]
pub struct RawFst {
    pub start: Option<StateId>,
    pub arcs: Vec<(StateId, StateId, SymbolId, SymbolId, f64)>,
    pub finals: Vec<(StateId, f64)>,
}

fn parse_weight(s: &str) -> Option<f64> {
    match s {
        "inf" | "Infinity" | "+inf" => Some(f64::INFINITY),
        _ => s.parse::<f64>().ok().filter(|v| *v >= 0.0),
    }
}

/// Parses the text format, interning symbol names into `symbols`.
pub fn read_fst(text: &str, symbols: &mut SymbolTable) -> Result<RawFst, FstError> {
    let mut raw = RawFst::default();
    for (n, line) in text.lines().enumerate() {
        let err = |msg: &str| FstError::Text {
            line: n + 1,
            msg: msg.to_string(),
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let state = |s: &str| s.parse::<StateId>().map_err(|_| err("bad state id"));
        let src = state(fields[0])?;
        raw.start.get_or_insert(src);
        match fields.len() {
            1 | 2 => {
                let w = match fields.get(1) {
                    Some(w) => parse_weight(w).ok_or_else(|| err("bad weight"))?,
                    None => 0.0,
                };
                raw.finals.push((src, w));
            }
            4 | 5 => {
                let dst = state(fields[1])?;
                let i = symbols.intern(fields[2]).map_err(|e| err(&e.to_string()))?;
                let o = symbols.intern(fields[3]).map_err(|e| err(&e.to_string()))?;
                let w = match fields.get(4) {
                    Some(w) => parse_weight(w).ok_or_else(|| err("bad weight"))?,
                    None => 0.0,
                };
                raw.arcs.push((src, dst, i, o, w));
            }
            _ => return Err(err("expected `src dst in out weight` or `state weight`")),
        }
    }
    Ok(raw)
}

impl RawFst {
    /// Builds the machine. With `alphabet`, every arc pair must belong to it;
    /// otherwise the alphabet is the set of pairs on the arcs.
    pub fn into_wfsa<T: Scalar>(
        self,
        symbols: Arc<SymbolTable>,
        alphabet: Option<Arc<Alphabet>>,
    ) -> Result<Wfsa<T>, FstError> {
        let alphabet = match alphabet {
            Some(a) => {
                if !a.symbols().is_compatible(&symbols) {
                    return Err(FstError::AlphabetMismatch);
                }
                a
            }
            None => Alphabet::new(symbols.clone(), self.arcs.iter().map(|a| (a.2, a.3)))?,
        };
        let mut m = Wfsa::new(alphabet.clone());
        let Some(start) = self.start else {
            return Ok(m);
        };
        let max = self
            .arcs
            .iter()
            .flat_map(|a| [a.0, a.1])
            .chain(self.finals.iter().map(|f| f.0))
            .chain([start])
            .max()
            .unwrap_or(0);
        for _ in 0..=max {
            m.add_state();
        }
        m.set_start(start);
        let weight = |v: f64| Tropical::new(T::from_f64_lossy(v)).unwrap_or(Tropical::zero());
        for (src, dst, i, o, w) in self.arcs {
            let label = alphabet.find(i, o).ok_or_else(|| {
                FstError::UnknownPair(format!("{}:{}", symbols.name(i), symbols.name(o)))
            })?;
            m.add_arc(src, label, weight(w), dst);
        }
        for (q, w) in self.finals {
            m.set_final(q, weight(w));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;

    #[test]
    fn weight_formatting() {
        assert_eq!(format_weight(0.0), "0.000000");
        assert_eq!(format_weight(0.95), "0.950000");
        assert_eq!(format_weight(12.0), "12.000000");
        let w = -(0.385f64).ln();
        assert_eq!(format_weight(w).parse::<f64>().unwrap(), w);
    }

    #[test]
    fn round_trip_preserves_weights() {
        let ab = alphabet(2, 2);
        let labels: Vec<_> = ab.non_boundary().collect();
        for seed in 0..10 {
            let m = random_wfsa(&ab, 4, 9, true, seed);
            let text = write_fst(&m);
            let mut table = (**ab.symbols()).clone();
            let raw = read_fst(&text, &mut table).unwrap();
            let back: Wfsa = raw.into_wfsa(Arc::new(table), Some(ab.clone())).unwrap();
            assert_eq!(back.stats(), m.stats());
            for s in all_strings(&labels, 4) {
                assert_eq!(back.weight(&s), m.weight(&s));
            }
        }
    }

    #[test]
    fn start_is_first_line_source() {
        let mut t = SymbolTable::new();
        let raw = read_fst("3 1 a b 0.5\n1 0.25\n", &mut t).unwrap();
        assert_eq!(raw.start, Some(3));
        let m: Wfsa = raw.into_wfsa(Arc::new(t.clone()), None).unwrap();
        let l = m.alphabet().find(t.get("a").unwrap(), t.get("b").unwrap()).unwrap();
        assert_eq!(m.weight(&[l]).value(), 0.75);
    }

    #[test]
    fn syntax_errors_carry_line() {
        let mut t = SymbolTable::new();
        assert_eq!(
            read_fst("0 1 a b 0.5\n0 1 2\n", &mut t).unwrap_err(),
            FstError::Text { line: 2, msg: "expected `src dst in out weight` or `state weight`".into() }
        );
        assert!(read_fst("0 -1\n", &mut t).is_err());
        assert!(read_fst("0 1 a b -3\n", &mut t).is_err());
    }
}
