//! Best word string for a phone lattice through grammar, dictionary,
//! realization rules and lattice.
//!
//! Every machine here is same-length, so words travel on a padded track
//! aligned with the phones. A word `w` pronounced `p1 .. pk` is the block
//! `#:# w:p1 _:p2 .. _:pk`, and an utterance is a sequence of blocks closed
//! by `#:#`. The grammar is a plain word acceptor; it is lifted to the word
//! track by letting every word be followed by any number of pads.

use std::sync::Arc;

use super::RuleError;
use crate::fst::{self, FstError, StateId, Wfsa};
use crate::symbols::{Alphabet, SymbolId};
use crate::weight::{Scalar, Tropical};

/// Symbol filling the word track under the second and later phones of a
/// word.
pub const PAD: &str = "_";

#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub words: Vec<String>,
    /// The realized phone string, boundaries included.
    pub phones: Vec<String>,
    pub weight: f64,
}

/// Lifts a word acceptor to the padded word track.
fn lift_grammar<T: Scalar>(g: &Wfsa<T>, pad: SymbolId) -> Result<Wfsa<T>, FstError> {
    let gab = g.alphabet();
    let words: Vec<SymbolId> = gab.ids().map(|p| gab.input(p)).filter(|&w| w != SymbolId::BOUNDARY).collect();
    let pairs = words.iter().map(|&w| (w, w)).chain([(pad, pad)]);
    let ab = Alphabet::new(gab.symbols().clone(), pairs)?;
    let mut out = Wfsa::new(ab.clone());
    let g = g.trim();
    let Some(g0) = g.start() else {
        return Ok(out);
    };
    let n = g.num_states() as StateId;
    // word-start state W_q is q, the padding state R_q is n + q
    for _ in 0..2 * n {
        out.add_state();
    }
    let start = out.add_state();
    out.set_start(start);
    let (b, p) = (ab.boundary(), ab.find(pad, pad).expect("pad pair"));
    out.add_arc(start, b, Tropical::one(), g0);
    for q in g.state_ids() {
        out.set_final(q, g.final_weight(q));
        out.add_arc(n + q, p, Tropical::one(), n + q);
        out.add_arc(n + q, b, Tropical::one(), q);
        for t in g.arcs(q) {
            let w = gab.input(t.label);
            if w == SymbolId::BOUNDARY || gab.output(t.label) != w {
                return Err(FstError::UnknownPair(gab.pair_name(t.label)));
            }
            let label = ab.find(w, w).expect("word pair");
            out.add_arc(q, label, t.weight, n + t.next);
        }
    }
    Ok(out.trim())
}

/// Best path through grammar, dictionary closure, realizations and lattice,
/// composed on the padded word track. All machines must
/// share a symbol table containing the pad symbol.
pub fn decode<T: Scalar>(g: &Wfsa<T>, d: &Wfsa<T>, phi: &Wfsa<T>, a: &Wfsa<T>) -> Result<Decoded, RuleError> {
    let table: Arc<_> = g.alphabet().symbols().clone();
    let pad = table.get(PAD).ok_or_else(|| FstError::UnknownSymbol(PAD.into()))?;
    let g = lift_grammar(g, pad)?;
    let close = Wfsa::symbol_set(d.alphabet().clone(), [d.alphabet().boundary()]);
    let d = fst::concat(&fst::star(d), &close)?;
    let chain = fst::compose(&fst::compose(&fst::compose(&g, &d)?, phi)?, a)?;
    let best = fst::shortest_path(&chain, 1);
    let Some((labels, w)) = best.into_iter().next() else {
        return Err(RuleError::NoParse);
    };
    let ab = chain.alphabet();
    let t = ab.symbols();
    let words = ab
        .inputs(&labels)
        .into_iter()
        .filter(|&s| s != SymbolId::BOUNDARY && s != pad)
        .map(|s| t.name(s).to_string())
        .collect();
    let phones = ab.outputs(&labels).into_iter().map(|s| t.name(s).to_string()).collect();
    Ok(Decoded {
        words,
        phones,
        weight: w.value().to_f64_lossy(),
    })
}
