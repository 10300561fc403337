use std::sync::Arc;

use super::{intersect, FstError, Wfsa};
use crate::symbols::{Alphabet, SymbolId};
use crate::weight::{Scalar, Tropical};

/// Linear machine accepting `# x #` on the input side paired with any
/// declared output at each position.
pub fn restriction<T: Scalar>(alphabet: &Arc<Alphabet>, x: &[SymbolId]) -> Result<Wfsa<T>, FstError> {
    if x.contains(&SymbolId::BOUNDARY) {
        return Err(FstError::BoundaryInInput);
    }
    let mut m = Wfsa::new(alphabet.clone());
    let mut cur = m.add_state();
    m.set_start(cur);
    let wrapped = std::iter::once(SymbolId::BOUNDARY)
        .chain(x.iter().copied())
        .chain(std::iter::once(SymbolId::BOUNDARY));
    for sym in wrapped {
        let next = m.add_state();
        for &p in alphabet.with_input(sym) {
            m.add_arc(cur, p, Tropical::one(), next);
        }
        cur = next;
    }
    m.set_final(cur, Tropical::one());
    Ok(m)
}

/// Restricts `phi` to boundary-wrapped input `x`; every accepted string of
/// the result has input side `# x #`.
pub fn apply_to_string<T: Scalar>(phi: &Wfsa<T>, x: &[SymbolId]) -> Result<Wfsa<T>, FstError> {
    let table = phi.alphabet().symbols();
    if let Some(bad) = x.iter().find(|s| !table.contains_id(**s)) {
        return Err(FstError::UnknownSymbol(format!("#{}", bad.0)));
    }
    intersect(&restriction(phi.alphabet(), x)?, phi)
}

/// [`apply_to_string`] on a whitespace-separated string of symbol names.
pub fn apply_to_names<T: Scalar>(phi: &Wfsa<T>, input: &str) -> Result<Wfsa<T>, FstError> {
    let table = phi.alphabet().symbols();
    let x = input
        .split_whitespace()
        .map(|n| table.get(n).ok_or_else(|| FstError::UnknownSymbol(n.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    apply_to_string(phi, &x)
}
