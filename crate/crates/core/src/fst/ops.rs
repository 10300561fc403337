use std::collections::{BTreeSet, HashMap, VecDeque};
use super::{FstError, StateId, Transition, Wfsa};
use crate::symbols::{Alphabet, SymbolId};
use crate::weight::{Scalar, Tropical};

/// Product construction: the result weighs every string by the sum of the
/// two operands' weights.
pub fn intersect<T: Scalar>(a: &Wfsa<T>, b: &Wfsa<T>) -> Result<Wfsa<T>, FstError> {
    a.check_same_alphabet(b)?;
    let (a, b) = (a.trim(), b.trim());
    let mut out = Wfsa::new(a.alphabet().clone());
    let (Some(sa), Some(sb)) = (a.start(), b.start()) else {
        return Ok(out);
    };
    let mut ids: HashMap<(StateId, StateId), StateId> = HashMap::new();
    let mut queue = VecDeque::new();
    let s = out.add_state();
    out.set_start(s);
    ids.insert((sa, sb), s);
    queue.push_back((sa, sb));
    while let Some((qa, qb)) = queue.pop_front() {
        let src = ids[&(qa, qb)];
        out.set_final(src, a.final_weight(qa).times(b.final_weight(qb)));
        // trimmed machines have arcs sorted by label
        let (aa, ba) = (a.arcs(qa), b.arcs(qb));
        let (mut i, mut j) = (0, 0);
        while i < aa.len() && j < ba.len() {
            let (la, lb) = (aa[i].label, ba[j].label);
            if la < lb {
                i += 1;
            } else if lb < la {
                j += 1;
            } else {
                let i_end = i + aa[i..].iter().take_while(|t| t.label == la).count();
                let j_end = j + ba[j..].iter().take_while(|t| t.label == la).count();
                for ta in &aa[i..i_end] {
                    for tb in &ba[j..j_end] {
                        let key = (ta.next, tb.next);
                        let dst = match ids.get(&key) {
                            Some(&d) => d,
                            None => {
                                let d = out.add_state();
                                ids.insert(key, d);
                                queue.push_back(key);
                                d
                            }
                        };
                        out.add_arc(src, la, ta.weight.times(tb.weight), dst);
                    }
                }
                i = i_end;
                j = j_end;
            }
        }
    }
    Ok(out.trim())
}

type RawArc<T> = (StateId, (SymbolId, SymbolId), Tropical<T>, StateId);

/// Relational composition of two same-length machines: an arc `(i:m)` of `a`
/// meets an arc `(m:o)` of `b` to give `(i:o)`. The result alphabet is the
/// set of pairs actually produced.
pub fn compose<T: Scalar>(a: &Wfsa<T>, b: &Wfsa<T>) -> Result<Wfsa<T>, FstError> {
    let (ta, tb) = (a.alphabet().symbols(), b.alphabet().symbols());
    if !ta.is_compatible(tb) {
        return Err(FstError::AlphabetMismatch);
    }
    let table = if ta.len() >= tb.len() { ta.clone() } else { tb.clone() };
    let (a, b) = (a.trim(), b.trim());
    let (Some(sa), Some(sb)) = (a.start(), b.start()) else {
        return Ok(Wfsa::new(Alphabet::new(table, [])?));
    };
    let (ab_a, ab_b) = (a.alphabet().clone(), b.alphabet().clone());
    let mut ids: HashMap<(StateId, StateId), StateId> = HashMap::new();
    let mut order = vec![(sa, sb)];
    ids.insert((sa, sb), 0);
    let mut raw: Vec<RawArc<T>> = Vec::new();
    let mut head = 0;
    while head < order.len() {
        let (qa, qb) = order[head];
        let src = head as StateId;
        head += 1;
        let mut by_input: HashMap<SymbolId, Vec<&Transition<T>>> = HashMap::new();
        for t in b.arcs(qb) {
            by_input.entry(ab_b.input(t.label)).or_default().push(t);
        }
        for ta in a.arcs(qa) {
            let (i, m) = ab_a.pair(ta.label);
            let Some(matches) = by_input.get(&m) else { continue };
            for tb in matches {
                let key = (ta.next, tb.next);
                let dst = *ids.entry(key).or_insert_with(|| {
                    order.push(key);
                    (order.len() - 1) as StateId
                });
                raw.push((src, (i, ab_b.output(tb.label)), ta.weight.times(tb.weight), dst));
            }
        }
    }
    let alphabet = Alphabet::new(table, raw.iter().map(|r| r.1))?;
    let mut out = Wfsa::new(alphabet.clone());
    for _ in 0..order.len() {
        out.add_state();
    }
    out.set_start(0);
    for (k, &(qa, qb)) in order.iter().enumerate() {
        out.set_final(k as StateId, a.final_weight(qa).times(b.final_weight(qb)));
    }
    for (src, (i, o), w, dst) in raw {
        let label = alphabet.find(i, o).expect("pair was registered");
        out.add_arc(src, label, w, dst);
    }
    Ok(out.trim())
}

/// Appends a copy of `m`'s states to `out`, returning the state offset.
fn append<T: Scalar>(out: &mut Wfsa<T>, m: &Wfsa<T>) -> StateId {
    let offset = out.num_states() as StateId;
    for _ in 0..m.num_states() {
        out.add_state();
    }
    for q in m.state_ids() {
        out.set_final(q + offset, m.final_weight(q));
        for t in m.arcs(q) {
            out.add_arc(q + offset, t.label, t.weight, t.next + offset);
        }
    }
    offset
}

/// Copies the start arcs of `m` (already placed at `offset`) onto `from`,
/// each pre-multiplied by `w`. This is how epsilon transitions are avoided.
fn splice_start<T: Scalar>(out: &mut Wfsa<T>, from: StateId, m: &Wfsa<T>, offset: StateId, w: Tropical<T>) {
    let Some(s) = m.start() else { return };
    let arcs: Vec<_> = m.arcs(s).to_vec();
    for t in arcs {
        out.add_arc(from, t.label, w.times(t.weight), t.next + offset);
    }
}

pub fn union<T: Scalar>(a: &Wfsa<T>, b: &Wfsa<T>) -> Result<Wfsa<T>, FstError> {
    a.check_same_alphabet(b)?;
    let mut out = Wfsa::new(a.alphabet().clone());
    let oa = append(&mut out, a);
    let ob = append(&mut out, b);
    let s = out.add_state();
    out.set_start(s);
    let init_final = |m: &Wfsa<T>| m.start().map_or(Tropical::zero(), |q| m.final_weight(q));
    out.set_final(s, init_final(a).plus(init_final(b)));
    splice_start(&mut out, s, a, oa, Tropical::one());
    splice_start(&mut out, s, b, ob, Tropical::one());
    Ok(out.trim())
}

pub fn concat<T: Scalar>(a: &Wfsa<T>, b: &Wfsa<T>) -> Result<Wfsa<T>, FstError> {
    a.check_same_alphabet(b)?;
    let (Some(sa), Some(sb)) = (a.start(), b.start()) else {
        return Ok(Wfsa::new(a.alphabet().clone()));
    };
    let mut out = Wfsa::new(a.alphabet().clone());
    append(&mut out, a);
    let ob = append(&mut out, b);
    out.set_start(sa);
    let b_init = b.final_weight(sb);
    for f in a.state_ids() {
        let wf = a.final_weight(f);
        if wf.is_zero() {
            continue;
        }
        splice_start(&mut out, f, b, ob, wf);
        out.set_final(f, wf.times(b_init));
    }
    Ok(out.trim())
}

/// Kleene closure.
pub fn star<T: Scalar>(a: &Wfsa<T>) -> Wfsa<T> {
    let mut out = Wfsa::new(a.alphabet().clone());
    append(&mut out, a);
    let s = out.add_state();
    out.set_start(s);
    out.set_final(s, Tropical::one());
    splice_start(&mut out, s, a, 0, Tropical::one());
    loop_back(&mut out, a);
    out.trim()
}

/// One or more repetitions.
pub fn plus<T: Scalar>(a: &Wfsa<T>) -> Wfsa<T> {
    let Some(sa) = a.start() else {
        return Wfsa::new(a.alphabet().clone());
    };
    let mut out = Wfsa::new(a.alphabet().clone());
    append(&mut out, a);
    out.set_start(sa);
    loop_back(&mut out, a);
    out.trim()
}

fn loop_back<T: Scalar>(out: &mut Wfsa<T>, a: &Wfsa<T>) {
    for f in a.state_ids() {
        let wf = a.final_weight(f);
        if !wf.is_zero() {
            splice_start(out, f, a, 0, wf);
        }
    }
}

/// Zero or one occurrence.
pub fn optional<T: Scalar>(a: &Wfsa<T>) -> Wfsa<T> {
    let mut out = Wfsa::new(a.alphabet().clone());
    append(&mut out, a);
    let s = out.add_state();
    out.set_start(s);
    out.set_final(s, Tropical::one());
    splice_start(&mut out, s, a, 0, Tropical::one());
    out.trim()
}

/// Accepts the reversal of every string, with the same weight.
pub fn reverse<T: Scalar>(a: &Wfsa<T>) -> Wfsa<T> {
    let Some(sa) = a.start() else {
        return Wfsa::new(a.alphabet().clone());
    };
    let n = a.num_states() as StateId;
    let mut out = Wfsa::new(a.alphabet().clone());
    for _ in 0..=n {
        out.add_state();
    }
    let mut incoming: Vec<Vec<Transition<T>>> = vec![Vec::new(); n as usize];
    for p in a.state_ids() {
        for t in a.arcs(p) {
            incoming[t.next as usize].push(Transition {
                label: t.label,
                weight: t.weight,
                next: p,
            });
            out.add_arc(t.next, t.label, t.weight, p);
        }
    }
    out.set_start(n);
    out.set_final(sa, Tropical::one());
    out.set_final(n, a.final_weight(sa));
    for f in a.state_ids() {
        let wf = a.final_weight(f);
        if wf.is_zero() {
            continue;
        }
        for t in &incoming[f as usize] {
            out.add_arc(n, t.label, wf.times(t.weight), t.next);
        }
    }
    out.trim()
}

/// Subset construction on an unweighted machine.
pub fn determinize_unweighted<T: Scalar>(a: &Wfsa<T>) -> Result<Wfsa<T>, FstError> {
    if !a.is_unweighted() {
        return Err(FstError::RequiresUnweighted);
    }
    let a = a.trim();
    let mut out = Wfsa::new(a.alphabet().clone());
    let Some(sa) = a.start() else {
        return Ok(out);
    };
    let mut ids: HashMap<Vec<StateId>, StateId> = HashMap::new();
    let mut order: Vec<Vec<StateId>> = vec![vec![sa]];
    ids.insert(vec![sa], out.add_state());
    out.set_start(0);
    let mut head = 0;
    while head < order.len() {
        let subset = order[head].clone();
        let src = head as StateId;
        head += 1;
        if subset.iter().any(|&q| a.is_final(q)) {
            out.set_final(src, Tropical::one());
        }
        let mut targets: std::collections::BTreeMap<_, BTreeSet<StateId>> = Default::default();
        for &q in &subset {
            for t in a.arcs(q) {
                targets.entry(t.label).or_default().insert(t.next);
            }
        }
        for (label, set) in targets {
            let key: Vec<_> = set.into_iter().collect();
            let dst = match ids.get(&key) {
                Some(&d) => d,
                None => {
                    let d = out.add_state();
                    ids.insert(key.clone(), d);
                    order.push(key);
                    d
                }
            };
            out.add_arc(src, label, Tropical::one(), dst);
        }
    }
    Ok(out)
}

/// Adds a non-final sink so every state has an arc for every label. Not
/// trimmed, since trimming would remove the sink again.
pub fn complete<T: Scalar>(a: &Wfsa<T>) -> Wfsa<T> {
    let mut out = a.clone();
    if out.start().is_none() {
        let s = out.add_state();
        out.set_start(s);
    }
    let labels: Vec<_> = out.alphabet().ids().collect();
    let mut sink = None;
    let mut present = vec![false; labels.len()];
    for q in out.state_ids().collect::<Vec<_>>() {
        present.iter_mut().for_each(|p| *p = false);
        for t in out.arcs(q) {
            present[t.label.index()] = true;
        }
        for &l in &labels {
            if !present[l.index()] {
                let k = *sink.get_or_insert_with(|| out.add_state());
                out.add_arc(q, l, Tropical::one(), k);
            }
        }
    }
    if let Some(k) = sink {
        for &l in &labels {
            out.add_arc(k, l, Tropical::one(), k);
        }
    }
    out
}

/// Complement relative to the full pair alphabet.
pub fn complement<T: Scalar>(a: &Wfsa<T>) -> Result<Wfsa<T>, FstError> {
    if !a.is_unweighted() {
        return Err(FstError::RequiresUnweighted);
    }
    if !a.is_deterministic() {
        return Err(FstError::NotDeterministic);
    }
    let mut c = complete(a);
    for q in c.state_ids().collect::<Vec<_>>() {
        let w = if c.is_final(q) {
            Tropical::zero()
        } else {
            Tropical::one()
        };
        c.set_final(q, w);
    }
    Ok(c.trim())
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::symbols::PairId;
    use std::sync::Arc;

    #[test]
    fn machines_are_send_and_sync() {
        fn check<X: Send + Sync>() {}
        check::<Wfsa<f64>>();
        check::<Wfsa<f32>>();
    }

    type W = Tropical<f64>;

    fn one_arc(ab: &Arc<Alphabet>, l: PairId, w: f64) -> Wfsa {
        Wfsa::from_string(ab.clone(), &[l], W::new(w).unwrap())
    }

    fn lang_eq(a: &Wfsa, b: &Wfsa, labels: &[PairId], len: usize) {
        for s in all_strings(labels, len) {
            assert_eq!(a.accepts(&s), b.accepts(&s), "string {s:?}");
        }
    }

    #[test]
    fn intersect_with_universal_is_identity() {
        let ab = alphabet(2, 2);
        let labels: Vec<_> = ab.non_boundary().collect();
        let u = Wfsa::universal(ab.clone());
        for seed in 0..10 {
            let a = random_wfsa(&ab, 4, 8, true, seed);
            let i = intersect(&a, &u).unwrap();
            for s in all_strings(&labels, 4) {
                assert_eq!(i.weight(&s), a.weight(&s));
            }
        }
    }

    #[test]
    fn intersect_adds_leaf_weights() {
        let t = Arc::new(crate::symbols::SymbolTable::with_symbols(["aa", "ao"]).unwrap());
        let ab = Alphabet::new(t, [(SymbolId(1), SymbolId(2))]).unwrap();
        let l = ab.find(SymbolId(1), SymbolId(2)).unwrap();
        let m = intersect(&one_arc(&ab, l, 0.95), &one_arc(&ab, l, 1.24)).unwrap();
        assert!((m.weight(&[l]).value() - 2.19).abs() < 1e-12);
    }

    #[test]
    fn intersect_weight_additivity_exhaustive() {
        let ab = alphabet(2, 2);
        let labels: Vec<_> = ab.non_boundary().collect();
        for seed in 0..30 {
            let a = random_wfsa(&ab, 3, 7, true, seed);
            let b = random_wfsa(&ab, 3, 7, true, seed + 1000);
            let i = intersect(&a, &b).unwrap();
            for s in all_strings(&labels, 4) {
                let expect = brute_weight(&a, &s).times(brute_weight(&b, &s));
                assert!(brute_weight(&i, &s).approx_eq(expect, 1e-12), "{s:?}");
            }
        }
    }

    #[test]
    fn intersect_rejects_foreign_alphabet() {
        let a = Wfsa::<f64>::universal(alphabet(2, 2));
        let b = Wfsa::<f64>::universal(alphabet(1, 2));
        assert_eq!(intersect(&a, &b).unwrap_err(), FstError::AlphabetMismatch);
    }

    #[test]
    fn determinize_two_x_arcs() {
        let ab = alphabet(2, 1);
        let x = ab.find(SymbolId(1), SymbolId(1)).unwrap();
        let y = ab.find(SymbolId(2), SymbolId(1)).unwrap();
        // x | x y with two nondeterministic x arcs
        let mut m = Wfsa::<f64>::new(ab.clone());
        for _ in 0..4 {
            m.add_state();
        }
        m.set_start(0);
        m.add_arc(0, x, W::one(), 1);
        m.add_arc(0, x, W::one(), 2);
        m.add_arc(2, y, W::one(), 3);
        m.set_final(1, W::one());
        m.set_final(3, W::one());
        assert!(!m.is_deterministic());
        let d = determinize_unweighted(&m).unwrap();
        assert!(d.is_deterministic());
        assert!(d.accepts(&[x]) && d.accepts(&[x, y]));
        assert!(!d.accepts(&[y]) && !d.accepts(&[x, x]) && !d.accepts(&[]));
        let dd = determinize_unweighted(&d).unwrap();
        lang_eq(&d, &dd, &[x, y], 5);
    }

    #[test]
    fn determinize_preserves_language() {
        let ab = alphabet(3, 1);
        let labels: Vec<_> = ab.non_boundary().collect();
        for seed in 0..20 {
            let m = random_wfsa(&ab, 4, 9, false, seed);
            let d = determinize_unweighted(&m).unwrap();
            assert!(d.is_deterministic());
            lang_eq(&m, &d, &labels, 5);
        }
        let w = random_wfsa(&ab, 3, 6, true, 3);
        if !w.is_unweighted() {
            assert_eq!(determinize_unweighted(&w).unwrap_err(), FstError::RequiresUnweighted);
        }
    }

    #[test]
    fn complement_cases() {
        let ab = alphabet(3, 1);
        let labels: Vec<_> = ab.non_boundary().collect();
        let u = Wfsa::<f64>::universal(ab.clone());
        assert!(complement(&u).unwrap().is_empty_language());
        // contains labels[1]
        let contains = concat(&concat(&u, &one_arc(&ab, labels[1], 0.0)).unwrap(), &u).unwrap();
        let d = determinize_unweighted(&contains).unwrap();
        let c = complement(&d).unwrap();
        for s in all_strings(&labels, 4) {
            assert_eq!(c.accepts(&s), !s.contains(&labels[1]), "{s:?}");
        }
        let cc = complement(&determinize_unweighted(&c).unwrap()).unwrap();
        lang_eq(&cc, &d, &labels, 4);
        assert_eq!(complement(&contains).unwrap_err(), FstError::NotDeterministic);
    }

    #[test]
    fn star_plus_optional() {
        let ab = alphabet(2, 1);
        let labels: Vec<_> = ab.non_boundary().collect();
        let empty = Wfsa::<f64>::new(ab.clone());
        let se = star(&empty);
        assert!(se.accepts(&[]));
        assert!(all_strings(&labels, 3).iter().skip(1).all(|s| !se.accepts(s)));
        for seed in 0..15 {
            let a = random_wfsa(&ab, 3, 5, true, seed);
            let p = plus(&a);
            let cs = concat(&a, &star(&a)).unwrap();
            let o = optional(&a);
            for s in all_strings(&labels, 4) {
                assert!(p.weight(&s).approx_eq(cs.weight(&s), 1e-12), "{s:?}");
                if s.is_empty() {
                    assert!(o.weight(&s).is_one());
                } else {
                    assert_eq!(o.weight(&s), a.weight(&s));
                }
            }
        }
    }

    #[test]
    fn union_takes_minimum() {
        let ab = alphabet(2, 2);
        let labels: Vec<_> = ab.non_boundary().collect();
        for seed in 0..10 {
            let a = random_wfsa(&ab, 3, 6, true, seed);
            let b = random_wfsa(&ab, 3, 6, true, seed + 50);
            let u = union(&a, &b).unwrap();
            for s in all_strings(&labels, 4) {
                assert_eq!(u.weight(&s), a.weight(&s).plus(b.weight(&s)));
            }
        }
    }

    #[test]
    fn reverse_cases() {
        let ab = alphabet(2, 2);
        let labels: Vec<_> = ab.non_boundary().collect();
        for seed in 0..15 {
            let a = random_wfsa(&ab, 4, 8, true, seed);
            let r = reverse(&a);
            let rr = reverse(&r);
            for s in all_strings(&labels, 4) {
                let mut rs = s.clone();
                rs.reverse();
                assert!(r.weight(&rs).approx_eq(a.weight(&s), 1e-12));
                assert!(rr.weight(&s).approx_eq(a.weight(&s), 1e-12));
            }
        }
        let s = [labels[0], labels[1], labels[2]];
        let m = Wfsa::from_string(ab.clone(), &s, W::new(1.5).unwrap());
        let r = reverse(&m);
        assert_eq!(r.weight(&[labels[2], labels[1], labels[0]]), W::new(1.5).unwrap());
        assert!(reverse(&Wfsa::<f64>::new(ab)).is_empty_language());
    }

    #[test]
    fn compose_same_length() {
        let t = Arc::new(crate::symbols::SymbolTable::with_symbols(["a", "b", "c"]).unwrap());
        let ab1 = Alphabet::new(t.clone(), [(SymbolId(1), SymbolId(2))]).unwrap();
        let ab2 = Alphabet::new(t, [(SymbolId(2), SymbolId(3))]).unwrap();
        let l1 = ab1.find(SymbolId(1), SymbolId(2)).unwrap();
        let l2 = ab2.find(SymbolId(2), SymbolId(3)).unwrap();
        let m1 = Wfsa::from_string(ab1, &[l1, l1], W::new(1.0).unwrap());
        let m2 = Wfsa::from_string(ab2, &[l2, l2], W::new(0.5).unwrap());
        let c = compose(&m1, &m2).unwrap();
        let l = c.alphabet().find(SymbolId(1), SymbolId(3)).unwrap();
        assert_eq!(c.weight(&[l, l]), W::new(1.5).unwrap());
        assert!(!c.accepts(&[l]));
    }
}
