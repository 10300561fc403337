use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use super::{StateId, Wfsa};
use crate::symbols::{PairId, SymbolId};
use crate::weight::{Scalar, Tropical};

/// Pops allowed after `n` strings are known, while still draining ties.
const TIE_BUDGET: usize = 10_000;

struct Node {
    parent: Option<usize>,
    label: PairId,
}

struct Entry<T: Scalar> {
    /// Cost so far plus exact remaining cost to the cheapest final state.
    estimate: Tropical<T>,
    outputs: Vec<SymbolId>,
    complete: bool,
    cost: Tropical<T>,
    state: StateId,
    node: Option<usize>,
}

impl<T: Scalar> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Entry<T> {}

impl<T: Scalar> Ord for Entry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.estimate, &self.outputs, !self.complete)
            .cmp(&(other.estimate, &other.outputs, !other.complete))
    }
}

impl<T: Scalar> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The `n` cheapest distinct accepted strings, ascending by weight, ties
/// broken by the output-symbol sequence.
///
/// Paths are expanded best-first (A* with the exact distance-to-final as the
/// heuristic), so each string is first seen at its minimum weight even when
/// the machine is ambiguous.
pub fn shortest_path<T: Scalar>(a: &Wfsa<T>, n: usize) -> Vec<(Vec<PairId>, Tropical<T>)> {
    let m = a.trim();
    let Some(start) = m.start() else {
        return Vec::new();
    };
    if n == 0 {
        return Vec::new();
    }
    let alphabet = m.alphabet().clone();
    let to_final = distance_to_final(&m);

    let mut arena: Vec<Node> = Vec::new();
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Entry {
        estimate: to_final[start as usize],
        outputs: Vec::new(),
        complete: false,
        cost: Tropical::one(),
        state: start,
        node: None,
    }));
    let mut seen: HashSet<Vec<PairId>> = HashSet::new();
    let mut found: Vec<(Vec<PairId>, Tropical<T>)> = Vec::new();
    let mut extra_pops = 0;
    let tol = T::from_f64_lossy(1e-9);

    while let Some(Reverse(e)) = heap.pop() {
        if found.len() >= n {
            let bound = found[n - 1].1;
            if e.estimate.value() > bound.value() + tol || extra_pops >= TIE_BUDGET {
                break;
            }
            extra_pops += 1;
        }
        if e.complete {
            let labels = unwind(&arena, e.node);
            if seen.insert(labels.clone()) {
                found.push((labels, e.cost));
            }
            continue;
        }
        let fw = m.final_weight(e.state);
        if !fw.is_zero() {
            heap.push(Reverse(Entry {
                estimate: e.cost.times(fw),
                outputs: e.outputs.clone(),
                complete: true,
                cost: e.cost.times(fw),
                state: e.state,
                node: e.node,
            }));
        }
        for t in m.arcs(e.state) {
            let cost = e.cost.times(t.weight);
            arena.push(Node {
                parent: e.node,
                label: t.label,
            });
            let mut outputs = e.outputs.clone();
            outputs.push(alphabet.output(t.label));
            heap.push(Reverse(Entry {
                estimate: cost.times(to_final[t.next as usize]),
                outputs,
                complete: false,
                cost,
                state: t.next,
                node: Some(arena.len() - 1),
            }));
        }
    }

    found.sort_by(|(s1, w1), (s2, w2)| {
        w1.cmp(w2)
            .then_with(|| alphabet.outputs(s1).cmp(&alphabet.outputs(s2)))
            .then_with(|| s1.cmp(s2))
    });
    found.truncate(n);
    found
}

fn unwind(arena: &[Node], mut node: Option<usize>) -> Vec<PairId> {
    let mut out = Vec::new();
    while let Some(k) = node {
        out.push(arena[k].label);
        node = arena[k].parent;
    }
    out.reverse();
    out
}

/// Dijkstra on the reversed machine, seeded with final weights.
fn distance_to_final<T: Scalar>(m: &Wfsa<T>) -> Vec<Tropical<T>> {
    let n = m.num_states();
    let mut rev: Vec<Vec<(StateId, Tropical<T>)>> = vec![Vec::new(); n];
    for q in m.state_ids() {
        for t in m.arcs(q) {
            rev[t.next as usize].push((q, t.weight));
        }
    }
    let mut dist = vec![Tropical::zero(); n];
    let mut heap = BinaryHeap::new();
    for q in m.state_ids() {
        let fw = m.final_weight(q);
        if !fw.is_zero() {
            dist[q as usize] = fw;
            heap.push(Reverse((fw, q)));
        }
    }
    while let Some(Reverse((d, q))) = heap.pop() {
        if d > dist[q as usize] {
            continue;
        }
        for &(p, w) in &rev[q as usize] {
            let nd = d.times(w);
            if nd < dist[p as usize] {
                dist[p as usize] = nd;
                heap.push(Reverse((nd, p)));
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::symbols::{Alphabet, SymbolTable};
    use std::sync::Arc;

    type W = Tropical<f64>;

    #[test]
    fn best_of_two_realizations() {
        let t = Arc::new(SymbolTable::with_symbols(["aa", "ao"]).unwrap());
        let ab = Alphabet::new(t, [(SymbolId(1), SymbolId(1)), (SymbolId(1), SymbolId(2))]).unwrap();
        let ao = ab.find(SymbolId(1), SymbolId(2)).unwrap();
        let aa = ab.find(SymbolId(1), SymbolId(1)).unwrap();
        let m = crate::fst::union(
            &Wfsa::from_string(ab.clone(), &[ao], W::new(0.95).unwrap()),
            &Wfsa::from_string(ab.clone(), &[aa], W::new(1.24).unwrap()),
        )
        .unwrap();
        assert_eq!(shortest_path(&m, 1), vec![(vec![ao], W::new(0.95).unwrap())]);
        let all = shortest_path(&m, 10);
        assert_eq!(all.len(), 2);
        assert_eq!(all[1], (vec![aa], W::new(1.24).unwrap()));
        assert!(shortest_path(&Wfsa::<f64>::new(ab), 3).is_empty());
    }

    #[test]
    fn ties_break_on_output_sequence() {
        let ab = alphabet(1, 3);
        let l: Vec<_> = ab.non_boundary().collect();
        let mut m = Wfsa::<f64>::new(ab.clone());
        m.add_state();
        m.add_state();
        m.set_start(0);
        m.set_final(1, W::one());
        for &x in l.iter().rev() {
            m.add_arc(0, x, W::new(1.0).unwrap(), 1);
        }
        let got: Vec<_> = shortest_path(&m, 3).into_iter().map(|(s, _)| s).collect();
        assert_eq!(got, vec![vec![l[0]], vec![l[1]], vec![l[2]]]);
    }

    #[test]
    fn acyclic_matches_exhaustive_enumeration() {
        let ab = alphabet(2, 2);
        let labels: Vec<_> = ab.non_boundary().collect();
        for seed in 0..30 {
            // acyclic 6-state machine: arcs only go forward
            let r = random_wfsa(&ab, 6, 14, true, seed);
            let mut m = Wfsa::new(ab.clone());
            for _ in 0..6 {
                m.add_state();
            }
            m.set_start(0);
            for q in r.state_ids() {
                m.set_final(q, r.final_weight(q));
                for t in r.arcs(q) {
                    if t.next > q {
                        m.add_arc(q, t.label, t.weight, t.next);
                    }
                }
            }
            let mut expect: Vec<(Vec<PairId>, W)> = all_strings(&labels, 5)
                .into_iter()
                .map(|s| {
                    let w = brute_weight(&m, &s);
                    (s, w)
                })
                .filter(|(_, w)| !w.is_zero())
                .collect();
            expect.sort_by(|(s1, w1), (s2, w2)| {
                w1.cmp(w2)
                    .then_with(|| ab.outputs(s1).cmp(&ab.outputs(s2)))
                    .then_with(|| s1.cmp(s2))
            });
            let got = shortest_path(&m, 1000);
            assert_eq!(got.len(), expect.len(), "seed {seed}");
            for ((gs, gw), (es, ew)) in got.iter().zip(&expect) {
                assert!(gw.approx_eq(*ew, 1e-12));
                assert_eq!(gs, es);
            }
        }
    }

    #[test]
    fn cyclic_machine_returns_requested_count() {
        let ab = alphabet(2, 1);
        let u = Wfsa::<f64>::universal(ab.clone());
        let got = shortest_path(&u, 4);
        assert_eq!(got.len(), 4);
        assert!(got[0].0.is_empty());
    }
}
