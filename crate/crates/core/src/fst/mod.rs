//! Epsilon-free weighted acceptors over the pair alphabet.
//!
//! A same-length transducer is represented as an acceptor whose labels are
//! (input, output) pairs. With no epsilon arcs, every accepted pair string has
//! equal-length input and output sides, and intersection of two such machines
//! is a plain product construction.

mod apply;
mod ops;
mod shortest;
mod text;

use std::collections::VecDeque;
use std::sync::Arc;

use thiserror::Error;

use crate::symbols::{Alphabet, PairId, SymbolError};
use crate::weight::{Scalar, Tropical};

pub use apply::{apply_to_names, apply_to_string, restriction};
pub use ops::{
    complement, complete, compose, concat, determinize_unweighted, intersect, optional, plus,
    reverse, star, union,
};
pub use shortest::shortest_path;
pub use text::{format_weight, read_fst, write_fst, RawFst};

pub type StateId = u32;

#[derive(Debug, Error, PartialEq)]
pub enum FstError {
    #[error("machines are defined over different pair alphabets")]
    AlphabetMismatch,
    #[error("operation requires an unweighted machine")]
    RequiresUnweighted,
    #[error("operation requires a deterministic machine")]
    NotDeterministic,
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("input string contains the boundary symbol")]
    BoundaryInInput,
    #[error("pair `{0}` is not in the alphabet")]
    UnknownPair(String),
    #[error("line {line}: {msg}")]
    Text { line: usize, msg: String },
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition<T: Scalar> {
    pub label: PairId,
    pub weight: Tropical<T>,
    pub next: StateId,
}

#[derive(Clone, Debug)]
struct State<T: Scalar> {
    arcs: Vec<Transition<T>>,
    final_weight: Tropical<T>,
}

/// Number of states and arcs of a trimmed machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct FstStats {
    pub states: usize,
    pub arcs: usize,
}

/// Weighted finite-state acceptor over an [`Alphabet`] of pair symbols.
#[derive(Clone, Debug)]
pub struct Wfsa<T: Scalar = f64> {
    alphabet: Arc<Alphabet>,
    states: Vec<State<T>>,
    start: Option<StateId>,
}

impl<T: Scalar> Wfsa<T> {
    /// A machine with no states, accepting nothing.
    pub fn new(alphabet: Arc<Alphabet>) -> Self {
        Wfsa {
            alphabet,
            states: Vec::new(),
            start: None,
        }
    }

    /// Accepts only the empty string, at weight 0.
    pub fn epsilon(alphabet: Arc<Alphabet>) -> Self {
        let mut m = Self::new(alphabet);
        let s = m.add_state();
        m.set_start(s);
        m.set_final(s, Tropical::one());
        m
    }

    /// Accepts every pair string at weight 0.
    pub fn universal(alphabet: Arc<Alphabet>) -> Self {
        let labels: Vec<_> = alphabet.ids().collect();
        Self::closure_of(alphabet, labels)
    }

    /// One state looping over `labels`, final at weight 0.
    pub fn closure_of(alphabet: Arc<Alphabet>, labels: impl IntoIterator<Item = PairId>) -> Self {
        let mut m = Self::epsilon(alphabet);
        for l in labels {
            m.add_arc(0, l, Tropical::one(), 0);
        }
        m
    }

    /// Accepts exactly the one-symbol strings in `labels`.
    pub fn symbol_set(alphabet: Arc<Alphabet>, labels: impl IntoIterator<Item = PairId>) -> Self {
        let mut m = Self::new(alphabet);
        let s = m.add_state();
        let f = m.add_state();
        m.set_start(s);
        m.set_final(f, Tropical::one());
        for l in labels {
            m.add_arc(s, l, Tropical::one(), f);
        }
        m.trim()
    }

    /// Accepts exactly `labels` with the given weight.
    pub fn from_string(alphabet: Arc<Alphabet>, labels: &[PairId], weight: Tropical<T>) -> Self {
        let mut m = Self::new(alphabet);
        let mut cur = m.add_state();
        m.set_start(cur);
        for &l in labels {
            let next = m.add_state();
            m.add_arc(cur, l, Tropical::one(), next);
            cur = next;
        }
        m.set_final(cur, weight);
        m
    }

    pub fn add_state(&mut self) -> StateId {
        self.states.push(State {
            arcs: Vec::new(),
            final_weight: Tropical::zero(),
        });
        (self.states.len() - 1) as StateId
    }

    pub fn set_start(&mut self, s: StateId) {
        assert!((s as usize) < self.states.len(), "start state out of range");
        self.start = Some(s);
    }

    pub fn set_final(&mut self, s: StateId, w: Tropical<T>) {
        self.states[s as usize].final_weight = w;
    }

    pub fn add_arc(&mut self, src: StateId, label: PairId, weight: Tropical<T>, next: StateId) {
        assert!(label.index() < self.alphabet.len(), "label outside alphabet");
        assert!((next as usize) < self.states.len(), "arc target out of range");
        self.states[src as usize].arcs.push(Transition {
            label,
            weight,
            next,
        });
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn start(&self) -> Option<StateId> {
        self.start
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.states.iter().map(|s| s.arcs.len()).sum()
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        0..self.states.len() as StateId
    }

    pub fn arcs(&self, s: StateId) -> &[Transition<T>] {
        &self.states[s as usize].arcs
    }

    pub fn final_weight(&self, s: StateId) -> Tropical<T> {
        self.states[s as usize].final_weight
    }

    pub fn is_final(&self, s: StateId) -> bool {
        !self.final_weight(s).is_zero()
    }

    /// True when every arc and final weight is the semiring one.
    pub fn is_unweighted(&self) -> bool {
        self.states.iter().all(|s| {
            (s.final_weight.is_zero() || s.final_weight.is_one())
                && s.arcs.iter().all(|a| a.weight.is_one())
        })
    }

    /// At most one arc per (state, label).
    pub fn is_deterministic(&self) -> bool {
        let mut seen = vec![usize::MAX; self.alphabet.len()];
        for (k, s) in self.states.iter().enumerate() {
            for a in &s.arcs {
                if seen[a.label.index()] == k {
                    return false;
                }
                seen[a.label.index()] = k;
            }
        }
        true
    }

    /// Language emptiness: no final state is reachable from the start.
    pub fn is_empty_language(&self) -> bool {
        self.trim().start.is_none()
    }

    /// Weight of a pair string: minimum over accepting paths, `+inf` if none.
    pub fn weight(&self, s: &[PairId]) -> Tropical<T> {
        let Some(start) = self.start else {
            return Tropical::zero();
        };
        let mut cur = vec![(start, Tropical::one())];
        let mut slot = vec![usize::MAX; self.states.len()];
        for &label in s {
            let mut next: Vec<(StateId, Tropical<T>)> = Vec::new();
            for &(q, w) in &cur {
                for a in self.arcs(q).iter().filter(|a| a.label == label) {
                    let nw = w.times(a.weight);
                    let k = slot[a.next as usize];
                    if k < next.len() && next[k].0 == a.next {
                        next[k].1 = next[k].1.plus(nw);
                    } else {
                        slot[a.next as usize] = next.len();
                        next.push((a.next, nw));
                    }
                }
            }
            if next.is_empty() {
                return Tropical::zero();
            }
            cur = next;
        }
        cur.iter()
            .map(|&(q, w)| w.times(self.final_weight(q)))
            .fold(Tropical::zero(), Tropical::plus)
    }

    pub fn accepts(&self, s: &[PairId]) -> bool {
        !self.weight(s).is_zero()
    }

    /// Number of distinct accepting paths labelled `s`.
    pub fn count_paths(&self, s: &[PairId]) -> u64 {
        let Some(start) = self.start else { return 0 };
        let mut counts = vec![0u64; self.states.len()];
        counts[start as usize] = 1;
        for &label in s {
            let mut next = vec![0u64; self.states.len()];
            for (q, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for a in self.states[q].arcs.iter() {
                    if a.label == label && !a.weight.is_zero() {
                        next[a.next as usize] += c;
                    }
                }
            }
            counts = next;
        }
        counts
            .iter()
            .enumerate()
            .filter(|(q, _)| self.is_final(*q as StateId))
            .map(|(_, c)| *c)
            .sum()
    }

    /// Removes states that are not both accessible and coaccessible, drops
    /// arcs of weight `+inf`, renumbers states in breadth-first order from
    /// the start and sorts each state's arcs by label.
    pub fn trim(&self) -> Self {
        let Some(start) = self.start else {
            return Self::new(self.alphabet.clone());
        };
        let n = self.states.len();
        let mut coacc = vec![false; n];
        let mut rev: Vec<Vec<StateId>> = vec![Vec::new(); n];
        let mut queue = VecDeque::new();
        for (q, st) in self.states.iter().enumerate() {
            for a in &st.arcs {
                if !a.weight.is_zero() {
                    rev[a.next as usize].push(q as StateId);
                }
            }
            if !st.final_weight.is_zero() {
                coacc[q] = true;
                queue.push_back(q as StateId);
            }
        }
        while let Some(q) = queue.pop_front() {
            for &p in &rev[q as usize] {
                if !coacc[p as usize] {
                    coacc[p as usize] = true;
                    queue.push_back(p);
                }
            }
        }
        if !coacc[start as usize] {
            return Self::new(self.alphabet.clone());
        }
        let mut remap = vec![StateId::MAX; n];
        let mut order = Vec::new();
        remap[start as usize] = 0;
        order.push(start);
        let mut head = 0;
        while head < order.len() {
            let q = order[head];
            head += 1;
            let mut arcs: Vec<_> = self.states[q as usize].arcs.clone();
            arcs.sort_by_key(|a| (a.label, a.next));
            for a in arcs {
                if !a.weight.is_zero()
                    && coacc[a.next as usize]
                    && remap[a.next as usize] == StateId::MAX
                {
                    remap[a.next as usize] = order.len() as StateId;
                    order.push(a.next);
                }
            }
        }
        let states = order
            .iter()
            .map(|&q| {
                let st = &self.states[q as usize];
                let mut arcs: Vec<_> = st
                    .arcs
                    .iter()
                    .filter(|a| !a.weight.is_zero() && coacc[a.next as usize])
                    .map(|a| Transition {
                        label: a.label,
                        weight: a.weight,
                        next: remap[a.next as usize],
                    })
                    .collect();
                arcs.sort_by(|x, y| {
                    (x.label, x.next, x.weight).cmp(&(y.label, y.next, y.weight))
                });
                State {
                    arcs,
                    final_weight: st.final_weight,
                }
            })
            .collect();
        Wfsa {
            alphabet: self.alphabet.clone(),
            states,
            start: Some(0),
        }
    }

    /// State and arc counts after trimming.
    pub fn stats(&self) -> FstStats {
        let t = self.trim();
        FstStats {
            states: t.num_states(),
            arcs: t.num_arcs(),
        }
    }

    /// Converts the weight carrier, e.g. `f64` to `f32`.
    pub fn cast<U: Scalar>(&self) -> Wfsa<U> {
        let conv = |w: Tropical<T>| {
            Tropical::new(U::from_f64_lossy(w.value().to_f64_lossy())).unwrap_or(Tropical::zero())
        };
        Wfsa {
            alphabet: self.alphabet.clone(),
            start: self.start,
            states: self
                .states
                .iter()
                .map(|s| State {
                    final_weight: conv(s.final_weight),
                    arcs: s
                        .arcs
                        .iter()
                        .map(|a| Transition {
                            label: a.label,
                            weight: conv(a.weight),
                            next: a.next,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub(crate) fn check_same_alphabet(&self, other: &Self) -> Result<(), FstError> {
        if self.alphabet.same_as(&other.alphabet) {
            Ok(())
        } else {
            Err(FstError::AlphabetMismatch)
        }
    }
}
