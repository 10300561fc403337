//! Exhaustive comparison of a compiled forest with the tree interpreter.

use std::collections::BTreeMap;
use std::fmt;

use crate::fst::{StateId, Wfsa};
use crate::symbols::{PairId, SymbolId};
use crate::tree::{interpret_forest, Forest, InterpretError};
use crate::weight::{Scalar, Tropical};

/// A string pair on which the compiled machine and the interpreter differ.
#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub input: String,
    pub output: String,
    pub compiled: f64,
    pub oracle: f64,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "input `{}` output `{}`: compiled {} but interpreter {}",
            self.input, self.output, self.compiled, self.oracle
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub inputs: usize,
    /// `(x, y)` pairs compared.
    pub compared: usize,
    /// Pairs both sides agree are impossible.
    pub infinite: usize,
    pub mismatch: Option<Mismatch>,
}

type Frontier<T> = Vec<(StateId, Tropical<T>)>;

fn step<T: Scalar>(m: &Wfsa<T>, from: &Frontier<T>, label: PairId) -> Frontier<T> {
    let mut next: BTreeMap<StateId, Tropical<T>> = BTreeMap::new();
    for &(q, w) in from {
        for t in m.arcs(q).iter().filter(|t| t.label == label) {
            let v = w.times(t.weight);
            let e = next.entry(t.next).or_insert(Tropical::zero());
            *e = e.plus(v);
        }
    }
    next.into_iter().filter(|(_, w)| !w.is_zero()).collect()
}

struct Walk<'a, T: Scalar> {
    forest: &'a Forest,
    phi: &'a Wfsa<T>,
    tol: f64,
    report: VerifyReport,
}

impl<T: Scalar> Walk<'_, T> {
    fn outputs(&mut self, x: &[SymbolId], per: &[BTreeMap<SymbolId, f64>], y: &mut Vec<PairId>, from: &Frontier<T>) {
        if self.report.mismatch.is_some() {
            return;
        }
        let ab = self.forest.alphabet();
        let i = y.len();
        if i == x.len() {
            let end = step(self.phi, from, ab.boundary());
            let compiled = end
                .iter()
                .fold(Tropical::zero(), |acc, &(q, w)| acc.plus(w.times(self.phi.final_weight(q))))
                .value()
                .to_f64_lossy();
            let oracle: f64 = y
                .iter()
                .zip(per)
                .map(|(&p, m)| m.get(&ab.output(p)).copied().unwrap_or(f64::INFINITY))
                .sum();
            self.report.compared += 1;
            let agree = if oracle.is_infinite() || compiled.is_infinite() {
                oracle == compiled
            } else {
                (oracle - compiled).abs() <= self.tol
            };
            if oracle.is_infinite() && agree {
                self.report.infinite += 1;
            }
            if !agree {
                let t = ab.symbols();
                self.report.mismatch = Some(Mismatch {
                    input: x.iter().map(|&s| t.name(s)).collect::<Vec<_>>().join(" "),
                    output: ab.outputs(y).iter().map(|&s| t.name(s)).collect::<Vec<_>>().join(" "),
                    compiled,
                    oracle,
                });
            }
            return;
        }
        for &p in ab.with_input(x[i]) {
            let next = step(self.phi, from, p);
            y.push(p);
            self.outputs(x, per, y, &next);
            y.pop();
        }
    }
}

/// Compares `phi`, compiled from `forest`, with the interpreter on every
/// input of length at most `max_len` and every output over the declared
/// pairs. Stops at the first mismatch.
pub fn verify_forest<T: Scalar>(
    forest: &Forest,
    phi: &Wfsa<T>,
    max_len: usize,
    tol: f64,
) -> Result<VerifyReport, InterpretError> {
    let ab = forest.alphabet();
    let symbols: Vec<SymbolId> = ab.symbols().ids().skip(1).collect();
    let mut walk = Walk {
        forest,
        phi,
        tol,
        report: VerifyReport::default(),
    };
    let Some(start) = phi.start() else {
        return Ok(walk.report);
    };
    let opened = step(phi, &vec![(start, Tropical::one())], ab.boundary());
    let mut x = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    // odometer over inputs, shortest first
    for len in 0..=max_len {
        x.clear();
        x.resize(len, symbols.first().copied().unwrap_or(SymbolId::BOUNDARY));
        stack.clear();
        stack.resize(len, 0);
        if len > 0 && symbols.is_empty() {
            break;
        }
        loop {
            let per = interpret_forest(forest, &x)?;
            walk.report.inputs += 1;
            walk.outputs(&x, &per, &mut Vec::new(), &opened);
            if walk.report.mismatch.is_some() {
                return Ok(walk.report);
            }
            let Some(k) = (0..len).rev().find(|&k| stack[k] + 1 < symbols.len()) else {
                break;
            };
            stack[k] += 1;
            x[k] = symbols[stack[k]];
            for j in k + 1..len {
                stack[j] = 0;
                x[j] = symbols[0];
            }
        }
    }
    Ok(walk.report)
}
