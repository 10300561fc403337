//! Compiles decision trees whose leaves predict weighted rewrites of one input
//! symbol, and whose node questions are regular expressions over the input
//! string, into weighted same-length transducers.

pub mod fst;
pub mod regex;
pub mod rules;
pub mod symbols;
pub mod testgen;
pub mod tree;
pub mod weight;

pub use fst::{FstError, FstStats, Wfsa};
pub use symbols::{Alphabet, PairId, SymbolId, SymbolTable};
pub use weight::{Scalar, Tropical};

/// Double-precision tropical weight.
pub type Weight = Tropical<f64>;
/// Double-precision machine.
pub type Fst = Wfsa<f64>;
/// Single-precision machine.
pub type Fst32 = Wfsa<f32>;
