//! The property suite behind `treefst selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{enumerate_pairs, gen_forest, gen_rule, oracle_rule_weight, rule_alphabet, GenConfig};
use crate::fst::{apply_to_string, shortest_path, Wfsa};
use crate::rules::{compile_forest, compile_rule, validate_forest, verify_forest};
use crate::symbols::SymbolId;
use crate::tree::{interpret_forest, Forest};
use crate::weight::{Scalar, Tropical};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Checks that the best path of `phi` on `x` picks a cheapest output at
/// every position and costs the sum of the per-position minima.
pub fn best_path_agrees<T: Scalar>(forest: &Forest, phi: &Wfsa<T>, x: &[SymbolId], tol: f64) -> Result<(), String> {
    let per = interpret_forest(forest, x).map_err(|e| e.to_string())?;
    let minima: Vec<f64> = per
        .iter()
        .map(|m| m.values().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let expect: f64 = minima.iter().sum();
    let restricted = apply_to_string(phi, x).map_err(|e| e.to_string())?;
    let Some((labels, w)) = shortest_path(&restricted, 1).into_iter().next() else {
        return Err("no path".into());
    };
    let ab = restricted.alphabet();
    let t = ab.symbols();
    let y = ab.outputs(&labels[1..labels.len() - 1]);
    let render = |s: &[SymbolId]| s.iter().map(|&v| t.name(v)).collect::<Vec<_>>().join(" ");
    let got = w.value().to_f64_lossy();
    if (got - expect).abs() > tol {
        return Err(format!("`{}`: best path weight {got}, expected {expect}", render(x)));
    }
    for (i, o) in y.iter().enumerate() {
        let wo = per[i].get(o).copied().unwrap_or(f64::INFINITY);
        if (wo - minima[i]).abs() > 1e-12 {
            return Err(format!(
                "`{}`: best path `{}` is not cheapest at position {}",
                render(x),
                render(&y),
                i + 1
            ));
        }
    }
    Ok(())
}

fn forests(seed: u64, cases: usize) -> impl Iterator<Item = (u64, Forest)> {
    let cfg = GenConfig::default();
    (seed..seed + cases as u64).map(move |s| (s, gen_forest(&cfg.with_seed(s)).expect("default config is valid")))
}

/// Runs every property on `cases` seeded random forests and rules.
pub fn selftest(seed: u64, cases: usize) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut record = |name, failure: Option<String>, ok: String| {
        out.push(CheckResult {
            name,
            passed: failure.is_none(),
            detail: failure.unwrap_or(ok),
        })
    };

    // semiring laws on sampled weights
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failure = None;
    for _ in 0..1000 {
        let w = |rng: &mut ChaCha8Rng| Tropical::new(rng.gen_range(0.0..10.0f64)).expect("finite");
        let (a, b, c) = (w(&mut rng), w(&mut rng), w(&mut rng));
        let laws = [
            a.plus(b) == b.plus(a),
            a.times(b).approx_eq(b.times(a), 1e-12),
            a.times(b.plus(c)).approx_eq(a.times(b).plus(a.times(c)), 1e-12),
            a.times(b.times(c)).approx_eq(a.times(b).times(c), 1e-12),
            a.plus(Tropical::zero()) == a && a.times(Tropical::one()) == a,
        ];
        if laws.contains(&false) {
            failure = Some(format!("laws fail on {a}, {b}, {c}"));
            break;
        }
    }
    record("semiring laws", failure, "1000 triples".into());

    let mut failure = None;
    let mut compared = 0;
    let mut best_paths = 0;
    let mut best_failure = None;
    let mut invalid = None;
    for (s, f) in forests(seed, cases) {
        if let Some(issue) = validate_forest(&f).ok().and_then(|v| v.into_iter().next()) {
            invalid.get_or_insert(format!("seed {s}: {issue}"));
        }
        let phi: Wfsa = match compile_forest(&f) {
            Ok(m) => m,
            Err(e) => {
                failure.get_or_insert(format!("seed {s}: {e}"));
                continue;
            }
        };
        match verify_forest(&f, &phi, 4, 1e-9) {
            Ok(r) => {
                compared += r.compared;
                if let Some(m) = r.mismatch {
                    failure.get_or_insert(format!("seed {s}: {m}"));
                }
            }
            Err(e) => {
                failure.get_or_insert(format!("seed {s}: {e}"));
            }
        }
        let symbols: Vec<SymbolId> = f.symbols().ids().skip(1).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        for _ in 0..20 {
            let n = rng.gen_range(1..=5);
            let x: Vec<SymbolId> = (0..n).map(|_| symbols[rng.gen_range(0..symbols.len())]).collect();
            best_paths += 1;
            if let Err(e) = best_path_agrees(&f, &phi, &x, 1e-9) {
                best_failure.get_or_insert(format!("seed {s}: {e}"));
            }
        }
    }
    record("partition validation", invalid, format!("{cases} forests"));
    record("forest equals interpreter", failure, format!("{compared} string pairs"));
    record("best path per position", best_failure, format!("{best_paths} inputs"));

    let ab = rule_alphabet();
    let mut failure = None;
    let mut compared = 0;
    for s in seed..seed + cases as u64 {
        let checked = gen_rule(&ab, s).and_then(|r| Ok((compile_rule::<f64>(&r)?, r)));
        let (m, rule) = match checked {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(format!("rule {s}: {e}"));
                continue;
            }
        };
        for p in enumerate_pairs(&ab, 4).expect("small enumeration") {
            compared += 1;
            let (got, expect) = (m.weight(&p).value(), oracle_rule_weight(&rule, &ab, &p));
            if !(got == expect || (got - expect).abs() <= 1e-9) {
                failure.get_or_insert(format!("rule {s}, {}: compiled {got}, oracle {expect}", ab.format_pairs(&p)));
                break;
            }
        }
    }
    record("rule contract", failure, format!("{compared} pair strings"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_selftest_passes() {
        for r in selftest(7, 3) {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
