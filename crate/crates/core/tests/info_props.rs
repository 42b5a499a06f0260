use std::collections::HashMap;

use escp_core::info::{conditional_entropy, entropy_report, first_order_entropy};
use escp_core::stream::{BigramHistogram, Histogram, QuantizationSpec, Symbol, SymbolDistribution};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `H(X, Y) − H(X)` over adjacent pairs, counted with a hash map: the chain
/// rule route, independent of the row-wise formula under test.
fn chain_rule_conditional_entropy(s: &[Symbol]) -> f64 {
    let mut joint: HashMap<(Symbol, Symbol), u64> = HashMap::new();
    let mut first: HashMap<Symbol, u64> = HashMap::new();
    for w in s.windows(2) {
        *joint.entry((w[0], w[1])).or_default() += 1;
        *first.entry(w[0]).or_default() += 1;
    }
    let n = (s.len() - 1) as f64;
    let h = |counts: &mut dyn Iterator<Item = u64>| -> f64 {
        counts
            .map(|c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum()
    };
    h(&mut joint.values().copied()) - h(&mut first.values().copied())
}

fn h1(s: &[Symbol], spec: QuantizationSpec) -> f64 {
    first_order_entropy(&Histogram::from_samples(s, spec).unwrap().to_distribution().unwrap())
}

#[test]
fn uniform_maximizes_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for bits in [1u32, 2, 8] {
        let spec = QuantizationSpec::new(bits).unwrap();
        let n = spec.alphabet_size();
        let uniform = first_order_entropy(&SymbolDistribution::new(spec, vec![1.0 / n as f64; n]).unwrap());
        assert!((uniform - bits as f64).abs() < 1e-12);
        for _ in 0..1000 {
            let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let d = SymbolDistribution::from_weights(spec, &w).unwrap();
            assert!(first_order_entropy(&d) <= uniform + 1e-12);
        }
    }
}

#[test]
fn iid_binary_conditional_entropy_approaches_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s: Vec<Symbol> = (0..1_000_000).map(|_| rng.random_range(0..2)).collect();
    let spec = QuantizationSpec::new(1).unwrap();
    let h2 = conditional_entropy(&BigramHistogram::from_samples(&s, spec).unwrap()).unwrap();
    let oracle = chain_rule_conditional_entropy(&s);
    assert!((h2 - oracle).abs() < 1e-9, "{h2} vs {oracle}");
    assert!((h2 - 1.0).abs() < 0.01);
}

#[test]
fn markov_source_has_lower_conditional_entropy() {
    // sticky chain: repeat the previous symbol 90% of the time
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut s = vec![0u16];
    for _ in 0..200_000 {
        let prev = *s.last().unwrap();
        s.push(if rng.random::<f64>() < 0.9 { prev } else { rng.random_range(0..4) });
    }
    let spec = QuantizationSpec::TWO_BIT;
    let h2 = conditional_entropy(&BigramHistogram::from_samples(&s, spec).unwrap()).unwrap();
    let h = h1(&s, spec);
    assert!(h > 1.95 && h2 < 0.7, "H1 {h} H2 {h2}");
    assert!((h2 - chain_rule_conditional_entropy(&s)).abs() < 1e-9);
}

#[test]
fn short_streams_can_exceed_whole_stream_entropy() {
    // three pairs all start at 0, so H₂ is the entropy of (0, 0, 1) = 0.918,
    // above the 0.811 of the four-sample histogram
    let s = [0u16, 0, 0, 1];
    let spec = QuantizationSpec::new(1).unwrap();
    let h2 = conditional_entropy(&BigramHistogram::from_samples(&s, spec).unwrap()).unwrap();
    assert!((h2 - 0.918_295_834_054_489_6).abs() < 1e-12);
    assert!((h1(&s, spec) - 0.811_278_124_459_132_8).abs() < 1e-12);
    assert!((h2 - h1(&s[1..], spec)).abs() < 1e-12);
}

proptest! {
    #[test]
    fn conditioning_never_increases_entropy(s in prop::collection::vec(0u16..8, 2..300)) {
        let spec = QuantizationSpec::new(3).unwrap();
        let b = BigramHistogram::from_samples(&s, spec).unwrap();
        let h2 = conditional_entropy(&b).unwrap();
        // H(Y | X) ≤ H(Y), Y the successor of each pair
        let successors = h1(&s[1..], spec);
        prop_assert!(h2 >= 0.0);
        prop_assert!(h2 <= successors + 1e-9);
        prop_assert!((h2 - chain_rule_conditional_entropy(&s)).abs() < 1e-9);
    }

    #[test]
    fn entropy_is_permutation_invariant(w in prop::collection::vec(0.0f64..1.0, 16), rot in 0usize..16) {
        prop_assume!(w.iter().sum::<f64>() > 0.0);
        let spec = QuantizationSpec::new(4).unwrap();
        let mut r = w.clone();
        r.rotate_left(rot);
        r.reverse();
        let a = first_order_entropy(&SymbolDistribution::from_weights(spec, &w).unwrap());
        let b = first_order_entropy(&SymbolDistribution::from_weights(spec, &r).unwrap());
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=4.0 + 1e-12).contains(&a));
    }

    #[test]
    fn report_identities(x in 0.5f64..32.0, frac in 0.0f64..=1.0) {
        let h = x * frac;
        let r = entropy_report(h, x).unwrap();
        prop_assert!((r.ratio_bound + r.frac_compressibility - 1.0).abs() < 1e-12);
        prop_assert!((r.redundancy - (x - h)).abs() < 1e-12);
        prop_assert!((r.percent_compressibility - 100.0 * r.frac_compressibility).abs() < 1e-12);
    }
}
