use std::sync::Arc;

use proptest::prelude::*;
use skewlab::base::{level_distribution, sample_point, BaseKind, Precision, StepLaw};
use skewlab::experiments::{Proportion, Z95};
use skewlab::perm::{ForwardTable, PolyPermutation};
use skewlab::symbolic::{
    Atom, CoordPermutation, CylinderSpec, Direction, FinitePermutation, FiniteSet, IndexChain, OmegaOracle,
};

fn atom_strategy() -> impl Strategy<Value = Atom> {
    prop_oneof![
        (-1000i128..1000).prop_map(Atom::Shift),
        proptest::collection::btree_set(-40i128..40, 0..12).prop_map(|s| Atom::Flip(Arc::new(FiniteSet::new("S", s)))),
        (proptest::collection::vec(-30i128..30, 2..10), any::<bool>()).prop_map(|(pts, inv)| {
            let mut dom: Vec<i128> = pts;
            dom.sort_unstable();
            dom.dedup();
            let mut img = dom.clone();
            img.rotate_left(1);
            let pairs: Vec<(i128, i128)> = dom.into_iter().zip(img).collect();
            let p = FinitePermutation::new("P", &pairs).unwrap();
            Atom::Permute(Arc::new(p), if inv { Direction::Inverse } else { Direction::Forward })
        }),
    ]
}

proptest! {
    #[test]
    fn shift_group_law(a in -1i128 << 60..1i128 << 60, b in -1i128 << 60..1i128 << 60, q in -1000i128..1000) {
        let ab = IndexChain::shift(a).compose(&IndexChain::shift(b));
        prop_assert_eq!(ab.pull_back(q), IndexChain::shift(a + b).pull_back(q));
        let back = IndexChain::shift(a).compose(&IndexChain::shift(a).inverse());
        prop_assert_eq!(back.pull_back(q), Ok((q, false)));
    }

    #[test]
    fn flip_is_an_involution(members in proptest::collection::btree_set(-50i128..50, 0..20), q in -60i128..60, seed: u64) {
        let s = Arc::new(FiniteSet::new("S", members.clone()));
        let twice = IndexChain::from_atoms(vec![Atom::Flip(s.clone()), Atom::Flip(s.clone())]);
        prop_assert_eq!(twice.pull_back(q), Ok((q, false)));
        let once = IndexChain::from_atoms(vec![Atom::Flip(s)]);
        let w = OmegaOracle::new(seed, 0);
        prop_assert_eq!(once.read(&w, q).unwrap(), w.read(q) ^ members.contains(&q));
    }

    #[test]
    fn chain_inverse_law(atoms in proptest::collection::vec(atom_strategy(), 0..8), q in -100i128..100) {
        let c = IndexChain::from_atoms(atoms);
        prop_assert_eq!(c.compose(&c.inverse()).pull_back(q), Ok((q, false)));
        prop_assert_eq!(c.inverse().compose(&c).pull_back(q), Ok((q, false)));
    }

    #[test]
    fn poly_permutation_inverse_law(raw in proptest::collection::btree_set(1i128..400, 1..20), signs: u32, q in -300i128..300) {
        let values: Vec<i128> = raw
            .iter()
            .enumerate()
            .map(|(i, &v)| if signs >> (i % 32) & 1 == 1 { -2 * v } else { 2 * v })
            .collect();
        let n = values.len() as i128;
        let forward = ForwardTable::from_values(&"n^5".parse().unwrap(), 2, values).unwrap();
        let p = PolyPermutation::new("pi", forward, 1 << 20);
        prop_assert_eq!(p.apply(p.apply_inverse(q).unwrap()).unwrap(), q);
        for i in -n..=n {
            prop_assert_eq!(p.apply_inverse(p.apply(i).unwrap()).unwrap(), i);
        }
    }

    #[test]
    fn cylinder_mass_is_dyadic(base in -100i128..100, word in proptest::collection::vec(any::<bool>(), 0..30)) {
        let c = CylinderSpec::new(base, word.clone());
        prop_assert_eq!(c.mass(), 2f64.powi(-(word.len() as i32)));
        let text = c.to_string();
        prop_assert_eq!(text.parse::<CylinderSpec>().unwrap(), c);
    }

    #[test]
    fn sampling_is_deterministic(seed: u64, id in 0u64..1000, shift in 0u64..5000) {
        let kind = BaseKind::canonical_walk().into_arc();
        let mut a = sample_point(kind.clone(), seed, id);
        let mut b = sample_point(kind, seed, id);
        prop_assert_eq!(a.steps(0, 200), b.steps(0, 200));
        let mut s = a.shifted(shift);
        prop_assert_eq!(s.steps(0, 50), b.steps(shift, 50));
    }

    #[test]
    fn symmetric_laws_give_symmetric_levels(w0 in 1u64..5, w1 in 1u64..5, w2 in 0u64..4, n in 1u64..40) {
        let mut steps = vec![(0, w0), (1, w1), (-1, w1)];
        if w2 > 0 {
            steps.push((3, w2));
            steps.push((-3, w2));
        }
        let law = StepLaw::new(steps.into_iter().filter(|s| s.1 > 0).collect()).unwrap();
        let d = level_distribution(&law, n, Precision::Exact).unwrap();
        prop_assert!(d.is_symmetric());
        prop_assert_eq!(d.sums_to_one_exactly(), Some(true));
    }

    #[test]
    fn wilson_endpoints_solve_the_score_equation(n in 1u64..2000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as u64;
        let p = Proportion::new(k, n);
        let (lo, hi) = p.wilson(Z95);
        let phat = p.estimate();
        prop_assert!(0.0 <= lo && lo <= phat && phat <= hi && hi <= 1.0);
        for e in [lo, hi] {
            if e > 0.0 && e < 1.0 {
                let lhs = (phat - e).powi(2);
                let rhs = Z95 * Z95 * e * (1.0 - e) / n as f64;
                prop_assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
            }
        }
    }
}

fn log_binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut lc = 0.0f64;
    for k in 0..=n {
        if k > 0 {
            lc += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        out.push(lc + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln());
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Exact coverage under the binomial law; Wilson stays above 0.92 on this range.
    #[test]
    fn wilson_coverage_against_binomial(n in 30u64..300, p in 0.05f64..0.95) {
        let pmf = log_binomial_pmf(n, p);
        let cover: f64 = (0..=n)
            .filter(|&k| {
                let (lo, hi) = Proportion::new(k, n).wilson(Z95);
                lo <= p && p <= hi
            })
            .map(|k| pmf[k as usize].exp())
            .sum();
        prop_assert!(cover > 0.90, "coverage {cover} at n = {n}, p = {p}");
    }
}
