//! Frozen reference values computed outside this crate (Python `fractions`, `math.comb`,
//! `math.fsum`, mpmath at 60 digits, scipy `quad`).

use num_bigint::BigInt;
use num_rational::Ratio;
use skewlab::base::{llt_deviation, parity_mass_exact, w_mass, walk_exact_distribution};
use skewlab::experiments::{llt_curve, series_partial_sums, tail_integral};
use skewlab::numeric::{gap, l_enumerate, l_index, GrowthFn};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

fn binom(n: u64, k: u64) -> BigInt {
    let mut c = BigInt::from(1);
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

#[test]
fn walk_levels_match_central_binomial() {
    // the step law is that of Bin(2, 1/2) - 1
    for n in [1u64, 2, 17, 100] {
        let d = walk_exact_distribution(n).unwrap();
        let four_n = BigInt::from(1) << (2 * n);
        for x in -(n as i64)..=(n as i64) {
            let want = Ratio::new(binom(2 * n, (n as i64 + x) as u64), four_n.clone());
            assert_eq!(d.exact_mass(x).unwrap(), want, "n = {n}, x = {x}");
        }
    }
}

#[test]
fn frozen_level_masses() {
    let cases = [
        (100, 0, 0.05634847900925642),
        (100, 7, 0.03459129672486793),
        (100, -30, 6.335652011452002e-06),
        (2048, 0, 0.01246618536376026),
        (2048, 45, 0.004638597772677245),
    ];
    for (n, x, want) in cases {
        let got = walk_exact_distribution(n).unwrap().mass(x);
        assert!(close(got, want, 1e-13), "m(f_{n} = {x}) = {got}, want {want}");
    }
}

#[test]
fn frozen_llt_deviation() {
    assert!(close(llt_deviation(1).unwrap(), 0.06418958354775629, 1e-12));
    assert!(close(llt_deviation(2).unwrap(), 0.0338594976578456, 1e-12));
    assert!(close(llt_deviation(100).unwrap(), 0.0007047934551920321, 1e-9));
    assert!(close(llt_deviation(400).unwrap(), 0.00017628165350913605, 1e-9));
}

#[test]
fn frozen_w_masses() {
    let cases = [
        (100, 0.16792962556223945),
        (400, 0.0844613435879041),
        (1600, 0.0422932945613848),
        (6400, 0.021154492684060583),
    ];
    for (n, want) in cases {
        let got = w_mass(n, 3).unwrap();
        assert!(close(got, want, 1e-10), "m(W_{n}) = {got}, want {want}");
    }
}

#[test]
fn llt_curve_reports_frozen_values() {
    let r = llt_curve(&[100, 400]).unwrap();
    let dev = r.column_f64("llt_deviation");
    let w = r.column_f64("w_mass");
    assert!(close(dev[0], 0.0007047934551920321, 1e-9));
    assert!(close(w[1], 0.0844613435879041, 1e-10));
    assert!(r.all_passed());
}

#[test]
fn doubled_walk_never_odd() {
    for n in [1, 5, 64, 300] {
        assert_eq!(parity_mass_exact(n).unwrap(), Ratio::from_integer(BigInt::from(0)));
    }
}

#[test]
fn growth_values() {
    let pf: GrowthFn = "powfloor:9/2".parse().unwrap();
    for (n, want) in [(7, 6352i128), (10, 31622), (123, 2538475647), (1000, 31622776601683)] {
        assert_eq!(pf.eval(n).unwrap().0, want, "[n^(9/2)] at {n}");
    }
    let q1: GrowthFn = "qlog:1".parse().unwrap();
    for (n, want) in [(3, 88i128), (10, 23025), (1000, 6907755278982)] {
        assert_eq!(q1.eval(n).unwrap().0, want, "[n^4 ln n] at {n}");
    }
    let q32: GrowthFn = "qlog:3/2".parse().unwrap();
    for (n, want) in [(50, 48359535i128), (77, 318250024)] {
        assert_eq!(q32.eval(n).unwrap().0, want, "[n^4 ln^1.5 n] at {n}");
    }
    let r = GrowthFn::RemarkCounterexample;
    let got: Vec<i128> = (3..9).map(|n| r.eval(n).unwrap().0).collect();
    assert_eq!(got, [2, 31, 33, 242, 244, 1023]);
    assert_eq!(gap(&r, 4, 1).unwrap().0, 2);
    assert_eq!(gap(&r, 5, 1).unwrap().0, 209);
}

#[test]
fn enumeration_of_nonzero_integers() {
    let first: Vec<i64> = (1..=6).map(|i| l_enumerate(i).unwrap()).collect();
    assert_eq!(first, [1, -1, 2, -2, 3, -3]);
    for i in 1..500 {
        assert_eq!(l_index(l_enumerate(i).unwrap()), Some(i as u64));
    }
    assert!(l_enumerate(0).is_err());
}

#[test]
fn frozen_series_values() {
    let h: GrowthFn = "poly:n^5".parse().unwrap();
    let r = series_partial_sums(&h, 100, 100).unwrap();
    let s = r.summary["partial_sum"].as_f64().unwrap();
    assert!(close(s, 1.1963866090863673, 1e-14), "{s}");

    let r = series_partial_sums(&GrowthFn::RemarkCounterexample, 2001, 1).unwrap();
    let s = r.summary["k1_subsum"].as_f64().unwrap();
    assert!(close(s, 706.8006140840552, 1e-14), "{s}");

    let i5 = tail_integral(5.0);
    assert!((0.9108886175924344..0.9108886175924344 * 1.0005).contains(&i5), "{i5}");
}
