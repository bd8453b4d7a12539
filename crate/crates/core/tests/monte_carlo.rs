use std::sync::Arc;

use skewlab::base::{sample_point, BaseKind};
use skewlab::dynamics::{omega_for, sample_state, Eta, SystemConfig};
use skewlab::experiments::Proportion;

fn within_sigmas(p: Proportion, target: f64, k: f64) -> bool {
    let sd = (target * (1.0 - target) / p.trials as f64).sqrt();
    (p.estimate() - target).abs() <= k * sd
}

fn small_config() -> SystemConfig {
    let mut c = SystemConfig { m: Some(2), horizon: 6, ..SystemConfig::default() };
    c.validate().unwrap();
    c
}

#[test]
fn sampled_level_zero_matches_exact_mass() {
    // C(200, 100) / 4^100
    let exact = 0.05634847900925642;
    let kind = BaseKind::canonical_walk().into_arc();
    let trials = 20_000;
    let hits = (0..trials)
        .filter(|&id| sample_point(Arc::clone(&kind), 7, id).birkhoff_at(&[100]).unwrap()[0] == 0)
        .count() as u64;
    let p = Proportion::new(hits, trials);
    assert!(within_sigmas(p, exact, 4.0), "{} vs {exact}", p.estimate());
}

#[test]
fn both_maps_preserve_the_zero_cylinder() {
    let c = small_config();
    let kind = c.base.clone().into_arc();
    let trials = 4000;
    let (mut t_hits, mut s_hits, mut b) = (0, 0, 0);
    for id in 0..trials {
        let state = sample_state(&c, &kind, id);
        let omega = omega_for(&c, id, 0);
        t_hits += u64::from(state.t_read(&omega, 4).unwrap().bit);
        s_hits += u64::from(state.s_read(&omega, 4).unwrap().bit);
        b += u64::from(state.in_b());
    }
    assert!(b > trials / 10, "only {b} points in B");
    assert!(within_sigmas(Proportion::new(t_hits, trials), 0.5, 4.0), "T: {t_hits}/{trials}");
    assert!(within_sigmas(Proportion::new(s_hits, trials), 0.5, 4.0), "S: {s_hits}/{trials}");
}

#[test]
fn thinning_keeps_the_expected_share() {
    let full = small_config();
    let half = SystemConfig { eta: Eta::Fraction(0.5), ..full.clone() };
    let kind = full.base.clone().into_arc();
    let (mut e, mut kept) = (0, 0);
    for id in 0..3000 {
        let a = sample_state(&full, &kind, id);
        let b = sample_state(&half, &kind, id);
        assert_eq!(a.in_e(), b.in_e(), "id {id}");
        assert!(!b.in_b() || a.in_b(), "id {id}");
        e += u64::from(a.in_e());
        kept += u64::from(b.in_b());
    }
    assert!(e > 300);
    assert!(within_sigmas(Proportion::new(kept, e), 0.5, 4.0), "{kept}/{e}");
}

#[test]
fn off_b_points_read_the_shared_coordinate() {
    let c = small_config();
    let kind = c.base.clone().into_arc();
    let mut seen = 0;
    for id in 0..400 {
        let state = sample_state(&c, &kind, id);
        if state.in_b() {
            continue;
        }
        seen += 1;
        let omega = omega_for(&c, id, 3);
        for n in [2, 5, 7] {
            let t = state.t_read(&omega, n).unwrap();
            let s = state.s_read(&omega, n).unwrap();
            assert_eq!(s.coordinate, state.g2[(n - 2) as usize]);
            assert_eq!(t.coordinate, state.g1[(n - 2) as usize]);
        }
    }
    assert!(seen > 0);
}
