use std::sync::Arc;

use num_traits::Zero;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde_json::json;

use super::{check_budget, par_map, stamp, ExperimentError, ExperimentReport};
use crate::base::{BaseError, ExactPowers, StepLaw};
use crate::dynamics::{
    conjugacy_check, landing_state, omega_for, sample_state, ConjugacyOutcome, PointState, SystemConfig,
};
use crate::perm::{pi_y_apply, pi_y_inverse, polynomial_times, psi_chain, psi_direct, psi_inverse_chain};
use crate::symbolic::{Atom, IndexChain, OmegaOracle};

const TRIPLE_STREAM_KEY: u64 = 0x636f_6e6a_7567_6163;
/// Base points the conjugacy triples are drawn from.
const TRIPLE_POOL: u64 = 64;

/// Outcome counts of a structural check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckTally {
    pub checked: u64,
    pub failed: u64,
    pub undecided: u64,
}

impl CheckTally {
    /// Share of attempted checks that could not be decided.
    pub fn undecided_rate(&self) -> f64 {
        let attempts = self.checked + self.undecided;
        if attempts == 0 {
            0.0
        } else {
            self.undecided as f64 / attempts as f64
        }
    }
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, xs: &[T]) -> Option<T> {
    (!xs.is_empty()).then(|| xs[(rng.next_u64() % xs.len() as u64) as usize])
}

/// Two-path comparison of `S^N = R⁻¹ T^N R` on `triples` random `(y, n, q)`, with
/// `N = p₂(n)`, `n` in the horizon and `q` either 0 or a forward-table coordinate of `y`
/// or of the landing point.
pub fn conjugacy_sweep(config: &SystemConfig, triples: u64) -> Result<CheckTally, ExperimentError> {
    let mut config = config.clone();
    config.validate()?;
    check_budget(&config)?;
    let times = polynomial_times(&config.p2, config.start(), config.horizon, config.budget)
        .map_err(|e| ExperimentError::Input(e.to_string()))?;
    let kind = config.base.clone().into_arc();
    let outcomes = par_map(config.workers, 0..triples, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ TRIPLE_STREAM_KEY);
        rng.set_stream(t);
        let id = rng.next_u64() % TRIPLE_POOL;
        let big_n = pick(&mut rng, &times).expect("horizon >= 1");
        let mut y = sample_state(&config, &kind, id);
        let z = landing_state(&y, big_n, &config);
        let from = |s: &PointState| s.g1.iter().chain(&s.g2).copied().collect::<Vec<i128>>();
        let q = match rng.next_u64() % 3 {
            0 => 0,
            1 => pick(&mut rng, &from(&y)).unwrap_or(0),
            _ => pick(&mut rng, &from(&z)).unwrap_or(0),
        };
        let omega = omega_for(&config, id, rng.next_u64() % config.omega_per_point);
        conjugacy_check(&mut y, &z, big_n, &omega, q)
    })?;
    let mut tally = CheckTally::default();
    for o in outcomes {
        match o {
            ConjugacyOutcome::Pass => tally.checked += 1,
            ConjugacyOutcome::Fail { .. } => {
                tally.checked += 1;
                tally.failed += 1;
            }
            ConjugacyOutcome::Undecided(_) => tally.undecided += 1,
        }
    }
    Ok(tally)
}

/// First `n <= n_max` at which `g_n = 2 f_n` has odd values with positive mass, by exact
/// convolution; `None` when there is none.
pub fn first_odd_parity(n_max: u64) -> Result<Option<u64>, BaseError> {
    let mut powers = ExactPowers::new(StepLaw::canonical().scaled(2));
    for n in 1..=n_max {
        let d = powers.advance();
        let (lo, hi) = d.support();
        let odd = (lo..=hi).filter(|x| x.rem_euclid(2) == 1).any(|x| d.exact_mass(x).is_some_and(|m| !m.is_zero()));
        if odd {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

fn table_checks(states: &[PointState], config: &SystemConfig) -> [CheckTally; 4] {
    let mut out = [CheckTally::default(); 4];
    for (k, s) in states.iter().enumerate() {
        let Some(t) = &s.tables else { continue };
        let mut qs: Vec<i128> = (-120..=120).collect();
        qs.extend(s.g1.iter().chain(&s.g2));
        let psi = psi_chain(t);
        let round = psi.compose(&psi_inverse_chain(t));
        let flip2 = IndexChain::from_atoms(vec![Atom::Flip(t.q_y.clone()), Atom::Flip(t.q_y.clone())]);
        let omegas: Vec<OmegaOracle> = (0..8).map(|j| omega_for(config, k as u64, j)).collect();
        for &q in &qs {
            let mut one = |slot: usize, r: Result<bool, crate::symbolic::Undecided>| match r {
                Ok(ok) => {
                    out[slot].checked += 1;
                    out[slot].failed += u64::from(!ok);
                }
                Err(_) => out[slot].undecided += 1,
            };
            one(0, pi_y_apply(t, q).and_then(|r| pi_y_inverse(t, r)).map(|b| b == q));
            one(1, round.pull_back(q).map(|r| r == (q, false)));
            one(2, flip2.pull_back(q).map(|r| r == (q, false)));
            for w in &omegas {
                let direct = psi_direct(t, &|r| Ok(w.read(r)), q);
                one(3, psi.read(w, q).and_then(|a| direct.map(|b| a == b)));
            }
        }
    }
    out
}

/// The exact structural suite: permutation and chain algebra on sampled tables, the
/// conjugacy two-path check, shift composition and the parity of the cocycle.
pub fn selftest(config: &SystemConfig) -> Result<ExperimentReport, ExperimentError> {
    let mut config = config.clone();
    config.horizon = config.horizon.min(10);
    config.samples = config.samples.min(16);
    config.validate()?;
    check_budget(&config)?;
    let kind = config.base.clone().into_arc();
    let states = par_map(config.workers, 0..config.samples, |id| sample_state(&config, &Arc::clone(&kind), id))?;

    let mut report = ExperimentReport::new("selftest", &["check", "checked", "failures", "undecided", "status"]);
    stamp(&mut report, &config);
    let record = |report: &mut ExperimentReport, name: &str, t: CheckTally| {
        let ok = t.failed == 0 && t.checked > 0;
        report.push_row(vec![
            json!(name),
            json!(t.checked),
            json!(t.failed),
            json!(t.undecided),
            json!(if ok { "ok" } else { "FAIL" }),
        ]);
        report.assert(name, ok, format!("{} checked, {} failed, {} undecided", t.checked, t.failed, t.undecided));
    };

    let [inverse, round, flips, psi] = table_checks(&states, &config);
    record(&mut report, "pi_y inverse law", inverse);
    record(&mut report, "psi chain then inverse is identity", round);
    record(&mut report, "flip is an involution", flips);
    record(&mut report, "psi chain matches case definition", psi);

    let mut shifts = CheckTally::default();
    for (a, b) in [(3i128, -7i128), (-40, 40), (1 << 40, 5)] {
        let ab = IndexChain::shift(a).compose(&IndexChain::shift(b));
        for q in -50..=50 {
            shifts.checked += 1;
            shifts.failed += u64::from(ab.pull_back(q) != IndexChain::shift(a + b).pull_back(q));
        }
    }
    record(&mut report, "shift group law", shifts);

    let conj = conjugacy_sweep(&config, 200)?;
    record(&mut report, "conjugacy S = R^-1 T R", conj);

    let parity_n = 200;
    let odd = first_odd_parity(parity_n)?;
    record(
        &mut report,
        "parity of g_n",
        CheckTally { checked: parity_n, failed: u64::from(odd.is_some()), undecided: 0 },
    );
    let b = states.iter().filter(|s| s.in_b()).count();
    report.summarize("certified_b_points", b as u64);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes_on_defaults() {
        let c = SystemConfig { workers: 2, ..SystemConfig::default() };
        let r = selftest(&c).unwrap();
        for a in &r.assertions {
            assert!(a.passed, "{}: {}", a.name, a.detail);
        }
        assert!(r.summary["certified_b_points"].as_u64().unwrap() > 0);
    }

    #[test]
    fn no_odd_parity() {
        assert_eq!(first_odd_parity(60).unwrap(), None);
    }
}
