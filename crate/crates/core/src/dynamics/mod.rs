//! The skew product `T(y, ω) = (Ry, σ^{g(y)} ω)`, the conjugator `R(y, ω) = (y, ψ_y ω)`
//! on the certified set `B`, and `S = R⁻¹TR`, evaluated pointwise on sampled
//! `(y, ω)` pairs by index pull-back.

mod config;

pub use config::{
    parse_kv, ConfigEntry, ConfigError, Eta, SystemConfig, DEFAULT_BUDGET, DEFAULT_HORIZON, MIN_DEGREE, SYSTEM_KEYS,
};

use std::sync::Arc;

use siphasher::sip::SipHasher24;

use crate::base::{sample_point, BaseKind, BasePoint};
use crate::perm::{
    polynomial_times, psi_chain, psi_direct, psi_inverse_chain, psi_inverse_direct, ForwardTable, PermError, PermTables,
};
use crate::symbolic::{IndexChain, OmegaOracle, Resolved};

const THINNING_KEY: u64 = 0x7468_696e_6e69_6e67;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DynamicsError {
    #[error("n = {n} is outside the horizon [{m}, {last}]")]
    OutOfHorizon { n: u64, m: u64, last: u64 },
    #[error("point was rejected: {0}")]
    Rejected(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NotBReason {
    /// `g_{p_poly(M+index−1)}(y) = 0`.
    ZeroValue {
        poly: u8,
        index: u64,
    },
    Collision {
        poly: u8,
        first: u64,
        second: u64,
    },
    /// Horizon-certified, but removed by the `η` thinning.
    Thinned,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certification {
    CertifiedB,
    NotB(NotBReason),
    /// Could not be decided, e.g. the Birkhoff budget was exceeded.
    Rejected(String),
}

/// One sampled base point with its cocycle values over the horizon and, when it lies
/// in `B`, the tables realizing `ψ_y`.
#[derive(Clone, Debug)]
pub struct PointState {
    pub point: BasePoint,
    pub certification: Certification,
    pub tables: Option<PermTables>,
    /// `g_{p₁(n)}(y)` and `g_{p₂(n)}(y)` for `n ∈ [M, M+H−1]`.
    pub g1: Vec<i128>,
    pub g2: Vec<i128>,
    /// Auxiliary uniform used for the `η` thinning.
    pub u: f64,
    pub m: u64,
}

/// A uniform in `[0, 1)` attached to the base point `R^offset y_id`.
pub fn thinning_uniform(seed: u64, id: u64, offset: u64) -> f64 {
    let mut bytes = [0u8; 16];
    bytes[..8].copy_from_slice(&id.to_le_bytes());
    bytes[8..].copy_from_slice(&offset.to_le_bytes());
    let h = SipHasher24::new_with_keys(seed, THINNING_KEY).hash(&bytes);
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// The `j`-th omega paired with base point `point_id`.
pub fn omega_for(config: &SystemConfig, point_id: u64, j: u64) -> OmegaOracle {
    OmegaOracle::new(config.omega_seed(), point_id * config.omega_per_point + j)
}

pub fn sample_state(config: &SystemConfig, kind: &Arc<BaseKind>, id: u64) -> PointState {
    certify_b(sample_point(Arc::clone(kind), config.seed, id), config)
}

/// Streams the cocycle once over the merged times `p₁(n), p₂(n)`, `n ∈ [M, M+H−1]`,
/// and decides membership of the point in the realized `B`.
pub fn certify_b(mut point: BasePoint, config: &SystemConfig) -> PointState {
    let m = config.start();
    let u = thinning_uniform(config.seed, point.id(), point.offset());
    let rejected = |point: BasePoint, why: String| PointState {
        point,
        certification: Certification::Rejected(why),
        tables: None,
        g1: Vec::new(),
        g2: Vec::new(),
        u,
        m,
    };
    let times = polynomial_times(&config.p1, m, config.horizon, config.budget)
        .and_then(|t1| Ok((t1, polynomial_times(&config.p2, m, config.horizon, config.budget)?)));
    let (t1, t2) = match times {
        Ok(t) => t,
        Err(PermError::Budget { needed, budget }) => {
            return rejected(point, format!("budget: time {needed} exceeds {budget}"));
        }
        Err(e) => return rejected(point, e.to_string()),
    };
    let mut all: Vec<u64> = t1.iter().chain(&t2).copied().collect();
    all.sort_unstable();
    all.dedup();
    let g = point.g_at(&all).expect("sorted distinct times");
    let lookup = |t: &u64| i128::from(g[all.binary_search(t).expect("merged")]);
    let g1: Vec<i128> = t1.iter().map(lookup).collect();
    let g2: Vec<i128> = t2.iter().map(lookup).collect();
    let built = ForwardTable::from_values(&config.p1, m, g1.clone())
        .map_err(|e| (1u8, e))
        .and_then(|f1| Ok((f1, ForwardTable::from_values(&config.p2, m, g2.clone()).map_err(|e| (2u8, e))?)));
    let (certification, tables) = match built {
        Err((poly, PermError::ZeroValue(index))) => (Certification::NotB(NotBReason::ZeroValue { poly, index }), None),
        Err((poly, PermError::Collision(first, second))) => {
            (Certification::NotB(NotBReason::Collision { poly, first, second }), None)
        }
        Err((_, e)) => (Certification::Rejected(e.to_string()), None),
        Ok((f1, f2)) => {
            let in_thinning = match config.eta {
                Eta::Full => true,
                Eta::Fraction(eta) => u < eta,
            };
            if in_thinning {
                let t = PermTables::from_forward(f1, f2, config.f.clone(), config.scan_bound);
                (Certification::CertifiedB, Some(t))
            } else {
                (Certification::NotB(NotBReason::Thinned), None)
            }
        }
    };
    PointState { point, certification, tables, g1, g2, u, m }
}

/// A read of one coordinate of `ω`, with the index actually consulted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoordinateRead {
    /// Index of `ω` that was read.
    pub coordinate: i128,
    /// 1 iff the image lands in `A₂ = Y × [0]₀`.
    pub bit: bool,
}

impl PointState {
    pub fn in_b(&self) -> bool {
        self.certification == Certification::CertifiedB
    }

    /// Horizon-certified before thinning: all values nonzero and distinct.
    pub fn in_e(&self) -> bool {
        matches!(self.certification, Certification::CertifiedB | Certification::NotB(NotBReason::Thinned))
    }

    pub fn last(&self) -> u64 {
        self.m + self.g1.len() as u64 - 1
    }

    fn slot(&self, n: u64) -> Result<usize, DynamicsError> {
        if let Certification::Rejected(why) = &self.certification {
            return Err(DynamicsError::Rejected(why.clone()));
        }
        if n < self.m || n > self.last() {
            return Err(DynamicsError::OutOfHorizon { n, m: self.m, last: self.last() });
        }
        Ok((n - self.m) as usize)
    }

    /// `T^{p₁(n)}(y, ω) ∈ A₂` iff `ω(g_{p₁(n)}(y)) = 0`.
    pub fn t_read(&self, omega: &OmegaOracle, n: u64) -> Result<CoordinateRead, DynamicsError> {
        let q = self.g1[self.slot(n)?];
        Ok(CoordinateRead { coordinate: q, bit: !omega.read(q) })
    }

    /// `S^{p₂(n)}(y, ω) ∈ A₂`. Coordinate 0 is fixed by every `ψ_z⁻¹`, so only `ψ_y`
    /// at `g_{p₂(n)}(y)` matters; off `B` the conjugator is the identity.
    pub fn s_read(&self, omega: &OmegaOracle, n: u64) -> Result<CoordinateRead, DynamicsError> {
        let q = self.g2[self.slot(n)?];
        match &self.tables {
            Some(t) => {
                let trace = psi_chain(t).read_traced(omega, q).expect("forward branch always resolves");
                Ok(CoordinateRead { coordinate: trace.index, bit: !trace.bit })
            }
            None => Ok(CoordinateRead { coordinate: q, bit: !omega.read(q) }),
        }
    }
}

pub fn t_pullback_bit(state: &PointState, omega: &OmegaOracle, n: u64) -> Result<bool, DynamicsError> {
    state.t_read(omega, n).map(|r| r.bit)
}

pub fn s_pullback_bit(state: &PointState, omega: &OmegaOracle, n: u64) -> Result<bool, DynamicsError> {
    state.s_read(omega, n).map(|r| r.bit)
}

/// Indicator of `A₁ ∩ T^{−p₁(n)}A₂ ∩ S^{−p₂(n)}A₂` at `(y, ω)`, with `A₁ = B × Σ`.
pub fn triple_indicator(state: &PointState, omega: &OmegaOracle, n: u64) -> Result<bool, DynamicsError> {
    let t = t_pullback_bit(state, omega, n)?;
    if !state.in_b() {
        return Ok(false);
    }
    Ok(t && s_pullback_bit(state, omega, n)?)
}

/// The state at the landing point `R^big_n y`, certified with the same configuration.
pub fn landing_state(state: &PointState, big_n: u64, config: &SystemConfig) -> PointState {
    certify_b(state.point.shifted(big_n), config)
}

/// Pull-back chain of the symbol component of `S^{big_n} = R⁻¹ T^{big_n} R` at `y`:
/// `ψ_z⁻¹ ∘ σ^{g_N(y)} ∘ ψ_y`, each conjugator present only on `B`.
pub fn s_chain(y: &mut PointState, big_n: u64, z: &PointState) -> IndexChain {
    let g = y.point.g_at(&[big_n]).expect("single time")[0] as i128;
    let mut chain = match &z.tables {
        Some(t) => psi_inverse_chain(t),
        None => IndexChain::identity(),
    };
    chain = chain.compose(&IndexChain::shift(g));
    if let Some(t) = &y.tables {
        chain = chain.compose(&psi_chain(t));
    }
    chain
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConjugacyOutcome {
    Pass,
    Fail { chain_bit: bool, direct_bit: bool },
    Undecided(String),
}

/// Compares, at coordinate `q`, the composed chain for `S^{big_n}` against `R⁻¹`, `T^{big_n}`
/// and `R` applied one after another through their case definitions.
pub fn conjugacy_check(
    y: &mut PointState,
    z: &PointState,
    big_n: u64,
    omega: &OmegaOracle,
    q: i128,
) -> ConjugacyOutcome {
    let chain = s_chain(y, big_n, z);
    let a = match chain.read(omega, q) {
        Ok(b) => b,
        Err(u) => return ConjugacyOutcome::Undecided(u.0),
    };
    let g = y.point.g_at(&[big_n]).expect("single time")[0] as i128;
    let r_omega = |s: i128| -> Resolved<bool> {
        match &y.tables {
            Some(t) => psi_direct(t, &|r| Ok(omega.read(r)), s),
            None => Ok(omega.read(s)),
        }
    };
    let t_then_r = |r: i128| -> Resolved<bool> {
        let s = r.checked_add(g).ok_or_else(|| crate::symbolic::Undecided("index overflow".into()))?;
        r_omega(s)
    };
    let b = match &z.tables {
        Some(t) => psi_inverse_direct(t, &t_then_r, q),
        None => t_then_r(q),
    };
    match b {
        Ok(b) if b == a => ConjugacyOutcome::Pass,
        Ok(b) => ConjugacyOutcome::Fail { chain_bit: a, direct_bit: b },
        Err(u) => ConjugacyOutcome::Undecided(u.0),
    }
}
