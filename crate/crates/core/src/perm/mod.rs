//! Horizon-bounded point-dependent permutations of `Z`: the forward tables of cocycle
//! values at polynomial times, the leftover enumeration, `π_{p,y}`, `π_y` and the flip
//! set `Q_y`, assembled into the coordinate map `ψ_y`.

mod fset;

pub use fset::FSet;

use std::collections::HashMap;
use std::sync::Arc;

use serde_json::json;

use crate::base::{BaseError, BasePoint};
use crate::numeric::{l_enumerate, l_index, monotone_threshold, IntPoly, NumericError};
use crate::symbolic::{Atom, CoordPermutation, CoordSet, Direction, IndexChain, Resolved, Undecided};

/// Default largest enumeration index `j` examined by the leftover tables.
pub const DEFAULT_SCAN_BOUND: u64 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PermError {
    #[error("g value is zero at table index {0}")]
    ZeroValue(u64),
    #[error("g values collide at table indices {0} and {1}")]
    Collision(u64, u64),
    #[error("Birkhoff time {needed} exceeds the budget {budget}")]
    Budget { needed: u64, budget: u64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Base(#[from] BaseError),
    #[error("parse error: {0}")]
    Parse(String),
}

impl PermError {
    /// Whether the failure means the point is outside the certified set, as opposed to a
    /// configuration or resource problem.
    pub fn is_certificate_failure(&self) -> bool {
        matches!(self, PermError::ZeroValue(_) | PermError::Collision(..))
    }
}

/// `v_i = g_{p(M+i−1)}(y)` for `i = 1..=H`, with its inverse.
#[derive(Clone, Debug)]
pub struct ForwardTable {
    p: IntPoly,
    m: u64,
    values: Vec<i128>,
    inverse: HashMap<i128, u64>,
}

impl ForwardTable {
    pub fn p(&self) -> &IntPoly {
        &self.p
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn horizon(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn values(&self) -> &[i128] {
        &self.values
    }

    /// `v_i` for `1 <= i <= H`.
    pub fn value(&self, i: u64) -> Option<i128> {
        (i >= 1).then(|| self.values.get(i as usize - 1).copied()).flatten()
    }

    /// The `i` with `v_i = v`.
    pub fn index_of(&self, v: i128) -> Option<u64> {
        self.inverse.get(&v).copied()
    }

    /// Time `n = M + i − 1` of table index `i`.
    pub fn time_of(&self, i: u64) -> u64 {
        self.m + i - 1
    }

    pub fn from_values(p: &IntPoly, m: u64, values: Vec<i128>) -> Result<Self, PermError> {
        let mut inverse = HashMap::with_capacity(values.len());
        for (k, &v) in values.iter().enumerate() {
            let i = k as u64 + 1;
            if v == 0 {
                return Err(PermError::ZeroValue(i));
            }
            if let Some(prev) = inverse.insert(v, i) {
                return Err(PermError::Collision(prev, i));
            }
        }
        Ok(ForwardTable { p: p.clone(), m, values, inverse })
    }
}

/// The Birkhoff times `p(M), ..., p(M+H−1)`, checked against the threshold and budget.
pub fn polynomial_times(p: &IntPoly, m: u64, h: u64, budget: u64) -> Result<Vec<u64>, PermError> {
    if h == 0 {
        return Err(PermError::Precondition("horizon H must be >= 1".into()));
    }
    let threshold = monotone_threshold(p)?;
    if m < threshold {
        return Err(PermError::Precondition(format!("M = {m} is below the monotone threshold {threshold} of {p}")));
    }
    let mut times = Vec::with_capacity(h as usize);
    for n in m..m + h {
        let v = p.eval(n as i128)?;
        let t =
            v.to_u64().ok_or_else(|| PermError::Precondition(format!("{p} at n = {n} is negative or too large")))?;
        if t > budget {
            return Err(PermError::Budget { needed: t, budget });
        }
        times.push(t);
    }
    Ok(times)
}

/// One streaming pass over `p(M), ..., p(M+H−1)`.
pub fn build_forward(
    point: &mut BasePoint,
    p: &IntPoly,
    m: u64,
    h: u64,
    budget: u64,
) -> Result<ForwardTable, PermError> {
    let times = polynomial_times(p, m, h, budget)?;
    let g = point.g_at(&times)?;
    ForwardTable::from_values(p, m, g.into_iter().map(i128::from).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum LeftoverCertificate {
    /// `l_j` is odd, so no value of the even cocycle `g` can equal it.
    Odd,
    /// `l_j` is even and missed only by the values inside the horizon.
    HorizonRelative,
}

/// The increasing enumeration `j_1 < j_2 < ...` of indices with `l_j` outside the
/// forward image, computed by rank/select against the sorted hit indices.
#[derive(Clone, Debug)]
pub struct LeftoverTable {
    hits: Vec<u64>,
    scan_bound: u64,
}

impl LeftoverTable {
    pub fn new(forward: &ForwardTable, scan_bound: u64) -> Self {
        let mut hits: Vec<u64> =
            forward.values.iter().filter_map(|&v| i64::try_from(v).ok().and_then(l_index)).collect();
        hits.sort_unstable();
        LeftoverTable { hits, scan_bound }
    }

    pub fn scan_bound(&self) -> u64 {
        self.scan_bound
    }

    fn count_le(&self, j: u64) -> u64 {
        self.hits.partition_point(|&h| h <= j) as u64
    }

    pub fn is_leftover(&self, j: u64) -> bool {
        j >= 1 && self.hits.binary_search(&j).is_err()
    }

    /// `i` with `j_i = j`, if `j` is a leftover index.
    pub fn rank(&self, j: u64) -> Option<u64> {
        self.is_leftover(j).then(|| j - self.count_le(j))
    }

    /// `j_i`, for `i >= 1`.
    pub fn select(&self, i: u64) -> Resolved<u64> {
        if i == 0 {
            return Err(Undecided("leftover ranks start at 1".into()));
        }
        let mut j = i;
        loop {
            let next = i + self.count_le(j);
            if next == j {
                break;
            }
            j = next;
        }
        if j > self.scan_bound {
            return Err(Undecided(format!("leftover rank {i} lies beyond the scan bound {}", self.scan_bound)));
        }
        Ok(j)
    }

    pub fn certificate(j: u64) -> LeftoverCertificate {
        if j.div_ceil(2) % 2 == 1 {
            LeftoverCertificate::Odd
        } else {
            LeftoverCertificate::HorizonRelative
        }
    }

    /// `j_1, ..., j_k`.
    pub fn prefix(&self, k: u64) -> Vec<u64> {
        (1..=k).map_while(|i| self.select(i).ok()).collect()
    }
}

/// `π_{p,y}`: `0 ↦ 0`, `i ↦ v_i` for `i >= 1`, `i ↦ l_{j_{−i}}` for `i <= −1`.
#[derive(Debug)]
pub struct PolyPermutation {
    name: String,
    forward: ForwardTable,
    leftover: LeftoverTable,
}

impl PolyPermutation {
    pub fn new(name: impl Into<String>, forward: ForwardTable, scan_bound: u64) -> Self {
        let leftover = LeftoverTable::new(&forward, scan_bound);
        PolyPermutation { name: name.into(), forward, leftover }
    }

    pub fn forward(&self) -> &ForwardTable {
        &self.forward
    }

    pub fn leftover(&self) -> &LeftoverTable {
        &self.leftover
    }
}

impl CoordPermutation for PolyPermutation {
    fn name(&self) -> &str {
        &self.name
    }

    fn apply(&self, i: i128) -> Resolved<i128> {
        pi_p_apply(&self.forward, &self.leftover, i)
    }

    fn apply_inverse(&self, q: i128) -> Resolved<i128> {
        if q == 0 {
            return Ok(0);
        }
        if let Some(i) = self.forward.index_of(q) {
            return Ok(i as i128);
        }
        let j = i64::try_from(q)
            .ok()
            .and_then(l_index)
            .filter(|&j| j <= self.leftover.scan_bound)
            .ok_or_else(|| Undecided(format!("{}: {q} lies beyond the leftover scan bound", self.name)))?;
        let rank = self.leftover.rank(j).expect("values outside the table are leftovers");
        Ok(-(rank as i128))
    }
}

pub fn pi_p_apply(forward: &ForwardTable, leftover: &LeftoverTable, i: i128) -> Resolved<i128> {
    match i {
        0 => Ok(0),
        i if i > 0 => u64::try_from(i)
            .ok()
            .and_then(|i| forward.value(i))
            .ok_or_else(|| Undecided(format!("forward index {i} beyond horizon {}", forward.horizon()))),
        i => {
            let rank = u64::try_from(-i).map_err(|_| Undecided(format!("index {i} out of range")))?;
            let j = leftover.select(rank)?;
            Ok(l_enumerate(j as i64).expect("j >= 1") as i128)
        }
    }
}

/// `Q_y = {v_{1,i} : M + i − 1 ∈ F}`. Outside the horizon table nothing is a member,
/// consistently with the leftover tables treating untabulated values as leftovers.
#[derive(Debug)]
pub struct FlipSet {
    pi1: Arc<PolyPermutation>,
    f: FSet,
}

impl CoordSet for FlipSet {
    fn name(&self) -> &str {
        "Q_y"
    }

    fn contains(&self, q: i128) -> Resolved<bool> {
        let fwd = self.pi1.forward();
        Ok(fwd.index_of(q).is_some_and(|i| self.f.contains(fwd.time_of(i))))
    }
}

/// Everything `ψ_y` needs at one certified base point.
#[derive(Clone, Debug)]
pub struct PermTables {
    pub pi1: Arc<PolyPermutation>,
    pub pi2: Arc<PolyPermutation>,
    pub f: FSet,
    pub q_y: Arc<FlipSet>,
}

impl PermTables {
    /// Both forward tables from a single streaming pass over the merged times.
    pub fn build(
        point: &mut BasePoint,
        p1: &IntPoly,
        p2: &IntPoly,
        m: u64,
        h: u64,
        f: FSet,
        scan_bound: u64,
        budget: u64,
    ) -> Result<Self, PermError> {
        let t1 = polynomial_times(p1, m, h, budget)?;
        let t2 = polynomial_times(p2, m, h, budget)?;
        let mut all: Vec<u64> = t1.iter().chain(&t2).copied().collect();
        all.sort_unstable();
        all.dedup();
        let g: HashMap<u64, i128> = all.iter().copied().zip(point.g_at(&all)?.into_iter().map(i128::from)).collect();
        let f1 = ForwardTable::from_values(p1, m, t1.iter().map(|t| g[t]).collect())?;
        let f2 = ForwardTable::from_values(p2, m, t2.iter().map(|t| g[t]).collect())?;
        Ok(Self::from_forward(f1, f2, f, scan_bound))
    }

    pub fn from_forward(f1: ForwardTable, f2: ForwardTable, f: FSet, scan_bound: u64) -> Self {
        let pi1 = Arc::new(PolyPermutation::new("pi_p1", f1, scan_bound));
        let pi2 = Arc::new(PolyPermutation::new("pi_p2", f2, scan_bound));
        let q_y = Arc::new(FlipSet { pi1: Arc::clone(&pi1), f: f.clone() });
        PermTables { pi1, pi2, f, q_y }
    }

    pub fn m(&self) -> u64 {
        self.pi1.forward.m
    }

    pub fn horizon(&self) -> u64 {
        self.pi1.forward.horizon()
    }

    /// Audit dump: `{M, H, values, leftover_prefix, scan_bound, q_y_indices}`.
    pub fn to_json(&self, prefix_len: u64) -> serde_json::Value {
        let m = self.m();
        let q_y: Vec<u64> = (1..=self.horizon()).filter(|&i| self.f.contains(m + i - 1)).collect();
        let vals = |p: &PolyPermutation| p.forward.values.iter().map(|v| *v as i64).collect::<Vec<_>>();
        let prefix = |p: &PolyPermutation| {
            p.leftover
                .prefix(prefix_len)
                .into_iter()
                .map(|j| json!({"j": j, "l": l_enumerate(j as i64).unwrap(), "certificate": LeftoverTable::certificate(j)}))
                .collect::<Vec<_>>()
        };
        json!({
            "M": m,
            "H": self.horizon(),
            "values": {"p1": vals(&self.pi1), "p2": vals(&self.pi2)},
            "leftover_prefix": {"p1": prefix(&self.pi1), "p2": prefix(&self.pi2)},
            "scan_bound": self.pi1.leftover.scan_bound,
            "q_y_indices": q_y,
        })
    }
}

/// `π_y = π_{p₁,y} ∘ π_{p₂,y}⁻¹`.
pub fn pi_y_apply(t: &PermTables, q: i128) -> Resolved<i128> {
    t.pi1.apply(t.pi2.apply_inverse(q)?)
}

pub fn pi_y_inverse(t: &PermTables, q: i128) -> Resolved<i128> {
    t.pi2.apply(t.pi1.apply_inverse(q)?)
}

/// `ψ_y` as a pull-back chain. Since `φ_a ∘ φ_b = φ_{b∘a}` for pull-backs, the atom
/// order is the reverse of the composition `φ^{Q} ∘ φ_{π₁} ∘ φ_{π₂}⁻¹` read as maps
/// on indices: first `π₂⁻¹`, then `π₁`, and the flip test runs on the final index.
pub fn psi_chain(t: &PermTables) -> IndexChain {
    IndexChain::from_atoms(vec![
        Atom::Permute(t.pi2.clone(), Direction::Inverse),
        Atom::Permute(t.pi1.clone(), Direction::Forward),
        Atom::Flip(t.q_y.clone()),
    ])
}

pub fn psi_inverse_chain(t: &PermTables) -> IndexChain {
    psi_chain(t).inverse()
}

/// `(ψ_y ω)(q)` by the three-case definition, with `ω` given as a reader.
pub fn psi_direct(t: &PermTables, read: &dyn Fn(i128) -> Resolved<bool>, q: i128) -> Resolved<bool> {
    if q == 0 {
        return read(0);
    }
    if let Some(i) = t.pi2.forward.index_of(q) {
        let v = read(t.pi1.forward.value(i).expect("same horizon"))?;
        return Ok(if t.f.contains(t.pi2.forward.time_of(i)) { !v } else { v });
    }
    read(pi_y_apply(t, q)?)
}

/// `(ψ_y⁻¹ ω)(r) = ω(π_y⁻¹(r)) ⊕ [r ∈ Q_y]`.
pub fn psi_inverse_direct(t: &PermTables, read: &dyn Fn(i128) -> Resolved<bool>, r: i128) -> Resolved<bool> {
    Ok(read(pi_y_inverse(t, r)?)? ^ t.q_y.contains(r)?)
}
