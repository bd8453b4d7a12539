//! The symbol space `{0,1}^Z`, read lazily, and chains of coordinate maps
//! (shifts, coordinate permutations, flip sets) evaluated by index pull-back.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use siphasher::sip::SipHasher24;

/// A coordinate read that the horizon-bounded tables cannot settle.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("undecided: {0}")]
pub struct Undecided(pub String);

pub type Resolved<T> = Result<T, Undecided>;

/// A `ν`-typical point `ω`: fair i.i.d. bits realized by SipHash-2-4 keyed with
/// `(seed, id)` and evaluated at the 16-byte little-endian coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct OmegaOracle {
    pub seed: u64,
    pub id: u64,
}

impl OmegaOracle {
    pub fn new(seed: u64, id: u64) -> Self {
        OmegaOracle { seed, id }
    }

    pub fn read(&self, q: i128) -> bool {
        let h = SipHasher24::new_with_keys(self.seed, self.id).hash(&q.to_le_bytes());
        h >> 63 == 1
    }
}

/// A permutation of `Z` that may be known only on part of its domain.
pub trait CoordPermutation: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn apply(&self, q: i128) -> Resolved<i128>;
    fn apply_inverse(&self, q: i128) -> Resolved<i128>;
}

/// A subset of `Z` given by a membership test.
pub trait CoordSet: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn contains(&self, q: i128) -> Resolved<bool>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    fn flipped(self) -> Self {
        match self {
            Direction::Forward => Direction::Inverse,
            Direction::Inverse => Direction::Forward,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Atom {
    /// `σ^k`: `(σ^k ω)(q) = ω(q + k)`.
    Shift(i128),
    /// `φ_π` or its inverse: `(φ_π ω)(q) = ω(π(q))`.
    Permute(Arc<dyn CoordPermutation>, Direction),
    /// `φ^Q`: flips the bit at every `q ∈ Q`.
    Flip(Arc<dyn CoordSet>),
}

impl Atom {
    fn inverse(&self) -> Atom {
        match self {
            Atom::Shift(k) => Atom::Shift(-k),
            Atom::Permute(p, d) => Atom::Permute(Arc::clone(p), d.flipped()),
            Atom::Flip(q) => Atom::Flip(Arc::clone(q)),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Shift(k) => write!(f, "shift({k})"),
            Atom::Permute(p, Direction::Forward) => write!(f, "perm({},fwd)", p.name()),
            Atom::Permute(p, Direction::Inverse) => write!(f, "perm({},inv)", p.name()),
            Atom::Flip(q) => write!(f, "flip({})", q.name()),
        }
    }
}

/// The composition `atoms[0] ∘ atoms[1] ∘ ...` of maps on `{0,1}^Z`.
///
/// Reading the image at `q` visits the atoms from the outermost (`atoms[0]`) inward,
/// rewriting the index and toggling a parity bit at each flip.
#[derive(Clone, Debug, Default)]
pub struct IndexChain {
    atoms: Vec<Atom>,
}

/// Outcome of a traced read: the bit, the index finally read from `ω`, and the parity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trace {
    pub bit: bool,
    pub index: i128,
    pub parity: bool,
}

impl IndexChain {
    pub fn identity() -> Self {
        IndexChain::default()
    }

    pub fn from_atoms(atoms: Vec<Atom>) -> Self {
        IndexChain { atoms }
    }

    pub fn shift(k: i128) -> Self {
        IndexChain { atoms: vec![Atom::Shift(k)] }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &IndexChain) -> IndexChain {
        let mut atoms = self.atoms.clone();
        atoms.extend(inner.atoms.iter().cloned());
        IndexChain { atoms }
    }

    pub fn inverse(&self) -> IndexChain {
        IndexChain { atoms: self.atoms.iter().rev().map(Atom::inverse).collect() }
    }

    /// Index of `ω` read and flip parity accumulated, for the image at `q`.
    pub fn pull_back(&self, q: i128) -> Resolved<(i128, bool)> {
        let mut q = q;
        let mut parity = false;
        for atom in &self.atoms {
            match atom {
                Atom::Shift(k) => {
                    q = q.checked_add(*k).ok_or_else(|| Undecided(format!("index overflow at {q} + {k}")))?;
                }
                Atom::Permute(p, Direction::Forward) => q = p.apply(q)?,
                Atom::Permute(p, Direction::Inverse) => q = p.apply_inverse(q)?,
                Atom::Flip(set) => parity ^= set.contains(q)?,
            }
        }
        Ok((q, parity))
    }

    pub fn read_traced(&self, omega: &OmegaOracle, q: i128) -> Resolved<Trace> {
        let (index, parity) = self.pull_back(q)?;
        Ok(Trace { bit: omega.read(index) ^ parity, index, parity })
    }

    pub fn read(&self, omega: &OmegaOracle, q: i128) -> Resolved<bool> {
        self.read_traced(omega, q).map(|t| t.bit)
    }
}

impl fmt::Display for IndexChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return f.write_str("id");
        }
        let parts: Vec<String> = self.atoms.iter().map(|a| a.to_string()).collect();
        f.write_str(&parts.join("|"))
    }
}

/// Reads `chain(ω)` at `q`.
pub fn read_transformed(omega: &OmegaOracle, chain: &IndexChain, q: i128) -> Resolved<bool> {
    chain.read(omega, q)
}

/// The cylinder `{ω : ω(base + i) = word[i]}`, of mass `2^{-len}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderSpec {
    pub base: i128,
    pub word: Vec<bool>,
}

impl CylinderSpec {
    pub fn new(base: i128, word: Vec<bool>) -> Self {
        CylinderSpec { base, word }
    }

    pub fn mass(&self) -> f64 {
        0.5f64.powi(self.word.len() as i32)
    }
}

impl fmt::Display for CylinderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w: String = self.word.iter().map(|&b| if b { '1' } else { '0' }).collect();
        write!(f, "{}:{w}", self.base)
    }
}

impl std::str::FromStr for CylinderSpec {
    type Err = String;

    /// `base:bits`, e.g. `0:01`; the word may be empty.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (base, word) = s.split_once(':').ok_or_else(|| format!("cylinder {s:?}: expected base:bits"))?;
        let base = base.trim().parse().map_err(|_| format!("cylinder base {base:?}"))?;
        let word = word
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(format!("cylinder word {word:?}")),
            })
            .collect::<Result<_, _>>()?;
        Ok(CylinderSpec { base, word })
    }
}

pub fn cylinder_indicator(omega: &OmegaOracle, chain: &IndexChain, cyl: &CylinderSpec) -> Resolved<bool> {
    for (i, &want) in cyl.word.iter().enumerate() {
        if chain.read(omega, cyl.base + i as i128)? != want {
            return Ok(false);
        }
    }
    Ok(true)
}

/// An explicitly listed finite set.
#[derive(Clone, Debug)]
pub struct FiniteSet {
    name: String,
    members: BTreeSet<i128>,
}

impl FiniteSet {
    pub fn new(name: impl Into<String>, members: impl IntoIterator<Item = i128>) -> Self {
        FiniteSet { name: name.into(), members: members.into_iter().collect() }
    }
}

impl CoordSet for FiniteSet {
    fn name(&self) -> &str {
        &self.name
    }

    fn contains(&self, q: i128) -> Resolved<bool> {
        Ok(self.members.contains(&q))
    }
}

/// A permutation moving finitely many points, the identity elsewhere.
#[derive(Clone, Debug)]
pub struct FinitePermutation {
    name: String,
    forward: HashMap<i128, i128>,
    inverse: HashMap<i128, i128>,
}

impl FinitePermutation {
    /// `pairs` lists `(q, π(q))`; it must be a bijection of its domain onto the same set.
    pub fn new(name: impl Into<String>, pairs: &[(i128, i128)]) -> Result<Self, String> {
        let forward: HashMap<_, _> = pairs.iter().copied().collect();
        let inverse: HashMap<_, _> = pairs.iter().map(|&(a, b)| (b, a)).collect();
        let dom: BTreeSet<_> = forward.keys().copied().collect();
        let img: BTreeSet<_> = inverse.keys().copied().collect();
        if forward.len() != pairs.len() || inverse.len() != pairs.len() || dom != img {
            return Err("not a permutation of its support".into());
        }
        Ok(FinitePermutation { name: name.into(), forward, inverse })
    }
}

impl CoordPermutation for FinitePermutation {
    fn name(&self) -> &str {
        &self.name
    }

    fn apply(&self, q: i128) -> Resolved<i128> {
        Ok(*self.forward.get(&q).unwrap_or(&q))
    }

    fn apply_inverse(&self, q: i128) -> Resolved<i128> {
        Ok(*self.inverse.get(&q).unwrap_or(&q))
    }
}
