use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use super::BaseError;

/// Largest `n` computed in exact rational mode.
pub const EXACT_LIMIT: u64 = 2048;
/// Largest `n` computed at all.
pub const FLOAT_LIMIT: u64 = 100_000;

const PRUNE_BELOW: f64 = 1e-300;

/// A finitely supported integer step law with integer weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepLaw {
    steps: Vec<(i64, u64)>,
    denom: u64,
}

impl StepLaw {
    /// Weighted steps; zero weights are dropped. Requires mean 0 and positive mass at 0.
    pub fn new(mut steps: Vec<(i64, u64)>) -> Result<Self, BaseError> {
        steps.retain(|&(_, w)| w > 0);
        steps.sort_unstable();
        if steps.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(BaseError::InvalidStepLaw("repeated step".into()));
        }
        let denom: u64 = steps.iter().map(|s| s.1).sum();
        if denom == 0 {
            return Err(BaseError::InvalidStepLaw("no mass".into()));
        }
        let mean: i128 = steps.iter().map(|&(s, w)| s as i128 * w as i128).sum();
        if mean != 0 {
            return Err(BaseError::InvalidStepLaw("mean is not zero".into()));
        }
        if !steps.iter().any(|&(s, _)| s == 0) {
            return Err(BaseError::InvalidStepLaw("no mass at 0 (periodic walk)".into()));
        }
        Ok(StepLaw { steps, denom })
    }

    /// `{−1: 1/4, 0: 1/2, +1: 1/4}`.
    pub fn canonical() -> Self {
        StepLaw { steps: vec![(-1, 1), (0, 2), (1, 1)], denom: 4 }
    }

    /// The law of `k·X`.
    pub fn scaled(&self, k: i64) -> Self {
        let mut steps: Vec<_> = self.steps.iter().map(|&(s, w)| (s * k, w)).collect();
        steps.sort_unstable();
        StepLaw { steps, denom: self.denom }
    }

    pub fn steps(&self) -> &[(i64, u64)] {
        &self.steps
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn variance(&self) -> f64 {
        self.steps.iter().map(|&(s, w)| (s * s) as f64 * w as f64).sum::<f64>() / self.denom as f64
    }

    fn span(&self) -> (i64, i64) {
        (self.steps[0].0, self.steps[self.steps.len() - 1].0)
    }

    /// `(upper, step)` pairs: a uniform word `w` maps to the first step with `w < upper`.
    pub(crate) fn word_thresholds(&self) -> Vec<(u64, i64)> {
        let mut cum: u128 = 0;
        self.steps
            .iter()
            .map(|&(s, w)| {
                cum += w as u128;
                let upper = (cum << 64) / self.denom as u128;
                (upper.min(u64::MAX as u128) as u64, s)
            })
            .collect()
    }
}

impl fmt::Display for StepLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.steps.iter().map(|(s, w)| format!("{s}:{w}")).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for StepLaw {
    type Err = BaseError;

    /// `step:weight` pairs, e.g. `-1:1,0:2,1:1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BaseError::InvalidStepLaw(format!("cannot parse {s:?}"));
        let mut steps = Vec::new();
        for part in s.split(',') {
            let (st, w) = part.split_once(':').ok_or_else(bad)?;
            steps.push((st.trim().parse().map_err(|_| bad())?, w.trim().parse().map_err(|_| bad())?));
        }
        StepLaw::new(steps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Exact,
    Float,
}

#[derive(Clone, Debug, PartialEq)]
enum Masses {
    /// Numerators over one common denominator.
    Exact {
        numer: Vec<BigUint>,
        denom: BigUint,
    },
    Float(Vec<f64>),
}

/// The law of `f_n`: masses on the consecutive levels `min_level, min_level + 1, ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelDistribution {
    n: u64,
    min_level: i64,
    masses: Masses,
}

fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let s1 = num.bits().saturating_sub(64);
    let s2 = den.bits().saturating_sub(64);
    let a = (num >> s1).to_f64().unwrap_or(0.0);
    let b = (den >> s2).to_f64().unwrap_or(1.0);
    let e = s1 as i64 - s2 as i64;
    let mut v = a / b;
    // Apply 2^e in pieces so intermediate powers stay in range.
    let mut e = e;
    while e != 0 {
        let k = e.clamp(-1000, 1000);
        v *= 2f64.powi(k as i32);
        e -= k;
    }
    v
}

impl LevelDistribution {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn precision(&self) -> Precision {
        match self.masses {
            Masses::Exact { .. } => Precision::Exact,
            Masses::Float(_) => Precision::Float,
        }
    }

    fn len(&self) -> usize {
        match &self.masses {
            Masses::Exact { numer, .. } => numer.len(),
            Masses::Float(v) => v.len(),
        }
    }

    /// Smallest and largest stored level.
    pub fn support(&self) -> (i64, i64) {
        (self.min_level, self.min_level + self.len() as i64 - 1)
    }

    pub fn mass(&self, x: i64) -> f64 {
        let i = x - self.min_level;
        if i < 0 || i >= self.len() as i64 {
            return 0.0;
        }
        match &self.masses {
            Masses::Exact { numer, denom } => ratio_to_f64(&numer[i as usize], denom),
            Masses::Float(v) => v[i as usize],
        }
    }

    /// Exact mass in rational mode.
    pub fn exact_mass(&self, x: i64) -> Option<Ratio<BigInt>> {
        let Masses::Exact { numer, denom } = &self.masses else { return None };
        let i = x - self.min_level;
        let num = if i < 0 || i >= numer.len() as i64 { BigUint::zero() } else { numer[i as usize].clone() };
        Some(Ratio::new(num.into(), denom.clone().into()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let (lo, hi) = self.support();
        (lo..=hi).map(move |x| (x, self.mass(x)))
    }

    pub fn total(&self) -> f64 {
        match &self.masses {
            Masses::Exact { numer, denom } => ratio_to_f64(&numer.iter().sum(), denom),
            Masses::Float(v) => v.iter().sum(),
        }
    }

    /// In rational mode, whether the masses sum to exactly 1.
    pub fn sums_to_one_exactly(&self) -> Option<bool> {
        match &self.masses {
            Masses::Exact { numer, denom } => Some(numer.iter().sum::<BigUint>() == *denom),
            Masses::Float(_) => None,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        let (lo, hi) = self.support();
        if lo != -hi {
            return false;
        }
        match &self.masses {
            Masses::Exact { numer, .. } => numer.iter().eq(numer.iter().rev()),
            Masses::Float(v) => v.iter().zip(v.iter().rev()).all(|(a, b)| (a - b).abs() <= 1e-15 * a.abs().max(1e-300)),
        }
    }

    /// `m(|f_n| <= r)`.
    pub fn mass_within(&self, r: i64) -> f64 {
        match &self.masses {
            Masses::Exact { numer, denom } => {
                let s: BigUint = (-r..=r)
                    .filter_map(|x| {
                        let i = x - self.min_level;
                        (i >= 0 && i < numer.len() as i64).then(|| numer[i as usize].clone())
                    })
                    .sum();
                ratio_to_f64(&s, denom)
            }
            Masses::Float(_) => (-r..=r).map(|x| self.mass(x)).sum(),
        }
    }

    /// Columns `x,mass_numerator,mass_denominator` (reduced) or `x,mass`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        match &self.masses {
            Masses::Exact { numer, denom } => {
                writeln!(w, "x,mass_numerator,mass_denominator")?;
                for (i, num) in numer.iter().enumerate() {
                    let r = Ratio::new(num.clone(), denom.clone());
                    writeln!(w, "{},{},{}", self.min_level + i as i64, r.numer(), r.denom())?;
                }
            }
            Masses::Float(v) => {
                writeln!(w, "x,mass")?;
                for (i, m) in v.iter().enumerate() {
                    writeln!(w, "{},{:.17e}", self.min_level + i as i64, m)?;
                }
            }
        }
        Ok(())
    }
}

/// Incremental exact convolution powers of a step law, starting from `n = 0`.
#[derive(Clone, Debug)]
pub struct ExactPowers {
    law: StepLaw,
    current: LevelDistribution,
}

impl ExactPowers {
    pub fn new(law: StepLaw) -> Self {
        let current = LevelDistribution {
            n: 0,
            min_level: 0,
            masses: Masses::Exact { numer: vec![BigUint::from(1u32)], denom: BigUint::from(1u32) },
        };
        ExactPowers { law, current }
    }

    pub fn current(&self) -> &LevelDistribution {
        &self.current
    }

    /// Moves to `n + 1` and returns the new distribution.
    pub fn advance(&mut self) -> &LevelDistribution {
        let (lo, hi) = self.law.span();
        let Masses::Exact { numer, denom } = &self.current.masses else { unreachable!() };
        let mut next = vec![BigUint::zero(); numer.len() + (hi - lo) as usize];
        for (i, v) in numer.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            for &(s, w) in &self.law.steps {
                next[i + (s - lo) as usize] += v * w;
            }
        }
        let denom = denom * self.law.denom;
        self.current = LevelDistribution {
            n: self.current.n + 1,
            min_level: self.current.min_level + lo,
            masses: Masses::Exact { numer: next, denom },
        };
        &self.current
    }
}

fn float_dp(law: &StepLaw, n: u64) -> LevelDistribution {
    let (lo, hi) = law.span();
    let probs: Vec<(usize, f64)> =
        law.steps.iter().map(|&(s, w)| ((s - lo) as usize, w as f64 / law.denom as f64)).collect();
    let mut cur = vec![1.0f64];
    let mut min_level = 0i64;
    for _ in 0..n {
        let mut next = vec![0.0; cur.len() + (hi - lo) as usize];
        for (i, &v) in cur.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for &(off, p) in &probs {
                next[i + off] += v * p;
            }
        }
        min_level += lo;
        let first = next.iter().position(|&v| v >= PRUNE_BELOW).unwrap_or(0);
        let last = next.iter().rposition(|&v| v >= PRUNE_BELOW).unwrap_or(next.len() - 1);
        min_level += first as i64;
        cur = next[first..=last].to_vec();
    }
    LevelDistribution { n, min_level, masses: Masses::Float(cur) }
}

/// For the canonical law a step is the difference of two fair bits, so
/// `f_n + n ~ Binomial(2n, 1/2)`. Built from the centre outward and normalized.
fn canonical_float(n: u64) -> LevelDistribution {
    let m = 2 * n;
    let mut v = vec![0.0f64; (m + 1) as usize];
    v[n as usize] = 1.0;
    for k in n..m {
        let next = v[k as usize] * (m - k) as f64 / (k + 1) as f64;
        if next < PRUNE_BELOW {
            break;
        }
        v[(k + 1) as usize] = next;
        v[(m - k - 1) as usize] = next;
    }
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    LevelDistribution { n, min_level: -(n as i64), masses: Masses::Float(v) }
}

pub fn level_distribution(law: &StepLaw, n: u64, precision: Precision) -> Result<LevelDistribution, BaseError> {
    match precision {
        Precision::Exact => {
            if n > EXACT_LIMIT {
                return Err(BaseError::TooLarge { n, limit: EXACT_LIMIT });
            }
            let mut p = ExactPowers::new(law.clone());
            for _ in 0..n {
                p.advance();
            }
            Ok(p.current)
        }
        Precision::Float => {
            if n > FLOAT_LIMIT {
                return Err(BaseError::TooLarge { n, limit: FLOAT_LIMIT });
            }
            Ok(if *law == StepLaw::canonical() { canonical_float(n) } else { float_dp(law, n) })
        }
    }
}

/// `m(f_n = x)` for the canonical walk: rational up to [`EXACT_LIMIT`], floating above.
pub fn walk_exact_distribution(n: u64) -> Result<LevelDistribution, BaseError> {
    if n == 0 {
        return Err(BaseError::ZeroTime);
    }
    let precision = if n <= EXACT_LIMIT { Precision::Exact } else { Precision::Float };
    level_distribution(&StepLaw::canonical(), n, precision)
}

/// `sup_x |√n·m(f_n = x) − e^{−x²/n}/√π|` for the canonical walk (`σ² = 1/2`), with `x`
/// running past the support until the Gaussian term drops below `1e-15`.
pub fn llt_deviation(n: u64) -> Result<f64, BaseError> {
    if n == 0 {
        return Err(BaseError::ZeroTime);
    }
    let dist = level_distribution(&StepLaw::canonical(), n, Precision::Float)?;
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let reach = ((n as f64) * (1e15 / sqrt_pi).ln()).sqrt().ceil() as i64;
    let xmax = reach.max(n as i64);
    let rn = (n as f64).sqrt();
    let mut sup = 0.0f64;
    for x in -xmax..=xmax {
        let gauss = (-(x * x) as f64 / n as f64).exp() / sqrt_pi;
        sup = sup.max((rn * dist.mass(x) - gauss).abs());
    }
    Ok(sup)
}

/// `Σ_{x odd} m(g_n = x)` for `g_n = 2 f_n`, from a convolution of the law of `2X`.
pub fn parity_mass(n: u64) -> Result<f64, BaseError> {
    if n <= EXACT_LIMIT {
        return parity_mass_exact(n).map(|r| r.to_f64().unwrap_or(f64::NAN));
    }
    let dist = level_distribution(&StepLaw::canonical().scaled(2), n, Precision::Float)?;
    Ok(dist.iter().filter(|(x, _)| x.rem_euclid(2) == 1).map(|(_, m)| m).sum())
}

pub fn parity_mass_exact(n: u64) -> Result<Ratio<BigInt>, BaseError> {
    if n == 0 {
        return Err(BaseError::ZeroTime);
    }
    let dist = level_distribution(&StepLaw::canonical().scaled(2), n, Precision::Exact)?;
    let (lo, hi) = dist.support();
    Ok((lo..=hi)
        .filter(|x| x.rem_euclid(2) == 1)
        .map(|x| dist.exact_mass(x).unwrap())
        .fold(Ratio::zero(), |a, b| a + b))
}

/// `m(|g_n| <= radius)` for the canonical walk.
pub fn w_mass(n: u64, radius: i64) -> Result<f64, BaseError> {
    Ok(walk_exact_distribution(n)?.mass_within(radius.div_euclid(2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: u64, b: u64) -> Ratio<BigInt> {
        Ratio::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn small_exact_values() {
        let d1 = walk_exact_distribution(1).unwrap();
        assert_eq!(d1.exact_mass(-1).unwrap(), q(1, 4));
        assert_eq!(d1.exact_mass(0).unwrap(), q(1, 2));
        assert_eq!(d1.exact_mass(1).unwrap(), q(1, 4));
        let d2 = walk_exact_distribution(2).unwrap();
        assert_eq!(d2.exact_mass(0).unwrap(), q(3, 8));
        assert_eq!(d2.exact_mass(2).unwrap(), q(1, 16));
        assert_eq!(d2.exact_mass(3).unwrap(), q(0, 1));
        assert!(walk_exact_distribution(0).is_err());
        assert!(matches!(walk_exact_distribution(FLOAT_LIMIT + 1), Err(BaseError::TooLarge { .. })));
    }

    #[test]
    fn float_modes_agree_with_exact() {
        let law = StepLaw::canonical();
        let e = level_distribution(&law, 300, Precision::Exact).unwrap();
        let b = level_distribution(&law, 300, Precision::Float).unwrap();
        let dp = float_dp(&law, 300);
        for x in -300..=300 {
            let m = e.mass(x);
            assert!((m - b.mass(x)).abs() <= 1e-13 * m.max(1e-280), "x = {x}");
            assert!((m - dp.mass(x)).abs() <= 1e-13 * m.max(1e-280), "x = {x}");
        }
    }

    #[test]
    fn llt_golden_value_at_one() {
        // Direct evaluation over x in [-6, 6] against e^{-x²}/√π.
        let d = llt_deviation(1).unwrap();
        assert!((d - 0.064_189_583_547_756_29).abs() < 1e-15, "{d}");
    }

    #[test]
    fn parity_is_exactly_zero() {
        for n in [1, 2, 3, 100] {
            assert!(parity_mass_exact(n).unwrap().is_zero());
        }
        let dist = level_distribution(&StepLaw::canonical().scaled(2), 3, Precision::Exact).unwrap();
        let even: Ratio<BigInt> = (-6..=6)
            .filter(|x: &i64| x % 2 == 0)
            .map(|x| dist.exact_mass(x).unwrap())
            .fold(Ratio::zero(), |a, b| a + b);
        assert_eq!(even, q(1, 1));
    }

    #[test]
    fn csv_export() {
        let mut buf = Vec::new();
        walk_exact_distribution(1).unwrap().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,mass_numerator,mass_denominator\n-1,1,4\n0,1,2\n1,1,4\n");
        let mut buf = Vec::new();
        level_distribution(&StepLaw::canonical(), 1, Precision::Float).unwrap().write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("x,mass\n-1,2.5"));
    }

    #[test]
    fn step_law_validation() {
        assert!(StepLaw::new(vec![(1, 1), (0, 1)]).is_err());
        assert!(StepLaw::new(vec![(-1, 1), (1, 1)]).is_err());
        let l: StepLaw = "-3:1,0:4,1:3".parse().unwrap();
        assert_eq!(l.denom(), 8);
        let t = StepLaw::canonical().word_thresholds();
        assert_eq!(t[0].0, 1 << 62);
        assert_eq!(t[1].0, 3 << 62);
    }
}
