use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use super::BaseError;

/// A point of `R/Z` as an unsigned 128-bit binary fraction; addition wraps modulo 1 exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CirclePoint(pub u128);

impl CirclePoint {
    /// `floor(((√5 − 1)/2) · 2^128)`.
    pub fn golden() -> Self {
        let five = BigUint::from(5u32) << 256u32;
        let root = five.sqrt(); // floor(√5 · 2^128)
        let v = (root - (BigUint::from(1u32) << 128u32)) >> 1u32;
        CirclePoint(v.to_u128().expect("fraction below 1"))
    }

    pub fn add(self, o: CirclePoint) -> Self {
        CirclePoint(self.0.wrapping_add(o.0))
    }

    /// `self + k·alpha (mod 1)`.
    pub fn add_multiple(self, alpha: CirclePoint, k: u64) -> Self {
        CirclePoint(self.0.wrapping_add(alpha.0.wrapping_mul(k as u128)))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2f64.powi(128)
    }

    /// Smallest fixed-point value `>= r` for a rational `r` in `[0, 1]`; `None` for `r = 1`.
    fn ceil_of(r: &Ratio<u64>) -> Option<u128> {
        let num = BigUint::from(*r.numer()) << 128u32;
        let den = BigUint::from(*r.denom());
        let c = (&num + &den - 1u32) / den;
        c.to_u128()
    }
}

impl fmt::Display for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#034x}", self.0)
    }
}

/// Piecewise-constant integer function on the circle.
///
/// `pieces[i] = (start_i, value_i)`; the first start is 0, starts increase strictly, and
/// piece `i` covers `[start_i, start_{i+1})` with the last piece running to 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepFunction {
    pieces: Vec<(Ratio<u64>, i64)>,
    thresholds: Vec<u128>,
}

impl StepFunction {
    pub fn new(pieces: Vec<(Ratio<u64>, i64)>) -> Result<Self, BaseError> {
        let bad = |why: String| Err(BaseError::InvalidStepFunction(why));
        if pieces.is_empty() || !pieces[0].0.is_zero() {
            return bad("first breakpoint must be 0".into());
        }
        for w in pieces.windows(2) {
            if w[1].0 <= w[0].0 {
                return bad("breakpoints must increase strictly".into());
            }
        }
        if pieces.last().unwrap().0 >= Ratio::from_integer(1) {
            return bad("breakpoints must lie in [0, 1)".into());
        }
        let mean = Self::mean_of(&pieces);
        if !mean.is_zero() {
            return bad(format!("mean under Lebesgue measure is {mean}, not 0"));
        }
        let thresholds = pieces.iter().map(|(s, _)| CirclePoint::ceil_of(s).expect("start below 1")).collect();
        Ok(StepFunction { pieces, thresholds })
    }

    /// `+1` on `[0, 1/2)`, `−1` on `[1/2, 1)`.
    pub fn half_and_half() -> Self {
        Self::new(vec![(Ratio::from_integer(0), 1), (Ratio::new(1, 2), -1)]).expect("valid")
    }

    fn mean_of(pieces: &[(Ratio<u64>, i64)]) -> Ratio<BigInt> {
        let to_big = |r: &Ratio<u64>| Ratio::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()));
        let mut mean = Ratio::<BigInt>::zero();
        for (i, (start, v)) in pieces.iter().enumerate() {
            let end = pieces.get(i + 1).map(|p| to_big(&p.0)).unwrap_or_else(|| Ratio::from_integer(1.into()));
            mean += (end - to_big(start)) * BigInt::from(*v);
        }
        mean
    }

    pub fn mean(&self) -> Ratio<BigInt> {
        Self::mean_of(&self.pieces)
    }

    /// Exact: `y < a/b` iff `y < ceil(a·2^128/b)` for integer `y`.
    pub fn eval(&self, y: CirclePoint) -> i64 {
        let idx = self.thresholds.partition_point(|&t| t <= y.0);
        self.pieces[idx - 1].1
    }
}

impl fmt::Display for StepFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pieces.iter().map(|(s, v)| format!("{s}:{v}")).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for StepFunction {
    type Err = BaseError;

    /// `start:value` pairs, e.g. `0:1,1/2:-1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BaseError::InvalidStepFunction(format!("cannot parse {s:?}"));
        let mut pieces = Vec::new();
        for part in s.split(',') {
            let (start, value) = part.split_once(':').ok_or_else(bad)?;
            let start = match start.trim().split_once('/') {
                Some((a, b)) => {
                    let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                    if b == 0 {
                        return Err(bad());
                    }
                    Ratio::new(a, b)
                }
                None => Ratio::from_integer(start.trim().parse().map_err(|_| bad())?),
            };
            pieces.push((start, value.trim().parse().map_err(|_| bad())?));
        }
        StepFunction::new(pieces)
    }
}
