use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use super::hiprec::Interval;
use super::poly::{monotone_threshold, IntPoly};
use super::{NumericError, WideInt};

/// Integer-valued growth function `h: N -> N` used as an iterate schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GrowthFn {
    Polynomial(IntPoly),
    /// `[n^a]`, `a > 4`.
    PowerFloor(Ratio<i64>),
    /// `[n^4 ln^s n]`, `s > 0`.
    QuarticLog(Ratio<i64>),
    /// `[n/2]^5 + (-1)^(n+1)` on `n >= 3`: increasing, super-quartic, yet with gap 2
    /// between every even `n` and its successor.
    RemarkCounterexample,
}

const START_PREC: u32 = 128;
const MAX_PREC: u32 = 4096;

impl GrowthFn {
    pub fn power_floor(a: Ratio<i64>) -> Result<Self, NumericError> {
        if a <= Ratio::from_integer(4) {
            return Err(NumericError::Domain(format!("power-floor exponent {a} must exceed 4")));
        }
        Ok(GrowthFn::PowerFloor(a))
    }

    pub fn quartic_log(s: Ratio<i64>) -> Result<Self, NumericError> {
        if s <= Ratio::zero() {
            return Err(NumericError::Domain(format!("log exponent {s} must be positive")));
        }
        Ok(GrowthFn::QuarticLog(s))
    }

    /// Least `n` from which `h` is defined and strictly increasing.
    pub fn domain_threshold(&self) -> Result<u64, NumericError> {
        match self {
            GrowthFn::Polynomial(p) => monotone_threshold(p),
            GrowthFn::PowerFloor(_) => Ok(1),
            // ln 2 > 0 and 81 ln^s 3 - 16 ln^s 2 > 65 for every s > 0.
            GrowthFn::QuarticLog(_) => Ok(2),
            GrowthFn::RemarkCounterexample => Ok(3),
        }
    }

    pub fn eval(&self, n: u64) -> Result<WideInt, NumericError> {
        match self {
            GrowthFn::Polynomial(p) => p.eval(n as i128),
            GrowthFn::PowerFloor(a) => power_floor(n, *a),
            GrowthFn::QuarticLog(s) => quartic_log(n, *s),
            GrowthFn::RemarkCounterexample => {
                if n < 3 {
                    return Err(NumericError::Domain(format!("remark counterexample undefined at n = {n}")));
                }
                let half = (n / 2) as i128;
                let sign = if n % 2 == 1 { 1 } else { -1 };
                half.checked_pow(5)
                    .and_then(|v| v.checked_add(sign))
                    .map(WideInt)
                    .ok_or(NumericError::Overflow { at: n as i128 })
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            GrowthFn::Polynomial(_) => "poly",
            GrowthFn::PowerFloor(_) => "powfloor",
            GrowthFn::QuarticLog(_) => "qlog",
            GrowthFn::RemarkCounterexample => "remarkcex",
        }
    }
}

/// `floor(n^(p/q))` exactly, as the integer q-th root of `n^p`.
fn power_floor(n: u64, a: Ratio<i64>) -> Result<WideInt, NumericError> {
    let (p, q) = (*a.numer() as u32, *a.denom() as u32);
    let v = BigUint::from(n).pow(p).nth_root(q);
    v.to_i128().map(WideInt).ok_or(NumericError::Overflow { at: n as i128 })
}

/// `floor(n^4 ln^s n)`, certified by outward-rounded interval evaluation with
/// adaptive precision (at least 128 fractional bits).
fn quartic_log(n: u64, s: Ratio<i64>) -> Result<WideInt, NumericError> {
    if n == 0 {
        return Err(NumericError::Domain("ln 0".into()));
    }
    if n == 1 {
        return Ok(WideInt(0));
    }
    let mut prec = START_PREC;
    while prec <= MAX_PREC {
        let ln_n = Interval::from_int(&BigInt::from(n), prec).ln();
        let pow = if s.is_integer() {
            ln_n.powi(*s.numer() as u32)
        } else {
            ln_n.ln().mul_int(&BigInt::from(*s.numer())).div_int(&BigInt::from(*s.denom())).exp()
        };
        let value = pow.mul_int(&BigInt::from(n).pow(4));
        if let Some(f) = value.certified_floor() {
            return f.to_i128().map(WideInt).ok_or(NumericError::Overflow { at: n as i128 });
        }
        prec *= 2;
    }
    Err(NumericError::UncertifiedFloor { n })
}

impl fmt::Display for GrowthFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthFn::Polynomial(p) => write!(f, "poly:{p}"),
            GrowthFn::PowerFloor(a) => write!(f, "powfloor:{a}"),
            GrowthFn::QuarticLog(s) => write!(f, "qlog:{s}"),
            GrowthFn::RemarkCounterexample => f.write_str("remarkcex"),
        }
    }
}

/// Parses `3`, `9/2` or a terminating decimal such as `4.5`.
pub fn parse_ratio(s: &str) -> Result<Ratio<i64>, NumericError> {
    let bad = || NumericError::Parse(format!("rational {s:?}"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let (a, b): (i64, i64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if b == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(a, b));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let denom = 10i64.pow(frac.len() as u32);
        let neg = int.starts_with('-');
        let whole: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().map_err(|_| bad())? };
        let f: i64 = frac.parse().map_err(|_| bad())?;
        let num = whole.abs() * denom + f;
        return Ok(Ratio::new(if neg { -num } else { num }, denom));
    }
    s.parse::<i64>().map(Ratio::from_integer).map_err(|_| bad())
}

impl FromStr for GrowthFn {
    type Err = NumericError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "remarkcex" {
            return Ok(GrowthFn::RemarkCounterexample);
        }
        let (kind, arg) = s.split_once(':').ok_or_else(|| NumericError::Parse(format!("growth function {s:?}")))?;
        match kind {
            "poly" => Ok(GrowthFn::Polynomial(arg.parse()?)),
            "powfloor" => GrowthFn::power_floor(parse_ratio(arg)?),
            "qlog" => GrowthFn::quartic_log(parse_ratio(arg)?),
            _ => Err(NumericError::Parse(format!("unknown growth kind {kind:?}"))),
        }
    }
}
