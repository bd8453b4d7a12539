//! Integer polynomials, exact wide evaluation, growth functions and their gaps,
//! and the fixed enumeration of the nonzero integers.

mod growth;
pub(crate) mod hiprec;
mod poly;

pub use growth::{parse_ratio, GrowthFn};
pub use poly::{gap_bound_threshold, monotone_threshold, positivity_threshold, IntPoly, Orientation};

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NumericError {
    #[error("128-bit overflow evaluating at n = {at}")]
    Overflow { at: i128 },
    #[error("coefficient overflow in polynomial arithmetic")]
    CoefficientOverflow,
    #[error("the zero polynomial is not a valid schedule")]
    ZeroPolynomial,
    #[error("leading coefficient of {0} is not positive")]
    NonPositiveLeading(String),
    #[error("{0} is not eventually increasing")]
    NotIncreasing(String),
    #[error("non-positive gap h(n+k) - h(n) = {gap} at n = {n}, k = {k}")]
    NonPositiveGap { n: u64, k: u64, gap: i128 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("could not certify floor at n = {n}")]
    UncertifiedFloor { n: u64 },
    #[error("parse error: {0}")]
    Parse(String),
}

/// A signed 128-bit value produced by overflow-checked arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WideInt(pub i128);

impl WideInt {
    pub fn checked_sub(self, o: WideInt) -> Option<WideInt> {
        self.0.checked_sub(o.0).map(WideInt)
    }

    pub fn checked_add(self, o: WideInt) -> Option<WideInt> {
        self.0.checked_add(o.0).map(WideInt)
    }

    pub fn to_u64(self) -> Option<u64> {
        u64::try_from(self.0).ok()
    }
}

impl fmt::Display for WideInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `h(n+k) - h(n)`, required to be positive.
pub fn gap(h: &GrowthFn, n: u64, k: u64) -> Result<WideInt, NumericError> {
    let threshold = h.domain_threshold()?;
    if n < threshold {
        return Err(NumericError::Precondition(format!(
            "gap at n = {n} below the monotone threshold {threshold} of {h}"
        )));
    }
    if k == 0 {
        return Err(NumericError::Precondition("gap step k must be >= 1".into()));
    }
    let hi = h.eval(n + k)?;
    let lo = h.eval(n)?;
    let d = hi.checked_sub(lo).ok_or(NumericError::Overflow { at: (n + k) as i128 })?;
    if d.0 <= 0 {
        return Err(NumericError::NonPositiveGap { n, k, gap: d.0 });
    }
    Ok(d)
}

/// `a_t t n^{t/2} k^{t/2}`, a lower bound for `p(n+k) - p(n)` once `n` passes the
/// certified threshold of [`gap_bound_threshold`].
pub fn gap_lower_bound(p: &IntPoly, n: u64, k: u64) -> Result<f64, NumericError> {
    let m1 = gap_bound_threshold(p)?;
    if n < m1 {
        return Err(NumericError::Precondition(format!("n = {n} is below the certified threshold M1 = {m1} for {p}")));
    }
    if k == 0 {
        return Err(NumericError::Precondition("k must be >= 1".into()));
    }
    let t = p.degree() as f64;
    Ok(p.leading() as f64 * t * (n as f64).powf(t / 2.0) * (k as f64).powf(t / 2.0))
}

/// The enumeration `l_i = (-1)^{i-1} [(i+1)/2]` of `Z \ {0}`: 1, -1, 2, -2, ...
pub fn l_enumerate(i: i64) -> Result<i64, NumericError> {
    if i <= 0 {
        return Err(NumericError::Precondition(format!("l_i needs i >= 1, got {i}")));
    }
    let mag = (i + 1) / 2;
    Ok(if i % 2 == 1 { mag } else { -mag })
}

/// Inverse of [`l_enumerate`]: the index `i` with `l_i = v`.
pub fn l_index(v: i64) -> Option<u64> {
    match v {
        0 => None,
        v if v > 0 => Some(2 * v as u64 - 1),
        v => Some(2 * v.unsigned_abs()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_examples() {
        assert_eq!(l_enumerate(1).unwrap(), 1);
        assert_eq!(l_enumerate(2).unwrap(), -1);
        assert_eq!(l_enumerate(3).unwrap(), 2);
        assert_eq!(l_enumerate(4).unwrap(), -2);
        assert_eq!(l_enumerate(101).unwrap(), 51);
        assert!(l_enumerate(0).is_err());
        assert!(l_enumerate(-3).is_err());
        for i in 1..1000 {
            assert_eq!(l_index(l_enumerate(i).unwrap()), Some(i as u64));
        }
    }

    #[test]
    fn gap_examples() {
        let h = GrowthFn::Polynomial("n^5".parse().unwrap());
        assert_eq!(gap(&h, 2, 1).unwrap().0, 211);
        let r = GrowthFn::RemarkCounterexample;
        for m in 2..500 {
            assert_eq!(gap(&r, 2 * m, 1).unwrap().0, 2);
        }
        assert!(gap(&r, 2, 1).is_err());
        assert!(gap(&h, 2, 0).is_err());
    }

    #[test]
    fn gap_below_threshold_is_reported() {
        let h = GrowthFn::Polynomial("n^5-100*n".parse().unwrap());
        assert!(matches!(gap(&h, 2, 1), Err(NumericError::Precondition(_))));
        assert!(gap(&h, 4, 1).is_ok());
    }

    #[test]
    fn quartic_log_gap_at_ten() {
        let h: GrowthFn = "qlog:3".parse().unwrap();
        assert_eq!(gap(&h, 10, 1).unwrap().0, 79_785);
    }

    #[test]
    fn lower_bound_examples() {
        let p: IntPoly = "n^5".parse().unwrap();
        assert!((gap_lower_bound(&p, 4, 1).unwrap() - 160.0).abs() < 1e-9);
        assert_eq!(gap(&GrowthFn::Polynomial(p.clone()), 4, 1).unwrap().0, 2101);
        assert!((gap_lower_bound(&p, 1, 1).unwrap() - 5.0).abs() < 1e-12);
        let p3: IntPoly = "3*n^5".parse().unwrap();
        let b = gap_lower_bound(&p3, 4, 2).unwrap();
        assert!((b - 2715.29).abs() < 0.01, "{b}");
        assert_eq!(gap(&GrowthFn::Polynomial(p3), 4, 2).unwrap().0, 20256);
    }
}
