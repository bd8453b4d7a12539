use std::fmt;
use std::str::FromStr;

use super::{NumericError, WideInt};

/// Integer polynomial `c0 + c1*n + ... + ck*n^k`, coefficients stored lowest degree first.
///
/// The leading coefficient is never zero; the zero polynomial is not representable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntPoly {
    coeffs: Vec<i128>,
}

/// Whether a polynomial was negated to make its leading coefficient positive.
///
/// A reversed schedule `p` is realized by running the inverse transformation along `-p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Orientation {
    Forward,
    Reversed,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<i128>) -> Result<Self, NumericError> {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(NumericError::ZeroPolynomial);
        }
        Ok(IntPoly { coeffs })
    }

    /// `c * n^d`.
    pub fn monomial(c: i128, d: usize) -> Result<Self, NumericError> {
        let mut coeffs = vec![0; d + 1];
        coeffs[d] = c;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> i128 {
        *self.coeffs.last().expect("non-empty by construction")
    }

    /// Exact Horner evaluation. Overflow is an error, never a wrap.
    pub fn eval(&self, n: i128) -> Result<WideInt, NumericError> {
        let mut acc: i128 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = acc.checked_mul(n).and_then(|v| v.checked_add(c)).ok_or(NumericError::Overflow { at: n })?;
        }
        Ok(WideInt(acc))
    }

    /// Flips the sign when the leading coefficient is negative.
    pub fn normalize_sign(&self) -> (IntPoly, Orientation) {
        if self.leading() > 0 {
            (self.clone(), Orientation::Forward)
        } else {
            let coeffs = self.coeffs.iter().map(|c| -c).collect();
            (IntPoly { coeffs }, Orientation::Reversed)
        }
    }

    /// Forward difference `p(n+1) - p(n)`. `None` when `p` is constant.
    pub fn forward_difference(&self) -> Result<Option<IntPoly>, NumericError> {
        let d = self.degree();
        if d == 0 {
            return Ok(None);
        }
        // p(n+1) = sum_j c_j sum_i C(j,i) n^i
        let mut out = vec![0i128; d];
        for (j, &c) in self.coeffs.iter().enumerate().skip(1) {
            let mut binom: i128 = 1;
            for (i, slot) in out.iter_mut().enumerate().take(j) {
                let term = c.checked_mul(binom).ok_or(NumericError::CoefficientOverflow)?;
                *slot = slot.checked_add(term).ok_or(NumericError::CoefficientOverflow)?;
                binom = binom.checked_mul((j - i) as i128).ok_or(NumericError::CoefficientOverflow)? / (i as i128 + 1);
            }
        }
        IntPoly::new(out).map(Some)
    }

    pub fn sub(&self, other: &IntPoly) -> Result<Option<IntPoly>, NumericError> {
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            let a = self.coeffs.get(i).copied().unwrap_or(0);
            let b = other.coeffs.get(i).copied().unwrap_or(0);
            out.push(a.checked_sub(b).ok_or(NumericError::CoefficientOverflow)?);
        }
        match IntPoly::new(out) {
            Ok(p) => Ok(Some(p)),
            Err(NumericError::ZeroPolynomial) => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn scale(&self, k: i128) -> Result<IntPoly, NumericError> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.checked_mul(k).ok_or(NumericError::CoefficientOverflow))
            .collect::<Result<Vec<_>, _>>()?;
        IntPoly::new(coeffs)
    }
}

impl fmt::Display for IntPoly {
    /// Highest degree first, e.g. `2*n^5-3*n+1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (d, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if c < 0 {
                f.write_str("-")?;
            } else if !first {
                f.write_str("+")?;
            }
            let a = c.unsigned_abs();
            match d {
                0 => write!(f, "{a}")?,
                _ => {
                    if a != 1 {
                        write!(f, "{a}*")?;
                    }
                    f.write_str("n")?;
                    if d > 1 {
                        write!(f, "^{d}")?;
                    }
                }
            }
            first = false;
        }
        Ok(())
    }
}

impl FromStr for IntPoly {
    type Err = NumericError;

    /// Parses sums of terms `c`, `c*n`, `n^k`, `c*n^k` with optional signs.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| NumericError::Parse(format!("polynomial {s:?}: {why}"));
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if text.is_empty() {
            return Err(bad("empty"));
        }
        let mut coeffs: Vec<i128> = Vec::new();
        let bytes = text.as_bytes();
        let mut pos = 0;
        while pos < bytes.len() {
            let mut sign = 1i128;
            while pos < bytes.len() && (bytes[pos] == b'+' || bytes[pos] == b'-') {
                if bytes[pos] == b'-' {
                    sign = -sign;
                }
                pos += 1;
            }
            let end = text[pos..].find(['+', '-']).map(|i| pos + i).unwrap_or(bytes.len());
            let term = &text[pos..end];
            if term.is_empty() {
                return Err(bad("dangling sign"));
            }
            let (coef, degree) = parse_term(term).ok_or_else(|| bad(&format!("bad term {term:?}")))?;
            if coeffs.len() <= degree {
                coeffs.resize(degree + 1, 0);
            }
            coeffs[degree] = coef
                .checked_mul(sign)
                .and_then(|c| c.checked_add(coeffs[degree]))
                .ok_or_else(|| bad("coefficient overflow"))?;
            pos = end;
        }
        IntPoly::new(coeffs)
    }
}

fn parse_term(term: &str) -> Option<(i128, usize)> {
    let Some(npos) = term.find('n') else {
        return term.parse().ok().map(|c| (c, 0));
    };
    let (head, tail) = term.split_at(npos);
    let coef = match head {
        "" => 1,
        h => h.strip_suffix('*')?.parse().ok()?,
    };
    let degree = match &tail[1..] {
        "" => 1,
        t => t.strip_prefix('^')?.parse().ok()?,
    };
    Some((coef, degree))
}

/// Least `n >= 1` with `p(m) > 0` for every `m >= n`.
///
/// Requires a positive leading coefficient. Recurses on the forward difference:
/// once `Δp > 0` on `[d, ∞)`, `p` is increasing there, so an exponential-then-binary
/// search finds the first positive value, and a downward walk makes it least.
pub fn positivity_threshold(p: &IntPoly) -> Result<u64, NumericError> {
    if p.leading() <= 0 {
        return Err(NumericError::NonPositiveLeading(p.to_string()));
    }
    let Some(dp) = p.forward_difference()? else {
        return Ok(1);
    };
    let d = positivity_threshold(&dp)?;
    let positive = |n: u64| -> Result<bool, NumericError> { Ok(p.eval(n as i128)?.0 > 0) };

    let mut hi = d;
    let mut step = 1u64;
    while !positive(hi)? {
        hi = hi.checked_add(step).ok_or(NumericError::Overflow { at: hi as i128 })?;
        step = step.saturating_mul(2);
    }
    // p is increasing on [d, ∞): binary search the first positive point in [d, hi].
    let mut lo = d;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if positive(mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let mut n = lo;
    while n > 1 && positive(n - 1)? {
        n -= 1;
    }
    Ok(n)
}

/// Least `N1 >= 1` such that `p` is strictly increasing and positive on `[N1, ∞)`.
pub fn monotone_threshold(p: &IntPoly) -> Result<u64, NumericError> {
    if p.leading() <= 0 {
        return Err(NumericError::NonPositiveLeading(p.to_string()));
    }
    let dp = p.forward_difference()?.ok_or_else(|| NumericError::NotIncreasing(p.to_string()))?;
    Ok(positivity_threshold(p)?.max(positivity_threshold(&dp)?))
}

/// Least `M1 >= 1` with `q(n) >= (a_t/2)((n+1)^t - n^t)` for all `n >= M1`, where
/// `q = Δp` and `a_t n^t` is the leading term.
///
/// Certified as the positivity threshold of `2q - a_t((n+1)^t - n^t) + 1`, which has
/// leading coefficient `a_t t > 0`.
pub fn gap_bound_threshold(p: &IntPoly) -> Result<u64, NumericError> {
    if p.leading() <= 0 {
        return Err(NumericError::NonPositiveLeading(p.to_string()));
    }
    let q = p.forward_difference()?.ok_or_else(|| NumericError::NotIncreasing(p.to_string()))?;
    let lead = IntPoly::monomial(p.leading(), p.degree())?;
    let lead_diff = lead.forward_difference()?.expect("degree >= 1 since p is not constant");
    let r = match q.scale(2)?.sub(&lead_diff)? {
        Some(r) => r.sub(&IntPoly::new(vec![-1])?)?,
        None => Some(IntPoly::new(vec![1])?),
    };
    match r {
        Some(r) => positivity_threshold(&r),
        // r + 1 == 0 identically would mean 2q - lead_diff == -1, impossible with a_t t > 0.
        None => Err(NumericError::NotIncreasing(p.to_string())),
    }
}
