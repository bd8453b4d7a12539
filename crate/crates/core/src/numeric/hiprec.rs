//! Outward-rounded fixed-point interval arithmetic on big integers.
//!
//! A value is a pair of integers `[lo, hi]` scaled by `2^prec`; every operation rounds
//! `lo` toward −∞ and `hi` toward +∞, so the true real always lies inside. Used to
//! certify floors of transcendental expressions such as `n^4 ln^s n`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug)]
pub(crate) struct Interval {
    lo: BigInt,
    hi: BigInt,
    prec: u32,
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

impl Interval {
    pub fn from_int(v: &BigInt, prec: u32) -> Self {
        let x = v << prec;
        Interval { lo: x.clone(), hi: x, prec }
    }

    fn point(v: BigInt, prec: u32) -> Self {
        Interval { lo: v.clone(), hi: v, prec }
    }

    fn one(&self) -> BigInt {
        BigInt::one() << self.prec
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi, prec: self.prec }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        Interval { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo, prec: self.prec }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let scale = self.one();
        let products = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let min = products.iter().min().unwrap();
        let max = products.iter().max().unwrap();
        Interval { lo: min.div_floor(&scale), hi: ceil_div(max, &scale), prec: self.prec }
    }

    pub fn mul_int(&self, k: &BigInt) -> Interval {
        let (a, b) = (&self.lo * k, &self.hi * k);
        if k.is_negative() {
            Interval { lo: b, hi: a, prec: self.prec }
        } else {
            Interval { lo: a, hi: b, prec: self.prec }
        }
    }

    /// Division by a positive integer.
    pub fn div_int(&self, k: &BigInt) -> Interval {
        debug_assert!(k.is_positive());
        Interval { lo: self.lo.div_floor(k), hi: ceil_div(&self.hi, k), prec: self.prec }
    }

    /// Division by a strictly positive interval.
    pub fn div(&self, o: &Interval) -> Interval {
        debug_assert!(o.lo.is_positive());
        let scale = self.one();
        let nums = [&self.lo * &scale, &self.hi * &scale];
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        for n in &nums {
            for d in [&o.lo, &o.hi] {
                let f = n.div_floor(d);
                let c = ceil_div(n, d);
                lo = Some(lo.map_or(f.clone(), |l| l.min(f)));
                hi = Some(hi.map_or(c.clone(), |h| h.max(c)));
            }
        }
        Interval { lo: lo.unwrap(), hi: hi.unwrap(), prec: self.prec }
    }

    /// Floor of the represented real, if both endpoints agree on it.
    pub fn certified_floor(&self) -> Option<BigInt> {
        let scale = self.one();
        let a = self.lo.div_floor(&scale);
        let b = self.hi.div_floor(&scale);
        (a == b).then_some(a)
    }

    /// Natural logarithm of a strictly positive interval.
    pub fn ln(&self) -> Interval {
        assert!(self.lo.is_positive(), "ln of non-positive interval");
        let lo = ln_point(&self.lo, self.prec).lo;
        let hi = ln_point(&self.hi, self.prec).hi;
        Interval { lo, hi, prec: self.prec }
    }

    pub fn exp(&self) -> Interval {
        let lo = exp_point(&self.lo, self.prec).lo;
        let hi = exp_point(&self.hi, self.prec).hi;
        Interval { lo, hi, prec: self.prec }
    }

    pub fn powi(&self, mut e: u32) -> Interval {
        let mut base = self.clone();
        let mut acc = Interval::point(self.one(), self.prec);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }
}

/// `2 atanh(z) = ln((1+z)/(1-z))` for `0 <= z <= 1/3`.
fn two_atanh(z: &Interval) -> Interval {
    let prec = z.prec;
    let z2 = z.mul(z);
    let mut term = z.clone();
    let mut sum = Interval::point(BigInt::zero(), prec);
    let mut k: u64 = 1;
    loop {
        sum = sum.add(&term.div_int(&BigInt::from(k)));
        term = term.mul(&z2);
        k += 2;
        if term.hi.bits() <= 1 {
            break;
        }
    }
    // Remaining terms sum to at most term/(1 - z^2) <= (9/8) term < 2 term.
    let tail = &term.hi * 2 + 1;
    let out = Interval { lo: sum.lo, hi: sum.hi + tail, prec };
    out.mul_int(&BigInt::from(2))
}

fn ln2(prec: u32) -> Interval {
    let third = Interval::from_int(&BigInt::one(), prec).div_int(&BigInt::from(3));
    two_atanh(&third)
}

/// ln of the real `v / 2^prec`, `v > 0`.
fn ln_point(v: &BigInt, prec: u32) -> Interval {
    // v = m * 2^k with m/2^prec in [1, 2)
    let k = v.bits() as i64 - 1 - prec as i64;
    let m = if k >= 0 {
        let base = v >> (k as u64);
        // v >> k truncates; the true mantissa lies in [base, base + 1)
        Interval { lo: base.clone(), hi: base + 1, prec }
    } else {
        Interval::point(v << ((-k) as u64), prec)
    };
    let one = Interval::from_int(&BigInt::one(), prec);
    let z = m.sub(&one).div(&m.add(&one));
    let z = Interval { lo: z.lo.max(BigInt::zero()), hi: z.hi, prec };
    two_atanh(&z).add(&ln2(prec).mul_int(&BigInt::from(k)))
}

/// exp of the real `v / 2^prec`.
fn exp_point(v: &BigInt, prec: u32) -> Interval {
    // Reduce |r| <= 1/2 by halving j times, then square j times.
    let mut j: u32 = 0;
    let half = BigInt::one() << (prec - 1);
    let mut r = Interval::point(v.clone(), prec);
    while r.lo.abs() > half || r.hi.abs() > half {
        r = Interval { lo: r.lo.div_floor(&BigInt::from(2)), hi: ceil_div(&r.hi, &BigInt::from(2)), prec };
        j += 1;
    }
    let one = Interval::from_int(&BigInt::one(), prec);
    let mut sum = one.clone();
    let mut term = one;
    let mut i: u64 = 1;
    loop {
        term = term.mul(&r).div_int(&BigInt::from(i));
        sum = sum.add(&term);
        i += 1;
        let mag = term.lo.abs().max(term.hi.abs());
        if mag.bits() <= 1 {
            break;
        }
    }
    // |tail| <= 2 |last term| for |r| <= 1/2.
    let mag = term.lo.abs().max(term.hi.abs());
    let slack = &mag * 2 + 1;
    let mut out = Interval { lo: sum.lo - &slack, hi: sum.hi + &slack, prec };
    for _ in 0..j {
        out = out.mul(&out);
    }
    out
}
