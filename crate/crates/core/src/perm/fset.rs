use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::PermError;

/// A subset `F` of the positive integers, given by a membership rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FSet {
    Empty,
    All,
    List(BTreeSet<u64>),
    /// `∪_{k≥0} [lo·b^k, hi·b^k)`; `dyadic` is `b = 4, lo = 1, hi = 2`.
    Blocks {
        base: u64,
        lo: u64,
        hi: u64,
    },
    /// `{n : n ≡ r (mod m)}`.
    Residue {
        r: u64,
        m: u64,
    },
}

impl FSet {
    pub fn dyadic() -> Self {
        FSet::Blocks { base: 4, lo: 1, hi: 2 }
    }

    pub fn blocks(base: u64, lo: u64, hi: u64) -> Result<Self, PermError> {
        if base < 2 || lo == 0 || hi <= lo {
            return Err(PermError::Parse(format!("blocks need base >= 2 and 0 < lo < hi, got {base},{lo},{hi}")));
        }
        Ok(FSet::Blocks { base, lo, hi })
    }

    pub fn residue(r: u64, m: u64) -> Result<Self, PermError> {
        if m == 0 || r >= m {
            return Err(PermError::Parse(format!("residue class needs 0 <= r < m, got {r},{m}")));
        }
        Ok(FSet::Residue { r, m })
    }

    pub fn contains(&self, n: u64) -> bool {
        match self {
            FSet::Empty => false,
            FSet::All => true,
            FSet::List(s) => s.contains(&n),
            FSet::Residue { r, m } => n % m == *r,
            FSet::Blocks { base, lo, hi } => {
                let (mut a, mut b) = (*lo as u128, *hi as u128);
                let n = n as u128;
                while a <= n {
                    if n < b {
                        return true;
                    }
                    a *= *base as u128;
                    b *= *base as u128;
                }
                false
            }
        }
    }

    /// `#{n ∈ [a, b] : n ∈ F}`.
    pub fn count_in(&self, a: u64, b: u64) -> u64 {
        if a > b {
            return 0;
        }
        match self {
            FSet::Empty => 0,
            FSet::All => b - a + 1,
            FSet::List(s) => s.range(a..=b).count() as u64,
            FSet::Residue { r, m } => {
                let upto = |x: u64| if x < *r { 0 } else { (x - r) / m + 1 };
                upto(b) - if a == 0 { 0 } else { upto(a - 1) }
            }
            FSet::Blocks { .. } => (a..=b).filter(|&n| self.contains(n)).count() as u64,
        }
    }

    /// Block endpoints `(lo·b^k, hi·b^k)` with `hi·b^k <= max`; empty for other kinds.
    pub fn block_pairs(&self, max: u64) -> Vec<(u64, u64)> {
        let FSet::Blocks { base, lo, hi } = self else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let (mut a, mut b) = (*lo as u128, *hi as u128);
        while b <= max as u128 {
            out.push((a as u64, b as u64));
            a *= *base as u128;
            b *= *base as u128;
        }
        out
    }
}

impl fmt::Display for FSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FSet::Empty => f.write_str("none"),
            FSet::All => f.write_str("all"),
            FSet::List(s) => {
                let v: Vec<String> = s.iter().map(|n| n.to_string()).collect();
                write!(f, "list:{}", v.join(","))
            }
            FSet::Blocks { base: 4, lo: 1, hi: 2 } => f.write_str("dyadic"),
            FSet::Blocks { base, lo, hi } => write!(f, "blocks:{base},{lo},{hi}"),
            FSet::Residue { r, m } => write!(f, "mod:{r},{m}"),
        }
    }
}

impl FromStr for FSet {
    type Err = PermError;

    /// `none`, `all`, `dyadic`, `list:a,b,..`, `mod:r,m` or `blocks:b,lo,hi`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let nums = |arg: &str| -> Result<Vec<u64>, PermError> {
            arg.split(',')
                .filter(|x| !x.trim().is_empty())
                .map(|x| x.trim().parse().map_err(|_| PermError::Parse(format!("F set {s:?}"))))
                .collect()
        };
        match s {
            "none" => return Ok(FSet::Empty),
            "all" => return Ok(FSet::All),
            "dyadic" => return Ok(FSet::dyadic()),
            _ => {}
        }
        let (kind, arg) = s.split_once(':').ok_or_else(|| PermError::Parse(format!("F set {s:?}")))?;
        let v = nums(arg)?;
        match (kind, v.as_slice()) {
            ("list", _) => Ok(FSet::List(v.into_iter().collect())),
            ("mod", [r, m]) => FSet::residue(*r, *m),
            ("blocks", [b, lo, hi]) => FSet::blocks(*b, *lo, *hi),
            _ => Err(PermError::Parse(format!("F set {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_blocks() {
        let f = FSet::dyadic();
        let members: Vec<u64> = (1..40).filter(|&n| f.contains(n)).collect();
        assert_eq!(members, vec![1, 4, 5, 6, 7, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31]);
        assert!(!f.contains(0));
        assert!(f.contains(1 << 62) && !f.contains(1 << 63));
    }

    #[test]
    fn parse_and_count() {
        for s in ["none", "all", "dyadic", "list:2,4,7", "mod:1,3", "blocks:2,2,3"] {
            let f: FSet = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
            let brute = (5..=200).filter(|&n| f.contains(n)).count() as u64;
            assert_eq!(f.count_in(5, 200), brute, "{s}");
        }
        assert!("mod:3,3".parse::<FSet>().is_err());
        assert!("blocks:1,1,2".parse::<FSet>().is_err());
        assert!("weird".parse::<FSet>().is_err());
    }
}
