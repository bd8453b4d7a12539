use std::fmt;

use crate::base::BaseKind;
use crate::numeric::{monotone_threshold, IntPoly, Orientation};
use crate::perm::{FSet, DEFAULT_SCAN_BOUND};

/// A malformed or inconsistent configuration, located when it came from a file.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        ConfigError { line: None, column: None, message: message.into() }
    }

    pub fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        ConfigError { line: Some(line), column: Some(column), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

/// One `key = value` line of a flat config file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
    pub value_column: usize,
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<ConfigEntry>, ConfigError> {
    let mut out: Vec<ConfigEntry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let Some(eq) = body.find('=') else {
            let col = body.len() - body.trim_start().len() + 1;
            return Err(ConfigError::at(line, col, "expected key = value"));
        };
        let key = body[..eq].trim();
        if key.is_empty() || !key.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
            let col = body.len() - body.trim_start().len() + 1;
            return Err(ConfigError::at(line, col, format!("invalid key {key:?}")));
        }
        let after = &body[eq + 1..];
        let value_column = eq + 2 + (after.len() - after.trim_start().len());
        if out.iter().any(|e| e.key == key) {
            return Err(ConfigError::at(line, 1, format!("duplicate key {key:?}")));
        }
        out.push(ConfigEntry { key: key.to_string(), value: after.trim().to_string(), line, value_column });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Eta {
    /// No thinning: every horizon-certified point is in `B`.
    Full,
    Fraction(f64),
}

impl fmt::Display for Eta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Eta::Full => f.write_str("full"),
            Eta::Fraction(x) => write!(f, "{x}"),
        }
    }
}

/// Parameters of the pair `(T, S)` and of the sampling that probes it.
#[derive(Clone, Debug)]
pub struct SystemConfig {
    pub base: BaseKind,
    pub p1: IntPoly,
    pub p2: IntPoly,
    pub orientation1: Orientation,
    pub orientation2: Orientation,
    /// `None` means the least admissible start.
    pub m: Option<u64>,
    pub horizon: u64,
    pub f: FSet,
    pub eta: Eta,
    pub seed: u64,
    pub samples: u64,
    pub omega_per_point: u64,
    /// Largest Birkhoff time any single point may stream to.
    pub budget: u64,
    pub scan_bound: u64,
    pub unsafe_degree: bool,
    pub workers: usize,
}

pub const DEFAULT_HORIZON: u64 = 40;
pub const DEFAULT_BUDGET: u64 = 10_000_000_000;
pub const MIN_DEGREE: usize = 5;

/// Keys accepted by [`SystemConfig::set`].
pub const SYSTEM_KEYS: &[&str] = &[
    "base",
    "p1",
    "p2",
    "p1_orientation",
    "p2_orientation",
    "m",
    "horizon",
    "f",
    "eta",
    "seed",
    "samples",
    "omega_per_point",
    "budget",
    "scan_bound",
    "unsafe_degree",
    "workers",
];

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            base: BaseKind::canonical_walk(),
            p1: "n^5".parse().expect("valid"),
            p2: "2*n^5".parse().expect("valid"),
            orientation1: Orientation::Forward,
            orientation2: Orientation::Forward,
            m: None,
            horizon: DEFAULT_HORIZON,
            f: FSet::dyadic(),
            eta: Eta::Full,
            seed: 42,
            samples: 200,
            omega_per_point: 64,
            budget: DEFAULT_BUDGET,
            scan_bound: DEFAULT_SCAN_BOUND,
            unsafe_degree: false,
            workers: 1,
        }
    }
}

fn parse_u64(key: &str, v: &str) -> Result<u64, String> {
    let v = v.replace('_', "");
    if let Some((m, e)) = v.split_once('e') {
        let (m, e): (u64, u32) = (
            m.parse().map_err(|_| format!("{key}: not an integer"))?,
            e.parse().map_err(|_| format!("{key}: not an integer"))?,
        );
        return 10u64.checked_pow(e).and_then(|p| p.checked_mul(m)).ok_or_else(|| format!("{key}: out of range"));
    }
    v.parse().map_err(|_| format!("{key}: expected a non-negative integer, got {v:?}"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got {v:?}")),
    }
}

fn parse_orientation(key: &str, v: &str) -> Result<Orientation, String> {
    match v {
        "forward" => Ok(Orientation::Forward),
        "reversed" => Ok(Orientation::Reversed),
        _ => Err(format!("{key}: expected forward or reversed, got {v:?}")),
    }
}

fn orientation_name(o: Orientation) -> &'static str {
    match o {
        Orientation::Forward => "forward",
        Orientation::Reversed => "reversed",
    }
}

impl SystemConfig {
    /// Sets one key from its text form. `Ok(false)` means the key is not a system key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, String> {
        match key {
            "base" => self.base = value.parse().map_err(|e| format!("base: {e}"))?,
            "p1" => self.p1 = value.parse().map_err(|e| format!("p1: {e}"))?,
            "p2" => self.p2 = value.parse().map_err(|e| format!("p2: {e}"))?,
            "p1_orientation" => self.orientation1 = parse_orientation(key, value)?,
            "p2_orientation" => self.orientation2 = parse_orientation(key, value)?,
            "m" => self.m = if value == "auto" { None } else { Some(parse_u64(key, value)?) },
            "horizon" => self.horizon = parse_u64(key, value)?,
            "f" => self.f = value.parse().map_err(|e| format!("f: {e}"))?,
            "eta" => {
                self.eta = if value == "full" {
                    Eta::Full
                } else {
                    let x: f64 = value.parse().map_err(|_| format!("eta: expected full or a number, got {value:?}"))?;
                    if !(0.0..=1.0).contains(&x) {
                        return Err(format!("eta: {x} is outside [0, 1]"));
                    }
                    Eta::Fraction(x)
                }
            }
            "seed" => self.seed = parse_u64(key, value)?,
            "samples" => self.samples = parse_u64(key, value)?,
            "omega_per_point" => self.omega_per_point = parse_u64(key, value)?,
            "budget" => self.budget = parse_u64(key, value)?,
            "scan_bound" => self.scan_bound = parse_u64(key, value)?,
            "unsafe_degree" => self.unsafe_degree = parse_bool(key, value)?,
            "workers" => {
                self.workers = parse_u64(key, value)? as usize;
                if self.workers == 0 {
                    return Err("workers: must be >= 1".into());
                }
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Sign-normalizes the polynomials, checks degrees and fills in the default `M`.
    pub fn validate(&mut self) -> Result<(), ConfigError> {
        let (p1, o1) = self.p1.normalize_sign();
        let (p2, o2) = self.p2.normalize_sign();
        self.p1 = p1;
        self.p2 = p2;
        if o1 == Orientation::Reversed {
            self.orientation1 = Orientation::Reversed;
        }
        if o2 == Orientation::Reversed {
            self.orientation2 = Orientation::Reversed;
        }
        for (name, p) in [("p1", &self.p1), ("p2", &self.p2)] {
            if p.degree() < MIN_DEGREE && !self.unsafe_degree {
                return Err(ConfigError::new(format!(
                    "deg {name} = {} but the construction needs degree >= {MIN_DEGREE} (pass --unsafe-degree to explore anyway)",
                    p.degree()
                )));
            }
            if p.degree() == 0 {
                return Err(ConfigError::new(format!("{name} is constant")));
            }
        }
        let t1 = monotone_threshold(&self.p1).map_err(|e| ConfigError::new(format!("p1: {e}")))?;
        let t2 = monotone_threshold(&self.p2).map_err(|e| ConfigError::new(format!("p2: {e}")))?;
        let least = t1.max(t2).max(2);
        match self.m {
            None => self.m = Some(least),
            Some(m) if m < least => {
                return Err(ConfigError::new(format!("m = {m} is below the monotone thresholds (need m >= {least})")));
            }
            Some(_) => {}
        }
        if self.horizon == 0 {
            return Err(ConfigError::new("horizon must be >= 1"));
        }
        if self.omega_per_point == 0 {
            return Err(ConfigError::new("omega_per_point must be >= 1"));
        }
        Ok(())
    }

    /// The resolved start `M`; call after [`SystemConfig::validate`].
    pub fn start(&self) -> u64 {
        self.m.expect("validated config")
    }

    /// Last time in the horizon, `M + H − 1`.
    pub fn last(&self) -> u64 {
        self.start() + self.horizon - 1
    }

    /// Seed of the omega oracles, split from the master seed.
    pub fn omega_seed(&self) -> u64 {
        self.seed ^ 0x9e37_79b9_7f4a_7c15
    }

    /// Resolved key/value pairs for a manifest; parsing them back gives the same config.
    pub fn to_kv(&self) -> Vec<(String, String)> {
        let m = self.m.map_or("auto".to_string(), |m| m.to_string());
        vec![
            ("base".into(), self.base.to_string()),
            ("p1".into(), self.p1.to_string()),
            ("p2".into(), self.p2.to_string()),
            ("p1_orientation".into(), orientation_name(self.orientation1).into()),
            ("p2_orientation".into(), orientation_name(self.orientation2).into()),
            ("m".into(), m),
            ("horizon".into(), self.horizon.to_string()),
            ("f".into(), self.f.to_string()),
            ("eta".into(), self.eta.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("samples".into(), self.samples.to_string()),
            ("omega_per_point".into(), self.omega_per_point.to_string()),
            ("budget".into(), self.budget.to_string()),
            ("scan_bound".into(), self.scan_bound.to_string()),
            ("unsafe_degree".into(), self.unsafe_degree.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_parsing() {
        let text = "# comment\np1 = n^5\n\n  horizon=30 # trailing\nf = list:2,4\n";
        let e = parse_kv(text).unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!((e[1].key.as_str(), e[1].value.as_str(), e[1].line), ("horizon", "30", 4));
        assert_eq!(e[0].value_column, 6);
        let err = parse_kv("p1 = n^5\n  oops\n").unwrap_err();
        assert_eq!((err.line, err.column), (Some(2), Some(3)));
        assert!(parse_kv("a = 1\na = 2").is_err());
        assert!(parse_kv("bad key = 1").is_err());
    }

    #[test]
    fn defaults_and_degree_guard() {
        let mut c = SystemConfig::default();
        c.validate().unwrap();
        assert_eq!(c.start(), 2);
        assert_eq!(c.last(), 41);
        let mut c = SystemConfig::default();
        c.set("p1", "n^4").unwrap();
        let e = c.validate().unwrap_err();
        assert!(e.message.contains("degree >= 5"), "{e}");
        c.set("unsafe_degree", "true").unwrap();
        c.validate().unwrap();
    }

    #[test]
    fn sign_normalization_and_threshold() {
        let mut c = SystemConfig::default();
        c.set("p1", "-n^5+100*n").unwrap();
        c.validate().unwrap();
        assert_eq!(c.orientation1, Orientation::Reversed);
        assert_eq!(c.p1.to_string(), "n^5-100*n");
        assert_eq!(c.start(), 4);
        let mut c = SystemConfig::default();
        c.set("p1", "n^5-100*n").unwrap();
        c.set("m", "2").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let mut c = SystemConfig::default();
        c.set("eta", "0.5").unwrap();
        c.set("p2", "-2*n^5").unwrap();
        c.set("budget", "1e9").unwrap();
        c.validate().unwrap();
        let mut d = SystemConfig::default();
        for (k, v) in c.to_kv() {
            assert!(d.set(&k, &v).unwrap());
        }
        d.validate().unwrap();
        assert_eq!(c.to_kv(), d.to_kv());
        assert_eq!(d.orientation2, Orientation::Reversed);
        assert_eq!(d.budget, 1_000_000_000);
        assert!(!d.set("nonsense", "1").unwrap());
        assert!(d.set("eta", "1.5").is_err());
    }
}
