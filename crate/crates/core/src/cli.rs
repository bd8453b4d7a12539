//! Command-line front end. Every run resolves its configuration (defaults, then the
//! `--config` file, then flags), writes `manifest.conf`, the reports and a timing file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::base::{level_distribution, Precision, StepLaw};
use crate::dynamics::{parse_kv, sample_state, Certification, ConfigError, NotBReason, SystemConfig, SYSTEM_KEYS};
use crate::experiments::{
    cesaro_trajectory, entropy_proxy, estimate_e_measure, llt_curve, selftest, series_partial_sums,
    triple_measure_curve, write_timing, ExperimentError, ExperimentReport,
};
use crate::numeric::GrowthFn;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_CONFIG: i32 = 64;

/// Per-experiment keys accepted in config files next to the system keys.
pub const EXPERIMENT_KEYS: &[&str] = &["n_values", "k_cap", "n_cap", "h", "n_from", "n_to", "n_max", "dump", "levels"];

#[derive(Parser, Debug)]
#[command(name = "skewlab", version, about = "Skew-product multiple-recurrence experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Default)]
pub struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    #[arg(long, global = true)]
    pub workers: Option<String>,
    /// Output directory for reports and the manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub samples: Option<String>,
    #[arg(long, global = true)]
    pub omega_per_point: Option<String>,
    #[arg(long, global = true)]
    pub horizon: Option<String>,
    /// `full` or a fraction in [0, 1].
    #[arg(long, global = true)]
    pub eta: Option<String>,
    /// `none`, `all`, `dyadic`, `list:a,b,..`, `mod:r,m` or `blocks:b,lo,hi`.
    #[arg(long, global = true)]
    pub f: Option<String>,
    #[arg(long, global = true)]
    pub p1: Option<String>,
    #[arg(long, global = true)]
    pub p2: Option<String>,
    /// `walk`, `walk:<law>`, `rotation` or `rotation:<step function>`.
    #[arg(long, global = true)]
    pub base: Option<String>,
    /// Allow polynomials of degree below 5.
    #[arg(long, global = true)]
    pub unsafe_degree: bool,
    /// Start `M` of the horizon, or `auto`.
    #[arg(long, global = true)]
    pub m: Option<String>,
    #[arg(long, global = true)]
    pub budget: Option<String>,
    #[arg(long, global = true)]
    pub scan_bound: Option<String>,
    /// Any config key, as `key=value`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Local CLT deviation and m(W_n) from the level distributions.
    Llt {
        #[arg(long = "n", value_delimiter = ',')]
        n_values: Option<Vec<u64>>,
        /// Also export each level distribution as CSV.
        #[arg(long)]
        levels: bool,
    },
    /// Double partial sums of 1/sqrt(h(n+k) - h(n)) with tail bounds.
    Series {
        /// `poly:<p>`, `powfloor:<a>`, `qlog:<s>` or `remarkcex`.
        #[arg(long)]
        h: Option<String>,
        #[arg(long)]
        n_cap: Option<u64>,
        #[arg(long)]
        k_cap: Option<u64>,
    },
    /// Horizon-relative measure of E_N.
    EMeasure {
        #[arg(long = "n", value_delimiter = ',')]
        n_values: Option<Vec<u64>>,
        #[arg(long)]
        k_cap: Option<u64>,
    },
    /// Triple-intersection measure per n.
    Triple {
        /// Integer, `M` or `M+k`.
        #[arg(long)]
        n_from: Option<String>,
        #[arg(long)]
        n_to: Option<String>,
    },
    /// Running Cesàro averages of the triple indicator.
    Cesaro {
        #[arg(long)]
        n_max: Option<String>,
    },
    /// Distinct cocycle values a_N(y)/N.
    Entropy {
        #[arg(long = "n", value_delimiter = ',')]
        n_values: Option<Vec<u64>>,
    },
    /// Certify sampled points and dump their permutation tables.
    Certify {
        #[arg(long)]
        dump: Option<u64>,
    },
    /// Exact structural checks.
    Selftest,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Llt { .. } => "llt",
            Command::Series { .. } => "series",
            Command::EMeasure { .. } => "e-measure",
            Command::Triple { .. } => "triple",
            Command::Cesaro { .. } => "cesaro",
            Command::Entropy { .. } => "entropy",
            Command::Certify { .. } => "certify",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("budget/resource error: {0}")]
    Budget(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Budget(_) | CliError::Io(_) => EXIT_BUDGET,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(c) => CliError::Config(c),
            ExperimentError::Budget(_) | ExperimentError::Pool(_) => CliError::Budget(e.to_string()),
            ExperimentError::Numeric(_) | ExperimentError::Input(_) => CliError::Usage(e.to_string()),
        }
    }
}

/// Configuration after merging defaults, file and flags.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub system: SystemConfig,
    pub extra: BTreeMap<String, String>,
}

impl Resolved {
    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.extra
            .get(key)
            .map(|v| v.parse().map_err(|_| CliError::Usage(format!("{key}: cannot parse {v:?}"))))
            .transpose()
    }

    fn list(&self, key: &str) -> Result<Option<Vec<u64>>, CliError> {
        self.extra
            .get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| x.trim().parse().map_err(|_| CliError::Usage(format!("{key}: cannot parse {v:?}"))))
                    .collect()
            })
            .transpose()
    }
}

fn apply(
    system: &mut SystemConfig,
    extra: &mut BTreeMap<String, String>,
    key: &str,
    value: &str,
) -> Result<(), String> {
    if system.set(key, value)? {
        return Ok(());
    }
    if EXPERIMENT_KEYS.contains(&key) {
        extra.insert(key.to_string(), value.to_string());
        return Ok(());
    }
    Err(format!("unknown key {key:?}"))
}

/// Merges defaults, the config file and command-line overrides, then validates.
pub fn resolve(common: &Common) -> Result<Resolved, CliError> {
    let mut system = SystemConfig::default();
    let mut extra = BTreeMap::new();
    if let Some(path) = &common.config {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        for e in parse_kv(&text)? {
            if !SYSTEM_KEYS.contains(&e.key.as_str()) && !EXPERIMENT_KEYS.contains(&e.key.as_str()) {
                return Err(ConfigError::at(e.line, 1, format!("unknown key {:?}", e.key)).into());
            }
            apply(&mut system, &mut extra, &e.key, &e.value).map_err(|m| ConfigError::at(e.line, e.value_column, m))?;
        }
    }
    let flags: [(&str, &Option<String>); 11] = [
        ("seed", &common.seed),
        ("workers", &common.workers),
        ("samples", &common.samples),
        ("omega_per_point", &common.omega_per_point),
        ("horizon", &common.horizon),
        ("eta", &common.eta),
        ("f", &common.f),
        ("p1", &common.p1),
        ("p2", &common.p2),
        ("base", &common.base),
        ("m", &common.m),
    ];
    for (key, v) in flags.into_iter().chain([("budget", &common.budget), ("scan_bound", &common.scan_bound)]) {
        if let Some(v) = v {
            apply(&mut system, &mut extra, key, v)
                .map_err(|m| ConfigError::new(format!("--{}: {m}", key.replace('_', "-"))))?;
        }
    }
    if common.unsafe_degree {
        system.unsafe_degree = true;
    }
    for kv in &common.set {
        let (k, v) =
            kv.split_once('=').ok_or_else(|| ConfigError::new(format!("--set expects key=value, got {kv:?}")))?;
        apply(&mut system, &mut extra, k.trim(), v.trim()).map_err(|m| ConfigError::new(format!("--set: {m}")))?;
    }
    system.validate()?;
    Ok(Resolved { system, extra })
}

/// `k`, `M` or `M+k`.
fn parse_time(s: &str, m: u64) -> Result<u64, CliError> {
    let bad = || CliError::Usage(format!("expected an integer, M or M+k, got {s:?}"));
    let s = s.trim();
    if let Some(rest) = s.strip_prefix('M') {
        let rest = rest.trim();
        if rest.is_empty() {
            return Ok(m);
        }
        let k: u64 = rest.strip_prefix('+').ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        return Ok(m + k);
    }
    s.parse().map_err(|_| bad())
}

fn write_manifest(dir: &Path, command: &str, r: &Resolved) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = format!("# skewlab {command}\n");
    for (k, v) in r.system.to_kv() {
        text.push_str(&format!("{k} = {v}\n"));
    }
    text.push_str(&format!("workers = {}\n", r.system.workers));
    for (k, v) in &r.extra {
        text.push_str(&format!("{k} = {v}\n"));
    }
    fs::write(dir.join("manifest.conf"), text)
}

fn certify_report(r: &Resolved, out: &Path) -> Result<ExperimentReport, CliError> {
    let c = &r.system;
    let dump = r.get::<u64>("dump")?.unwrap_or(4);
    let kind = c.base.clone().into_arc();
    let states = crate::experiments::par_map(c.workers, 0..c.samples, |id| sample_state(c, &kind, id))?;
    let mut report = ExperimentReport::new("certify", &["id", "certification", "detail", "u", "in_e", "in_b"]);
    report.config = c.to_kv().into_iter().collect();
    report.config.insert("dump".into(), dump.to_string());
    report.seeds.insert("master".into(), c.seed);
    let tables_dir = out.join("tables");
    let mut dumped = 0;
    for s in &states {
        let (label, detail) = match &s.certification {
            Certification::CertifiedB => ("B", String::new()),
            Certification::NotB(NotBReason::ZeroValue { poly, index }) => {
                ("not-B", format!("zero value in p{poly} at index {index}"))
            }
            Certification::NotB(NotBReason::Collision { poly, first, second }) => {
                ("not-B", format!("collision in p{poly} at indices {first},{second}"))
            }
            Certification::NotB(NotBReason::Thinned) => ("not-B", "thinned".to_string()),
            Certification::Rejected(why) => ("rejected", why.clone()),
        };
        report.push_row(vec![
            s.point.id().into(),
            label.into(),
            detail.into(),
            s.u.into(),
            s.in_e().into(),
            s.in_b().into(),
        ]);
        if let (Some(t), true) = (&s.tables, dumped < dump) {
            fs::create_dir_all(&tables_dir)?;
            let text = serde_json::to_string_pretty(&t.to_json(16)).expect("tables serialize") + "\n";
            fs::write(tables_dir.join(format!("point_{}.json", s.point.id())), text)?;
            dumped += 1;
        }
    }
    let b = states.iter().filter(|s| s.in_b()).count() as u64;
    let rejected = states.iter().filter(|s| matches!(s.certification, Certification::Rejected(_))).count() as u64;
    report.summarize("certified_b", b);
    report.summarize("in_e", states.iter().filter(|s| s.in_e()).count() as u64);
    report.summarize("rejected", rejected);
    report.summarize("m_hat_b", b as f64 / c.samples.max(1) as f64);
    if rejected > 0 {
        return Err(CliError::Budget(format!("{rejected} points rejected, e.g. by the Birkhoff budget")));
    }
    Ok(report)
}

fn export_levels(n_values: &[u64], out: &Path) -> Result<(), CliError> {
    let dir = out.join("levels");
    fs::create_dir_all(&dir)?;
    for &n in n_values {
        let precision = if n <= crate::base::EXACT_LIMIT { Precision::Exact } else { Precision::Float };
        let d = level_distribution(&StepLaw::canonical(), n, precision).map_err(ExperimentError::from)?;
        let mut buf = Vec::new();
        d.write_csv(&mut buf)?;
        fs::write(dir.join(format!("levels_n{n}.csv")), buf)?;
    }
    Ok(())
}

/// Runs one parsed invocation and returns its report.
pub fn execute(cli: &Cli) -> Result<ExperimentReport, CliError> {
    let mut r = resolve(&cli.common)?;
    let out = &cli.common.out;
    let m = r.system.start();
    let report = match &cli.command {
        Command::Llt { n_values, levels } => {
            let ns = n_values.clone().or(r.list("n_values")?).unwrap_or_else(|| vec![100, 400, 1600, 6400]);
            r.extra.insert("n_values".into(), join(&ns));
            let levels = *levels || r.get::<bool>("levels")?.unwrap_or(false);
            if levels {
                r.extra.insert("levels".into(), "true".into());
                export_levels(&ns, out)?;
            }
            write_manifest(out, "llt", &r)?;
            llt_curve(&ns)?
        }
        Command::Series { h, n_cap, k_cap } => {
            let h_text = h.clone().or(r.extra.get("h").cloned()).unwrap_or_else(|| "poly:n^5".into());
            let h: GrowthFn = h_text.parse().map_err(|e| CliError::Usage(format!("h: {e}")))?;
            let n_cap = n_cap.or(r.get("n_cap")?).unwrap_or(100);
            let k_cap = k_cap.or(r.get("k_cap")?).unwrap_or(100);
            r.extra.insert("h".into(), h_text);
            r.extra.insert("n_cap".into(), n_cap.to_string());
            r.extra.insert("k_cap".into(), k_cap.to_string());
            write_manifest(out, "series", &r)?;
            series_partial_sums(&h, n_cap, k_cap)?
        }
        Command::EMeasure { n_values, k_cap } => {
            let ns = n_values.clone().or(r.list("n_values")?).unwrap_or_else(|| vec![m, 2 * m, 4 * m]);
            let k_cap = k_cap.or(r.get("k_cap")?).unwrap_or(3);
            r.extra.insert("n_values".into(), join(&ns));
            r.extra.insert("k_cap".into(), k_cap.to_string());
            write_manifest(out, "e-measure", &r)?;
            estimate_e_measure(&r.system, &ns, r.system.samples, k_cap)?
        }
        Command::Triple { n_from, n_to } => {
            let from = n_from.clone().or(r.extra.get("n_from").cloned()).unwrap_or_else(|| "M".into());
            let to =
                n_to.clone().or(r.extra.get("n_to").cloned()).unwrap_or_else(|| format!("M+{}", r.system.horizon - 1));
            let (a, b) = (parse_time(&from, m)?, parse_time(&to, m)?);
            r.extra.insert("n_from".into(), from);
            r.extra.insert("n_to".into(), to);
            write_manifest(out, "triple", &r)?;
            triple_measure_curve(&r.system, a, b)?
        }
        Command::Cesaro { n_max } => {
            let text =
                n_max.clone().or(r.extra.get("n_max").cloned()).unwrap_or_else(|| format!("M+{}", r.system.horizon));
            let n_max = parse_time(&text, m)?;
            r.extra.insert("n_max".into(), text);
            write_manifest(out, "cesaro", &r)?;
            cesaro_trajectory(&r.system, n_max)?
        }
        Command::Entropy { n_values } => {
            let ns = n_values.clone().or(r.list("n_values")?).unwrap_or_else(|| vec![10_000, 100_000, 1_000_000]);
            r.extra.insert("n_values".into(), join(&ns));
            write_manifest(out, "entropy", &r)?;
            entropy_proxy(&r.system, &ns, r.system.samples)?
        }
        Command::Certify { dump } => {
            if let Some(d) = dump {
                r.extra.insert("dump".into(), d.to_string());
            }
            write_manifest(out, "certify", &r)?;
            certify_report(&r, out)?
        }
        Command::Selftest => {
            write_manifest(out, "selftest", &r)?;
            selftest(&r.system)?
        }
    };
    Ok(report)
}

fn join(ns: &[u64]) -> String {
    ns.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

/// Parses `args`, runs, writes the outputs and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    let result = execute(&cli).and_then(|report| {
        report.write_all(&cli.common.out)?;
        write_timing(&cli.common.out, &report.experiment, started.elapsed().as_secs_f64())?;
        Ok(report)
    });
    match result {
        Ok(report) => {
            for a in &report.assertions {
                let tag = if a.passed { "PASS" } else { "FAIL" };
                if a.detail.is_empty() {
                    println!("{tag} {}", a.name);
                } else {
                    println!("{tag} {}: {}", a.name, a.detail);
                }
            }
            println!("{} report written to {}", cli.command.name(), cli.common.out.display());
            if report.all_passed() {
                EXIT_OK
            } else {
                EXIT_ASSERTION
            }
        }
        Err(e) => {
            eprintln!("skewlab {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
