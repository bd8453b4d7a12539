//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any fails.

use std::time::{Duration, Instant};

use clap::Parser;
use skewlab::cli::{execute, Cli};
use skewlab::dynamics::SystemConfig;
use skewlab::experiments::{
    cesaro_trajectory, conjugacy_sweep, entropy_proxy, estimate_e_measure, first_odd_parity, llt_curve,
    series_partial_sums, triple_measure_curve, ExperimentReport,
};
use skewlab::numeric::GrowthFn;
use skewlab::perm::FSet;

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get()).min(8)
}

fn base_config() -> SystemConfig {
    SystemConfig { workers: workers(), ..SystemConfig::default() }
}

fn dichotomy_config() -> SystemConfig {
    SystemConfig {
        m: Some(2),
        horizon: 30,
        f: "list:2,4,7".parse().unwrap(),
        samples: 640,
        omega_per_point: 64,
        ..base_config()
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn summary_f64(r: &ExperimentReport, key: &str) -> f64 {
    r.summary.get(key).and_then(|v| v.as_f64()).unwrap_or(f64::NAN)
}

fn criteria_1_to_3(out: &mut Vec<Line>) {
    let c = dichotomy_config();
    let m = 2;
    let (r, took) = timed(|| triple_measure_curve(&c, m, m + 29));
    let r = match r {
        Ok(r) => r,
        Err(e) => {
            for id in ["1", "2", "3"] {
                out.push(Line { id, pass: false, detail: format!("run failed: {e}") });
            }
            return;
        }
    };
    let certified = r.summary["certified_b"].as_u64().unwrap_or(0);
    let ns = r.column_f64("n");
    let hits = r.column_f64("hits");
    let f_hits: f64 = ns.iter().zip(&hits).filter(|(n, _)| c.f.contains(**n as u64)).map(|(_, h)| h).sum();
    let pass1 = certified >= 200 && f_hits == 0.0 && took < Duration::from_secs(120);
    out.push(Line {
        id: "1",
        pass: pass1,
        detail: format!(
            "{certified} certified-B points x {} omegas, triple indicator hits on F = {f_hits}, {:.1}s",
            c.omega_per_point,
            took.as_secs_f64()
        ),
    });

    let plateau = r.assertion("plateau within 3 Wilson sigma of m_hat(B)/2").is_some_and(|a| a.passed);
    let off_f = ns.iter().filter(|n| !c.f.contains(**n as u64)).count();
    out.push(Line {
        id: "2",
        pass: plateau && off_f == 27,
        detail: format!(
            "{off_f} n outside F, reference m_hat(B)/2 = {:.4}; {}",
            summary_f64(&r, "reference_m_hat_b_over_2"),
            r.assertion("plateau within 3 Wilson sigma of m_hat(B)/2").map_or(String::new(), |a| a.detail.clone())
        ),
    });

    let cc = r.summary["complement_checks"].as_u64().unwrap_or(0);
    let cf = r.summary["complement_failures"].as_u64().unwrap_or(1);
    let oc = r.summary["coordinate_checks"].as_u64().unwrap_or(0);
    let of = r.summary["coordinate_failures"].as_u64().unwrap_or(1);
    out.push(Line {
        id: "3",
        pass: cc >= 10_000 && cf == 0 && oc > 0 && of == 0,
        detail: format!("complement: {cf} failures in {cc} samples; shared coordinate: {of} failures in {oc} samples"),
    });
}

fn criterion_4(out: &mut Vec<Line>) {
    let c = SystemConfig { m: Some(2), horizon: 12, f: FSet::dyadic(), ..base_config() };
    let detail;
    let pass = match conjugacy_sweep(&c, 1000) {
        Ok(t) => {
            detail = format!(
                "{} decided, {} mismatches, {} undecided (rate {:.3})",
                t.checked,
                t.failed,
                t.undecided,
                t.undecided_rate()
            );
            t.failed == 0 && t.checked + t.undecided == 1000 && t.undecided_rate() < 0.5
        }
        Err(e) => {
            detail = format!("run failed: {e}");
            false
        }
    };
    out.push(Line { id: "4", pass, detail });
}

fn criterion_5(out: &mut Vec<Line>) {
    // Block family [2·2^k, 3·2^k) at N max = 96: the dyadic family would need N max = 2048.
    let c = SystemConfig {
        p1: "n^5".parse().unwrap(),
        p2: "n^5".parse().unwrap(),
        m: Some(2),
        horizon: 94,
        f: "blocks:2,2,3".parse().unwrap(),
        samples: 60,
        ..base_config()
    };
    let (r, took) = timed(|| cesaro_trajectory(&c, 96));
    let r = match r {
        Ok(r) => r,
        Err(e) => {
            out.push(Line { id: "5", pass: false, detail: format!("run failed: {e}") });
            return;
        }
    };
    let m_b = summary_f64(&r, "m_hat_b");
    // Oracle: |[M, N-1] \ F| / N by direct count.
    let density = |big_n: u64| (2..big_n).filter(|&n| !(n >= 2 && c.f.contains(n))).count() as f64 / big_n as f64;
    let mut pass = took < Duration::from_secs(300) && m_b > 0.0;
    let mut parts = Vec::new();
    let ns = r.column_f64("N");
    let dens = r.column_f64("oracle_density");
    for (k, (n1, n2)) in [(3, (16u64, 24u64)), (4, (32, 48)), (5, (64, 96))] {
        let diff = summary_f64(&r, &format!("diff_{n1}_{n2}"));
        let matched = r.assertion(&format!("block {n1}->{n2} matches density oracle")).is_some_and(|a| a.passed);
        let oracle_ok = [n1, n2].iter().all(|&n| {
            let i = ns.iter().position(|&x| x == n as f64);
            i.is_some_and(|i| (dens[i] - density(n)).abs() < 1e-15)
        });
        let gap = diff.abs() > 0.05 * m_b;
        pass &= gap && matched && oracle_ok;
        parts.push(format!(
            "k={k} ({n1},{n2}): |diff| = {:.4} vs {:.4}, oracle {:.4}->{:.4}{}",
            diff.abs(),
            0.05 * m_b,
            density(n1),
            density(n2),
            if matched { "" } else { " MISMATCH" }
        ));
    }
    out.push(Line {
        id: "5",
        pass,
        detail: format!("m_hat(B) = {m_b:.3}; {}; {:.1}s", parts.join("; "), took.as_secs_f64()),
    });
}

fn criteria_6_7(out: &mut Vec<Line>) {
    let ((r, odd), took) = timed(|| (llt_curve(&[100, 400, 1600, 6400]), first_odd_parity(1000)));
    match (r, odd) {
        (Ok(r), Ok(odd)) => {
            let d = r.column_f64("llt_deviation");
            let decreasing = d.windows(2).all(|w| w[1] < w[0]);
            out.push(Line {
                id: "6",
                pass: decreasing && d[3] < 0.05 && odd.is_none() && took < Duration::from_secs(30),
                detail: format!(
                    "deviation {:.3e} {:.3e} {:.3e} {:.3e}; odd-parity mass zero for all n <= 1000: {}; {:.1}s",
                    d[0],
                    d[1],
                    d[2],
                    d[3],
                    odd.is_none(),
                    took.as_secs_f64()
                ),
            });
            let w = r.column_f64("w_mass");
            let ratios: Vec<f64> = w.windows(2).map(|p| p[1] / p[0]).collect();
            out.push(Line {
                id: "7",
                pass: ratios.iter().all(|x| (0.4..=0.6).contains(x)) && took < Duration::from_secs(30),
                detail: format!(
                    "m(W_4n)/m(W_n) for n = 100, 400, 1600: {:.5} {:.5} {:.5}",
                    ratios[0], ratios[1], ratios[2]
                ),
            });
        }
        (r, odd) => {
            let why = format!("{:?} {:?}", r.err(), odd.err());
            out.push(Line { id: "6", pass: false, detail: why.clone() });
            out.push(Line { id: "7", pass: false, detail: why });
        }
    }
}

fn criterion_8(out: &mut Vec<Line>) {
    let c = SystemConfig { horizon: 10, ..base_config() };
    let (r, took) = timed(|| estimate_e_measure(&c, &[2, 4, 8], 2000, 3));
    let r = match r {
        Ok(r) => r,
        Err(e) => {
            out.push(Line { id: "8", pass: false, detail: format!("run failed: {e}") });
            return;
        }
    };
    let est = r.column_f64("estimate");
    let lo = r.column_f64("ci_lo");
    let hi = r.column_f64("ci_hi");
    let mut pass = took < Duration::from_secs(180);
    for i in 0..est.len() - 1 {
        let width = (hi[i] - lo[i]).max(hi[i + 1] - lo[i + 1]);
        pass &= est[i + 1] >= est[i] - 2.0 * width;
    }
    out.push(Line {
        id: "8",
        pass,
        detail: format!(
            "E_N^(H=10,k_cap=3) at N = 2, 4, 8: {:.4} {:.4} {:.4} (95% half-width <= {:.4}); {:.1}s",
            est[0],
            est[1],
            est[2],
            r.column_f64("ci_half_width").iter().cloned().fold(0.0, f64::max),
            took.as_secs_f64()
        ),
    });
}

fn criterion_9(out: &mut Vec<Line>) {
    let h = GrowthFn::Polynomial("n^5".parse().unwrap());
    let (res, took) = timed(|| {
        let a = series_partial_sums(&h, 1000, 1000)?;
        let b = series_partial_sums(&h, 2000, 2000)?;
        let rc = series_partial_sums(&GrowthFn::RemarkCounterexample, 2001, 1)?;
        Ok::<_, skewlab::experiments::ExperimentError>((a, b, rc))
    });
    match res {
        Ok((a, b, rc)) => {
            let (ta, tb) = (summary_f64(&a, "total_bound"), summary_f64(&b, "total_bound"));
            let change = (tb - ta).abs() / ta;
            let sub = summary_f64(&rc, "k1_subsum");
            out.push(Line {
                id: "9",
                pass: ta.is_finite() && tb.is_finite() && change < 0.01 && sub > 500.0 && took < Duration::from_secs(10),
                detail: format!(
                    "n^5 total bound {ta:.6} -> {tb:.6} on doubling caps ({:.2}%); remark k=1 sub-sum over n <= 2001 = {sub:.3}; {:.1}s",
                    100.0 * change,
                    took.as_secs_f64()
                ),
            });
        }
        Err(e) => out.push(Line { id: "9", pass: false, detail: format!("run failed: {e}") }),
    }
}

fn criterion_10(out: &mut Vec<Line>) {
    let c = base_config();
    let (r, took) = timed(|| entropy_proxy(&c, &[10_000, 100_000, 1_000_000], 100));
    match r {
        Ok(r) => {
            let med = r.column_f64("median");
            out.push(Line {
                id: "10",
                pass: med.windows(2).all(|w| w[1] < w[0]) && med[2] < 0.05 && took < Duration::from_secs(120),
                detail: format!(
                    "median a_N/N at N = 1e4, 1e5, 1e6: {:.5} {:.5} {:.5}; {:.1}s",
                    med[0],
                    med[1],
                    med[2],
                    took.as_secs_f64()
                ),
            });
        }
        Err(e) => out.push(Line { id: "10", pass: false, detail: format!("run failed: {e}") }),
    }
}

fn cli_bytes(args: &[&str]) -> Result<(String, Vec<u8>), String> {
    let cli = Cli::try_parse_from(args).map_err(|e| e.to_string())?;
    let r = execute(&cli).map_err(|e| e.to_string())?;
    let mut csv = Vec::new();
    r.write_csv(&mut csv).map_err(|e| e.to_string())?;
    Ok((r.to_json(), csv))
}

fn criterion_11(out: &mut Vec<Line>) {
    let dir = tempfile::tempdir().expect("temp dir");
    let runs: [(&str, Vec<&str>); 4] = [
        ("triple", vec!["triple", "--m", "2", "--horizon", "30", "--f", "list:2,4,7", "--samples", "640"]),
        ("e-measure", vec!["e-measure", "--horizon", "10", "--n", "2,4,8", "--samples", "2000"]),
        ("entropy", vec!["entropy", "--samples", "100"]),
        ("series", vec!["series", "--n-cap", "1000", "--k-cap", "1000"]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, args) in runs {
        let first = dir.path().join(format!("{name}-1"));
        let second = dir.path().join(format!("{name}-2"));
        let (f, s) = (first.to_str().unwrap().to_string(), second.to_str().unwrap().to_string());
        let manifest = first.join("manifest.conf");
        let mut a1 = vec!["skewlab"];
        a1.extend(&args);
        a1.extend(["--workers", "1", "--out", &f]);
        let one = cli_bytes(&a1);
        let m = manifest.to_str().unwrap().to_string();
        let two = cli_bytes(&["skewlab", args[0], "--config", &m, "--workers", "3", "--out", &s]);
        let same = matches!((&one, &two), (Ok(a), Ok(b)) if a == b);
        pass &= same;
        parts.push(format!("{name}: {}", if same { "identical" } else { "DIFFERENT" }));
    }
    out.push(Line { id: "11", pass, detail: format!("manifest rerun, 1 vs 3 workers: {}", parts.join(", ")) });
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let started = Instant::now();
    let mut lines = Vec::new();
    criteria_1_to_3(&mut lines);
    criterion_4(&mut lines);
    criterion_5(&mut lines);
    criteria_6_7(&mut lines);
    criterion_8(&mut lines);
    criterion_9(&mut lines);
    criterion_10(&mut lines);
    criterion_11(&mut lines);
    let mut failed = 0;
    for l in &lines {
        if !l.pass {
            failed += 1;
        }
        println!("{} criterion {:>2}: {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.detail);
    }
    println!("acceptance: {} passed, {failed} failed ({:.1}s)", lines.len() - failed, started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
