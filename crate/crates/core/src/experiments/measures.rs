use serde_json::{json, Value};

use super::stats::{mean_and_se, Proportion, Z95};
use super::{check_budget, par_map, stamp, Curve, ExperimentError, ExperimentReport};
use crate::dynamics::{omega_for, sample_state, triple_indicator, Certification, SystemConfig};

/// Sigma multiple for the plateau and Cesàro comparisons.
const PLATEAU_Z: f64 = 3.0;

fn frac(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

struct ETally {
    in_e: bool,
    zero: bool,
    rejected: bool,
    /// Per lag `k`, the number of `(n, j)` with `g_{p_j(n)} = g_{p_j(n+k)}`.
    lag_collisions: Vec<u64>,
}

/// Horizon-relative `m(E_N)`: the fraction of points whose `g_{p_j(n)}`, `n ∈ [N, N+H−1]`,
/// are nonzero and pairwise distinct, with the `F_{n,k}` collision counts for `k ≤ k_cap`.
pub fn estimate_e_measure(
    config: &SystemConfig,
    n_values: &[u64],
    samples: u64,
    k_cap: u64,
) -> Result<ExperimentReport, ExperimentError> {
    if n_values.is_empty() || samples == 0 {
        return Err(ExperimentError::Input("need at least one N and one sample".into()));
    }
    let mut cols =
        vec!["N", "in_e", "samples", "estimate", "ci_half_width", "ci_lo", "ci_hi", "zero_fraction", "rejected"];
    let lag_names: Vec<String> = (1..=k_cap).map(|k| format!("collisions_k{k}")).collect();
    cols.extend(lag_names.iter().map(String::as_str));
    let mut report = ExperimentReport::new("e-measure", &cols);
    let mut base = config.clone();
    base.validate()?;
    stamp(&mut report, &base);
    report.config.insert("n_values".into(), n_values.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
    report.config.insert("k_cap".into(), k_cap.to_string());
    report.config.insert("samples".into(), samples.to_string());
    report.summarize("label", format!("E_N^(H={},k_cap={k_cap})", base.horizon));
    report.notes.push(
        "horizon-relative: only n in [N, N+H-1] are checked, so the estimate is an upper bound for the true measure"
            .into(),
    );

    let kind = base.base.clone().into_arc();
    let mut props = Vec::new();
    let mut curve = Curve { name: "estimate".into(), points: Vec::new() };
    for &big_n in n_values {
        let mut c = base.clone();
        c.m = Some(big_n);
        c.eta = crate::dynamics::Eta::Full;
        c.validate()?;
        check_budget(&c)?;
        let h = c.horizon as usize;
        let tallies = par_map(c.workers, 0..samples, |id| {
            let s = sample_state(&c, &kind, id);
            let zero = s.g1.iter().chain(&s.g2).any(|&g| g == 0);
            let mut lag = vec![0u64; k_cap as usize];
            for (k, slot) in lag.iter_mut().enumerate() {
                let k = k + 1;
                for g in [&s.g1, &s.g2] {
                    *slot += (0..h.saturating_sub(k)).filter(|&i| g[i] == g[i + k]).count() as u64;
                }
            }
            ETally {
                in_e: s.in_e(),
                zero,
                rejected: matches!(s.certification, Certification::Rejected(_)),
                lag_collisions: lag,
            }
        })?;
        let hits = tallies.iter().filter(|t| t.in_e).count() as u64;
        let zeros = tallies.iter().filter(|t| t.zero).count() as u64;
        let rejected = tallies.iter().filter(|t| t.rejected).count() as u64;
        let p = Proportion::new(hits, samples - rejected);
        let (lo, hi) = p.wilson(Z95);
        let mut row = vec![
            json!(big_n),
            json!(hits),
            json!(samples - rejected),
            frac(p.estimate()),
            frac(p.half_width(Z95)),
            json!(lo),
            json!(hi),
            frac(zeros as f64 / samples as f64),
            json!(rejected),
        ];
        for k in 0..k_cap as usize {
            row.push(json!(tallies.iter().map(|t| t.lag_collisions[k]).sum::<u64>()));
        }
        report.push_row(row);
        curve.points.push((big_n as f64, p.estimate()));
        props.push((big_n, p));
    }
    report.curves.push(curve);

    let mut monotone = true;
    let mut detail = Vec::new();
    for w in props.windows(2) {
        let (n0, a) = w[0];
        let (n1, b) = w[1];
        let width = 2.0 * a.half_width(Z95).max(b.half_width(Z95));
        let ok = b.estimate() >= a.estimate() - 2.0 * width;
        monotone &= ok;
        detail.push(format!(
            "N={n0}->{n1}: {:.4} -> {:.4} (2 widths = {:.4})",
            a.estimate(),
            b.estimate(),
            2.0 * width
        ));
    }
    report.assert("nondecreasing within 2 CI widths", monotone, detail.join("; "));
    let bounded = props.iter().all(|(_, p)| (0.0..=1.0).contains(&p.estimate()));
    report.assert("fractions in [0,1]", bounded, "");
    Ok(report)
}

struct TripleTally {
    in_b: bool,
    /// Triple-indicator hits per `n` in the requested range, summed over omegas.
    hits: Vec<u64>,
    complement_checks: u64,
    complement_failures: u64,
    coordinate_checks: u64,
    coordinate_failures: u64,
}

fn triple_tally(
    config: &SystemConfig,
    kind: &std::sync::Arc<crate::base::BaseKind>,
    id: u64,
    ns: &[u64],
) -> TripleTally {
    let s = sample_state(config, kind, id);
    let mut t = TripleTally {
        in_b: s.in_b(),
        hits: vec![0; ns.len()],
        complement_checks: 0,
        complement_failures: 0,
        coordinate_checks: 0,
        coordinate_failures: 0,
    };
    if !s.in_b() {
        return t;
    }
    for j in 0..config.omega_per_point {
        let omega = omega_for(config, id, j);
        for (slot, &n) in ns.iter().enumerate() {
            let tr = s.t_read(&omega, n).expect("n within horizon");
            let sr = s.s_read(&omega, n).expect("n within horizon");
            if config.f.contains(n) {
                t.complement_checks += 1;
                t.complement_failures += u64::from(sr.bit == tr.bit);
            } else {
                t.coordinate_checks += 1;
                t.coordinate_failures += u64::from(sr.coordinate != tr.coordinate);
            }
            t.hits[slot] += u64::from(triple_indicator(&s, &omega, n).expect("n within horizon"));
        }
    }
    t
}

fn sampled_tallies(config: &SystemConfig, ns: &[u64]) -> Result<Vec<TripleTally>, ExperimentError> {
    check_budget(config)?;
    let kind = config.base.clone().into_arc();
    par_map(config.workers, 0..config.samples, |id| triple_tally(config, &kind, id, ns))
}

fn check_range(config: &SystemConfig, from: u64, to: u64) -> Result<(), ExperimentError> {
    if from > to || from < config.start() || to > config.last() {
        return Err(ExperimentError::Input(format!(
            "n range [{from}, {to}] is not inside the horizon [{}, {}]",
            config.start(),
            config.last()
        )));
    }
    Ok(())
}

/// `m(A₁ ∩ T^{−p₁(n)}A₂ ∩ S^{−p₂(n)}A₂)` for `n ∈ [n_from, n_to]`: exactly 0 on `F`, and
/// compared against `m̂(B)/2` off `F`.
pub fn triple_measure_curve(
    config: &SystemConfig,
    n_from: u64,
    n_to: u64,
) -> Result<ExperimentReport, ExperimentError> {
    let mut config = config.clone();
    config.validate()?;
    check_range(&config, n_from, n_to)?;
    let ns: Vec<u64> = (n_from..=n_to).collect();
    let tallies = sampled_tallies(&config, &ns)?;

    let mut report = ExperimentReport::new(
        "triple",
        &[
            "n",
            "in_f",
            "hits",
            "trials",
            "estimate",
            "exact",
            "reference",
            "ci_half_width",
            "wilson3_lo",
            "wilson3_hi",
            "undecided",
            "status",
        ],
    );
    stamp(&mut report, &config);
    report.config.insert("n_from".into(), n_from.to_string());
    report.config.insert("n_to".into(), n_to.to_string());

    let points = config.samples;
    let trials = points * config.omega_per_point;
    let b = Proportion::new(tallies.iter().filter(|t| t.in_b).count() as u64, points);
    let reference = b.estimate() / 2.0;
    report.summarize("points", points);
    report.summarize("certified_b", b.successes);
    report.summarize("m_hat_b", frac(b.estimate()));
    report.summarize("m_hat_b_ci_half_width", frac(b.half_width(Z95)));
    report.summarize("reference_m_hat_b_over_2", frac(reference));

    let mut zero_ok = true;
    let mut plateau_ok = true;
    let mut self_consistent = true;
    let mut plateau_misses = Vec::new();
    let mut curve = Curve { name: "estimate".into(), points: Vec::new() };
    for (slot, &n) in ns.iter().enumerate() {
        let hits: u64 = tallies.iter().map(|t| t.hits[slot]).sum();
        let p = Proportion::new(hits, trials);
        let (lo3, hi3) = p.wilson(PLATEAU_Z);
        let in_f = config.f.contains(n);
        let (exact, status) = if in_f {
            zero_ok &= hits == 0;
            self_consistent &= p.estimate() <= 4.0 * p.half_width(Z95);
            (json!(0), if hits == 0 { "zero" } else { "VIOLATION" })
        } else {
            let ok = (lo3..=hi3).contains(&reference);
            plateau_ok &= ok;
            if !ok {
                plateau_misses.push(n);
            }
            (Value::Null, if ok { "plateau" } else { "outside-3sigma" })
        };
        report.push_row(vec![
            json!(n),
            json!(in_f),
            json!(hits),
            json!(trials),
            frac(p.estimate()),
            exact,
            if in_f { json!(0) } else { frac(reference) },
            frac(p.half_width(Z95)),
            json!(lo3),
            json!(hi3),
            json!(0),
            json!(status),
        ]);
        curve.points.push((n as f64, p.estimate()));
    }
    report.curves.push(curve);

    let cc: u64 = tallies.iter().map(|t| t.complement_checks).sum();
    let cf: u64 = tallies.iter().map(|t| t.complement_failures).sum();
    let oc: u64 = tallies.iter().map(|t| t.coordinate_checks).sum();
    let of: u64 = tallies.iter().map(|t| t.coordinate_failures).sum();
    report.summarize("complement_checks", cc);
    report.summarize("complement_failures", cf);
    report.summarize("coordinate_checks", oc);
    report.summarize("coordinate_failures", of);

    report.assert("zero branch exact on F", zero_ok, "triple indicator must vanish for every sample at n in F");
    report.assert(
        "plateau within 3 Wilson sigma of m_hat(B)/2",
        plateau_ok,
        if plateau_misses.is_empty() {
            format!("all {} n outside F inside the band", ns.iter().filter(|&&n| !config.f.contains(n)).count())
        } else {
            format!("outside at n = {plateau_misses:?}")
        },
    );
    report.assert("complement identity on F", cf == 0, format!("{cf} failures in {cc} checks"));
    report.assert("shared coordinate off F", of == 0, format!("{of} failures in {oc} checks"));
    report.assert("estimates within 4 CI half-widths of exact values", self_consistent, "");
    Ok(report)
}

/// Running averages `Ā(N) = (1/N) Σ_{M ≤ n < N}` of the sample-mean triple indicator, for
/// `N ∈ [M+1, n_max]`, with block endpoints of `F` highlighted and compared with the
/// density of `[M, N−1] \ F`.
pub fn cesaro_trajectory(config: &SystemConfig, n_max: u64) -> Result<ExperimentReport, ExperimentError> {
    let mut config = config.clone();
    config.validate()?;
    let m = config.start();
    if n_max <= m || n_max - 1 > config.last() {
        return Err(ExperimentError::Input(format!(
            "N max = {n_max} needs M < N max and N max - 1 <= M + H - 1 = {}",
            config.last()
        )));
    }
    let ns: Vec<u64> = (m..n_max).collect();
    let tallies = sampled_tallies(&config, &ns)?;
    let omegas = config.omega_per_point as f64;
    let points = config.samples;
    let b = Proportion::new(tallies.iter().filter(|t| t.in_b).count() as u64, points);
    let c = b.estimate() / 2.0;

    // Per-point averages Y_p(N) = (1/(N·Ω)) Σ_{n<N} hits_p(n); points are i.i.d.
    let per_point: Vec<Vec<f64>> = tallies
        .iter()
        .map(|t| {
            let mut acc = 0u64;
            let mut out = Vec::with_capacity(ns.len());
            for (i, h) in t.hits.iter().enumerate() {
                acc += h;
                let big_n = m + i as u64 + 1;
                out.push(acc as f64 / (big_n as f64 * omegas));
            }
            out
        })
        .collect();
    let density = |big_n: u64| (big_n - m - config.f.count_in(m, big_n - 1)) as f64 / big_n as f64;

    let pairs = config.f.block_pairs(n_max);
    let role = |big_n: u64| {
        if pairs.iter().any(|p| p.0 == big_n) {
            "block-start"
        } else if pairs.iter().any(|p| p.1 == big_n) {
            "block-end"
        } else {
            ""
        }
    };
    let mut report =
        ExperimentReport::new("cesaro", &["N", "abar", "ci_half_width", "oracle_density", "predicted", "highlight"]);
    stamp(&mut report, &config);
    report.config.insert("n_max".into(), n_max.to_string());
    report.summarize("m_hat_b", frac(b.estimate()));
    report.summarize("certified_b", b.successes);
    let mut curve = Curve { name: "abar".into(), points: Vec::new() };
    for (i, &n) in ns.iter().enumerate() {
        let big_n = n + 1;
        let ys: Vec<f64> = per_point.iter().map(|v| v[i]).collect();
        let (mean, se) = mean_and_se(&ys);
        report.push_row(vec![
            json!(big_n),
            frac(mean),
            frac(Z95 * se),
            json!(density(big_n)),
            frac(c * density(big_n)),
            json!(role(big_n)),
        ]);
        curve.points.push((big_n as f64, mean));
    }
    report.curves.push(curve);

    // For a pair (N1, N2) the residual R_p = Y_p(N2) − Y_p(N1) − 1_B(p)·Δdensity/2 has mean
    // zero under the dichotomy, so its sample mean is tested against its own standard error.
    for &(n1, n2) in &pairs {
        if n1 <= m {
            continue;
        }
        let (i1, i2) = ((n1 - m - 1) as usize, (n2 - m - 1) as usize);
        let dd = density(n2) - density(n1);
        let resid: Vec<f64> =
            per_point.iter().zip(&tallies).map(|(y, t)| y[i2] - y[i1] - if t.in_b { dd / 2.0 } else { 0.0 }).collect();
        let (r_mean, r_se) = mean_and_se(&resid);
        let diff = per_point.iter().map(|y| y[i2] - y[i1]).sum::<f64>() / points as f64;
        let match_ok = r_mean.abs() <= PLATEAU_Z * r_se;
        report.summarize(&format!("diff_{n1}_{n2}"), frac(diff));
        report.summarize(&format!("predicted_diff_{n1}_{n2}"), frac(c * dd));
        report.assert(
            &format!("block {n1}->{n2} matches density oracle"),
            match_ok,
            format!(
                "abar({n2}) - abar({n1}) = {diff:.5}, predicted {:.5}; residual {r_mean:.5} vs {PLATEAU_Z}*se = {:.5}",
                c * dd,
                PLATEAU_Z * r_se
            ),
        );
    }
    Ok(report)
}
