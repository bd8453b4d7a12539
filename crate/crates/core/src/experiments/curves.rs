use serde_json::json;

use super::stats::quantile;
use super::{par_map, stamp, Curve, ExperimentError, ExperimentReport};
use crate::base::{llt_deviation, sample_point, w_mass, Precision, EXACT_LIMIT};
use crate::dynamics::SystemConfig;

/// `M₁ + M₂` in the `W_n` window `|f_n| <= [(M₁+M₂)/2]`.
const W_RADIUS: i64 = 3;

/// Deviation from the Gaussian profile and `m(W_n)` for each `n`, from the level distribution.
pub fn llt_curve(n_values: &[u64]) -> Result<ExperimentReport, ExperimentError> {
    if n_values.is_empty() {
        return Err(ExperimentError::Input("need at least one n".into()));
    }
    let mut report = ExperimentReport::new(
        "llt",
        &["n", "llt_deviation", "w_mass", "sqrt_n_w_mass", "w_ratio_prev", "precision", "exact"],
    );
    report.config.insert("base".into(), "walk".into());
    report.config.insert("n_values".into(), n_values.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
    report.config.insert("w_radius".into(), W_RADIUS.to_string());
    let mut dev_curve = Curve { name: "deviation".into(), points: Vec::new() };
    let mut w_curve = Curve { name: "w_mass".into(), points: Vec::new() };
    let mut rows = Vec::new();
    for &n in n_values {
        let dev = llt_deviation(n)?;
        let w = w_mass(n, W_RADIUS)?;
        rows.push((n, dev, w));
    }
    for (i, &(n, dev, w)) in rows.iter().enumerate() {
        let prev = if i > 0 { json!(w / rows[i - 1].2) } else { serde_json::Value::Null };
        let precision = if n <= EXACT_LIMIT { Precision::Exact } else { Precision::Float };
        report.push_row(vec![
            json!(n),
            json!(dev),
            json!(w),
            json!((n as f64).sqrt() * w),
            prev,
            json!(format!("{precision:?}").to_lowercase()),
            json!(precision == Precision::Exact),
        ]);
        dev_curve.points.push((n as f64, dev));
        w_curve.points.push((n as f64, w));
    }
    report.curves.push(dev_curve);
    report.curves.push(w_curve);

    report.assert("columns strictly positive", rows.iter().all(|r| r.1 > 0.0 && r.2 > 0.0), "");
    let first = rows.first().expect("non-empty");
    let last = rows.last().expect("non-empty");
    if rows.len() > 1 {
        report.assert(
            "deviation decreases",
            last.1 < first.1,
            format!("deviation({}) = {:.3e}, deviation({}) = {:.3e}", last.0, last.1, first.0, first.1),
        );
    }
    // Within any decade, sqrt(n)·m(W_n) may move by at most 20%.
    let mut within = true;
    let mut detail = Vec::new();
    for a in &rows {
        for b in &rows {
            if b.0 > a.0 && b.0 <= 10 * a.0 {
                let r = ((b.0 as f64).sqrt() * b.2) / ((a.0 as f64).sqrt() * a.2);
                if (r - 1.0).abs() > 0.2 {
                    within = false;
                    detail.push(format!("n={}->{}: {r:.4}", a.0, b.0));
                }
            }
        }
    }
    report.assert("m(W_n) proportional to n^(-1/2) within 20% per decade", within, detail.join("; "));
    Ok(report)
}

/// Counts distinct integers in a stream with a bitset that grows around the values seen.
#[derive(Clone, Debug, Default)]
pub struct DistinctCounter {
    lo: i64,
    bits: Vec<u64>,
    count: u64,
}

impl DistinctCounter {
    pub fn new() -> Self {
        DistinctCounter { lo: -64, bits: vec![0; 2], count: 0 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn insert(&mut self, v: i64) {
        let span = (self.bits.len() as i64) * 64;
        if v < self.lo || v >= self.lo + span {
            self.grow(v);
        }
        let off = (v - self.lo) as usize;
        let (w, b) = (off / 64, off % 64);
        if self.bits[w] & (1 << b) == 0 {
            self.bits[w] |= 1 << b;
            self.count += 1;
        }
    }

    fn grow(&mut self, v: i64) {
        let span = (self.bits.len() as i64) * 64;
        let hi = self.lo + span;
        let mut new_lo = self.lo;
        let mut new_hi = hi;
        while v < new_lo || v >= new_hi {
            let width = new_hi - new_lo;
            if v < new_lo {
                new_lo -= width;
            } else {
                new_hi += width;
            }
        }
        let shift_words = ((self.lo - new_lo) / 64) as usize;
        let mut bits = vec![0u64; ((new_hi - new_lo) / 64) as usize];
        bits[shift_words..shift_words + self.bits.len()].copy_from_slice(&self.bits);
        self.bits = bits;
        self.lo = new_lo;
    }
}

/// `a_N(y)/N`, the number of distinct values among `g_0(y), …, g_{N−1}(y)` over `N`, with
/// quantiles over the sampled points.
pub fn entropy_proxy(
    config: &SystemConfig,
    n_values: &[u64],
    samples: u64,
) -> Result<ExperimentReport, ExperimentError> {
    let ns = n_values.to_vec();
    if ns.is_empty() || samples == 0 || ns.contains(&0) {
        return Err(ExperimentError::Input("need N values >= 1 and at least one sample".into()));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::Input("N values must be strictly increasing".into()));
    }
    let n_max = *ns.last().expect("non-empty");
    if n_max > config.budget {
        return Err(ExperimentError::Budget(format!("N = {n_max} exceeds the Birkhoff budget {}", config.budget)));
    }
    let kind = config.base.clone().into_arc();
    let ratios: Vec<Vec<f64>> = par_map(config.workers, 0..samples, |id| {
        let mut point = sample_point(kind.clone(), config.seed, id);
        let mut acc = DistinctCounter::new();
        let mut out = Vec::with_capacity(ns.len());
        let mut next = 0;
        // g_n = 2 f_n, so distinct g values are distinct f values.
        point.visit_sums(n_max, |n, f| {
            acc.insert(f);
            if n + 1 == ns[next] {
                out.push(acc.count() as f64 / ns[next] as f64);
                next = (next + 1).min(ns.len() - 1);
            }
        });
        out
    })?;

    let mut report = ExperimentReport::new("entropy", &["N", "median", "q10", "q90", "min", "max", "mean"]);
    let mut echo = config.clone();
    if echo.m.is_none() {
        echo.validate()?;
    }
    stamp(&mut report, &echo);
    report.config.insert("n_values".into(), ns.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
    report.config.insert("samples".into(), samples.to_string());
    let mut medians = Vec::new();
    let mut curve = Curve { name: "median".into(), points: Vec::new() };
    for (i, &n) in ns.iter().enumerate() {
        let mut col: Vec<f64> = ratios.iter().map(|r| r[i]).collect();
        col.sort_by(f64::total_cmp);
        let med = quantile(&col, 0.5);
        medians.push(med);
        report.push_row(vec![
            json!(n),
            json!(med),
            json!(quantile(&col, 0.1)),
            json!(quantile(&col, 0.9)),
            json!(col[0]),
            json!(col[col.len() - 1]),
            json!(col.iter().sum::<f64>() / col.len() as f64),
        ]);
        curve.points.push((n as f64, med));
    }
    report.curves.push(curve);
    let decreasing_points = ratios.iter().filter(|r| r.windows(2).all(|w| w[1] < w[0])).count();
    let share = decreasing_points as f64 / samples as f64;
    report.summarize("share_of_points_decreasing", share);
    if ns.len() > 1 {
        report.assert("median ratio decreases", medians.windows(2).all(|w| w[1] < w[0]), format!("{medians:?}"));
        report.assert("ratios decrease for >= 95% of points", share >= 0.95, format!("{share:.3}"));
    }
    Ok(report)
}
