use num_traits::ToPrimitive;
use serde_json::json;

use super::{Curve, ExperimentError, ExperimentReport};
use crate::numeric::{gap_bound_threshold, GrowthFn, NumericError};

/// Compensated running sum, so long partial sums do not drift with the summation length.
#[derive(Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Upper bound for `∫₀^∞ ((1+u)^t − 1)^{−1/2} du`, `t > 2`.
///
/// `(tu)^{−1/2}` dominates near 0, a left-endpoint sum on a geometric grid covers the
/// middle (the integrand is decreasing) and `u^{−t/2}` dominates beyond the grid.
pub fn tail_integral(t: f64) -> f64 {
    assert!(t > 2.0, "integral diverges for t <= 2");
    let (delta, upper, ratio) = (1e-8_f64, 1e4_f64, 1.0001_f64);
    let f = |u: f64| ((1.0 + u).powf(t) - 1.0).powf(-0.5);
    let mut acc = Neumaier::default();
    acc.add(2.0 * (delta / t).sqrt());
    let mut u = delta;
    while u < upper {
        let next = (u * ratio).min(upper);
        acc.add(f(u) * (next - u));
        u = next;
    }
    acc.add(upper.powf(1.0 - t / 2.0) / (t / 2.0 - 1.0));
    acc.value()
}

/// `Σ_{n=a}^{b} n^{−s} + b^{1−s}/(s−1)`, an upper bound for `Σ_{n≥a} n^{−s}`, `s > 1`.
fn zeta_tail_bound(a: u64, b: u64, s: f64) -> f64 {
    let mut acc = Neumaier::default();
    for n in a..=b {
        acc.add((n as f64).powf(-s));
    }
    acc.add((b as f64).powf(1.0 - s) / (s - 1.0));
    acc.value()
}

/// The double partial sum `Σ_{n=M₁}^{n_cap} Σ_{k=1}^{k_cap} 1/√(h(n+k) − h(n))`, with a
/// certified tail bound for polynomial `h` of degree `≥ 5` and the `k = 1` sub-sum.
pub fn series_partial_sums(h: &GrowthFn, n_cap: u64, k_cap: u64) -> Result<ExperimentReport, ExperimentError> {
    if n_cap == 0 || k_cap == 0 {
        return Err(ExperimentError::Input("caps must be >= 1".into()));
    }
    let m1 = match h {
        GrowthFn::Polynomial(p) => gap_bound_threshold(p)?.max(h.domain_threshold()?),
        _ => h.domain_threshold()?,
    };
    let mut report = ExperimentReport::new("series", &["n", "row_sum", "cumulative"]);
    report.config.insert("h".into(), h.to_string());
    report.config.insert("n_cap".into(), n_cap.to_string());
    report.config.insert("k_cap".into(), k_cap.to_string());
    report.summarize("m1", m1);
    if n_cap < m1 {
        return Err(ExperimentError::Input(format!("n cap {n_cap} is below the threshold M1 = {m1}")));
    }

    let values: Vec<i128> = (m1..=n_cap + k_cap).map(|n| h.eval(n).map(|v| v.0)).collect::<Result<_, _>>()?;
    let at = |n: u64| values[(n - m1) as usize];
    let mut total = Neumaier::default();
    let mut k1 = Neumaier::default();
    let mut gap2_terms = 0u64;
    let mut curve = Curve { name: "cumulative".into(), points: Vec::new() };
    for n in m1..=n_cap {
        let mut row = Neumaier::default();
        for k in 1..=k_cap {
            let gap = at(n + k) - at(n);
            if gap <= 0 {
                return Err(NumericError::NonPositiveGap { n, k, gap }.into());
            }
            let term = 1.0 / (gap as f64).sqrt();
            row.add(term);
            if k == 1 {
                k1.add(term);
                gap2_terms += u64::from(gap == 2);
            }
        }
        total.add(row.value());
        report.push_row(vec![json!(n), json!(row.value()), json!(total.value())]);
        curve.points.push((n as f64, total.value()));
    }
    report.curves.push(curve);
    let partial = total.value();
    report.summarize("partial_sum", partial);
    report.summarize("k1_subsum", k1.value());
    report.summarize("k1_terms_with_gap_2", gap2_terms);

    match h {
        GrowthFn::Polynomial(p) if p.degree() >= 5 => {
            let t = p.degree() as f64;
            let a = p.leading() as f64;
            let (big_n, big_k) = (n_cap as f64, k_cap as f64);
            let mut region_a = Neumaier::default();
            for n in m1..=n_cap {
                let n = n as f64;
                let c = 1.0 - (n / (n + big_k)).powf(t);
                region_a.add(c.powf(-0.5) * (n + big_k).powf(1.0 - t / 2.0) / (t / 2.0 - 1.0));
            }
            let region_b = tail_integral(t) * big_n.powf(2.0 - t / 2.0) / (t / 2.0 - 2.0);
            let tail = (2.0 / a).sqrt() * (region_a.value() + region_b);
            let s = t / 4.0;
            let comparison = (zeta_tail_bound(m1, n_cap, s) * zeta_tail_bound(1, k_cap, s)) / (a * t).sqrt();
            report.summarize("tail_bound", tail);
            report.summarize("total_bound", partial + tail);
            report.summarize("tail_integral", tail_integral(t));
            report.summarize("comparison_bound", comparison);
            report.assert("total bound finite", (partial + tail).is_finite(), "");
            report.notes.push(
                "tail_bound: gap >= (a/2)((n+k)^t - n^t) from M1 on, summed over k > k_cap for n <= n_cap and over all k for n > n_cap".into(),
            );
            report.notes.push(
                "comparison_bound: (1/sqrt(a t)) (sum n^(-t/4)) (sum k^(-t/4)) with integral-test closure".into(),
            );
        }
        GrowthFn::Polynomial(_) => {
            report.notes.push("degree below 5: no tail bound".into());
        }
        GrowthFn::QuarticLog(s) => {
            let s = s.to_f64().unwrap_or(f64::NAN);
            let mut acc = Neumaier::default();
            for k in 1..=k_cap {
                acc.add(1.0 / (k as f64 * ((m1 + k) as f64).ln().powf(s / 2.0)));
            }
            report.summarize("comparison_chain_at_cap", 2.0 * 2f64.sqrt() * acc.value());
            if s <= 2.0 {
                report.notes.push(format!("s = {s} <= 2: partial sums only, no convergence claim"));
            }
        }
        GrowthFn::RemarkCounterexample => {
            report.notes.push("divergence certificate: every even n contributes exactly 1/sqrt(2) at k = 1".into());
        }
        GrowthFn::PowerFloor(_) => {}
    }
    Ok(report)
}
