//! Pass/fail evaluation of experiment tables against `Thresholds`.

use std::fmt;

use super::{EstimateReport, Thresholds};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

fn list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", ")
}

fn band(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, 0.0), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Every ratio finite, and positive wherever the data are nonzero.
pub fn check_energy(rows: &[EstimateReport]) -> Vec<Check> {
    let bad: Vec<&str> = rows
        .iter()
        .filter(|r| !r.ratio.is_finite() || (r.rhs > 0.0 && !(r.ratio > 0.0)))
        .map(|r| r.id.as_str())
        .collect();
    let (lo, hi) = band(rows.iter().map(|r| r.ratio));
    vec![Check::new(
        "energy ratios finite",
        bad.is_empty(),
        format!("{} cases, ratio in [{lo:.4e}, {hi:.4e}], bad: {bad:?}", rows.len()),
    )]
}

pub fn check_difference(rows: &[EstimateReport]) -> Vec<Check> {
    let finite = rows
        .iter()
        .all(|r| r.ratio.is_finite() && r.param("ratio_data").is_some_and(f64::is_finite));
    let (lo, hi) = band(rows.iter().map(|r| r.ratio));
    vec![Check::new(
        "difference ratios finite",
        finite,
        format!("ratio in [{lo:.4e}, {hi:.4e}]"),
    )]
}

/// Rows ordered by decreasing `t`, one per decade.
pub fn check_stability(rows: &[EstimateReport], th: &Thresholds) -> Vec<Check> {
    let mut rows: Vec<&EstimateReport> = rows.iter().collect();
    rows.sort_by(|a, b| b.param("t").unwrap_or(0.0).total_cmp(&a.param("t").unwrap_or(0.0)));
    let lhs: Vec<f64> = rows.iter().map(|r| r.lhs).collect();
    let monotone = lhs
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + th.stability_monotone_slack));
    let steps: Vec<f64> = rows
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].ratio, w[1].ratio);
            let decades = (w[0].param("t").unwrap_or(1.0) / w[1].param("t").unwrap_or(1.0))
                .log10()
                .max(1.0);
            (a.max(b) / a.min(b)).powf(1.0 / decades)
        })
        .collect();
    let worst = steps.iter().cloned().fold(1.0, f64::max);
    let banded = steps.iter().all(|s| s.is_finite()) && worst < th.stability_decade_band;
    vec![
        Check::new(
            "stability lhs -> 0 monotonically",
            monotone && lhs.last().is_some_and(|&l| l < lhs[0]),
            format!("lhs = [{}]", list(&lhs)),
        ),
        Check::new(
            "stability ratio per decade",
            banded,
            format!("max factor per decade {worst:.3e} (limit {})", th.stability_decade_band),
        ),
    ]
}

/// Rows with `k_a == 1` must have (numerically) zero `lhs`; the others must
/// keep their ratios within the comparison band.
pub fn check_comparison(rows: &[EstimateReport], th: &Thresholds) -> Vec<Check> {
    let (unit, rest): (Vec<&EstimateReport>, Vec<&EstimateReport>) =
        rows.iter().partition(|r| r.param("k_a") == Some(1.0));
    let exact = unit.iter().all(|r| r.lhs <= th.solver_tol);
    let worst_unit = unit.iter().map(|r| r.lhs).fold(0.0, f64::max);
    let (lo, hi) = band(rest.iter().map(|r| r.ratio));
    let spread = hi / lo;
    vec![
        Check::new(
            "comparison exact at K_A = 1",
            exact,
            format!(
                "{} rows, max lhs {worst_unit:.3e} (limit {:e})",
                unit.len(),
                th.solver_tol
            ),
        ),
        Check::new(
            "comparison ratio band",
            rest.len() >= 2 && spread.is_finite() && spread < th.comparison_band,
            format!(
                "ratio in [{lo:.4e}, {hi:.4e}], max/min {spread:.3e} (limit {})",
                th.comparison_band
            ),
        ),
    ]
}

pub fn check_uniqueness(rows: &[EstimateReport], th: &Thresholds) -> Vec<Check> {
    let sup = rows.iter().map(|r| r.lhs).fold(0.0, f64::max);
    let mut by_eps: Vec<&EstimateReport> = rows.iter().collect();
    by_eps.sort_by(|a, b| b.param("eps").unwrap_or(0.0).total_cmp(&a.param("eps").unwrap_or(0.0)));
    let decreasing = by_eps.windows(2).all(|w| w[1].rhs <= w[0].rhs);
    vec![
        Check::new(
            "uniqueness sup difference",
            sup <= th.uniqueness_error,
            format!("{sup:.3e} (limit {:e})", th.uniqueness_error),
        ),
        Check::new(
            "uniqueness bound -> 0 as eps -> 0",
            decreasing,
            format!(
                "bound from {:.3e} down to {:.3e}",
                by_eps.first().map_or(0.0, |r| r.rhs),
                by_eps.last().map_or(0.0, |r| r.rhs)
            ),
        ),
    ]
}

pub fn check_cauchy(rows: &[EstimateReport], th: &Thresholds) -> Vec<Check> {
    let inc: Vec<f64> = rows.iter().map(|r| r.lhs).collect();
    let decreasing = inc.windows(2).all(|w| w[1] < w[0]);
    let final_rel = rows.last().and_then(|r| r.param("final_rel")).unwrap_or(f64::NAN);
    let truncated = rows.last().and_then(|r| r.param("truncated_at_last")).unwrap_or(0.0);
    vec![
        Check::new(
            "cauchy increments strictly decreasing",
            decreasing,
            format!("increments = [{}]", list(&inc)),
        ),
        Check::new(
            "cauchy final level vs direct solve",
            final_rel < th.cauchy_final_rel,
            format!(
                "relative distance {final_rel:.3e} (limit {}), {truncated} triangles truncated at the last level",
                th.cauchy_final_rel
            ),
        ),
    ]
}
