//! Lebesgue, Marcinkiewicz, grand Lebesgue and Orlicz–Zygmund norms of
//! per-triangle magnitudes.
//!
//! Every norm here is an average over the unit square, so it only depends on
//! the distribution of `|g|`. Magnitudes are held as logarithms together with
//! log-weights: the extremal fields used to probe these spaces take values
//! like `e^1000` on sets of measure `e^-1500`, far outside `f64` range, while
//! their norms are of order one.

use std::f64::consts::E;

use crate::error::{Error, Result};
use crate::grid::{Grid, VectorField};
use crate::quadrature::GaussLegendre;

/// Default number of graded Gauss–Legendre panels for the Zygmund norm.
pub const DEFAULT_PANELS: usize = 24;
/// Width ratio between consecutive graded panels.
pub const PANEL_GRADING: f64 = 0.25;
/// Points per Gauss–Legendre panel.
pub const PANEL_ORDER: usize = 8;
/// Smallest `eps` on the grids used for sup-type norms and profiles.
pub const EPS_GRID_MIN: f64 = 1e-6;
/// Number of points on the grids used for sup-type norms and profiles.
pub const EPS_GRID_POINTS: usize = 200;
const LUXEMBURG_LOG_TOL: f64 = 1e-12;

/// Nonzero magnitudes `|g|` with their measures, in log form, sorted by
/// decreasing magnitude. Zero samples are dropped: they contribute nothing to
/// any norm below.
#[derive(Debug, Clone, PartialEq)]
pub struct Magnitudes {
    log_values: Vec<f64>,
    log_weights: Vec<f64>,
}

impl Magnitudes {
    /// `values[k]` carries measure `weights[k]`.
    pub fn new(values: &[f64], weights: &[f64]) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::invalid("values and weights differ in length"));
        }
        if values.iter().chain(weights).any(|v| !v.is_finite()) {
            return Err(Error::invalid("magnitudes and weights must be finite"));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::invalid("weights must be nonnegative"));
        }
        let lv = values.iter().map(|v| v.abs().ln()).collect();
        let lw = weights.iter().map(|w| w.ln()).collect();
        Ok(Self::from_logs_unchecked(lv, lw))
    }

    /// Per-triangle samples on `grid`, each with measure `h^2 / 2`.
    pub fn on_grid(grid: &Grid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.num_triangles() {
            return Err(Error::invalid(format!(
                "expected {} per-triangle samples, got {}",
                grid.num_triangles(),
                values.len()
            )));
        }
        Self::new(values, &vec![grid.triangle_area(); values.len()])
    }

    /// Pointwise length of a vector field.
    pub fn of_vector(grid: &Grid, field: &VectorField) -> Self {
        Self::on_grid(grid, &field.magnitudes()).expect("vector fields are finite")
    }

    /// Builds directly from `ln|g|` and `ln(measure)`. `-inf` entries denote zeros.
    pub fn from_log_parts(log_values: Vec<f64>, log_weights: Vec<f64>) -> Result<Self> {
        if log_values.len() != log_weights.len() {
            return Err(Error::invalid("values and weights differ in length"));
        }
        if log_values
            .iter()
            .chain(&log_weights)
            .any(|v| v.is_nan() || *v == f64::INFINITY)
        {
            return Err(Error::invalid("log parts must be finite or -inf"));
        }
        Ok(Self::from_logs_unchecked(log_values, log_weights))
    }

    fn from_logs_unchecked(log_values: Vec<f64>, log_weights: Vec<f64>) -> Self {
        let mut pairs: Vec<(f64, f64)> = log_values
            .into_iter()
            .zip(log_weights)
            .filter(|(v, w)| *v > f64::NEG_INFINITY && *w > f64::NEG_INFINITY)
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (log_values, log_weights) = pairs.into_iter().unzip();
        Self {
            log_values,
            log_weights,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_values.is_empty()
    }

    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `sup |g|`, zero for the zero field.
    pub fn sup(&self) -> f64 {
        self.log_values.first().map_or(0.0, |v| v.exp())
    }

    /// Total measure of the support.
    pub fn support_measure(&self) -> f64 {
        log_sum_exp(self.log_weights.iter().copied()).exp()
    }

    /// `|lambda g|`.
    pub fn scaled(&self, lambda: f64) -> Self {
        if lambda == 0.0 {
            return Self::from_logs_unchecked(Vec::new(), Vec::new());
        }
        let shift = lambda.abs().ln();
        Self {
            log_values: self.log_values.iter().map(|v| v + shift).collect(),
            log_weights: self.log_weights.clone(),
        }
    }

    /// `|g|^power` for `power > 0`.
    pub fn powf(&self, power: f64) -> Self {
        assert!(power > 0.0);
        Self {
            log_values: self.log_values.iter().map(|v| v * power).collect(),
            log_weights: self.log_weights.clone(),
        }
    }

    /// `ln int |g|^r`, `-inf` for the zero field.
    fn log_moment(&self, r: f64) -> f64 {
        // weights can be as small as e^-1500, so shift by the largest term,
        // not the largest value
        log_sum_exp(
            self.log_values
                .iter()
                .zip(&self.log_weights)
                .map(|(lv, lw)| lw + r * lv),
        )
    }

    /// `ln ||g||_r` for any `r > 0`.
    pub fn log_lebesgue(&self, r: f64) -> f64 {
        self.log_moment(r) / r
    }
}

fn log_sum_exp(iter: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = iter.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + iter.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `n` logarithmically spaced points from `lo` to `hi`, increasing.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 || hi <= lo {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| {
            if k == n - 1 {
                hi
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Parameters of `L^q log^-alpha L`, generated by `Phi(t) = t^q log^-alpha(a + t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZygmundParams {
    pub q: f64,
    pub alpha: f64,
    pub a_const: f64,
    pub eps0: f64,
}

impl ZygmundParams {
    pub fn new(q: f64, alpha: f64, a_const: f64, eps0: f64) -> Result<Self> {
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::invalid(format!(
                "Zygmund exponent must satisfy 1 < q < inf, got {q}"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "log exponent alpha must be positive, got {alpha}"
            )));
        }
        if !(a_const >= E && a_const.is_finite()) {
            return Err(Error::invalid(format!("Orlicz shift a must be >= e, got {a_const}")));
        }
        if !(eps0 > 0.0 && eps0 <= q - 1.0) {
            return Err(Error::invalid(format!("eps0 must lie in (0, q - 1], got {eps0}")));
        }
        if let Some(t) = phi_shape_defect(q, alpha, a_const) {
            return Err(Error::invalid(format!(
                "Phi(t) = t^{q} log^-{alpha}({a_const} + t) is not increasing and convex (fails near t = {t:.3e})"
            )));
        }
        Ok(Self {
            q,
            alpha,
            a_const,
            eps0,
        })
    }

    /// `eps0 = min(q - 1, 1)` and the smallest `a` among `e, e^2, e^3, ...`
    /// for which `Phi` is increasing and convex.
    pub fn with_defaults(q: f64, alpha: f64) -> Result<Self> {
        let eps0 = (q - 1.0).min(1.0);
        Self::new(q, alpha, default_shift(q, alpha), eps0)
    }

    pub fn with_eps0(self, eps0: f64) -> Result<Self> {
        Self::new(self.q, self.alpha, self.a_const, eps0)
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::new(self.q, alpha, self.a_const, self.eps0)
    }

    pub fn phi(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        self.log_phi(t.ln()).exp()
    }

    /// `d/ds ln Phi(e^s) = q - alpha e^s / ((a + e^s) ln(a + e^s))`.
    pub fn log_phi_slope(&self, s: f64) -> f64 {
        let l = log_shifted(self.a_const, s);
        self.q - self.alpha * (s - l).exp() / l
    }

    /// `ln Phi(e^s)`, stable for arbitrarily large `s`.
    pub fn log_phi(&self, s: f64) -> f64 {
        self.q * s - self.alpha * log_shifted(self.a_const, s).ln()
    }
}

/// `ln(a + e^s)` without overflow.
fn log_shifted(a: f64, s: f64) -> f64 {
    let la = a.ln();
    if s > la {
        s + (a * (-s).exp()).ln_1p()
    } else {
        la + ((s - la).exp()).ln_1p()
    }
}

fn default_shift(q: f64, alpha: f64) -> f64 {
    (1..=64)
        .map(|k| (k as f64).exp())
        .find(|&a| phi_shape_defect(q, alpha, a).is_none())
        .unwrap_or(E)
}

/// First sampled `t` where `Phi' < 0` or `Phi'' < 0`.
fn phi_shape_defect(q: f64, alpha: f64, a: f64) -> Option<f64> {
    // With r = t/(a+t), L = ln(a+t):
    //   Phi'  t^{1-q} L^alpha = q - alpha r / L
    //   Phi'' t^{2-q} L^alpha = q(q-1) - 2 q alpha r/L + alpha(alpha+1) r^2/L^2 + alpha r^2/L
    log_grid(1e-8, 1e16, 2000).into_iter().find(|&t| {
        let r = t / (a + t);
        let l = (a + t).ln();
        let x = r / l;
        let d1 = q - alpha * x;
        let d2 = q * (q - 1.0) - 2.0 * q * alpha * x + alpha * (alpha + 1.0) * x * x + alpha * r * r / l;
        d1 < 0.0 || d2 < 0.0
    })
}

/// `(avg |g|^p)^(1/p)`.
pub fn lebesgue_avg_norm(g: &Magnitudes, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("Lebesgue exponent must be >= 1, got {p}")));
    }
    Ok(g.log_lebesgue(p).exp())
}

/// Weak-`L^p` norm `(sup_t t^p |{|g| > t}|)^(1/p)`.
///
/// The supremum is approached as `t` rises to one of the levels taken by
/// `|g|`, where the measure equals `|{|g| >= level}|`; scanning the distinct
/// levels in decreasing order is exact.
pub fn marcinkiewicz_norm(g: &Magnitudes, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::invalid(format!("weak-Lp exponent must be positive, got {p}")));
    }
    let lv = g.log_values();
    let lw = g.log_weights();
    let mut best = f64::NEG_INFINITY;
    let mut cum = f64::NEG_INFINITY;
    for k in 0..lv.len() {
        cum = log_add(cum, lw[k]);
        let last_of_level = k + 1 == lv.len() || lv[k + 1] < lv[k];
        if last_of_level {
            best = best.max(p * lv[k] + cum);
        }
    }
    Ok((best / p).exp())
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// The `eps` grid used by sup-type norms: `EPS_GRID_POINTS` log-spaced points
/// in `[EPS_GRID_MIN, p - 1]`.
pub fn sup_eps_grid(p: f64) -> Vec<f64> {
    sup_eps_grid_with(p, EPS_GRID_POINTS)
}

pub fn sup_eps_grid_with(p: f64, points: usize) -> Vec<f64> {
    log_grid(EPS_GRID_MIN.min(p - 1.0), p - 1.0, points)
}

/// Grand Lebesgue norm `sup_eps eps^(alpha/p) ||g||_(p-eps)` over the default grid.
pub fn grand_lebesgue_norm(g: &Magnitudes, p: f64, alpha: f64) -> Result<f64> {
    grand_lebesgue_norm_on(g, p, alpha, &sup_eps_grid(p))
}

pub fn grand_lebesgue_norm_on(g: &Magnitudes, p: f64, alpha: f64, eps_grid: &[f64]) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::invalid(format!("grand Lebesgue exponent must be > 1, got {p}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if eps_grid.iter().any(|&e| !(e > 0.0 && e <= p - 1.0)) {
        return Err(Error::invalid("grand Lebesgue eps grid must lie in (0, p - 1]"));
    }
    if g.is_zero() {
        return Ok(0.0);
    }
    let best = eps_grid
        .iter()
        .map(|&e| alpha / p * e.ln() + g.log_lebesgue(p - e))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best.exp())
}

/// Luxemburg norm `inf { lambda > 0 : avg Phi(|g| / lambda) <= 1 }`, by bisection on `ln lambda`.
pub fn luxemburg_norm(g: &Magnitudes, params: &ZygmundParams) -> f64 {
    if g.is_zero() {
        return 0.0;
    }
    // ln avg Phi(|g| / lambda) and its derivative, as functions of l = ln lambda;
    // strictly decreasing, with slope close to -q.
    let modular = |l: f64| -> (f64, f64) {
        let terms: Vec<(f64, f64)> = g
            .log_values()
            .iter()
            .zip(g.log_weights())
            .map(|(lv, lw)| (lw + params.log_phi(lv - l), params.log_phi_slope(lv - l)))
            .collect();
        let max = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
        let (mut sum, mut dsum) = (0.0, 0.0);
        for (v, d) in terms {
            let e = (v - max).exp();
            sum += e;
            dsum += e * d;
        }
        (max + sum.ln(), -dsum / sum)
    };
    let start = g.log_values()[0];
    let mut step = 1.0;
    let mut lo = start;
    while modular(lo).0 < 0.0 {
        lo -= step;
        step *= 2.0;
    }
    step = 1.0;
    let mut hi = start;
    while modular(hi).0 > 0.0 {
        hi += step;
        step *= 2.0;
    }
    // Newton on the bracket, falling back to bisection when a step leaves it.
    let mut l = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (m, dm) = modular(l);
        if m == 0.0 {
            break;
        }
        if m > 0.0 {
            lo = l;
        } else {
            hi = l;
        }
        let newton = l - m / dm;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let done =
            (next - l).abs() <= LUXEMBURG_LOG_TOL * (1.0 + l.abs()) || hi - lo <= LUXEMBURG_LOG_TOL * (1.0 + l.abs());
        l = next;
        if done {
            break;
        }
    }
    l.exp()
}

/// Equivalent Zygmund norm `(int_0^eps0 eps^(alpha-1) ||g||_(q-eps)^q d eps)^(1/q)`
/// with `DEFAULT_PANELS` panels.
pub fn zygmund_norm(g: &Magnitudes, params: &ZygmundParams) -> f64 {
    zygmund_norm_with_panels(g, params, DEFAULT_PANELS)
}

/// Zygmund norm with a chosen panel count. Substituting `t = eps^alpha`
/// turns the integral into `(1/alpha) int_0^(eps0^alpha) ||g||_(q - t^(1/alpha))^q dt`;
/// the integrand is bounded but only Hoelder at `t = 0` when `alpha > 1`,
/// hence panels graded towards 0.
pub fn zygmund_norm_with_panels(g: &Magnitudes, params: &ZygmundParams, panels: usize) -> f64 {
    if g.is_zero() {
        return 0.0;
    }
    let ZygmundParams { q, alpha, eps0, .. } = *params;
    let rule = GaussLegendre::new(PANEL_ORDER).graded(eps0.powf(alpha), panels, PANEL_GRADING);
    // Integrand values q ln||g||_(q-eps) and log-weights ln(w / alpha).
    let terms: Vec<f64> = rule
        .iter()
        .map(|&(t, w)| {
            let eps = t.powf(1.0 / alpha);
            q * g.log_lebesgue(q - eps) + (w / alpha).ln()
        })
        .collect();
    (log_sum_exp(terms.into_iter()) / q).exp()
}

/// `(eps, ||g||_(q-eps))` over the default sup grid, increasing in `eps`.
pub fn epsilon_table(g: &Magnitudes, q: f64) -> Vec<(f64, f64)> {
    sup_eps_grid(q)
        .into_iter()
        .map(|e| (e, g.log_lebesgue(q - e).exp()))
        .collect()
}

/// All Zygmund-type norms of one field.
#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub params: ZygmundParams,
    pub luxemburg: f64,
    pub equivalent: f64,
    pub grand: f64,
    pub per_epsilon: Vec<(f64, f64)>,
}

pub fn norm_report(g: &Magnitudes, params: &ZygmundParams) -> NormReport {
    NormReport {
        params: *params,
        luxemburg: luxemburg_norm(g, params),
        equivalent: zygmund_norm(g, params),
        grand: grand_lebesgue_norm(g, params.q, params.alpha).expect("params validated"),
        per_epsilon: epsilon_table(g, params.q),
    }
}

/// The extremal field `e^(1/eps) chi_E` with `|E| = 1 / Phi(e^(1/eps))`.
///
/// `E` is filled with whole triangles in storage order and completed by one
/// triangle carrying a fractional weight, so `|E|` is exact at any resolution.
pub fn counterexample_field(eps: f64, params: &ZygmundParams, grid: &Grid) -> Result<Magnitudes> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let level = 1.0 / eps;
    let log_phi = params.log_phi(level);
    if !(log_phi > 0.0) {
        return Err(Error::invalid(format!(
            "Phi(e^(1/eps)) <= 1 for eps = {eps}; choose a smaller eps"
        )));
    }
    let log_measure = -log_phi;
    let log_area = grid.triangle_area().ln();
    let mut log_weights = Vec::new();
    if log_measure <= log_area {
        log_weights.push(log_measure);
    } else {
        let measure = log_measure.exp();
        let area = grid.triangle_area();
        let full = (measure / area).floor() as usize;
        log_weights.extend(std::iter::repeat_n(log_area, full));
        let rest = measure - full as f64 * area;
        if rest > 0.0 {
            log_weights.push(rest.ln());
        }
    }
    let log_values = vec![level; log_weights.len()];
    Magnitudes::from_log_parts(log_values, log_weights)
}

/// `(eps, eps^(alpha/q) ||g||_(q-eps))` along a decreasing grid from `q - 1` to `EPS_GRID_MIN`.
pub fn limit0_profile(g: &Magnitudes, params: &ZygmundParams) -> Vec<(f64, f64)> {
    let ZygmundParams { q, alpha, .. } = *params;
    let mut grid = sup_eps_grid(q);
    grid.reverse();
    grid.into_iter()
        .map(|e| (e, (alpha / q * e.ln() + g.log_lebesgue(q - e)).exp()))
        .collect()
}

/// `eps^(alpha/q) ||f_eps||_(q-eps)` for the extremal field matched to each `eps`.
pub fn counterexample_diagonal(eps_values: &[f64], params: &ZygmundParams, grid: &Grid) -> Result<Vec<(f64, f64)>> {
    eps_values
        .iter()
        .map(|&e| {
            let f = counterexample_field(e, params, grid)?;
            Ok((
                e,
                (params.alpha / params.q * e.ln() + f.log_lebesgue(params.q - e)).exp(),
            ))
        })
        .collect()
}
