use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{gamma, EstimateReport};
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::norms::{lebesgue_avg_norm, log_grid, marcinkiewicz_norm, zygmund_norm, Magnitudes, ZygmundParams};
use crate::solver::{
    cauchy_probe, characteristic, rough_field, solve_dirichlet, solve_homogeneous, OperatorSpec, RoughKind,
    SolveOptions, Sym2,
};

/// Number of points of the `eps` grid for Lebesgue-scale estimates.
pub const DIFFERENCE_EPS_POINTS: usize = 12;
pub const DIFFERENCE_EPS_MIN: f64 = 1e-4;

/// `DIFFERENCE_EPS_POINTS` log-spaced points in `[1e-4, 1/(2p)]`, increasing.
pub fn difference_eps_grid(p: f64) -> Vec<f64> {
    log_grid(DIFFERENCE_EPS_MIN, 1.0 / (2.0 * p), DIFFERENCE_EPS_POINTS)
}

fn check_alpha(p: f64, alpha: f64, strict: bool) -> Result<()> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::invalid(format!("need p >= 2, got {p}")));
    }
    let ok = alpha > 0.0
        && (p == 2.0
            || if strict {
                alpha < p / (p - 2.0)
            } else {
                alpha <= p / (p - 2.0)
            });
    if ok {
        Ok(())
    } else {
        let bound = if strict { "<" } else { "<=" };
        Err(Error::invalid(format!(
            "need 0 < alpha {bound} p/(p-2) for p = {p}, got alpha = {alpha}"
        )))
    }
}

fn zyg(grid: &Grid, values: &[f64], exponent: f64, alpha: f64) -> Result<f64> {
    let params = ZygmundParams::with_defaults(exponent, alpha)?;
    Ok(zygmund_norm(&Magnitudes::on_grid(grid, values)?, &params))
}

fn leb(grid: &Grid, values: &[f64], exponent: f64) -> Result<f64> {
    lebesgue_avg_norm(&Magnitudes::on_grid(grid, values)?, exponent)
}

/// `eps^(p/(p-2))`, which vanishes identically at `p = 2` for `eps < 1`.
fn eps_weight(eps: f64, p: f64) -> f64 {
    if p == 2.0 {
        0.0
    } else {
        eps.powf(p / (p - 2.0))
    }
}

/// `||grad u||^p` in `L^p log^-alpha L` against `||f||^q` in `L^q log^-alpha L`.
pub fn verify_energy(
    grid: &Grid,
    spec: &OperatorSpec,
    f: &VectorField,
    alpha: f64,
    id: &str,
    opts: &SolveOptions,
) -> Result<EstimateReport> {
    let p = spec.p();
    check_alpha(p, alpha, false)?;
    let u = solve_homogeneous(grid, spec, f, opts)?.u;
    let lhs = zyg(grid, &grid.gradient(&u).magnitudes(), p, alpha)?.powf(p);
    let q = super::conjugate(p);
    let rhs = zyg(grid, &f.magnitudes(), q, alpha)?.powf(q);
    Ok(EstimateReport::new(
        format!("energy/{id}"),
        p,
        alpha,
        grid.n(),
        lhs,
        rhs,
    ))
}

/// Lebesgue-scale difference estimate for two data, one row per `eps`.
///
/// `rhs` uses the gradient form `eps^(p/(p-2)) || |grad u| + |grad v| ||^p + ||f - g||^q`;
/// the `rhs_data` column uses `|| |f| + |g| ||^q` in place of the gradient term.
pub fn verify_difference(
    grid: &Grid,
    spec: &OperatorSpec,
    f: &VectorField,
    g: &VectorField,
    eps_grid: &[f64],
    id: &str,
    opts: &SolveOptions,
) -> Result<Vec<EstimateReport>> {
    let p = spec.p();
    let q = super::conjugate(p);
    if let Some(&e) = eps_grid.iter().find(|&&e| !(e > 0.0 && e < 1.0 / p)) {
        return Err(Error::invalid(format!("eps must lie in (0, 1/p), got {e}")));
    }
    let gu = grid.gradient(&solve_homogeneous(grid, spec, f, opts)?.u);
    let gv = grid.gradient(&solve_homogeneous(grid, spec, g, opts)?.u);
    let diff = gu.difference_magnitudes(&gv);
    let sum = gu.magnitude_sum(&gv);
    let data_diff = f.difference_magnitudes(g);
    let data_sum = f.magnitude_sum(g);
    eps_grid
        .iter()
        .map(|&eps| {
            let (pe, qe) = (p - eps * p, q - eps * q);
            let w = eps_weight(eps, p);
            let lhs = leb(grid, &diff, pe)?.powf(p);
            let data_term = leb(grid, &data_diff, qe)?.powf(q);
            let rhs = w * leb(grid, &sum, pe)?.powf(p) + data_term;
            let rhs_data = w * leb(grid, &data_sum, qe)?.powf(q) + data_term;
            Ok(
                EstimateReport::new(format!("difference/{id}"), p, 0.0, grid.n(), lhs, rhs)
                    .with_param("eps", eps)
                    .with_extra("rhs_data", rhs_data)
                    .with_extra("ratio_data", super::ratio(lhs, rhs_data)),
            )
        })
        .collect()
}

/// Both sides of the stability estimate from already computed gradients.
#[allow(clippy::too_many_arguments)]
pub fn stability_report(
    grid: &Grid,
    p: f64,
    alpha: f64,
    f: &VectorField,
    g: &VectorField,
    grad_u: &VectorField,
    grad_v: &VectorField,
    id: &str,
) -> Result<EstimateReport> {
    check_alpha(p, alpha, true)?;
    let q = super::conjugate(p);
    let gam = gamma(p, alpha);
    let lhs = zyg(grid, &grad_u.difference_magnitudes(grad_v), p, alpha)?.powf(p);
    let data_diff = zyg(grid, &f.difference_magnitudes(g), q, alpha)?;
    let data_sum = zyg(grid, &f.magnitude_sum(g), q, alpha)?;
    let rhs = data_diff.powf(q * (1.0 - gam)) * data_sum.powf(q * gam);
    Ok(
        EstimateReport::new(format!("stability/{id}"), p, alpha, grid.n(), lhs, rhs)
            .with_extra("gamma", gam)
            .with_extra("data_diff", data_diff)
            .with_extra("data_sum", data_sum),
    )
}

pub fn verify_stability(
    grid: &Grid,
    spec: &OperatorSpec,
    f: &VectorField,
    g: &VectorField,
    alpha: f64,
    id: &str,
    opts: &SolveOptions,
) -> Result<EstimateReport> {
    check_alpha(spec.p(), alpha, true)?;
    let gu = grid.gradient(&solve_homogeneous(grid, spec, f, opts)?.u);
    let gv = grid.gradient(&solve_homogeneous(grid, spec, g, opts)?.u);
    stability_report(grid, spec.p(), alpha, f, g, &gu, &gv, id)
}

/// `g_t = f + t * dir` for each `t`, with one base solve shared by all rows.
/// Rows carry the perturbation size in the `t` column.
#[allow(clippy::too_many_arguments)]
pub fn stability_sweep(
    grid: &Grid,
    spec: &OperatorSpec,
    f: &VectorField,
    dir: &VectorField,
    ts: &[f64],
    alpha: f64,
    id: &str,
    opts: &SolveOptions,
) -> Result<Vec<EstimateReport>> {
    check_alpha(spec.p(), alpha, true)?;
    let base = solve_homogeneous(grid, spec, f, opts)?;
    let gu = grid.gradient(&base.u);
    ts.par_iter()
        .map(|&t| {
            let g = f.axpy(t, dir);
            let warm = SolveOptions {
                initial: Some(base.u.clone()),
                ..opts.clone()
            };
            let gv = grid.gradient(&solve_homogeneous(grid, spec, &g, &warm)?.u);
            Ok(stability_report(grid, spec.p(), alpha, f, &g, &gu, &gv, id)?.with_param("t", t))
        })
        .collect()
}

/// `I + 0.1 s diag(1, -1)` on every triangle, with the tightest ellipticity bounds.
pub fn comparison_matrix_field(grid: &Grid, p: f64, s: f64) -> Result<OperatorSpec> {
    if !(s.abs() < 10.0) {
        return Err(Error::invalid(format!(
            "|s| must be below 10 to keep A positive definite, got {s}"
        )));
    }
    let d = 0.1 * s.abs();
    let m = Sym2::diag(1.0 + 0.1 * s, 1.0 - 0.1 * s);
    OperatorSpec::new(
        p,
        vec![m; grid.num_triangles()],
        (1.0 - d).powf(p / 2.0),
        (1.0 + d).powf(p / 2.0),
    )
}

/// Compares `v` (p-Laplacian, zero boundary, source `v_source`) with `u`
/// solving the `A`-problem with data `|grad v|^(p-2) grad v` and boundary `v`.
pub fn verify_comparison(
    grid: &Grid,
    a_spec: &OperatorSpec,
    alpha: f64,
    v_source: &VectorField,
    id: &str,
    opts: &SolveOptions,
) -> Result<EstimateReport> {
    let p = a_spec.p();
    check_alpha(p, alpha, true)?;
    let identity = OperatorSpec::identity(grid, p)?;
    let v = solve_homogeneous(grid, &identity, v_source, opts)?.u;
    let gv = grid.gradient(&v);
    let data = grid.vector(
        (0..grid.num_triangles())
            .map(|t| identity.eval(t, gv.values()[t]))
            .collect(),
    )?;
    let warm = SolveOptions {
        initial: Some(v.clone()),
        ..opts.clone()
    };
    let u = solve_dirichlet(grid, a_spec, &data, &v, &warm)?.u;
    comparison_report(grid, a_spec, alpha, &grid.gradient(&u), &gv, id, opts.tol)
}

fn comparison_report(
    grid: &Grid,
    a_spec: &OperatorSpec,
    alpha: f64,
    gu: &VectorField,
    gv: &VectorField,
    id: &str,
    tol: f64,
) -> Result<EstimateReport> {
    let p = a_spec.p();
    let q = super::conjugate(p);
    let gam = gamma(p, alpha);
    let k = characteristic(a_spec);
    let lhs = zyg(grid, &gu.difference_magnitudes(gv), p, alpha)?.powf(p);
    let sum = zyg(grid, &gu.magnitude_sum(gv), p, alpha)?.powf(p);
    let rhs = (k - 1.0).powf(q * (1.0 - gam)) * k.powf(q * (gam + 1.0)) * sum;
    if k == 1.0 && lhs > tol {
        return Err(Error::Assertion(format!(
            "K_A = 1 but the gradients differ: ||grad u - grad v||^p = {lhs:e} > {tol:e}"
        )));
    }
    Ok(
        EstimateReport::new(format!("comparison/{id}"), p, alpha, grid.n(), lhs, rhs)
            .with_param("k_a", k)
            .with_extra("gamma", gam)
            .with_extra("sum_norm", sum),
    )
}

/// The comparison experiment over `A_s` for each `s`, sharing the solve for `v`.
pub fn comparison_sweep(
    grid: &Grid,
    p: f64,
    alpha: f64,
    v_source: &VectorField,
    ss: &[f64],
    id: &str,
    opts: &SolveOptions,
) -> Result<Vec<EstimateReport>> {
    check_alpha(p, alpha, true)?;
    let identity = OperatorSpec::identity(grid, p)?;
    let v = solve_homogeneous(grid, &identity, v_source, opts)?.u;
    let gv = grid.gradient(&v);
    let data = grid.vector(
        (0..grid.num_triangles())
            .map(|t| identity.eval(t, gv.values()[t]))
            .collect(),
    )?;
    ss.par_iter()
        .map(|&s| {
            let a_spec = comparison_matrix_field(grid, p, s)?;
            let warm = SolveOptions {
                initial: Some(v.clone()),
                ..opts.clone()
            };
            let u = solve_dirichlet(grid, &a_spec, &data, &v, &warm)?.u;
            Ok(comparison_report(grid, &a_spec, alpha, &grid.gradient(&u), &gv, id, opts.tol)?.with_param("s", s))
        })
        .collect()
}

/// Random interior values in `[-1, 1]`, zero on the boundary.
pub fn random_start(grid: &Grid, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = grid.zero_scalar();
    for k in grid.interior_nodes() {
        u.values_mut()[k] = rng.random_range(-1.0..1.0);
    }
    u
}

/// Two solves (zero start, seeded random start). One row per `eps` of the
/// decreasing grid: `lhs` is the nodal sup difference, `rhs` the bound
/// `eps^(p/(p-2)) ||f||^q_(q - eps q)`. Weak-type columns are reported for
/// both `grad u` and `f`, along with `eps^(p/(p-2) - 1) ||grad u||^p_(p,inf)`.
pub fn verify_uniqueness(
    grid: &Grid,
    spec: &OperatorSpec,
    f: &VectorField,
    seed: u64,
    id: &str,
    opts: &SolveOptions,
) -> Result<Vec<EstimateReport>> {
    let p = spec.p();
    let q = super::conjugate(p);
    let a = solve_homogeneous(grid, spec, f, opts)?;
    let from_random = SolveOptions {
        initial: Some(random_start(grid, seed)),
        ..opts.clone()
    };
    let b = solve_homogeneous(grid, spec, f, &from_random)?;
    let sup = a.u.axpy(-1.0, &b.u).max_abs();
    let gmag = Magnitudes::on_grid(grid, &grid.gradient(&a.u).magnitudes())?;
    let fmag = Magnitudes::on_grid(grid, &f.magnitudes())?;
    let weak_grad = marcinkiewicz_norm(&gmag, p)?;
    let weak_data = marcinkiewicz_norm(&fmag, q)?;
    let mut eps = difference_eps_grid(p);
    eps.reverse();
    eps.into_iter()
        .map(|e| {
            let rhs = eps_weight(e, p) * lebesgue_avg_norm(&fmag, q - e * q)?.powf(q);
            let weak_bound = if p == 2.0 {
                0.0
            } else {
                e.powf(p / (p - 2.0) - 1.0) * weak_grad.powf(p)
            };
            Ok(
                EstimateReport::new(format!("uniqueness/{id}"), p, 0.0, grid.n(), sup, rhs)
                    .with_param("eps", e)
                    .with_extra("weak_grad", weak_grad)
                    .with_extra("weak_data", weak_data)
                    .with_extra("weak_bound", weak_bound),
            )
        })
        .collect()
}

/// Truncation-level increments of the gradients (`lhs`) and of the data (`rhs`),
/// one row per consecutive pair of levels. Every row also carries `final_rel`,
/// the Zygmund distance between the last truncated solve and the solve with
/// the untruncated data, relative to the latter.
pub fn cauchy_reports(
    grid: &Grid,
    spec: &OperatorSpec,
    f: &VectorField,
    levels: &[f64],
    alpha: f64,
    id: &str,
    opts: &SolveOptions,
) -> Result<Vec<EstimateReport>> {
    let p = spec.p();
    check_alpha(p, alpha, false)?;
    let q = super::conjugate(p);
    let data_params = ZygmundParams::with_defaults(q, alpha)?;
    let probe = cauchy_probe(grid, spec, f, levels, &data_params, opts)?;
    let direct = grid.gradient(&solve_homogeneous(grid, spec, f, opts)?.u);
    let last = probe
        .gradients
        .last()
        .ok_or_else(|| Error::invalid("need at least one truncation level"))?;
    let dist = zyg(grid, &last.difference_magnitudes(&direct), p, alpha)?;
    let size = zyg(grid, &direct.magnitudes(), p, alpha)?;
    let final_rel = super::ratio(dist, size);
    let truncated = f.magnitudes().iter().filter(|&&m| m > levels[levels.len() - 1]).count();
    Ok(probe
        .rows
        .iter()
        .map(|r| {
            EstimateReport::new(
                format!("cauchy/{id}"),
                p,
                alpha,
                grid.n(),
                r.gradient_increment,
                r.data_increment,
            )
            .with_param("level_lo", r.level_lo)
            .with_param("level_hi", r.level_hi)
            .with_extra("final_rel", final_rel)
            .with_extra("truncated_at_last", truncated as f64)
        })
        .collect())
}

/// Deterministic family of rough data: mostly point singularities with
/// exponents below the `L^(3/2)` threshold, every fourth one smooth.
pub fn rough_family(count: usize, seed: u64) -> Vec<RoughKind> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            if i % 4 == 3 {
                RoughKind::SmoothRandom {
                    seed: rng.random(),
                    modes: 3,
                    amplitude: 1.0,
                }
            } else {
                RoughKind::PointSingularity {
                    x0: [rng.random_range(0.2..0.8), rng.random_range(0.2..0.8)],
                    beta: rng.random_range(0.0..0.6),
                    s: rng.random_range(0.0..1.0),
                }
            }
        })
        .collect()
}

/// Smooth perturbation direction of unit sup-norm.
pub fn unit_perturbation(grid: &Grid, seed: u64) -> Result<VectorField> {
    let d = rough_field(&RoughKind::smooth_random(seed), grid)?;
    let m = d.max_magnitude();
    Ok(d.scale(1.0 / m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::ZygmundParams;

    fn opts() -> SolveOptions {
        SolveOptions::with_tol(1e-12)
    }

    #[test]
    fn energy_of_zero_data_is_zero() {
        let g = Grid::new(8).unwrap();
        let spec = OperatorSpec::identity(&g, 3.0).unwrap();
        let r = verify_energy(&g, &spec, &g.zero_vector(), 1.0, "zero", &opts()).unwrap();
        assert_eq!((r.lhs, r.rhs, r.ratio), (0.0, 0.0, 0.0));
        assert!(verify_energy(&g, &spec, &g.zero_vector(), 3.5, "zero", &opts()).is_err());
    }

    #[test]
    fn energy_is_homogeneous_of_degree_q() {
        let g = Grid::new(16).unwrap();
        let spec = OperatorSpec::identity(&g, 3.0).unwrap();
        let f = rough_field(&RoughKind::point_singularity(0.4, 0.5), &g).unwrap();
        let a = verify_energy(&g, &spec, &f, 1.0, "f", &opts()).unwrap();
        let lam: f64 = 3.7;
        let b = verify_energy(&g, &spec, &f.scale(lam), 1.0, "f", &opts()).unwrap();
        assert!((b.lhs / a.lhs / lam.powf(1.5) - 1.0).abs() < 1e-10);
        assert!((b.rhs / a.rhs / lam.powf(1.5) - 1.0).abs() < 1e-12);
        assert!((b.ratio / a.ratio - 1.0).abs() < 1e-10);
    }

    #[test]
    fn identical_data_give_zero_differences() {
        let g = Grid::new(8).unwrap();
        let spec = OperatorSpec::identity(&g, 3.0).unwrap();
        let f = rough_field(&RoughKind::smooth_random(1), &g).unwrap();
        let rows = verify_difference(&g, &spec, &f, &f, &difference_eps_grid(3.0), "same", &opts()).unwrap();
        assert_eq!(rows.len(), DIFFERENCE_EPS_POINTS);
        assert!(rows.iter().all(|r| r.lhs == 0.0 && r.rhs > 0.0));
        let st = verify_stability(&g, &spec, &f, &f, 1.0, "same", &opts()).unwrap();
        assert_eq!(st.lhs, 0.0);
        assert!(verify_difference(&g, &spec, &f, &f, &[0.5], "bad", &opts()).is_err());
    }

    #[test]
    fn stability_exponents_recomputed_independently() {
        let g = Grid::new(8).unwrap();
        let spec = OperatorSpec::identity(&g, 3.0).unwrap();
        let f = rough_field(&RoughKind::point_singularity(0.3, 0.0), &g).unwrap();
        let fg = f.axpy(0.05, &unit_perturbation(&g, 2).unwrap());
        let r = verify_stability(&g, &spec, &f, &fg, 1.0, "x", &opts()).unwrap();
        let zq = ZygmundParams::with_defaults(1.5, 1.0).unwrap();
        let diff = zygmund_norm(&Magnitudes::on_grid(&g, &f.difference_magnitudes(&fg)).unwrap(), &zq);
        let sum = zygmund_norm(&Magnitudes::on_grid(&g, &f.magnitude_sum(&fg)).unwrap(), &zq);
        // gamma = 1/3, q = 3/2: exponents 1 and 1/2
        assert_eq!(r.rhs, diff.powf(1.5 * (1.0 - 1.0 / 3.0)) * sum.powf(1.5 * (1.0 / 3.0)));
        assert!((r.rhs - diff * sum.sqrt()).abs() <= 1e-14 * r.rhs);
        assert!(verify_stability(&g, &spec, &f, &fg, 3.0, "x", &opts()).is_err());
    }

    #[test]
    fn stability_is_lipschitz_type_at_p2() {
        let g = Grid::new(8).unwrap();
        let spec = OperatorSpec::identity(&g, 2.0).unwrap();
        let f = rough_field(&RoughKind::smooth_random(4), &g).unwrap();
        let fg = f.axpy(0.1, &unit_perturbation(&g, 5).unwrap());
        let r = verify_stability(&g, &spec, &f, &fg, 7.0, "p2", &opts()).unwrap();
        let zq = ZygmundParams::with_defaults(2.0, 7.0).unwrap();
        let diff = zygmund_norm(&Magnitudes::on_grid(&g, &f.difference_magnitudes(&fg)).unwrap(), &zq);
        assert_eq!(r.param("gamma"), Some(0.0));
        assert!((r.rhs - diff * diff).abs() <= 1e-14 * r.rhs);
    }

    #[test]
    fn comparison_with_identity_matrix_is_exact() {
        let g = Grid::new(8).unwrap();
        let src = rough_field(&RoughKind::smooth_random(3), &g).unwrap();
        let rows = comparison_sweep(&g, 3.0, 1.0, &src, &[0.0, 1.0], "s", &opts()).unwrap();
        assert_eq!(rows[0].param("k_a"), Some(1.0));
        assert!(rows[0].lhs <= 1e-12);
        assert_eq!(rows[0].rhs, 0.0);
        assert!(rows[1].lhs > 0.0 && rows[1].rhs > 0.0);
        let k = (1.1f64).powf(1.5);
        assert!((rows[1].param("k_a").unwrap() - k).abs() < 1e-14);
        let single = verify_comparison(
            &g,
            &comparison_matrix_field(&g, 3.0, 1.0).unwrap(),
            1.0,
            &src,
            "s",
            &opts(),
        )
        .unwrap();
        assert!((single.lhs / rows[1].lhs - 1.0).abs() < 1e-6);
    }

    #[test]
    fn comparison_rhs_follows_gamma() {
        let g = Grid::new(8).unwrap();
        let src = rough_field(&RoughKind::smooth_random(3), &g).unwrap();
        for alpha in [0.5, 1.0, 2.5] {
            let r = &comparison_sweep(&g, 3.0, alpha, &src, &[0.5], "a", &opts()).unwrap()[0];
            let k = r.param("k_a").unwrap();
            let gam = alpha / 3.0;
            let expected = (k - 1.0).powf(1.5 - 1.5 * gam) * k.powf(1.5 + 1.5 * gam) * r.param("sum_norm").unwrap();
            assert!((r.rhs - expected).abs() <= 1e-13 * expected);
        }
    }

    #[test]
    fn uniqueness_profile_for_constant_data() {
        let g = Grid::new(8).unwrap();
        let spec = OperatorSpec::identity(&g, 3.0).unwrap();
        let f = g.vector_from_fn(|_, _| [0.6, 0.8]);
        let rows = verify_uniqueness(&g, &spec, &f, 11, "const", &opts()).unwrap();
        for r in &rows {
            let e = r.param("eps").unwrap();
            // |f| = 1 on a unit-measure domain
            assert!((r.rhs - e.powi(3)).abs() <= 1e-14);
            assert!(r.lhs <= 1e-8);
        }
        assert!(rows.windows(2).all(|w| w[1].rhs < w[0].rhs));
    }

    #[test]
    fn family_is_deterministic() {
        assert_eq!(rough_family(8, 3), rough_family(8, 3));
        assert_ne!(rough_family(8, 3), rough_family(8, 4));
    }
}
