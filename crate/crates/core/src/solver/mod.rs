//! Discrete Dirichlet problem `div A(x, grad u) = div f` on P1 elements.
//!
//! The weak residual is the gradient of the convex energy
//! `J(u) = sum_T area [ (1/p) (<A grad u, grad u> + delta^2)^(p/2) - <f, grad u> ]`
//! over the interior unknowns, so the solve is a damped Newton minimisation of
//! `J` with Armijo backtracking, continued in `delta` from `DELTA_START` down to
//! `DELTA_MIN`.

mod data;
mod operator;

pub use data::{approximation_sequence, rough_field, RoughKind};
pub use operator::{characteristic, operator_eval, structure_check, OperatorSpec, StructureReport, Sym2};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::linalg::{dot, max_abs, pcg, CgFailure, InteriorSystem};
use crate::norms::{zygmund_norm, Magnitudes, ZygmundParams};
use operator::{flux, flux_jacobian};

pub const DELTA_START: f64 = 1.0;
pub const DELTA_MIN: f64 = 1e-8;
pub const ARMIJO: f64 = 1e-4;
pub const MAX_NEWTON: usize = 200;
pub const MAX_LINEAR: usize = 10_000;
/// Residual target, relative to `1 + |f|_inf`, for the intermediate `delta` stages.
const STAGE_TOL: f64 = 1e-6;
const LINEAR_REL_TOL: f64 = 1e-12;
const MIN_STEP: f64 = 1e-12;
const SPD_RETRIES: usize = 4;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Stop when the interior residual max-norm is `<= tol (1 + |f|_inf)` and the
    /// last Newton increment is `<= tol (1 + |u|_inf)`.
    pub tol: f64,
    pub delta_start: f64,
    pub delta_min: f64,
    pub max_newton: usize,
    pub max_linear: usize,
    /// Starting iterate; its boundary values are overwritten by the boundary data.
    pub initial: Option<ScalarField>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            delta_start: DELTA_START,
            delta_min: DELTA_MIN,
            max_newton: MAX_NEWTON,
            max_linear: MAX_LINEAR,
            initial: None,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: ScalarField,
    pub iterations: usize,
    pub final_residual: f64,
    pub energy: f64,
    /// Regularisation in force at the final iterate.
    pub delta: f64,
    /// Energy after every accepted Newton step, in order, with the `delta` it was measured at.
    pub energy_trace: Vec<(f64, f64)>,
}

/// `J(u)` with the operator's own `delta`.
pub fn energy(grid: &Grid, u: &ScalarField, f: &VectorField, spec: &OperatorSpec) -> f64 {
    energy_at(grid, spec, &grid.gradient(u), f, spec.delta())
}

fn energy_at(grid: &Grid, spec: &OperatorSpec, grad: &VectorField, f: &VectorField, delta: f64) -> f64 {
    let p = spec.p();
    let sum: f64 = grad
        .values()
        .iter()
        .zip(f.values())
        .enumerate()
        .map(|(t, (g, fv))| {
            let s = spec.matrix(t).quad(*g) + delta * delta;
            s.powf(0.5 * p) / p - (fv[0] * g[0] + fv[1] * g[1])
        })
        .sum();
    grid.triangle_area() * sum
}

/// `J(u + step) - J(u)` evaluated without cancellation between the two energies.
fn energy_change(
    grid: &Grid,
    spec: &OperatorSpec,
    grad: &VectorField,
    step_grad: &VectorField,
    f: &VectorField,
    delta: f64,
) -> f64 {
    let p = spec.p();
    let sum: f64 = (0..grad.values().len())
        .map(|t| {
            let a = spec.matrix(t);
            let xi = grad.values()[t];
            let eta = step_grad.values()[t];
            let s0 = a.quad(xi) + delta * delta;
            let axi = a.apply(xi);
            let ds = 2.0 * (axi[0] * eta[0] + axi[1] * eta[1]) + a.quad(eta);
            let dpow = if s0 > 0.0 {
                s0.powf(0.5 * p) * (0.5 * p * (ds / s0).ln_1p()).exp_m1()
            } else {
                ds.max(0.0).powf(0.5 * p)
            };
            let fv = f.values()[t];
            dpow / p - (fv[0] * eta[0] + fv[1] * eta[1])
        })
        .sum();
    grid.triangle_area() * sum
}

/// Interior residual `r_i = int <A_delta(x, grad u) - f, grad phi_i>`.
fn residual(
    grid: &Grid,
    system: &InteriorSystem,
    spec: &OperatorSpec,
    grad: &VectorField,
    f: &VectorField,
    delta: f64,
) -> Vec<f64> {
    let flux_minus_f = VectorField::new(
        grid.n(),
        grad.values()
            .iter()
            .zip(f.values())
            .enumerate()
            .map(|(t, (g, fv))| {
                let a = flux(spec.p(), spec.matrix(t), *g, delta);
                [a[0] - fv[0], a[1] - fv[1]]
            })
            .collect(),
    )
    .expect("finite flux");
    system.restrict(grid.divergence_weak(&flux_minus_f).values())
}

/// Nodal weak residual of `u` for the operator's own `delta`; boundary entries are zero.
pub fn weak_residual(grid: &Grid, spec: &OperatorSpec, u: &ScalarField, f: &VectorField) -> ScalarField {
    let system = InteriorSystem::new(grid);
    let r = residual(grid, &system, spec, &grid.gradient(u), f, spec.delta());
    let mut out = grid.zero_scalar();
    system.scatter(&r, out.values_mut());
    out
}

fn check_inputs(grid: &Grid, spec: &OperatorSpec, f: &VectorField, boundary: &ScalarField) -> Result<()> {
    if spec.num_triangles() != grid.num_triangles() {
        return Err(Error::invalid("operator matrix field does not match the grid"));
    }
    if f.n() != grid.n() || boundary.n() != grid.n() {
        return Err(Error::invalid("data fields do not match the grid"));
    }
    Ok(())
}

/// Solves the Dirichlet problem with boundary values taken from `boundary`.
pub fn solve_dirichlet(
    grid: &Grid,
    spec: &OperatorSpec,
    f: &VectorField,
    boundary: &ScalarField,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    check_inputs(grid, spec, f, boundary)?;
    if !(opts.tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let system = InteriorSystem::new(grid);
    let mut u = match &opts.initial {
        Some(init) if init.n() == grid.n() => init.clone(),
        Some(_) => return Err(Error::invalid("initial iterate does not match the grid")),
        None => grid.zero_scalar(),
    };
    for k in 0..grid.num_nodes() {
        if grid.is_boundary(k) {
            u.values_mut()[k] = boundary.values()[k];
        }
    }
    let scale = 1.0 + f.max_magnitude();
    let p = spec.p();

    let mut deltas = Vec::new();
    if p != 2.0 {
        let mut d = opts.delta_start;
        while d > opts.delta_min {
            deltas.push(d);
            d *= 0.5;
        }
    }
    deltas.push(opts.delta_min);

    let mut iterations = 0;
    let mut trace = Vec::new();
    let last_stage = deltas.len() - 1;
    let mut rnorm = f64::INFINITY;
    for (stage, &delta) in deltas.iter().enumerate() {
        let target = if stage == last_stage {
            opts.tol
        } else {
            opts.tol.max(STAGE_TOL)
        } * scale;
        loop {
            let grad = grid.gradient(&u);
            let r = residual(grid, &system, spec, &grad, f, delta);
            rnorm = max_abs(&r);
            let converged = rnorm <= target;
            if converged && (stage != last_stage || iterations >= opts.max_newton) {
                break;
            }
            if iterations >= opts.max_newton {
                return Err(Error::SolverFailure {
                    iterations,
                    residual: rnorm,
                    message: format!("Newton iteration cap reached at delta = {delta:e}"),
                });
            }
            let step = newton_direction(grid, &system, spec, &grad, &r, delta, opts.max_linear, iterations)?;
            // Near degenerate points a small residual still allows an O(residual^(1/(p-1)))
            // error, so the last stage also waits for the Newton increment to vanish.
            if converged && max_abs(&step) <= opts.tol * (1.0 + u.max_abs()) {
                break;
            }
            let slope = dot(&r, &step);
            let mut step_nodal = grid.zero_scalar();
            system.scatter(&step, step_nodal.values_mut());
            let step_grad = grid.gradient(&step_nodal);

            let mut t = 1.0;
            loop {
                let change = energy_change(grid, spec, &grad, &step_grad.scale(t), f, delta);
                if change <= ARMIJO * t * slope {
                    break;
                }
                t *= 0.5;
                if t < MIN_STEP {
                    if converged {
                        break;
                    }
                    return Err(Error::SolverFailure {
                        iterations,
                        residual: rnorm,
                        message: format!("line search stalled at delta = {delta:e}"),
                    });
                }
            }
            u = u.axpy(t, &step_nodal);
            iterations += 1;
            trace.push((delta, energy_at(grid, spec, &grid.gradient(&u), f, delta)));
        }
    }
    let delta = opts.delta_min;
    let energy = energy_at(grid, spec, &grid.gradient(&u), f, delta);
    Ok(SolveResult {
        u,
        iterations,
        final_residual: rnorm,
        energy,
        delta,
        energy_trace: trace,
    })
}

#[allow(clippy::too_many_arguments)]
fn newton_direction(
    grid: &Grid,
    system: &InteriorSystem,
    spec: &OperatorSpec,
    grad: &VectorField,
    r: &[f64],
    delta: f64,
    max_linear: usize,
    iterations: usize,
) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
    let mut tangent_delta = delta;
    for _ in 0..=SPD_RETRIES {
        let k = system.assemble(grid, |t| {
            flux_jacobian(spec.p(), spec.matrix(t), grad.values()[t], tangent_delta)
        });
        let mut step = vec![0.0; rhs.len()];
        match pcg(&k, &rhs, &mut step, LINEAR_REL_TOL, max_linear) {
            Ok(_) => return Ok(step),
            Err(CgFailure::NotPositiveDefinite) => tangent_delta = (4.0 * tangent_delta).max(DELTA_MIN),
            Err(CgFailure::MaxIterations { residual }) => {
                return Err(Error::SolverFailure {
                    iterations,
                    residual,
                    message: "tangent CG did not converge".into(),
                })
            }
        }
    }
    Err(Error::SolverFailure {
        iterations,
        residual: max_abs(r),
        message: "tangent stayed indefinite after regularisation retries".into(),
    })
}

/// Zero-boundary solve.
pub fn solve_homogeneous(
    grid: &Grid,
    spec: &OperatorSpec,
    f: &VectorField,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    solve_dirichlet(grid, spec, f, &grid.zero_scalar(), opts)
}

/// One row of a truncation-level Cauchy table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyRow {
    pub level_lo: f64,
    pub level_hi: f64,
    /// `||grad u_lo - grad u_hi||^p` in `L^p log^-alpha L`.
    pub gradient_increment: f64,
    /// `||f_lo - f_hi||^q` in `L^q log^-alpha L`.
    pub data_increment: f64,
}

#[derive(Debug, Clone)]
pub struct CauchyProbe {
    pub rows: Vec<CauchyRow>,
    /// Gradients of the solutions for each truncation level, in order.
    pub gradients: Vec<VectorField>,
}

/// Solves with the truncations `f_n` of `f` at each level and tabulates consecutive
/// increments. `data_params` fixes `(q, alpha)` for the data; the gradient side
/// uses `(p, alpha)` with default shift and `eps0`.
pub fn cauchy_probe(
    grid: &Grid,
    spec: &OperatorSpec,
    f: &VectorField,
    levels: &[f64],
    data_params: &ZygmundParams,
    opts: &SolveOptions,
) -> Result<CauchyProbe> {
    if levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("truncation levels must be strictly increasing"));
    }
    let grad_params = ZygmundParams::with_defaults(spec.p(), data_params.alpha)?;
    let data: Vec<VectorField> = levels
        .iter()
        .map(|&l| approximation_sequence(f, l))
        .collect::<Result<_>>()?;
    let gradients = data
        .iter()
        .map(|fl| Ok(grid.gradient(&solve_homogeneous(grid, spec, fl, opts)?.u)))
        .collect::<Result<Vec<_>>>()?;
    let rows = (1..levels.len())
        .map(|k| {
            let dg = Magnitudes::on_grid(grid, &gradients[k - 1].difference_magnitudes(&gradients[k])).expect("finite");
            let df = Magnitudes::on_grid(grid, &data[k - 1].difference_magnitudes(&data[k])).expect("finite");
            CauchyRow {
                level_lo: levels[k - 1],
                level_hi: levels[k],
                gradient_increment: zygmund_norm(&dg, &grad_params).powf(spec.p()),
                data_increment: zygmund_norm(&df, data_params).powf(data_params.q),
            }
        })
        .collect();
    Ok(CauchyProbe { rows, gradients })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hodge::poisson_solve;
    use std::f64::consts::PI;

    fn bubble(grid: &Grid) -> ScalarField {
        grid.scalar_from_fn(|x, y| (PI * x).sin() * (PI * y).sin())
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = Grid::new(8).unwrap();
        let spec = OperatorSpec::identity(&g, 3.0).unwrap();
        let r = solve_homogeneous(&g, &spec, &g.zero_vector(), &SolveOptions::default()).unwrap();
        assert_eq!(r.u.max_abs(), 0.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn energy_closed_forms() {
        let g = Grid::new(4).unwrap();
        let spec = OperatorSpec::identity(&g, 3.0).unwrap();
        assert_eq!(energy(&g, &g.zero_scalar(), &g.zero_vector(), &spec), 0.0);
        let spec = spec.with_delta(0.5);
        let e = energy(&g, &g.zero_scalar(), &g.zero_vector(), &spec);
        assert!((e - 0.5f64.powi(3) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn energy_matches_direct_summation() {
        let g = Grid::new(6).unwrap();
        let spec = OperatorSpec::constant(&g, 3.5, Sym2::new(1.2, 0.1, 0.9))
            .unwrap()
            .with_delta(0.01);
        let u = g.scalar_from_fn(|x, y| (x * 5.0).sin() * y);
        let f = g.vector_from_fn(|x, y| [x - y, x * y]);
        let mut direct = 0.0;
        for t in 0..g.num_triangles() {
            let gu = g.gradient(&u).values()[t];
            let m = spec.matrix(t);
            let q = m.xx * gu[0] * gu[0] + 2.0 * m.xy * gu[0] * gu[1] + m.yy * gu[1] * gu[1] + 1e-4;
            let fv = f.values()[t];
            direct += g.triangle_area() * (q.powf(1.75) / 3.5 - fv[0] * gu[0] - fv[1] * gu[1]);
        }
        assert!((energy(&g, &u, &f, &spec) - direct).abs() < 1e-13);
    }

    #[test]
    fn energy_change_agrees_with_difference() {
        let g = Grid::new(6).unwrap();
        let spec = OperatorSpec::identity(&g, 4.0).unwrap();
        let u = g.scalar_from_fn(|x, y| x * y * (1.0 - x));
        let d = g.scalar_from_fn(|x, y| (x + y).sin() * 0.1);
        let f = g.vector_from_fn(|x, _| [x, 1.0]);
        let (gu, gd) = (g.gradient(&u), g.gradient(&d));
        let change = energy_change(&g, &spec, &gu, &gd, &f, 0.01);
        let diff = energy_at(&g, &spec, &gu.axpy(1.0, &gd), &f, 0.01) - energy_at(&g, &spec, &gu, &f, 0.01);
        assert!((change - diff).abs() < 1e-14);
    }

    #[test]
    fn linear_case_matches_poisson() {
        let g = Grid::new(16).unwrap();
        let spec = OperatorSpec::identity(&g, 2.0).unwrap();
        let f = g.vector_from_fn(|x, y| [(3.0 * y).cos(), x * x]);
        let r = solve_homogeneous(&g, &spec, &f, &SolveOptions::with_tol(1e-13)).unwrap();
        let direct = poisson_solve(&g.divergence_weak(&f), &g).unwrap();
        assert!(r.u.axpy(-1.0, &direct).max_abs() < 1e-9);
    }

    #[test]
    fn manufactured_solution_is_recovered() {
        let g = Grid::new(16).unwrap();
        let spec = OperatorSpec::identity(&g, 3.0).unwrap();
        let w = bubble(&g);
        let gw = g.gradient(&w);
        let f = g
            .vector((0..g.num_triangles()).map(|t| spec.eval(t, gw.values()[t])).collect())
            .unwrap();
        let r = solve_homogeneous(&g, &spec, &f, &SolveOptions::with_tol(1e-13)).unwrap();
        assert!(r.u.axpy(-1.0, &w).max_abs() < 1e-8, "{}", r.u.axpy(-1.0, &w).max_abs());
        assert!(r.final_residual <= 1e-13 * (1.0 + f.max_magnitude()));
    }

    #[test]
    fn inhomogeneous_boundary_is_respected() {
        let g = Grid::new(8).unwrap();
        let spec = OperatorSpec::identity(&g, 3.0).unwrap();
        let affine = g.scalar_from_fn(|x, y| 1.0 + 2.0 * x - y);
        // affine functions solve the homogeneous equation exactly
        let r = solve_dirichlet(&g, &spec, &g.zero_vector(), &affine, &SolveOptions::with_tol(1e-12)).unwrap();
        assert!(r.u.axpy(-1.0, &affine).max_abs() < 1e-10);
    }

    #[test]
    fn energy_trace_is_decreasing_within_each_stage() {
        let g = Grid::new(8).unwrap();
        let spec = OperatorSpec::identity(&g, 4.0).unwrap();
        let f = g.vector_from_fn(|x, y| [1.0 + x, y * y - 0.5]);
        let r = solve_homogeneous(&g, &spec, &f, &SolveOptions::with_tol(1e-12)).unwrap();
        for w in r.energy_trace.windows(2) {
            if w[0].0 == w[1].0 {
                assert!(w[1].1 <= w[0].1, "{:?}", w);
            }
        }
    }

    #[test]
    fn rejects_bad_tolerance() {
        let g = Grid::new(4).unwrap();
        let spec = OperatorSpec::identity(&g, 3.0).unwrap();
        let err = solve_homogeneous(&g, &spec, &g.zero_vector(), &SolveOptions::with_tol(0.0));
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let g = Grid::new(8).unwrap();
        let spec = OperatorSpec::identity(&g, 3.0).unwrap();
        let f = g.vector_from_fn(|x, y| [x, y]);
        let opts = SolveOptions {
            max_newton: 2,
            ..SolveOptions::with_tol(1e-12)
        };
        assert!(matches!(
            solve_homogeneous(&g, &spec, &f, &opts),
            Err(Error::SolverFailure { .. })
        ));
    }
}
