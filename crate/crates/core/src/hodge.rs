//! Discrete Hodge decomposition `F = grad(phi) + h` with `phi = 0` on the
//! boundary and `h` weakly divergence-free against every zero-boundary P1
//! test function.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::linalg::{max_abs, pcg, CgFailure, CsrMatrix, InteriorSystem};
use crate::norms::Magnitudes;

pub const POISSON_REL_TOL: f64 = 1e-12;
pub const POISSON_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct HodgeResult {
    pub phi: ScalarField,
    pub h: VectorField,
    /// Largest interior entry of the weak divergence of `h`.
    pub residual: f64,
}

/// Dirichlet–Poisson solver with the stiffness matrix assembled once.
#[derive(Debug, Clone)]
pub struct PoissonSolver {
    grid: Grid,
    system: InteriorSystem,
    stiffness: CsrMatrix,
}

impl PoissonSolver {
    pub fn new(grid: &Grid) -> Self {
        let system = InteriorSystem::new(grid);
        let stiffness = system.laplacian(grid);
        Self {
            grid: grid.clone(),
            system,
            stiffness,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Zero-boundary `phi` with `int grad(phi) . grad(w) = rhs(w)` for all
    /// interior hat functions `w`. Boundary entries of `rhs` are ignored.
    pub fn solve(&self, rhs: &ScalarField) -> Result<ScalarField> {
        let b = self.system.restrict(rhs.values());
        let mut x = vec![0.0; b.len()];
        match pcg(&self.stiffness, &b, &mut x, POISSON_REL_TOL, POISSON_MAX_ITER) {
            Ok(_) => {}
            Err(CgFailure::MaxIterations { residual }) => {
                return Err(Error::SolverFailure {
                    iterations: POISSON_MAX_ITER,
                    residual,
                    message: "Poisson CG did not converge".into(),
                })
            }
            Err(CgFailure::NotPositiveDefinite) => {
                return Err(Error::SolverFailure {
                    iterations: 0,
                    residual: f64::NAN,
                    message: "Poisson stiffness matrix reported indefinite".into(),
                })
            }
        }
        let mut phi = self.grid.zero_scalar();
        self.system.scatter(&x, phi.values_mut());
        Ok(phi)
    }

    pub fn decompose(&self, field: &VectorField) -> Result<HodgeResult> {
        let phi = self.solve(&self.grid.divergence_weak(field))?;
        let h = field.axpy(-1.0, &self.grid.gradient(&phi));
        let residual = interior_divergence(&self.grid, &self.system, &h);
        Ok(HodgeResult { phi, h, residual })
    }
}

fn interior_divergence(grid: &Grid, system: &InteriorSystem, h: &VectorField) -> f64 {
    max_abs(&system.restrict(grid.divergence_weak(h).values()))
}

pub fn poisson_solve(rhs: &ScalarField, grid: &Grid) -> Result<ScalarField> {
    PoissonSolver::new(grid).solve(rhs)
}

pub fn hodge_decompose(field: &VectorField, grid: &Grid) -> Result<HodgeResult> {
    PoissonSolver::new(grid).decompose(field)
}

/// Ratios probing the `L^s` stability of the decomposition of `|G|^(-eps p) G`,
/// `s = (p - eps p) / (1 - eps p)`:
///
/// * `r1 = ||grad phi||_s / ||G||_(p - eps p)^(1 - eps p)`
/// * `r2 = ||h||_s / (eps ||G||_(p - eps p)^(1 - eps p))`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HodgeRatios {
    pub r1: f64,
    pub r2: f64,
    pub residual: f64,
}

pub fn hodge_ratio_probe(solver: &PoissonSolver, g: &VectorField, eps: f64, p: f64) -> Result<HodgeRatios> {
    let ep = eps * p;
    if !(ep > 0.0 && ep < 1.0) {
        return Err(Error::invalid(format!("need 0 < eps p < 1, got eps p = {ep}")));
    }
    if g.max_magnitude() == 0.0 {
        return Err(Error::invalid("probe field G is identically zero"));
    }
    let grid = solver.grid();
    let f = VectorField::new(
        g.n(),
        g.values()
            .iter()
            .map(|v| {
                let m = v[0].hypot(v[1]);
                if m == 0.0 {
                    [0.0, 0.0]
                } else {
                    let s = m.powf(-ep);
                    [s * v[0], s * v[1]]
                }
            })
            .collect(),
    )?;
    let dec = solver.decompose(&f)?;
    let s = (p - ep) / (1.0 - ep);
    let denom = Magnitudes::of_vector(grid, g).log_lebesgue(p - ep) * (1.0 - ep);
    let grad_phi = Magnitudes::of_vector(grid, &grid.gradient(&dec.phi)).log_lebesgue(s);
    let h = Magnitudes::of_vector(grid, &dec.h).log_lebesgue(s);
    Ok(HodgeRatios {
        r1: (grad_phi - denom).exp(),
        r2: (h - denom).exp() / eps,
        residual: dec.residual,
    })
}
