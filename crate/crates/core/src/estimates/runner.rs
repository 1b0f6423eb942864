//! Named experiments: solve on a batch of rough data, tabulate, check.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::*;
use crate::error::{Error, Result};
use crate::grid::{Grid, VectorField};
use crate::solver::{rough_field, OperatorSpec, RoughKind, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Energy,
    Difference,
    Stability,
    Comparison,
    Uniqueness,
    Cauchy,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Self::Energy,
        Self::Difference,
        Self::Stability,
        Self::Comparison,
        Self::Uniqueness,
        Self::Cauchy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Energy => "energy",
            Self::Difference => "difference",
            Self::Stability => "stability",
            Self::Comparison => "comparison",
            Self::Uniqueness => "uniqueness",
            Self::Cauchy => "cauchy",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown experiment `{s}`")))
    }
}

/// Exponents shared by every case; `seed` drives the perturbation direction
/// and random starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentSetup {
    pub p: f64,
    pub alpha: f64,
    pub seed: u64,
}

/// Runs `experiment` on every data kind in parallel (on the current rayon
/// pool) and applies its checks. Sweep parameters match the acceptance suite.
pub fn run_experiment(
    experiment: Experiment,
    a: &ExperimentSetup,
    grid: &Grid,
    kinds: &[RoughKind],
    th: &Thresholds,
) -> Result<(Vec<EstimateReport>, Vec<Check>)> {
    let opts = SolveOptions::with_tol(th.solver_tol);
    let spec = OperatorSpec::identity(grid, a.p)?;
    let fields = kinds
        .iter()
        .map(|k| Ok((k.to_string(), rough_field(k, grid)?)))
        .collect::<Result<Vec<_>>>()?;
    let per_case = |run: &(dyn Fn(&str, &VectorField) -> Result<Vec<EstimateReport>> + Sync)| {
        fields.par_iter().map(|(id, f)| run(id, f)).collect::<Result<Vec<_>>>()
    };
    let dir = unit_perturbation(grid, a.seed.wrapping_add(1))?;
    Ok(match experiment {
        Experiment::Energy => {
            let rows: Vec<EstimateReport> =
                per_case(&|id, f| Ok(vec![verify_energy(grid, &spec, f, a.alpha, id, &opts)?]))?
                    .into_iter()
                    .flatten()
                    .collect();
            let checks = check_energy(&rows);
            (rows, checks)
        }
        Experiment::Difference => {
            let eps = difference_eps_grid(a.p);
            let tables = per_case(&|id, f| {
                let g = f.axpy(1e-3, &dir);
                verify_difference(grid, &spec, f, &g, &eps, id, &opts)
            })?;
            let checks = tables.iter().flat_map(|t| check_difference(t)).collect();
            (tables.concat(), checks)
        }
        Experiment::Stability => {
            let ts = [1e-1, 1e-2, 1e-3, 1e-4];
            let tables = per_case(&|id, f| stability_sweep(grid, &spec, f, &dir, &ts, a.alpha, id, &opts))?;
            let checks = tables.iter().flat_map(|t| check_stability(t, th)).collect();
            (tables.concat(), checks)
        }
        Experiment::Comparison => {
            let ss = [0.0, 1.0, 0.5, 0.25, 0.125];
            let tables = per_case(&|id, f| comparison_sweep(grid, a.p, a.alpha, f, &ss, id, &opts))?;
            let checks = tables.iter().flat_map(|t| check_comparison(t, th)).collect();
            (tables.concat(), checks)
        }
        Experiment::Uniqueness => {
            let tables = per_case(&|id, f| verify_uniqueness(grid, &spec, f, a.seed, id, &opts))?;
            let checks = tables.iter().flat_map(|t| check_uniqueness(t, th)).collect();
            (tables.concat(), checks)
        }
        Experiment::Cauchy => {
            let levels = [2.0, 4.0, 8.0, 16.0, 32.0];
            let tables = per_case(&|id, f| cauchy_reports(grid, &spec, f, &levels, a.alpha, id, &opts))?;
            let checks = tables.iter().flat_map(|t| check_cauchy(t, th)).collect();
            (tables.concat(), checks)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.to_string().parse::<Experiment>().unwrap(), e);
        }
        assert!("energies".parse::<Experiment>().is_err());
    }

    #[test]
    fn energy_on_one_case() {
        let grid = Grid::new(6).unwrap();
        let setup = ExperimentSetup {
            p: 3.0,
            alpha: 1.0,
            seed: 1,
        };
        let kinds = [RoughKind::smooth_random(3)];
        let (rows, checks) = run_experiment(Experiment::Energy, &setup, &grid, &kinds, &Thresholds::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(all_passed(&checks));
    }
}
