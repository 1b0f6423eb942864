use std::path::Path;

use crate::error::{Error, Result};

/// Pass/fail thresholds of the verification suite.
///
/// The defaults are the acceptance values; a plain `key = value` file can
/// override any subset (`#` starts a comment).
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    /// Luxemburg norm of the extremal field must equal 1 within this.
    pub counterexample_norm_tol: f64,
    /// Relative distance of `eps^(alpha/q) ||f_eps||_(q-eps)` to `e^(-1/q)`.
    pub counterexample_limit_rel: f64,
    /// Max/min of zygmund/luxemburg per parameter pair.
    pub equivalence_band: f64,
    /// Relative move of the band endpoints when `n` doubles.
    pub equivalence_refinement: f64,
    pub embedding_slack: f64,
    pub hodge_residual: f64,
    pub manufactured_error: f64,
    pub poisson_error: f64,
    pub uniqueness_error: f64,
    /// Relative change of the max energy ratio from `n = 32` to `n = 64`.
    pub energy_refinement: f64,
    pub homogeneity_rel: f64,
    /// Allowed relative increase of `lhs` as `t` decreases.
    pub stability_monotone_slack: f64,
    /// Max factor between ratios at consecutive decades of `t`.
    pub stability_decade_band: f64,
    pub comparison_band: f64,
    /// Relative Zygmund distance between the last truncated and the direct solve.
    pub cauchy_final_rel: f64,
    /// Residual tolerance handed to every nonlinear solve.
    pub solver_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            counterexample_norm_tol: 1e-6,
            counterexample_limit_rel: 0.05,
            equivalence_band: 20.0,
            equivalence_refinement: 0.15,
            embedding_slack: 1e-10,
            hodge_residual: 1e-10,
            manufactured_error: 1e-8,
            poisson_error: 1e-9,
            uniqueness_error: 1e-8,
            energy_refinement: 0.30,
            homogeneity_rel: 1e-10,
            stability_monotone_slack: 0.05,
            stability_decade_band: 10.0,
            comparison_band: 10.0,
            cauchy_final_rel: 0.01,
            solver_tol: 1e-10,
        }
    }
}

impl Thresholds {
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: i + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("`{}` is not a number", value.trim())))?;
            if !(value.is_finite() && value > 0.0) {
                return Err(parse_err(format!("threshold must be positive and finite, got {value}")));
            }
            let key = key.trim();
            let slot = t
                .slot(key)
                .ok_or_else(|| parse_err(format!("unknown threshold `{key}`")))?;
            *slot = value;
        }
        Ok(t)
    }

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "counterexample_norm_tol" => &mut self.counterexample_norm_tol,
            "counterexample_limit_rel" => &mut self.counterexample_limit_rel,
            "equivalence_band" => &mut self.equivalence_band,
            "equivalence_refinement" => &mut self.equivalence_refinement,
            "embedding_slack" => &mut self.embedding_slack,
            "hodge_residual" => &mut self.hodge_residual,
            "manufactured_error" => &mut self.manufactured_error,
            "poisson_error" => &mut self.poisson_error,
            "uniqueness_error" => &mut self.uniqueness_error,
            "energy_refinement" => &mut self.energy_refinement,
            "homogeneity_rel" => &mut self.homogeneity_rel,
            "stability_monotone_slack" => &mut self.stability_monotone_slack,
            "stability_decade_band" => &mut self.stability_decade_band,
            "comparison_band" => &mut self.comparison_band,
            "cauchy_final_rel" => &mut self.cauchy_final_rel,
            "solver_tol" => &mut self.solver_tol,
            _ => return None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_matches_defaults() {
        let text = include_str!("../../../../config/thresholds.conf");
        assert_eq!(Thresholds::parse(text).unwrap(), Thresholds::default());
    }

    #[test]
    fn overrides_and_errors() {
        let t = Thresholds::parse("# c\ncomparison_band = 50 # wider\n\n").unwrap();
        assert_eq!(t.comparison_band, 50.0);
        assert!(matches!(
            Thresholds::parse("\nbogus = 1"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Thresholds::parse("solver_tol"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(Thresholds::parse("solver_tol = -1"), Err(Error::Parse { .. })));
    }
}
