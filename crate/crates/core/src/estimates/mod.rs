//! Experiments that measure both sides of the a-priori estimates on
//! discrete solutions, and the plumbing around them: report rows, CSV,
//! thresholds and the worker pool.

mod checks;
mod experiments;
mod runner;
mod thresholds;

pub use checks::*;
pub use experiments::*;
pub use runner::{run_experiment, Experiment, ExperimentSetup};
pub use thresholds::Thresholds;

use std::io::Write;

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "ROUGH_PLAPLACE_THREADS";

/// One measured instance of an inequality `lhs <= C rhs`.
///
/// `params` are extra input columns printed between `n` and `lhs`; `extra`
/// are derived columns printed after `ratio`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub id: String,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub n: usize,
    pub params: Vec<(&'static str, f64)>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub extra: Vec<(&'static str, f64)>,
}

impl EstimateReport {
    pub fn new(id: impl Into<String>, p: f64, alpha: f64, n: usize, lhs: f64, rhs: f64) -> Self {
        Self {
            id: id.into(),
            p,
            q: conjugate(p),
            alpha,
            n,
            params: Vec::new(),
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
            extra: Vec::new(),
        }
    }

    pub fn with_param(mut self, name: &'static str, value: f64) -> Self {
        self.params.push((name, value));
        self
    }

    pub fn with_extra(mut self, name: &'static str, value: f64) -> Self {
        self.extra.push((name, value));
        self
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params
            .iter()
            .chain(&self.extra)
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["id", "p", "q", "alpha", "n"].iter().map(|s| s.to_string()).collect();
        h.extend(self.params.iter().map(|(k, _)| k.to_string()));
        h.extend(["lhs", "rhs", "ratio"].iter().map(|s| s.to_string()));
        h.extend(self.extra.iter().map(|(k, _)| k.to_string()));
        h
    }

    pub fn record(&self) -> Vec<String> {
        let mut r = vec![
            self.id.clone(),
            fmt(self.p),
            fmt(self.q),
            fmt(self.alpha),
            self.n.to_string(),
        ];
        r.extend(self.params.iter().map(|(_, v)| fmt(*v)));
        r.extend([fmt(self.lhs), fmt(self.rhs), fmt(self.ratio)]);
        r.extend(self.extra.iter().map(|(_, v)| fmt(*v)));
        r
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

/// `lhs / rhs`, with `0 / 0 = 0` and `x / 0 = inf` for `x > 0`.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `gamma = alpha (p - 2) / p`.
pub fn gamma(p: f64, alpha: f64) -> f64 {
    alpha * (p - 2.0) / p
}

/// Writes reports as one CSV table. Rows must share the header of the first row.
pub fn write_reports<W: Write>(out: W, reports: &[EstimateReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = reports.first() {
        let header = first.header();
        w.write_record(&header)?;
        for r in reports {
            if r.header() != header {
                return Err(Error::invalid(format!(
                    "report `{}` has a different column layout",
                    r.id
                )));
            }
            w.write_record(r.record())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Worker pool sized by `ROUGH_PLAPLACE_THREADS` (default: rayon's choice).
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t >= 1 => t,
            _ => {
                return Err(Error::invalid(format!(
                    "{THREADS_ENV} must be a positive integer, got `{v}`"
                )))
            }
        },
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}
