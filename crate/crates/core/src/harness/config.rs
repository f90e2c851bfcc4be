use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    VerifySigma,
    BuildMeasure,
    VerifyBoundary,
    NestedBuild,
    Moments,
    Kronecker,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::VerifySigma => "verify-sigma",
            Kind::BuildMeasure => "build-measure",
            Kind::VerifyBoundary => "verify-boundary",
            Kind::NestedBuild => "nested-build",
            Kind::Moments => "moments",
            Kind::Kronecker => "kronecker",
        })
    }
}

pub const MAX_LEVELS: u32 = 8;
pub const MAX_BUDGET: u64 = 10_000_000_000;
pub const MIN_EPS: f64 = 1e-6;

/// One experiment. Every field is optional so that a config file and
/// command-line flags can be layered with [`ExperimentConfig::overlay`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    pub poly: Option<PathBuf>,
    pub mu: Option<PathBuf>,
    pub atoms: Option<PathBuf>,
    pub plan: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Window records of `nested-build`, as CSV.
    pub windows: Option<PathBuf>,
    pub sigma: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub levels: Option<u32>,
    pub growth: Option<String>,
    pub budget: Option<u64>,
    pub lebesgue: Option<bool>,
    pub pairs: Option<String>,
    pub t_max: Option<f64>,
    pub dim: Option<usize>,
    pub theta: Option<Vec<f64>>,
    pub eps: Option<f64>,
    pub t_min: Option<f64>,
    pub mc_samples: Option<u64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("config: {e}")))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: ExperimentConfig) -> Self {
        overlay_fields!(
            self, top, kind, poly, mu, atoms, plan, out, windows, sigma, t_grid, tol, levels,
            growth, budget, lebesgue, pairs, t_max, dim, theta, eps, t_min, mc_samples, seed,
            threads
        );
        self
    }

    pub(crate) fn require<'a, T>(&self, value: &'a Option<T>, flag: &str) -> Result<&'a T> {
        value.as_ref().ok_or_else(|| {
            let kind = self.kind.map(|k| k.to_string()).unwrap_or_default();
            Error::Invalid(format!("{kind} requires --{flag}"))
        })
    }

    pub(crate) fn levels_checked(&self) -> Result<u32> {
        let levels = *self.require(&self.levels, "levels")?;
        if !(1..=MAX_LEVELS).contains(&levels) {
            return Err(Error::Invalid(format!("--levels must be in 1..={MAX_LEVELS}, got {levels}")));
        }
        Ok(levels)
    }

    pub(crate) fn budget_checked(&self, default: u64) -> Result<u64> {
        let budget = self.budget.unwrap_or(default);
        if budget == 0 || budget > MAX_BUDGET {
            return Err(Error::Invalid(format!(
                "--budget must be in 1..={MAX_BUDGET}, got {budget}"
            )));
        }
        Ok(budget)
    }

    pub(crate) fn eps_checked(&self) -> Result<f64> {
        let eps = *self.require(&self.eps, "eps")?;
        if !(eps > MIN_EPS && eps < std::f64::consts::PI) {
            return Err(Error::Invalid(format!("--eps must lie in ({MIN_EPS}, π), got {eps}")));
        }
        Ok(eps)
    }
}
