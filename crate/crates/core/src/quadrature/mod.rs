//! Numerical integration primitives and limit extrapolation.

mod adaptive;
mod angular;
mod extrapolate;
mod gauss;
mod rn;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adaptive::{
    integrate_interval, integrate_radial, integrate_radial_with, pairwise_sum, RadialDomain,
};
pub use angular::{angular_average, angular_average_about, shell_average};
pub use extrapolate::{extrapolate_limit, Extrapolation};
pub use gauss::gauss_legendre;
pub use rn::{integrate_rn, integrate_rn_mc};

/// Tolerances and limits shared by every integrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: usize,
    pub mc_samples: usize,
    pub rng_seed: u64,
    pub truncation_tail_tol: f64,
    /// Cap on subintervals per adaptive call.
    pub max_intervals: usize,
    /// Node count for sphere averages in N = 2, 3.
    pub angular_order: usize,
    /// Allowed h vs 2h disagreement for lattice sums of grid functions.
    pub grid_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_depth: 40,
            mc_samples: 1_000_000,
            rng_seed: 0xA5A5,
            truncation_tail_tol: 1e-14,
            max_intervals: 4000,
            angular_order: 64,
            grid_tol: 1e-4,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("truncation_tail_tol", self.truncation_tail_tol),
            ("grid_tol", self.grid_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.max_depth < 1 || self.max_intervals < 2 || self.angular_order < 2 {
            return Err(Error::InvalidParameter(
                "max_depth ≥ 1, max_intervals ≥ 2 and angular_order ≥ 2 are required".into(),
            ));
        }
        Ok(())
    }

    /// Copy with tolerances scaled down, for integrals nested inside other integrals.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl IntegralResult {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        }
    }

    pub(crate) fn from_pieces(pieces: &[adaptive::Piece], cfg: &QuadratureConfig) -> Self {
        let values: Vec<f64> = pieces.iter().map(|p| p.value).collect();
        let value = pairwise_sum(&values);
        let error_estimate: f64 = pieces.iter().map(|p| p.error).sum();
        let evaluations = pieces.iter().map(|p| p.evals).sum();
        let converged = pieces.iter().all(|p| p.converged)
            && error_estimate <= cfg.abs_tol.max(cfg.rel_tol * value.abs()) * (1.0 + 1e-9);
        Self {
            value,
            error_estimate,
            evaluations,
            converged,
        }
    }

    /// Sum of two results over disjoint domains.
    pub fn combine(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            error_estimate: self.error_estimate * factor.abs(),
            ..self
        }
    }

    /// Fail with context when the integrator gave up.
    pub fn require_converged(self, what: impl FnOnce() -> String) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence(format!(
                "{} (value {:e}, error estimate {:e} after {} evaluations)",
                what(),
                self.value,
                self.error_estimate,
                self.evaluations
            )))
        }
    }
}
