use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Numerical knobs shared by every module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabConfig {
    /// Eigenvalues within `cluster_tol * max(rho, 1)` are one spectral point.
    pub cluster_tol: f64,
    /// Relative singular-value cutoff for classical rank.
    pub rank_tol: f64,
    /// Accepted `|p^2 - p|` for projections.
    pub idempotency_tol: f64,
    /// Resolvent points closer than `singular_floor * max(rho, 1)` to the
    /// spectrum are rejected.
    pub singular_floor: f64,
    /// Random probes for rank and multiplicity.
    pub probes: usize,
    /// Trapezoid nodes per contour.
    pub nodes: usize,
    /// Size of the perturbation `x = 1 + eps * g` used to count multiplicities.
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            cluster_tol: 1e-6,
            rank_tol: 1e-9,
            idempotency_tol: 1e-8,
            singular_floor: 1e-10,
            probes: 64,
            nodes: 64,
            perturbation: 1e-3,
            seed: 0,
        }
    }
}

impl LabConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cluster_tol", self.cluster_tol),
            ("rank_tol", self.rank_tol),
            ("idempotency_tol", self.idempotency_tol),
            ("singular_floor", self.singular_floor),
            ("perturbation", self.perturbation),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(LabError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.probes == 0 {
            return Err(LabError::InvalidParameter(
                "probes must be at least 1".into(),
            ));
        }
        if self.nodes < 3 {
            return Err(LabError::InvalidParameter(
                "nodes must be at least 3".into(),
            ));
        }
        Ok(())
    }
}
