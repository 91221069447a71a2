//! Numerical thresholds shared by the constructions, the oracle and the
//! verification suites. Every value can be overridden through the run
//! configuration; the defaults below are what the test-suite pins.

use serde::{Deserialize, Serialize};

/// `α(β♯,β♯)` at or below this is treated as `β = 0` (Riemannian case).
pub const RIEMANNIAN_LENGTH_SQ: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative spread allowed in sampled `|β♯|²` for the constancy verdict.
    pub length: f64,
    /// Residuals of exact algebraic identities (skewness, antisymmetry, ...).
    pub algebraic: f64,
    /// Parallel-transport drift bound.
    pub ode: f64,
    /// Frame-component versus closed-form agreement, oracle agreement.
    pub agreement: f64,
    /// Pointwise `α(∇*_X β♯, β♯) = 0` test and oracle feasibility.
    pub feasibility: f64,
    /// Singular values below `rank × σ_max` are dropped.
    pub rank: f64,
    /// `g⁻¹ g = I` check.
    pub inverse: f64,
    /// Dual-number versus central finite difference, relative.
    pub finite_difference: f64,
    /// Step of the central finite difference.
    pub fd_step: f64,
    /// Integrability defect treated as zero.
    pub integrability: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            length: 1e-9,
            algebraic: 1e-10,
            ode: 1e-8,
            agreement: 1e-8,
            feasibility: 1e-9,
            rank: 1e-10,
            inverse: 1e-12,
            finite_difference: 1e-6,
            fd_step: 1e-6,
            integrability: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn all_positive(&self) -> bool {
        [
            self.length,
            self.algebraic,
            self.ode,
            self.agreement,
            self.feasibility,
            self.rank,
            self.inverse,
            self.finite_difference,
            self.fd_step,
            self.integrability,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0)
    }
}
