//! Trace lower bound, minimum sensor count, and confidence-ellipsoid volume.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, SpdFactor};
use crate::model::SystemModel;
use crate::objective::ObjectiveEvaluator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Largest diagonal entry of the prior information `C(x_{1:K})⁻¹`.
    pub sigma_w_inv: f64,
    /// `max_i ‖V_i⁻¹‖₂`.
    pub sigma_v_inv: f64,
    /// Squared spectral norm of the stacked sensor matrix `[C_1; …; C_m]`.
    pub c_norm_sq: f64,
    pub r_max: usize,
    pub n: usize,
    pub k: usize,
}

impl BoundInputs {
    pub fn new(ev: &ObjectiveEvaluator, model: &SystemModel) -> Result<Self> {
        let sigma_w_inv = ev
            .prior()
            .diag()
            .iter()
            .flat_map(|d| d.diagonal().iter().copied().collect::<Vec<_>>())
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sigma_v_inv: f64 = 0.0;
        for (i, s) in model.sensors().iter().enumerate() {
            let vinv = SpdFactor::new(&s.v, &format!("V_{}", i + 1))?.inverse();
            sigma_v_inv = sigma_v_inv.max(spectral_norm(&vinv));
        }
        let rows: usize = model.sensors().iter().map(|s| s.output_dim()).sum();
        let n = model.state_dim();
        let mut stacked = DMatrix::zeros(rows, n);
        let mut at = 0;
        for s in model.sensors() {
            stacked.view_mut((at, 0), (s.output_dim(), n)).copy_from(&s.c);
            at += s.output_dim();
        }
        let c_norm = if rows == 0 { 0.0 } else { spectral_norm(&stacked) };
        Ok(Self {
            sigma_w_inv,
            sigma_v_inv,
            c_norm_sq: c_norm * c_norm,
            r_max: model.budgets().iter().copied().max().unwrap_or(0),
            n,
            k: model.horizon(),
        })
    }

    /// `n / (σ_v⁻¹ r_max ‖C‖² + σ_w⁻¹ / K)`.
    pub fn error_lower_bound(&self) -> f64 {
        let n = self.n as f64;
        n / (self.sigma_v_inv * self.r_max as f64 * self.c_norm_sq + self.sigma_w_inv / self.k as f64)
    }

    /// `(n/α − σ_w⁻¹/K) / (σ_v⁻¹ ‖C‖²)`; may be ≤ 0, and is ±∞ when no sensor
    /// carries information.
    pub fn min_sensors_for_error(&self, alpha: f64) -> Result<f64> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "target trace must be positive and finite, got {alpha}"
            )));
        }
        let numer = self.n as f64 / alpha - self.sigma_w_inv / self.k as f64;
        Ok(numer / (self.sigma_v_inv * self.c_norm_sq))
    }
}

/// Lower bound on `tr Σ(x̂_{1:K} | s)` over all feasible `s`.
pub fn error_lower_bound(ev: &ObjectiveEvaluator, model: &SystemModel) -> Result<f64> {
    Ok(BoundInputs::new(ev, model)?.error_lower_bound())
}

/// Per-time sensor count any schedule must reach for trace `alpha`.
pub fn min_sensors_for_error(ev: &ObjectiveEvaluator, model: &SystemModel, alpha: f64) -> Result<f64> {
    BoundInputs::new(ev, model)?.min_sensors_for_error(alpha)
}

/// `ln Γ(dim/2 + 1)`, exact recursion down to `Γ(1) = 1` or `Γ(1/2) = √π`.
fn ln_gamma_half_plus_one(dim: usize) -> f64 {
    let mut x = dim as f64 / 2.0 + 1.0;
    let mut acc = 0.0;
    while x > 1.25 {
        x -= 1.0;
        acc += x.ln();
    }
    if x < 1.0 {
        acc += 0.5 * std::f64::consts::PI.ln();
    }
    acc
}

/// Log-volume of `{x : xᵀ Σ⁻¹ x ≤ ε}` in `dim` dimensions given `ln det Σ`.
pub fn ellipsoid_log_volume(logdet_sigma: f64, epsilon: f64, dim: usize) -> Result<f64> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let half = dim as f64 / 2.0;
    Ok(half * (epsilon * std::f64::consts::PI).ln() - ln_gamma_half_plus_one(dim) + 0.5 * logdet_sigma)
}
