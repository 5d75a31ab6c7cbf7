//! Batch prior over the stacked state `x_{1:K}`.
//!
//! The prior information matrix (inverse covariance of `x_{1:K}`) is block
//! tri-diagonal and is fully described by the interval transition matrices
//! `Φ_k` and accumulated process-noise covariances `Q_k`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::block_tridiagonal::BlockTridiagonal;
use crate::caps::OracleCaps;
use crate::error::{Error, Result};
use crate::linalg::{symmetrize, SpdFactor};
use crate::model::SystemModel;

/// State propagation over one measurement interval `[t_k, t_{k+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalPropagation {
    pub transition: DMatrix<f64>,
    pub noise_cov: DMatrix<f64>,
}

/// `exp(A Δt)` and `∫₀^Δt exp(As) G exp(Aᵀs) ds` from one exponential of the
/// augmented matrix `[[−A, G], [0, Aᵀ]] Δt`.
pub fn van_loan(a: &DMatrix<f64>, g: &DMatrix<f64>, dt: f64) -> IntervalPropagation {
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(-a * dt));
    m.view_mut((0, n), (n, n)).copy_from(&(g * dt));
    m.view_mut((n, n), (n, n)).copy_from(&(a.transpose() * dt));
    let e = m.exp();
    let transition = e.view((n, n), (n, n)).transpose();
    let noise_cov = symmetrize(&(&transition * e.view((0, n), (n, n))));
    IntervalPropagation {
        transition,
        noise_cov,
    }
}

/// Transition and process-noise covariance for interval `k` (0-based,
/// `t_{k+1} → t_{k+2}` in 1-based time labels).
pub fn discretize_interval(model: &SystemModel, k: usize) -> Result<IntervalPropagation> {
    let intervals = model.horizon().saturating_sub(1);
    if k >= intervals {
        return Err(Error::InvalidArgument(format!(
            "interval index {k} out of range ({intervals} intervals)"
        )));
    }
    let (a, f, w) = model.interval_matrices(k);
    let times = model.measurement_times();
    let dt = times[k + 1] - times[k];
    let g = symmetrize(&(f * w * f.transpose()));
    let prop = if model.kind().is_continuous() {
        van_loan(a, &g, dt)
    } else if model.kind().is_time_variant() {
        IntervalPropagation {
            transition: a.clone(),
            noise_cov: g,
        }
    } else {
        // Δ steps of x ← A x + F w, Δ = integer gap between step indices.
        let steps = dt as usize;
        let mut transition = a.clone();
        let mut noise_cov = g.clone();
        for _ in 1..steps {
            noise_cov = symmetrize(&(a * &noise_cov * a.transpose() + &g));
            transition = a * transition;
        }
        IntervalPropagation {
            transition,
            noise_cov,
        }
    };
    SpdFactor::new(&prop.noise_cov, &format!("Q_{}", k + 1))?;
    Ok(prop)
}

/// All `K − 1` interval propagations, in order.
pub fn discretize_all(model: &SystemModel) -> Result<Vec<IntervalPropagation>> {
    (0..model.horizon().saturating_sub(1))
        .into_par_iter()
        .map(|k| discretize_interval(model, k))
        .collect()
}

/// Block tri-diagonal inverse covariance of `x_{1:K}`:
///
/// - `diag₁ = P₁⁻¹ + Φ₁ᵀ Q₁⁻¹ Φ₁`
/// - `diag_k = Q_{k−1}⁻¹ + Φ_kᵀ Q_k⁻¹ Φ_k`
/// - `diag_K = Q_{K−1}⁻¹`
/// - `upper_k = −Φ_kᵀ Q_k⁻¹`
pub fn build_prior_information(model: &SystemModel) -> Result<BlockTridiagonal> {
    let props = discretize_all(model)?;
    prior_information_from(model, &props)
}

pub fn prior_information_from(
    model: &SystemModel,
    props: &[IntervalPropagation],
) -> Result<BlockTridiagonal> {
    let k_count = model.horizon();
    let p1 = SpdFactor::new(model.initial_state_cov(), "P_1")?;
    let mut diag = vec![p1.inverse()];
    diag.extend((1..k_count).map(|_| DMatrix::zeros(model.state_dim(), model.state_dim())));
    let mut upper = Vec::with_capacity(k_count.saturating_sub(1));
    for (k, prop) in props.iter().enumerate() {
        let q = SpdFactor::new(&prop.noise_cov, &format!("Q_{}", k + 1))?;
        let y = q.half_solve(&prop.transition);
        diag[k] += y.transpose() * y;
        diag[k + 1] += q.inverse();
        upper.push(-q.solve(&prop.transition).transpose());
    }
    BlockTridiagonal::new(diag, upper)
}

/// Dense covariance of `x_{1:K}` by forward propagation; block `(j, k)`,
/// `j ≥ k`, is `Φ(t_j, t_k) Var(x(t_k))`.
pub fn dense_prior_covariance(model: &SystemModel, caps: &OracleCaps) -> Result<DMatrix<f64>> {
    let n = model.state_dim();
    let k_count = model.horizon();
    caps.check_dense(n * k_count)?;
    let props = discretize_all(model)?;

    let mut vars = Vec::with_capacity(k_count);
    vars.push(model.initial_state_cov().clone());
    for (k, p) in props.iter().enumerate() {
        let next = &p.transition * &vars[k] * p.transition.transpose() + &p.noise_cov;
        vars.push(symmetrize(&next));
    }

    let mut out = DMatrix::zeros(n * k_count, n * k_count);
    for (k, var) in vars.iter().enumerate() {
        let mut block = var.clone();
        for j in k..k_count {
            out.view_mut((j * n, k * n), (n, n)).copy_from(&block);
            out.view_mut((k * n, j * n), (n, n)).copy_from(&block.transpose());
            if let Some(p) = props.get(j) {
                block = &p.transition * block;
            }
        }
    }
    Ok(symmetrize(&out))
}
