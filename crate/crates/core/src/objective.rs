//! The scheduling objective `log det Σ(x̂_{1:K} | S_{1:K})`, evaluated in
//! information form:
//!
//! `Σ⁻¹ = J_prior + Σ_k Σ_{i ∈ S_k} E_k ΔU_i E_kᵀ`, with `ΔU_i = C_iᵀ V_i⁻¹ C_i`
//! placed on diagonal block `k`. The sum stays block tri-diagonal, so one
//! evaluation costs `O(K)` block operations.

use nalgebra::DMatrix;

use crate::block_tridiagonal::BlockTridiagonal;
use crate::caps::OracleCaps;
use crate::error::{Error, Result};
use crate::linalg::{symmetrize, SpdFactor};
use crate::model::{Schedule, SystemModel};
use crate::prior::build_prior_information;

/// Information contributed by one activation of sensor `sensor`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorInfoBlock {
    pub sensor: usize,
    pub info: DMatrix<f64>,
}

impl SensorInfoBlock {
    pub fn new(sensor: usize, c: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<Self> {
        let vf = SpdFactor::new(v, &format!("V_{}", sensor + 1))?;
        let y = vf.half_solve(c);
        Ok(Self {
            sensor,
            info: symmetrize(&(y.transpose() * y)),
        })
    }
}

/// Prior information plus per-sensor increments; immutable once built.
#[derive(Debug, Clone)]
pub struct ObjectiveEvaluator {
    prior: BlockTridiagonal,
    sensor_info: Vec<SensorInfoBlock>,
    prior_log_det: f64,
}

pub fn build_evaluator(model: &SystemModel) -> Result<ObjectiveEvaluator> {
    ObjectiveEvaluator::new(model)
}

impl ObjectiveEvaluator {
    pub fn new(model: &SystemModel) -> Result<Self> {
        let prior = build_prior_information(model)?;
        let sensor_info = model
            .sensors()
            .iter()
            .enumerate()
            .map(|(i, s)| SensorInfoBlock::new(i, &s.c, &s.v))
            .collect::<Result<Vec<_>>>()?;
        let prior_log_det = -prior.log_det()?;
        Ok(Self {
            prior,
            sensor_info,
            prior_log_det,
        })
    }

    pub fn prior(&self) -> &BlockTridiagonal {
        &self.prior
    }

    pub fn sensor_info(&self) -> &[SensorInfoBlock] {
        &self.sensor_info
    }

    pub fn state_dim(&self) -> usize {
        self.prior.block_dim()
    }

    pub fn horizon(&self) -> usize {
        self.prior.block_count()
    }

    pub fn sensor_count(&self) -> usize {
        self.sensor_info.len()
    }

    /// `log det C(x_{1:K})`, the objective of the empty schedule.
    pub fn prior_log_det(&self) -> f64 {
        self.prior_log_det
    }

    fn increment(&self, set: &[usize]) -> Option<DMatrix<f64>> {
        let (first, rest) = set.split_first()?;
        let mut acc = self.sensor_info[*first].info.clone();
        for &i in rest {
            acc += &self.sensor_info[i].info;
        }
        Some(acc)
    }

    /// `J(s)`: prior information with the scheduled sensor increments added.
    pub fn assemble_information(&self, s: &Schedule) -> Result<BlockTridiagonal> {
        s.check_indices(self.horizon(), self.sensor_count())?;
        let mut j = self.prior.clone();
        for k in 0..self.horizon() {
            if let Some(inc) = self.increment(s.at(k)) {
                j.add_to_diag(k, &inc);
            }
        }
        Ok(j)
    }

    /// `log det Σ(x̂_{1:K} | s)`.
    pub fn objective_logdet(&self, s: &Schedule) -> Result<f64> {
        s.check_indices(self.horizon(), self.sensor_count())?;
        if s.total_selected() == 0 {
            return Ok(self.prior_log_det);
        }
        Ok(-self.prior.log_det_with(|k| self.increment(s.at(k)))?)
    }

    /// `ρ = f(s) − f(s ∪ {(k, i)})`.
    pub fn marginal_gain(&self, s: &Schedule, k: usize, i: usize) -> Result<f64> {
        let base = self.objective_logdet(s)?;
        self.marginal_gain_from(s, base, k, i)
    }

    /// Marginal gain when `f(s)` is already known.
    pub fn marginal_gain_from(&self, s: &Schedule, base: f64, k: usize, i: usize) -> Result<f64> {
        if k >= self.horizon() || i >= self.sensor_count() {
            return Err(Error::InvalidSchedule(format!(
                "candidate (time {k}, sensor {i}) out of range"
            )));
        }
        let grown = s.with(k, i)?;
        Ok(base - self.objective_logdet(&grown)?)
    }

    /// `tr Σ(x̂_{1:K} | s) = ‖L⁻¹‖_F²` for `J(s) = L Lᵀ`.
    pub fn batch_error_trace(&self, s: &Schedule, caps: &OracleCaps) -> Result<f64> {
        let size = self.state_dim() * self.horizon();
        caps.check_dense(size)?;
        let j = self.assemble_information(s)?.to_dense();
        let f = SpdFactor::new(&j, "information matrix")?;
        let linv = f.half_solve(&DMatrix::identity(size, size));
        Ok(linv.norm_squared())
    }
}

pub fn assemble_information(ev: &ObjectiveEvaluator, s: &Schedule) -> Result<BlockTridiagonal> {
    ev.assemble_information(s)
}

pub fn block_tridiag_logdet(j: &BlockTridiagonal) -> Result<f64> {
    j.log_det()
}

pub fn objective_logdet(ev: &ObjectiveEvaluator, s: &Schedule) -> Result<f64> {
    ev.objective_logdet(s)
}

pub fn marginal_gain(ev: &ObjectiveEvaluator, s: &Schedule, k: usize, i: usize) -> Result<f64> {
    ev.marginal_gain(s, k, i)
}

pub fn batch_error_trace(ev: &ObjectiveEvaluator, s: &Schedule, caps: &OracleCaps) -> Result<f64> {
    ev.batch_error_trace(s, caps)
}
