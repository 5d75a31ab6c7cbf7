//! Dense measurement-form covariance, independent of the information-form
//! code path:
//!
//! `Σ = C − C Oᵀ (O C Oᵀ + S C_v Sᵀ)⁻¹ O C`, with `C` the dense prior
//! covariance, `O = S C_{1:K}` and `S` the 0/1 selection matrix of the
//! schedule. All matrices are formed explicitly.

use nalgebra::DMatrix;

use crate::caps::OracleCaps;
use crate::error::Result;
use crate::linalg::{symmetrize, SpdFactor};
use crate::model::{Schedule, SystemModel};
use crate::prior::dense_prior_covariance;

/// Stacked sensor matrix `C_{1:K} = blockdiag(C, …, C)`, `C = [C_1; …; C_m]`,
/// and the matching noise covariance `blockdiag(V_1, …, V_m)` repeated `K` times.
fn stacked_measurement(model: &SystemModel) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = model.state_dim();
    let k_count = model.horizon();
    let d: usize = model.sensors().iter().map(|s| s.output_dim()).sum();
    let mut c = DMatrix::zeros(d * k_count, n * k_count);
    let mut v = DMatrix::zeros(d * k_count, d * k_count);
    for k in 0..k_count {
        let mut row = k * d;
        for s in model.sensors() {
            let di = s.output_dim();
            c.view_mut((row, k * n), (di, n)).copy_from(&s.c);
            v.view_mut((row, row), (di, di)).copy_from(&s.v);
            row += di;
        }
    }
    (c, v)
}

/// Selection matrix picking the rows of the scheduled sensors.
fn selection_matrix(model: &SystemModel, s: &Schedule) -> DMatrix<f64> {
    let dims: Vec<usize> = model.sensors().iter().map(|s| s.output_dim()).collect();
    let d: usize = dims.iter().sum();
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, &di| {
            let at = *acc;
            *acc += di;
            Some(at)
        })
        .collect();
    let rows: usize = (0..s.horizon()).flat_map(|k| s.at(k)).map(|&i| dims[i]).sum();
    let mut sel = DMatrix::zeros(rows, d * model.horizon());
    let mut r = 0;
    for k in 0..s.horizon() {
        for &i in s.at(k) {
            for j in 0..dims[i] {
                sel[(r, k * d + offsets[i] + j)] = 1.0;
                r += 1;
            }
        }
    }
    sel
}

/// Error covariance of the batch estimate under schedule `s`.
pub fn measurement_form_covariance(
    model: &SystemModel,
    s: &Schedule,
    caps: &OracleCaps,
) -> Result<DMatrix<f64>> {
    s.check_indices(model.horizon(), model.sensor_count())?;
    let prior = dense_prior_covariance(model, caps)?;
    if s.total_selected() == 0 {
        return Ok(prior);
    }
    let (c, v) = stacked_measurement(model);
    let sel = selection_matrix(model, s);
    let o = &sel * c;
    let noise = &sel * v * sel.transpose();
    let oc = &o * &prior;
    let innovation = symmetrize(&(&oc * o.transpose() + noise));
    let gain = SpdFactor::new(&innovation, "innovation covariance")?.solve(&oc);
    Ok(symmetrize(&(&prior - oc.transpose() * gain)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rel_frobenius;
    use crate::model::SystemKind;
    use crate::objective::build_evaluator;
    use crate::scenario::random_scenario;
    use crate::scheduler::random_schedule;

    #[test]
    fn agrees_with_information_form() {
        for seed in 0..12 {
            let m = random_scenario(seed, 3, 3, 4, 2, SystemKind::ALL[seed as usize % 4]).unwrap();
            let s = random_schedule(&m, seed);
            let sigma = measurement_form_covariance(&m, &s, &OracleCaps::default()).unwrap();
            let ev = build_evaluator(&m).unwrap();
            let j = ev.assemble_information(&s).unwrap().to_dense();
            let inv = SpdFactor::new(&j, "J").unwrap().inverse();
            assert!(rel_frobenius(&inv, &sigma) < 1e-8, "seed {seed}");
        }
    }

    #[test]
    fn selection_picks_rows() {
        let m = random_scenario(1, 2, 3, 2, 2, SystemKind::DiscreteTimeInvariant).unwrap();
        let s = Schedule::from_sets(vec![vec![2], vec![0, 1]]).unwrap();
        let sel = selection_matrix(&m, &s);
        let rows: usize = [2, 0, 1]
            .iter()
            .map(|&i| m.sensors()[i].output_dim())
            .sum();
        assert_eq!(sel.nrows(), rows);
        assert_eq!(sel.iter().filter(|&&x| x == 1.0).count(), rows);
    }

    #[test]
    fn empty_schedule_is_prior() {
        let m = random_scenario(3, 2, 2, 3, 1, SystemKind::ContinuousTimeVariant).unwrap();
        let caps = OracleCaps::default();
        let sigma = measurement_form_covariance(&m, &Schedule::empty(3), &caps).unwrap();
        assert_eq!(sigma, dense_prior_covariance(&m, &caps).unwrap());
    }
}
