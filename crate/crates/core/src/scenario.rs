//! Scenario file format and the seeded scenario generator.
//!
//! A scenario is one JSON object:
//!
//! ```json
//! {
//!   "kind": "continuous_time_invariant",
//!   "state_dim": 2,
//!   "dynamics": [[0.0, 1.0], [-1.0, -0.5]],
//!   "noise_input": [[1.0, 0.0], [0.0, 1.0]],
//!   "process_noise_cov": [[1.0, 0.0], [0.0, 1.0]],
//!   "initial_state_cov": [[1.0, 0.0], [0.0, 1.0]],
//!   "measurement_times": [0.0, 1.0, 2.0],
//!   "sensors": [{ "C": [[1.0, 0.0]], "V": [[0.5]] }],
//!   "budgets": [1, 1, 1]
//! }
//! ```
//!
//! Time-variant kinds give `dynamics`, `noise_input` and `process_noise_cov`
//! as lists of `K − 1` matrices, one per measurement interval. The optional
//! `input_matrix` (B) and `input` (u) keys are accepted and ignored by every
//! covariance computation.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{validate_model, ModelCandidate, Sensor, SystemKind, SystemModel};

pub type RowMajor = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixOrList {
    One(RowMajor),
    Many(Vec<RowMajor>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSensor {
    #[serde(rename = "C")]
    pub c: RowMajor,
    #[serde(rename = "V")]
    pub v: RowMajor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub kind: SystemKind,
    pub state_dim: usize,
    pub dynamics: MatrixOrList,
    pub noise_input: MatrixOrList,
    pub process_noise_cov: MatrixOrList,
    pub initial_state_cov: RowMajor,
    pub measurement_times: Vec<f64>,
    pub sensors: Vec<RawSensor>,
    pub budgets: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_matrix: Option<RowMajor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<serde_json::Value>,
}

pub fn to_row_major(m: &DMatrix<f64>) -> RowMajor {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn from_row_major(rows: &RowMajor, field: &str, path: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|row| row.len() != c) {
        return Err(Error::DimensionMismatch {
            field: field.to_string(),
            path: format!("{path}[{i}]"),
            detail: format!("ragged matrix: row {i} has {} entries, row 0 has {c}", rows[i].len()),
        });
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl RawScenario {
    pub fn from_model(model: &SystemModel) -> Self {
        let pack = |list: &[DMatrix<f64>]| {
            if model.kind().is_time_variant() {
                MatrixOrList::Many(list.iter().map(to_row_major).collect())
            } else {
                MatrixOrList::One(to_row_major(&list[0]))
            }
        };
        RawScenario {
            kind: model.kind(),
            state_dim: model.state_dim(),
            dynamics: pack(model.dynamics()),
            noise_input: pack(model.noise_input()),
            process_noise_cov: pack(model.process_noise_cov()),
            initial_state_cov: to_row_major(model.initial_state_cov()),
            measurement_times: model.measurement_times().to_vec(),
            sensors: model
                .sensors()
                .iter()
                .map(|s| RawSensor {
                    c: to_row_major(&s.c),
                    v: to_row_major(&s.v),
                })
                .collect(),
            budgets: model.budgets().iter().map(|&r| r as i64).collect(),
            input_matrix: model.input_matrix().map(to_row_major),
            input: None,
        }
    }

    pub fn into_candidate(self) -> Result<ModelCandidate> {
        let variant = self.kind.is_time_variant();
        let unpack = |v: &MatrixOrList, field: &str, base: &str| -> Result<Vec<DMatrix<f64>>> {
            match (v, variant) {
                (MatrixOrList::One(m), false) => Ok(vec![from_row_major(m, field, base)?]),
                // `[]` parses as an empty matrix; for time-variant kinds it is the empty list
                (MatrixOrList::One(m), true) if m.is_empty() => Ok(Vec::new()),
                (MatrixOrList::Many(list), true) => list
                    .iter()
                    .enumerate()
                    .map(|(j, m)| from_row_major(m, field, &format!("{base}[{j}]")))
                    .collect(),
                (_, true) => Err(Error::DimensionMismatch {
                    field: base.to_string(),
                    path: base.to_string(),
                    detail: "time-variant kinds take a list of per-interval matrices".into(),
                }),
                (_, false) => Err(Error::DimensionMismatch {
                    field: base.to_string(),
                    path: base.to_string(),
                    detail: "time-invariant kinds take a single matrix".into(),
                }),
            }
        };
        let dynamics = unpack(&self.dynamics, "A", "dynamics")?;
        let noise_input = unpack(&self.noise_input, "F", "noise_input")?;
        let process_noise_cov = unpack(&self.process_noise_cov, "W", "process_noise_cov")?;
        let initial_state_cov = from_row_major(&self.initial_state_cov, "P_1", "initial_state_cov")?;
        let sensors = self
            .sensors
            .iter()
            .enumerate()
            .map(|(i, s)| {
                Ok(Sensor {
                    c: from_row_major(&s.c, &format!("C_{}", i + 1), &format!("sensors[{i}].C"))?,
                    v: from_row_major(&s.v, &format!("V_{}", i + 1), &format!("sensors[{i}].V"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let input_matrix = self
            .input_matrix
            .as_ref()
            .map(|b| from_row_major(b, "B", "input_matrix"))
            .transpose()?;
        Ok(ModelCandidate {
            kind: self.kind,
            state_dim: self.state_dim,
            dynamics,
            noise_input,
            process_noise_cov,
            initial_state_cov,
            measurement_times: self.measurement_times,
            sensors,
            budgets: self.budgets,
            input_matrix,
        })
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(json: &str) -> Result<SystemModel> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let raw: RawScenario = serde_path_to_error::deserialize(de).map_err(|e| Error::Json {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    validate_model(raw.into_candidate()?)
}

pub fn load_scenario(path: &std::path::Path) -> Result<SystemModel> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

pub fn scenario_json(model: &SystemModel) -> String {
    serde_json::to_string_pretty(&model.to_scenario()).expect("scenario serializes")
}

/// SHA-256 of the compact scenario serialization, hex encoded.
pub fn fingerprint(model: &SystemModel) -> String {
    let bytes = serde_json::to_vec(&model.to_scenario()).expect("scenario serializes");
    hex::encode(Sha256::digest(&bytes))
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `G Gᵀ + 0.1 I` with standard-normal `G`.
fn random_spd(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    let g = normal_matrix(rng, dim, dim);
    &g * g.transpose() + DMatrix::identity(dim, dim) * 0.1
}

fn random_dynamics(rng: &mut ChaCha8Rng, n: usize, continuous: bool) -> DMatrix<f64> {
    let g = normal_matrix(rng, n, n);
    let eig = g.complex_eigenvalues();
    if continuous {
        let max_re = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        if max_re > 0.2 {
            return g - DMatrix::identity(n, n) * (max_re - 0.2);
        }
        g
    } else {
        let radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if radius > 1.2 {
            return g * (1.2 / radius);
        }
        g
    }
}

/// Deterministic random scenario: `n` states, `m` sensors, `K` measurement
/// times, budget `r` at every time.
pub fn random_scenario(
    seed: u64,
    n: usize,
    m: usize,
    k: usize,
    r: usize,
    kind: SystemKind,
) -> Result<SystemModel> {
    if n == 0 || m == 0 || k == 0 {
        return Err(Error::InvalidArgument(format!(
            "n, m and K must be ≥ 1 (got n={n}, m={m}, K={k})"
        )));
    }
    if r > m {
        return Err(Error::InvalidArgument(format!("budget r={r} exceeds m={m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let continuous = kind.is_continuous();
    let per_kind = if kind.is_time_variant() { k - 1 } else { 1 };

    let mut dynamics = Vec::with_capacity(per_kind);
    let mut noise_input = Vec::with_capacity(per_kind);
    let mut process_noise_cov = Vec::with_capacity(per_kind);
    for _ in 0..per_kind {
        dynamics.push(random_dynamics(&mut rng, n, continuous));
        noise_input.push(DMatrix::identity(n, n));
        process_noise_cov.push(random_spd(&mut rng, n));
    }
    let initial_state_cov = random_spd(&mut rng, n);

    let mut measurement_times = Vec::with_capacity(k);
    let mut t = 0.0;
    for j in 0..k {
        if continuous {
            if j > 0 {
                t += 0.5 + rng.gen::<f64>();
            }
            measurement_times.push(t);
        } else {
            measurement_times.push(j as f64);
        }
    }

    let sensors = (0..m)
        .map(|_| {
            let d = rng.gen_range(1..=2);
            let c = normal_matrix(&mut rng, d, n);
            let v = random_spd(&mut rng, d);
            Sensor { c, v }
        })
        .collect();

    validate_model(ModelCandidate {
        kind,
        state_dim: n,
        dynamics,
        noise_input,
        process_noise_cov,
        initial_state_cov,
        measurement_times,
        sensors,
        budgets: vec![r as i64; k],
        input_matrix: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCALAR: &str = r#"{
        "kind": "continuous_time_invariant",
        "state_dim": 1,
        "dynamics": [[0.0]],
        "noise_input": [[1.0]],
        "process_noise_cov": [[1.0]],
        "initial_state_cov": [[1.0]],
        "measurement_times": [0.0],
        "sensors": [{"C": [[1.0]], "V": [[1.0]]}],
        "budgets": [1],
        "input_matrix": [[1.0]],
        "input": [0.5]
    }"#;

    #[test]
    fn parses_scalar_with_ignored_input() {
        let m = parse_scenario(SCALAR).unwrap();
        assert_eq!(m.state_dim(), 1);
        assert!(m.input_matrix().is_some());
    }

    #[test]
    fn json_errors_carry_paths() {
        let bad = SCALAR.replace("\"budgets\": [1]", "\"budgets\": [\"x\"]");
        match parse_scenario(&bad) {
            Err(Error::Json { path, .. }) => assert_eq!(path, "budgets[0]"),
            other => panic!("unexpected {other:?}"),
        }
        let typo = SCALAR.replace("\"budgets\"", "\"budget\"");
        assert!(matches!(parse_scenario(&typo), Err(Error::Json { .. })));
        let ragged = SCALAR.replace("\"initial_state_cov\": [[1.0]]", "\"initial_state_cov\": [[1.0],[1.0, 2.0]]");
        match parse_scenario(&ragged) {
            Err(Error::DimensionMismatch { path, .. }) => assert_eq!(path, "initial_state_cov[1]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn generator_is_deterministic_and_seed_sensitive() {
        let a = random_scenario(1, 3, 4, 3, 2, SystemKind::ContinuousTimeInvariant).unwrap();
        let b = random_scenario(1, 3, 4, 3, 2, SystemKind::ContinuousTimeInvariant).unwrap();
        let c = random_scenario(2, 3, 4, 3, 2, SystemKind::ContinuousTimeInvariant).unwrap();
        assert_eq!(scenario_json(&a), scenario_json(&b));
        assert_ne!(scenario_json(&a), scenario_json(&c));
        assert_eq!(fingerprint(&a), fingerprint(&b));
    }

    #[test]
    fn generator_rejects_bad_arguments() {
        assert!(random_scenario(0, 0, 1, 1, 0, SystemKind::DiscreteTimeInvariant).is_err());
        assert!(random_scenario(0, 1, 1, 1, 2, SystemKind::DiscreteTimeInvariant).is_err());
    }

    #[test]
    fn generated_dynamics_respect_spectral_limits() {
        for seed in 0..20 {
            let d = random_scenario(seed, 4, 2, 2, 1, SystemKind::DiscreteTimeInvariant).unwrap();
            let rho = d.dynamics()[0]
                .complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(rho <= 1.2 + 1e-9);
            let c = random_scenario(seed, 4, 2, 2, 1, SystemKind::ContinuousTimeInvariant).unwrap();
            let re = c.dynamics()[0]
                .complex_eigenvalues()
                .iter()
                .map(|z| z.re)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(re <= 0.2 + 1e-9);
        }
    }

    #[test]
    fn serialization_roundtrip_is_exact() {
        for kind in SystemKind::ALL {
            let m = random_scenario(7, 3, 3, 4, 2, kind).unwrap();
            let back = parse_scenario(&scenario_json(&m)).unwrap();
            assert_eq!(m, back);
        }
    }
}
