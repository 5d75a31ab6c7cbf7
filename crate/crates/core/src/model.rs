//! System, sensor bank and scheduling budgets.
//!
//! A [`SystemModel`] can only be obtained through [`validate_model`] (or the
//! scenario parsers built on it), so every downstream consumer may assume the
//! invariants hold: covariances SPD, shapes consistent, times strictly
//! increasing, budgets within `[0, m]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::require_spd;
use crate::scenario::RawScenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    #[serde(alias = "ContinuousTimeInvariant")]
    ContinuousTimeInvariant,
    #[serde(alias = "ContinuousTimeVariant")]
    ContinuousTimeVariant,
    #[serde(alias = "DiscreteTimeInvariant")]
    DiscreteTimeInvariant,
    #[serde(alias = "DiscreteTimeVariant")]
    DiscreteTimeVariant,
}

impl SystemKind {
    pub const ALL: [SystemKind; 4] = [
        SystemKind::ContinuousTimeInvariant,
        SystemKind::ContinuousTimeVariant,
        SystemKind::DiscreteTimeInvariant,
        SystemKind::DiscreteTimeVariant,
    ];

    pub fn is_continuous(self) -> bool {
        matches!(
            self,
            SystemKind::ContinuousTimeInvariant | SystemKind::ContinuousTimeVariant
        )
    }

    pub fn is_time_variant(self) -> bool {
        matches!(
            self,
            SystemKind::ContinuousTimeVariant | SystemKind::DiscreteTimeVariant
        )
    }
}

impl std::str::FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" | "continuous_time_invariant" | "cti" => {
                Ok(SystemKind::ContinuousTimeInvariant)
            }
            "continuous_time_variant" | "ctv" => Ok(SystemKind::ContinuousTimeVariant),
            "discrete" | "discrete_time_invariant" | "dti" => Ok(SystemKind::DiscreteTimeInvariant),
            "discrete_time_variant" | "dtv" => Ok(SystemKind::DiscreteTimeVariant),
            other => Err(Error::InvalidArgument(format!("unknown system kind `{other}`"))),
        }
    }
}

/// One sensor: `z = C x + v`, `v ~ (0, V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensor {
    pub c: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl Sensor {
    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }
}

/// Validated linear system with its sensor bank and horizon.
///
/// Time-invariant kinds hold exactly one dynamics/noise-input/process-noise
/// matrix; time-variant kinds hold one per measurement interval (`K − 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    kind: SystemKind,
    state_dim: usize,
    dynamics: Vec<DMatrix<f64>>,
    noise_input: Vec<DMatrix<f64>>,
    process_noise_cov: Vec<DMatrix<f64>>,
    initial_state_cov: DMatrix<f64>,
    measurement_times: Vec<f64>,
    sensors: Vec<Sensor>,
    budgets: Vec<usize>,
    // Known input B u(t); shifts the mean only, so it never enters a covariance.
    input_matrix: Option<DMatrix<f64>>,
}

/// Unvalidated model, as assembled by a parser or generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCandidate {
    pub kind: SystemKind,
    pub state_dim: usize,
    pub dynamics: Vec<DMatrix<f64>>,
    pub noise_input: Vec<DMatrix<f64>>,
    pub process_noise_cov: Vec<DMatrix<f64>>,
    pub initial_state_cov: DMatrix<f64>,
    pub measurement_times: Vec<f64>,
    pub sensors: Vec<Sensor>,
    pub budgets: Vec<i64>,
    pub input_matrix: Option<DMatrix<f64>>,
}

fn mismatch(field: impl Into<String>, path: impl Into<String>, detail: String) -> Error {
    Error::DimensionMismatch {
        field: field.into(),
        path: path.into(),
        detail,
    }
}

fn check_finite(m: &DMatrix<f64>, field: &str, path: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            field: field.to_string(),
            path: path.to_string(),
        })
    }
}

fn check_shape(
    m: &DMatrix<f64>,
    rows: Option<usize>,
    cols: Option<usize>,
    field: &str,
    path: &str,
) -> Result<()> {
    let rows_ok = rows.map_or(m.nrows() >= 1, |r| m.nrows() == r);
    let cols_ok = cols.map_or(m.ncols() >= 1, |c| m.ncols() == c);
    if rows_ok && cols_ok {
        check_finite(m, field, path)
    } else {
        let want = |d: Option<usize>| d.map_or("≥1".to_string(), |d| d.to_string());
        Err(mismatch(
            field,
            path,
            format!(
                "expected {}×{}, got {}×{}",
                want(rows),
                want(cols),
                m.nrows(),
                m.ncols()
            ),
        ))
    }
}

/// Checks every model invariant and freezes the model.
pub fn validate_model(raw: ModelCandidate) -> Result<SystemModel> {
    let n = raw.state_dim;
    if n == 0 {
        return Err(mismatch("n", "state_dim", "state dimension must be ≥ 1".into()));
    }
    let k_count = raw.measurement_times.len();
    if k_count == 0 {
        return Err(mismatch(
            "t",
            "measurement_times",
            "at least one measurement time is required".into(),
        ));
    }
    for (i, t) in raw.measurement_times.iter().enumerate() {
        if !t.is_finite() {
            return Err(Error::NonFinite {
                field: format!("t_{}", i + 1),
                path: format!("measurement_times[{i}]"),
            });
        }
    }
    for i in 1..k_count {
        if raw.measurement_times[i] <= raw.measurement_times[i - 1] {
            return Err(Error::NonIncreasingTimes { index: i });
        }
    }
    if raw.kind == SystemKind::DiscreteTimeInvariant {
        for (i, t) in raw.measurement_times.iter().enumerate() {
            if t.fract() != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "discrete-time measurement_times[{i}] = {t} is not an integer step index"
                )));
            }
        }
    }

    let intervals = k_count - 1;
    let expected_len = if raw.kind.is_time_variant() { intervals } else { 1 };
    for (name, list) in [
        ("dynamics", &raw.dynamics),
        ("noise_input", &raw.noise_input),
        ("process_noise_cov", &raw.process_noise_cov),
    ] {
        if list.len() != expected_len {
            return Err(mismatch(
                name,
                name,
                format!(
                    "expected {expected_len} matrices for kind {:?} with K = {k_count}, got {}",
                    raw.kind,
                    list.len()
                ),
            ));
        }
    }
    let indexed = |base: &str, j: usize| {
        if raw.kind.is_time_variant() {
            format!("{base}[{j}]")
        } else {
            base.to_string()
        }
    };
    for (j, a) in raw.dynamics.iter().enumerate() {
        check_shape(a, Some(n), Some(n), "A", &indexed("dynamics", j))?;
    }
    for (j, (f, w)) in raw.noise_input.iter().zip(&raw.process_noise_cov).enumerate() {
        check_shape(f, Some(n), None, "F", &indexed("noise_input", j))?;
        let p = f.ncols();
        let path = indexed("process_noise_cov", j);
        check_shape(w, Some(p), Some(p), "W", &path)?;
        require_spd(w, "W")?;
    }
    check_shape(&raw.initial_state_cov, Some(n), Some(n), "P_1", "initial_state_cov")?;
    require_spd(&raw.initial_state_cov, "P_1")?;

    for (i, s) in raw.sensors.iter().enumerate() {
        let c_name = format!("C_{}", i + 1);
        let v_name = format!("V_{}", i + 1);
        check_shape(&s.c, None, Some(n), &c_name, &format!("sensors[{i}].C"))?;
        let d = s.c.nrows();
        check_shape(&s.v, Some(d), Some(d), &v_name, &format!("sensors[{i}].V"))?;
        require_spd(&s.v, &v_name)?;
    }
    if let Some(b) = &raw.input_matrix {
        check_shape(b, Some(n), None, "B", "input_matrix")?;
    }

    let m = raw.sensors.len();
    if raw.budgets.len() != k_count {
        return Err(mismatch(
            "r",
            "budgets",
            format!("expected {k_count} budgets, got {}", raw.budgets.len()),
        ));
    }
    let mut budgets = Vec::with_capacity(k_count);
    for (index, &value) in raw.budgets.iter().enumerate() {
        if value < 0 || value as u64 > m as u64 {
            return Err(Error::BudgetOutOfRange { index, value, max: m });
        }
        budgets.push(value as usize);
    }

    Ok(SystemModel {
        kind: raw.kind,
        state_dim: n,
        dynamics: raw.dynamics,
        noise_input: raw.noise_input,
        process_noise_cov: raw.process_noise_cov,
        initial_state_cov: raw.initial_state_cov,
        measurement_times: raw.measurement_times,
        sensors: raw.sensors,
        budgets,
        input_matrix: raw.input_matrix,
    })
}

impl SystemModel {
    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Number of measurement times `K`.
    pub fn horizon(&self) -> usize {
        self.measurement_times.len()
    }

    pub fn sensor_count(&self) -> usize {
        self.sensors.len()
    }

    pub fn sensors(&self) -> &[Sensor] {
        &self.sensors
    }

    pub fn budgets(&self) -> &[usize] {
        &self.budgets
    }

    pub fn measurement_times(&self) -> &[f64] {
        &self.measurement_times
    }

    pub fn initial_state_cov(&self) -> &DMatrix<f64> {
        &self.initial_state_cov
    }

    pub fn input_matrix(&self) -> Option<&DMatrix<f64>> {
        self.input_matrix.as_ref()
    }

    /// Dynamics, noise input and process-noise covariance governing interval
    /// `k` (0-based, `t_k → t_{k+1}`).
    pub fn interval_matrices(&self, k: usize) -> (&DMatrix<f64>, &DMatrix<f64>, &DMatrix<f64>) {
        let j = if self.kind.is_time_variant() { k } else { 0 };
        (
            &self.dynamics[j],
            &self.noise_input[j],
            &self.process_noise_cov[j],
        )
    }

    pub fn dynamics(&self) -> &[DMatrix<f64>] {
        &self.dynamics
    }

    pub fn noise_input(&self) -> &[DMatrix<f64>] {
        &self.noise_input
    }

    pub fn process_noise_cov(&self) -> &[DMatrix<f64>] {
        &self.process_noise_cov
    }

    /// Returns a model identical except for its budgets.
    pub fn with_budgets(&self, budgets: &[i64]) -> Result<SystemModel> {
        let mut raw = self.to_candidate();
        raw.budgets = budgets.to_vec();
        validate_model(raw)
    }

    pub fn to_candidate(&self) -> ModelCandidate {
        ModelCandidate {
            kind: self.kind,
            state_dim: self.state_dim,
            dynamics: self.dynamics.clone(),
            noise_input: self.noise_input.clone(),
            process_noise_cov: self.process_noise_cov.clone(),
            initial_state_cov: self.initial_state_cov.clone(),
            measurement_times: self.measurement_times.clone(),
            sensors: self.sensors.clone(),
            budgets: self.budgets.iter().map(|&r| r as i64).collect(),
            input_matrix: self.input_matrix.clone(),
        }
    }

    pub fn to_scenario(&self) -> RawScenario {
        RawScenario::from_model(self)
    }
}

/// Per-time sets of activated sensors (0-based sensor indices, kept sorted).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule {
    selections: Vec<Vec<usize>>,
}

impl Schedule {
    pub fn empty(horizon: usize) -> Self {
        Self {
            selections: vec![Vec::new(); horizon],
        }
    }

    /// Builds a schedule from arbitrary per-time index lists; duplicates are
    /// rejected.
    pub fn from_sets(sets: Vec<Vec<usize>>) -> Result<Self> {
        let mut selections = Vec::with_capacity(sets.len());
        for (k, mut s) in sets.into_iter().enumerate() {
            s.sort_unstable();
            if let Some(w) = s.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::SensorAlreadySelected {
                    time: k,
                    sensor: w[0],
                });
            }
            selections.push(s);
        }
        Ok(Self { selections })
    }

    pub fn horizon(&self) -> usize {
        self.selections.len()
    }

    pub fn at(&self, k: usize) -> &[usize] {
        &self.selections[k]
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.selections
    }

    pub fn contains(&self, k: usize, i: usize) -> bool {
        self.selections[k].binary_search(&i).is_ok()
    }

    pub fn insert(&mut self, k: usize, i: usize) -> Result<()> {
        match self.selections[k].binary_search(&i) {
            Ok(_) => Err(Error::SensorAlreadySelected { time: k, sensor: i }),
            Err(pos) => {
                self.selections[k].insert(pos, i);
                Ok(())
            }
        }
    }

    pub fn with(&self, k: usize, i: usize) -> Result<Self> {
        let mut s = self.clone();
        s.insert(k, i)?;
        Ok(s)
    }

    pub fn set_at(&mut self, k: usize, set: Vec<usize>) {
        self.selections[k] = set;
        self.selections[k].sort_unstable();
    }

    /// Componentwise subset relation `self ⪯ other`.
    pub fn is_subset_of(&self, other: &Schedule) -> bool {
        self.horizon() == other.horizon()
            && self
                .selections
                .iter()
                .zip(&other.selections)
                .all(|(a, b)| a.iter().all(|i| b.binary_search(i).is_ok()))
    }

    pub fn total_selected(&self) -> usize {
        self.selections.iter().map(Vec::len).sum()
    }

    pub fn max_per_time(&self) -> usize {
        self.selections.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Checks the horizon and sensor indices against `model`, ignoring budgets.
    pub fn check_indices(&self, model_horizon: usize, sensor_count: usize) -> Result<()> {
        if self.horizon() != model_horizon {
            return Err(Error::InvalidSchedule(format!(
                "schedule covers {} times, model has {model_horizon}",
                self.horizon()
            )));
        }
        for (k, s) in self.selections.iter().enumerate() {
            if let Some(&i) = s.iter().find(|&&i| i >= sensor_count) {
                return Err(Error::InvalidSchedule(format!(
                    "sensor index {i} at time index {k} out of range (m = {sensor_count})"
                )));
            }
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidSchedule(format!(
                    "duplicate sensor at time index {k}"
                )));
            }
        }
        Ok(())
    }

    /// Indices valid and `|S_k| ≤ r_k` for every `k`.
    pub fn check_feasible(&self, model: &SystemModel) -> Result<()> {
        self.check_indices(model.horizon(), model.sensor_count())?;
        for (k, (s, &r)) in self.selections.iter().zip(model.budgets()).enumerate() {
            if s.len() > r {
                return Err(Error::InvalidSchedule(format!(
                    "{} sensors at time index {k} exceed budget {r}",
                    s.len()
                )));
            }
        }
        Ok(())
    }

    pub fn is_feasible(&self, model: &SystemModel) -> bool {
        self.check_feasible(model).is_ok()
    }
}
