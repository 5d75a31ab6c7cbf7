use serde::{Deserialize, Serialize};

use super::enumerate::{check_worst, enumerate_extremes};
use crate::caps::OracleCaps;
use crate::error::{Error, Result};
use crate::model::{Schedule, SystemModel};
use crate::objective::ObjectiveEvaluator;
use crate::scenario::{fingerprint, RawScenario};
use crate::scheduler::{greedy_schedule, GreedyOptions};

/// Largest ratio accepted before the certificate is rejected.
pub const RATIO_LIMIT: f64 = 0.5 + 1e-9;

/// Below this `MAX − OPT` the ratio is reported as 0.
pub const DEGENERATE_GAP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCertificate {
    pub fingerprint: String,
    pub greedy_value: f64,
    pub opt_value: f64,
    pub max_value: f64,
    pub ratio: f64,
    pub greedy_schedule: Schedule,
    pub opt_schedule: Schedule,
    pub schedules_enumerated: u64,
}

/// A certificate over the limit together with the instance that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct GuaranteeViolation {
    pub certificate: RatioCertificate,
    pub scenario: RawScenario,
}

pub fn approximation_ratio(greedy: f64, opt: f64, max: f64) -> f64 {
    if max - opt > DEGENERATE_GAP {
        (greedy - opt) / (max - opt)
    } else {
        0.0
    }
}

/// Runs greedy and the exhaustive oracle, then checks the ratio against 1/2.
pub fn certify_ratio(
    ev: &ObjectiveEvaluator,
    model: &SystemModel,
    opts: &GreedyOptions,
    caps: &OracleCaps,
) -> Result<RatioCertificate> {
    let greedy = greedy_schedule(ev, model, opts)?;
    let ex = enumerate_extremes(ev, model, caps)?;
    let max_value = ev.prior_log_det();
    check_worst(max_value, ex.max_value)?;
    let certificate = RatioCertificate {
        fingerprint: fingerprint(model),
        greedy_value: greedy.objective,
        opt_value: ex.min_value,
        max_value,
        ratio: approximation_ratio(greedy.objective, ex.min_value, max_value),
        greedy_schedule: greedy.schedule,
        opt_schedule: ex.min_schedule,
        schedules_enumerated: ex.enumerated,
    };
    if certificate.ratio > RATIO_LIMIT || certificate.ratio.is_nan() {
        return Err(Error::GuaranteeViolated(Box::new(GuaranteeViolation {
            certificate,
            scenario: model.to_scenario(),
        })));
    }
    Ok(certificate)
}
