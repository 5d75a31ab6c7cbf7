//! Randomized checks of monotonicity and supermodularity of the objective.
//!
//! Samples are drawn sequentially from one seeded generator and evaluated in
//! parallel; results come back in trial order, so a report depends only on
//! `(model, trials, seed)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Schedule, SystemModel};
use crate::objective::ObjectiveEvaluator;
use crate::scenario::fingerprint;

pub const PROPERTY_TOLERANCE: f64 = 1e-9;

/// Counterexamples kept in a report; the full count is in `violation_count`.
pub const MAX_COUNTEREXAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Monotonicity,
    Supermodularity,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::Monotonicity => "monotonicity",
            Property::Supermodularity => "supermodularity",
        })
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mono" | "monotonicity" => Ok(Property::Monotonicity),
            "super" | "supermodularity" => Ok(Property::Supermodularity),
            _ => Err(Error::InvalidArgument(format!(
                "unknown property `{s}` (expected mono or super)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub trial: usize,
    pub smaller: Schedule,
    pub larger: Schedule,
    /// `(time, sensor)` added to both sets; supermodularity only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub addition: Option<(usize, usize)>,
    /// Amount by which the inequality fails.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub property: Property,
    pub fingerprint: String,
    pub trials: usize,
    pub seed: u64,
    /// Largest `lhs − rhs` seen; negative values are slack.
    pub max_violation: f64,
    pub violation_count: usize,
    pub violations: Vec<Counterexample>,
}

impl FuzzReport {
    pub fn holds(&self) -> bool {
        self.violation_count == 0
    }

    /// `Err(PropertyViolated)` when any trial failed.
    pub fn into_result(self) -> Result<FuzzReport> {
        if self.holds() {
            Ok(self)
        } else {
            Err(Error::PropertyViolated(Box::new(self)))
        }
    }
}

/// Every candidate `(k, i)` is kept independently with probability `p`.
fn sample_subset(rng: &mut ChaCha8Rng, horizon: usize, m: usize, p: f64) -> Schedule {
    let sets = (0..horizon)
        .map(|_| (0..m).filter(|_| rng.gen_bool(p)).collect())
        .collect();
    Schedule::from_sets(sets).expect("filtered ranges are duplicate-free")
}

/// `base` plus each missing candidate with probability `p`.
fn sample_superset(rng: &mut ChaCha8Rng, base: &Schedule, m: usize, p: f64) -> Schedule {
    let sets = base
        .sets()
        .iter()
        .map(|set| (0..m).filter(|i| set.contains(i) || rng.gen_bool(p)).collect())
        .collect();
    Schedule::from_sets(sets).expect("filtered ranges are duplicate-free")
}

struct Sample {
    smaller: Schedule,
    larger: Schedule,
    addition: Option<(usize, usize)>,
}

fn monotonicity_samples(model: &SystemModel, trials: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, m) = (model.horizon(), model.sensor_count());
    (0..trials)
        .map(|_| {
            let p = rng.gen_range(0.0..1.0);
            let q = rng.gen_range(0.0..1.0);
            let smaller = sample_subset(&mut rng, h, m, p);
            let larger = sample_superset(&mut rng, &smaller, m, q);
            Sample {
                smaller,
                larger,
                addition: None,
            }
        })
        .collect()
}

fn supermodularity_samples(model: &SystemModel, trials: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, m) = (model.horizon(), model.sensor_count());
    if h * m == 0 {
        return Vec::new();
    }
    (0..trials)
        .map(|_| loop {
            let p = rng.gen_range(0.0..1.0);
            let q = rng.gen_range(0.0..1.0);
            let smaller = sample_subset(&mut rng, h, m, p);
            let larger = sample_superset(&mut rng, &smaller, m, q);
            let free: Vec<(usize, usize)> = (0..h)
                .flat_map(|k| (0..m).map(move |i| (k, i)))
                .filter(|&(k, i)| !larger.contains(k, i))
                .collect();
            if !free.is_empty() {
                let addition = free[rng.gen_range(0..free.len())];
                break Sample {
                    smaller,
                    larger,
                    addition: Some(addition),
                };
            }
        })
        .collect()
}

/// `lhs − rhs` of the inequality that must be ≤ tolerance.
fn excess(ev: &ObjectiveEvaluator, s: &Sample) -> Result<f64> {
    match s.addition {
        None => Ok(ev.objective_logdet(&s.larger)? - ev.objective_logdet(&s.smaller)?),
        Some((k, i)) => Ok(ev.marginal_gain(&s.larger, k, i)? - ev.marginal_gain(&s.smaller, k, i)?),
    }
}

fn run(
    property: Property,
    ev: &ObjectiveEvaluator,
    model: &SystemModel,
    samples: Vec<Sample>,
    seed: u64,
) -> Result<FuzzReport> {
    let excesses = samples
        .par_iter()
        .map(|s| excess(ev, s))
        .collect::<Result<Vec<f64>>>()?;
    let max_violation = excesses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let failing: Vec<usize> = (0..excesses.len())
        .filter(|&t| excesses[t] > PROPERTY_TOLERANCE)
        .collect();
    let violations = failing
        .iter()
        .take(MAX_COUNTEREXAMPLES)
        .map(|&t| Counterexample {
            trial: t,
            smaller: samples[t].smaller.clone(),
            larger: samples[t].larger.clone(),
            addition: samples[t].addition,
            violation: excesses[t],
        })
        .collect();
    Ok(FuzzReport {
        property,
        fingerprint: fingerprint(model),
        trials: samples.len(),
        seed,
        max_violation,
        violation_count: failing.len(),
        violations,
    })
}

/// Nested pairs `s ⪯ s′`; checks `f(s′) ≤ f(s) + tol`.
pub fn fuzz_monotonicity(
    ev: &ObjectiveEvaluator,
    model: &SystemModel,
    trials: usize,
    seed: u64,
) -> Result<FuzzReport> {
    let samples = monotonicity_samples(model, trials, seed);
    run(Property::Monotonicity, ev, model, samples, seed)
}

/// Triples `A ⪯ B`, `a ∉ B`; checks `gain_A(a) ≥ gain_B(a) − tol`.
pub fn fuzz_supermodularity(
    ev: &ObjectiveEvaluator,
    model: &SystemModel,
    trials: usize,
    seed: u64,
) -> Result<FuzzReport> {
    let samples = supermodularity_samples(model, trials, seed);
    run(Property::Supermodularity, ev, model, samples, seed)
}

pub fn fuzz_property(
    property: Property,
    ev: &ObjectiveEvaluator,
    model: &SystemModel,
    trials: usize,
    seed: u64,
) -> Result<FuzzReport> {
    match property {
        Property::Monotonicity => fuzz_monotonicity(ev, model, trials, seed),
        Property::Supermodularity => fuzz_supermodularity(ev, model, trials, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemKind;
    use crate::objective::build_evaluator;
    use crate::scenario::random_scenario;

    fn instance(seed: u64) -> (ObjectiveEvaluator, SystemModel) {
        let m = random_scenario(seed, 3, 4, 4, 2, SystemKind::ALL[seed as usize % 4]).unwrap();
        (build_evaluator(&m).unwrap(), m)
    }

    #[test]
    fn both_properties_hold() {
        for seed in 0..4 {
            let (ev, m) = instance(seed);
            let mono = fuzz_monotonicity(&ev, &m, 200, seed).unwrap();
            assert!(mono.holds(), "{mono:?}");
            assert!(mono.max_violation <= 1e-9);
            let sup = fuzz_supermodularity(&ev, &m, 200, seed).unwrap();
            assert!(sup.holds(), "{sup:?}");
            assert_eq!(sup.trials, 200);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let (ev, m) = instance(9);
        let a = fuzz_supermodularity(&ev, &m, 100, 77).unwrap();
        let b = fuzz_supermodularity(&ev, &m, 100, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let pairs = |seed| {
            supermodularity_samples(&m, 20, seed)
                .into_iter()
                .map(|s| (s.smaller, s.larger, s.addition))
                .collect::<Vec<_>>()
        };
        assert_eq!(pairs(77), pairs(77));
        assert_ne!(pairs(77), pairs(78));
    }

    #[test]
    fn samples_are_nested() {
        let (_, m) = instance(2);
        for s in supermodularity_samples(&m, 100, 3) {
            assert!(s.smaller.is_subset_of(&s.larger));
            let (k, i) = s.addition.unwrap();
            assert!(!s.larger.contains(k, i));
        }
        for s in monotonicity_samples(&m, 100, 3) {
            assert!(s.smaller.is_subset_of(&s.larger));
        }
    }

    #[test]
    fn violations_become_errors() {
        let report = FuzzReport {
            property: Property::Monotonicity,
            fingerprint: String::new(),
            trials: 1,
            seed: 0,
            max_violation: 1.0,
            violation_count: 1,
            violations: vec![],
        };
        assert!(matches!(report.into_result(), Err(Error::PropertyViolated(_))));
    }

    #[test]
    fn property_names_parse() {
        assert_eq!("mono".parse::<Property>().unwrap(), Property::Monotonicity);
        assert_eq!("super".parse::<Property>().unwrap(), Property::Supermodularity);
        assert!("other".parse::<Property>().is_err());
    }
}
