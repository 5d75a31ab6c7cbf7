//! Exhaustive enumeration of feasible schedules.
//!
//! Per-time candidate sets (all subsets of size ≤ `r_k`) are listed in
//! lexicographic order; schedule index `idx` is decoded in mixed radix with
//! the first time most significant, so index order is lexicographic schedule
//! order.

use rayon::prelude::*;

use crate::caps::OracleCaps;
use crate::error::{Error, Result};
use crate::model::{Schedule, SystemModel};
use crate::objective::ObjectiveEvaluator;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc.saturating_mul((n - j) as u128) / (j as u128 + 1);
    }
    acc
}

/// `Π_k Σ_{j ≤ r_k} C(m, j)`, saturating.
pub fn feasible_count(model: &SystemModel) -> u128 {
    let m = model.sensor_count();
    model.budgets().iter().fold(1u128, |acc, &r| {
        let per: u128 = (0..=r).map(|j| binomial(m, j)).fold(0, u128::saturating_add);
        acc.saturating_mul(per)
    })
}

/// All subsets of `0..m` with at most `r` elements, lexicographic.
fn subsets_upto(m: usize, r: usize) -> Vec<Vec<usize>> {
    fn walk(m: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        if cur.len() == r {
            return;
        }
        let start = cur.last().map_or(0, |&l| l + 1);
        for i in start..m {
            cur.push(i);
            walk(m, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    walk(m, r, &mut Vec::new(), &mut out);
    out
}

/// Indexed view of every feasible schedule of a model.
#[derive(Debug, Clone)]
pub struct ScheduleSpace {
    per_time: Vec<Vec<Vec<usize>>>,
    len: u64,
}

impl ScheduleSpace {
    pub fn new(model: &SystemModel, caps: &OracleCaps) -> Result<Self> {
        let count = feasible_count(model);
        if count > caps.enumeration {
            return Err(Error::EnumerationCapExceeded {
                count,
                cap: caps.enumeration,
            });
        }
        let per_time = model
            .budgets()
            .iter()
            .map(|&r| subsets_upto(model.sensor_count(), r))
            .collect();
        Ok(Self {
            per_time,
            len: count as u64,
        })
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, mut idx: u64) -> Schedule {
        let mut sets = vec![Vec::new(); self.per_time.len()];
        for k in (0..self.per_time.len()).rev() {
            let radix = self.per_time[k].len() as u64;
            sets[k] = self.per_time[k][(idx % radix) as usize].clone();
            idx /= radix;
        }
        Schedule::from_sets(sets).expect("enumerated sets are duplicate-free")
    }

    pub fn iter(&self) -> impl Iterator<Item = Schedule> + '_ {
        (0..self.len).map(|i| self.get(i))
    }
}

/// Best and worst feasible objective values, with lexicographically first
/// attaining schedules (exact ties only).
#[derive(Debug, Clone)]
pub struct Extremes {
    pub min_value: f64,
    pub min_schedule: Schedule,
    pub max_value: f64,
    pub max_schedule: Schedule,
    pub enumerated: u64,
}

#[derive(Clone, Copy)]
struct Partial {
    min: (f64, u64),
    max: (f64, u64),
}

fn merge(a: Partial, b: Partial) -> Partial {
    let pick_min = |x: (f64, u64), y: (f64, u64)| match x.0.total_cmp(&y.0) {
        std::cmp::Ordering::Less => x,
        std::cmp::Ordering::Greater => y,
        std::cmp::Ordering::Equal => if x.1 <= y.1 { x } else { y },
    };
    let pick_max = |x: (f64, u64), y: (f64, u64)| match x.0.total_cmp(&y.0) {
        std::cmp::Ordering::Greater => x,
        std::cmp::Ordering::Less => y,
        std::cmp::Ordering::Equal => if x.1 <= y.1 { x } else { y },
    };
    Partial {
        min: pick_min(a.min, b.min),
        max: pick_max(a.max, b.max),
    }
}

pub fn enumerate_extremes(
    ev: &ObjectiveEvaluator,
    model: &SystemModel,
    caps: &OracleCaps,
) -> Result<Extremes> {
    let space = ScheduleSpace::new(model, caps)?;
    let empty = Partial {
        min: (f64::INFINITY, u64::MAX),
        max: (f64::NEG_INFINITY, u64::MAX),
    };
    let best = (0..space.len())
        .into_par_iter()
        .map(|idx| {
            let v = ev.objective_logdet(&space.get(idx))?;
            Ok::<_, Error>(Partial {
                min: (v, idx),
                max: (v, idx),
            })
        })
        .try_reduce(|| empty, |a, b| Ok(merge(a, b)))?;
    Ok(Extremes {
        min_value: best.min.0,
        min_schedule: space.get(best.min.1),
        max_value: best.max.0,
        max_schedule: space.get(best.max.1),
        enumerated: space.len(),
    })
}

/// Exhaustive minimizer of the objective over feasible schedules.
pub fn brute_force_opt(
    ev: &ObjectiveEvaluator,
    model: &SystemModel,
    caps: &OracleCaps,
) -> Result<(Schedule, f64)> {
    let ex = enumerate_extremes(ev, model, caps)?;
    Ok((ex.min_schedule, ex.min_value))
}

/// Worst feasible value; attained by the empty schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstValue {
    pub value: f64,
    /// Exhaustive maximum, when the instance is under the enumeration cap.
    pub exhaustive: Option<f64>,
}

/// Tolerance for the analytic-vs-exhaustive worst value cross-check.
pub const WORST_VALUE_TOLERANCE: f64 = 1e-9;

pub fn check_worst(analytic: f64, exhaustive: f64) -> Result<()> {
    if (analytic - exhaustive).abs() > WORST_VALUE_TOLERANCE {
        Err(Error::OracleDisagreement {
            analytic,
            exhaustive,
        })
    } else {
        Ok(())
    }
}

pub fn worst_value(ev: &ObjectiveEvaluator, model: &SystemModel, caps: &OracleCaps) -> Result<WorstValue> {
    let value = ev.prior_log_det();
    let exhaustive = match enumerate_extremes(ev, model, caps) {
        Ok(ex) => {
            check_worst(value, ex.max_value)?;
            Some(ex.max_value)
        }
        Err(Error::EnumerationCapExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(WorstValue { value, exhaustive })
}
