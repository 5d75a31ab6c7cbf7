//! Per-time greedy sensor scheduling.
//!
//! [`greedy_schedule`] walks the measurement times in order; at time `k` it
//! runs [`greedy_step`] with the already-fixed sets `S_1 … S_{k−1}` and all
//! later times empty. Within a step, the candidate with the largest marginal
//! decrease of the objective is accepted until the budget `r_k` is used up.
//!
//! Ties (gains within [`TIE_TOLERANCE`] of the best) go to the smallest
//! sensor index. The lazy path keeps stale gains in a max-priority queue and
//! re-evaluates only candidates whose stale gain could still win or tie;
//! because gains can only shrink as the schedule grows, it selects exactly
//! what the eager path selects.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Schedule, SystemModel};
use crate::objective::ObjectiveEvaluator;

/// Gains closer than this to the best gain are ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Slack on stale gains in the lazy queue, absorbing roundoff in the
/// diminishing-returns property.
const STALE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedyOptions {
    pub lazy: bool,
    pub record_trace: bool,
    /// Stop filling a time step once the best remaining gain is zero.
    pub skip_zero_gain: bool,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        Self {
            lazy: true,
            record_trace: true,
            skip_zero_gain: false,
        }
    }
}

impl GreedyOptions {
    pub fn eager() -> Self {
        Self {
            lazy: false,
            ..Self::default()
        }
    }
}

/// One accepted sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub time: usize,
    pub sensor: usize,
    pub gain: f64,
    /// Objective value right after acceptance.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyOutcome {
    pub schedule: Schedule,
    pub objective: f64,
    pub trace: Vec<TraceEntry>,
    /// Number of marginal-gain evaluations performed.
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Evaluated {
    sensor: usize,
    gain: f64,
    objective: f64,
}

/// Queue entry: larger gain first, then smaller sensor index.
#[derive(Debug, Clone, Copy)]
struct Stale {
    bound: f64,
    sensor: usize,
}

impl PartialEq for Stale {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Stale {}

impl PartialOrd for Stale {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Stale {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.sensor.cmp(&self.sensor))
    }
}

/// Smallest sensor index among the gains tied with the best one.
fn winner(fresh: &[Evaluated]) -> Option<Evaluated> {
    let best = fresh.iter().map(|e| e.gain).fold(f64::NEG_INFINITY, f64::max);
    fresh
        .iter()
        .filter(|e| e.gain >= best - TIE_TOLERANCE)
        .min_by_key(|e| e.sensor)
        .copied()
}

struct StepContext<'a> {
    ev: &'a ObjectiveEvaluator,
    time: usize,
    evaluations: usize,
}

impl StepContext<'_> {
    fn evaluate(&mut self, base_schedule: &Schedule, base: f64, sensor: usize) -> Result<Evaluated> {
        self.evaluations += 1;
        let grown = base_schedule.with(self.time, sensor)?;
        let objective = self.ev.objective_logdet(&grown)?;
        Ok(Evaluated {
            sensor,
            gain: base - objective,
            objective,
        })
    }
}

/// Result of one greedy step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub selected: Vec<usize>,
    pub trace: Vec<TraceEntry>,
    pub evaluations: usize,
}

/// Chooses `S_k` given `prefix` (sets at times other than `k` are held fixed;
/// the set at `k` must be empty).
pub fn greedy_step(
    ev: &ObjectiveEvaluator,
    prefix: &Schedule,
    k: usize,
    budget: usize,
    opts: &GreedyOptions,
) -> Result<StepOutcome> {
    let mut current = prefix.clone();
    current.set_at(k, Vec::new());
    let mut ctx = StepContext {
        ev,
        time: k,
        evaluations: 0,
    };
    let mut base = ev.objective_logdet(&current)?;
    let mut remaining: Vec<usize> = (0..ev.sensor_count()).collect();
    let mut queue: BinaryHeap<Stale> = BinaryHeap::new();
    let mut selected = Vec::with_capacity(budget);
    let mut trace = Vec::new();
    let mut first = true;

    // Each sensor fills exactly one slot, so "candidate too large for the
    // remaining budget" never occurs: the loop simply stops at |S_k| = r_k.
    while selected.len() < budget && !remaining.is_empty() {
        let choice = if opts.lazy && !first {
            lazy_pick(&mut ctx, &current, base, &mut queue)?
        } else {
            let mut fresh = Vec::with_capacity(remaining.len());
            for &i in &remaining {
                fresh.push(ctx.evaluate(&current, base, i)?);
            }
            let w = winner(&fresh).expect("non-empty candidate set");
            if opts.lazy {
                queue.extend(
                    fresh
                        .iter()
                        .filter(|e| e.sensor != w.sensor)
                        .map(|e| Stale { bound: e.gain, sensor: e.sensor }),
                );
            }
            w
        };
        first = false;
        if opts.skip_zero_gain && choice.gain <= TIE_TOLERANCE {
            break;
        }
        current.insert(k, choice.sensor)?;
        remaining.retain(|&i| i != choice.sensor);
        selected.push(choice.sensor);
        base = choice.objective;
        if opts.record_trace {
            trace.push(TraceEntry {
                time: k,
                sensor: choice.sensor,
                gain: choice.gain,
                objective: choice.objective,
            });
        }
    }
    selected.sort_unstable();
    Ok(StepOutcome {
        selected,
        trace,
        evaluations: ctx.evaluations,
    })
}

/// Pops and refreshes stale entries until the winner among fresh gains is
/// certain; unselected entries go back on the queue.
fn lazy_pick(
    ctx: &mut StepContext<'_>,
    current: &Schedule,
    base: f64,
    queue: &mut BinaryHeap<Stale>,
) -> Result<Evaluated> {
    let mut fresh: Vec<Evaluated> = Vec::new();
    while let Some(top) = queue.peek().copied() {
        let Some(best) = winner(&fresh) else {
            queue.pop();
            fresh.push(ctx.evaluate(current, base, top.sensor)?);
            continue;
        };
        let best_gain = fresh.iter().map(|e| e.gain).fold(f64::NEG_INFINITY, f64::max);
        if top.bound + STALE_SLACK > best_gain {
            queue.pop();
            fresh.push(ctx.evaluate(current, base, top.sensor)?);
            continue;
        }
        // Stale entries inside the tie band with a smaller index than the
        // current winner could still take the tie-break.
        let mut aside = Vec::new();
        let mut refreshed = false;
        while let Some(c) = queue.peek().copied() {
            if c.bound + STALE_SLACK < best_gain - TIE_TOLERANCE {
                break;
            }
            queue.pop();
            if c.sensor < best.sensor {
                fresh.push(ctx.evaluate(current, base, c.sensor)?);
                refreshed = true;
                break;
            }
            aside.push(c);
        }
        queue.extend(aside);
        if !refreshed {
            break;
        }
    }
    let w = winner(&fresh).expect("lazy queue holds every remaining candidate");
    queue.extend(
        fresh
            .iter()
            .filter(|e| e.sensor != w.sensor)
            .map(|e| Stale { bound: e.gain, sensor: e.sensor }),
    );
    Ok(w)
}

/// Runs the greedy step at every measurement time in order.
pub fn greedy_schedule(
    ev: &ObjectiveEvaluator,
    model: &SystemModel,
    opts: &GreedyOptions,
) -> Result<GreedyOutcome> {
    let k_count = model.horizon();
    let mut schedule = Schedule::empty(k_count);
    let mut trace = Vec::new();
    let mut evaluations = 0;
    for (k, &r) in model.budgets().iter().enumerate() {
        let step = greedy_step(ev, &schedule, k, r, opts)?;
        schedule.set_at(k, step.selected);
        trace.extend(step.trace);
        evaluations += step.evaluations;
    }
    let objective = ev.objective_logdet(&schedule)?;
    Ok(GreedyOutcome {
        schedule,
        objective,
        trace,
        evaluations,
    })
}

/// Uniformly random `r_k`-subset at every time.
pub fn random_schedule(model: &SystemModel, seed: u64) -> Schedule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = model.sensor_count();
    let sets = model
        .budgets()
        .iter()
        .map(|&r| rand::seq::index::sample(&mut rng, m, r).into_vec())
        .collect();
    Schedule::from_sets(sets).expect("sampled indices are distinct")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_model, ModelCandidate, Sensor, SystemKind};
    use crate::objective::build_evaluator;
    use crate::scenario::random_scenario;
    use nalgebra::DMatrix;

    fn one(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn static_model(n: usize, sensors: Vec<Sensor>, budgets: Vec<i64>) -> SystemModel {
        let k = budgets.len();
        validate_model(ModelCandidate {
            kind: SystemKind::DiscreteTimeInvariant,
            state_dim: n,
            dynamics: vec![DMatrix::identity(n, n)],
            noise_input: vec![DMatrix::identity(n, n)],
            process_noise_cov: vec![DMatrix::identity(n, n)],
            initial_state_cov: DMatrix::identity(n, n),
            measurement_times: (0..k).map(|t| t as f64).collect(),
            sensors,
            budgets,
            input_matrix: None,
        })
        .unwrap()
    }

    fn row(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, v.len(), v)
    }

    #[test]
    fn zero_budgets_give_empty_schedule() {
        let m = random_scenario(1, 2, 3, 3, 0, SystemKind::ContinuousTimeInvariant).unwrap();
        let ev = build_evaluator(&m).unwrap();
        let out = greedy_schedule(&ev, &m, &GreedyOptions::default()).unwrap();
        assert_eq!(out.schedule, Schedule::empty(3));
        assert_eq!(out.objective, ev.prior_log_det());
        assert_eq!(out.evaluations, 0);
    }

    #[test]
    fn single_informative_sensor_used_everywhere() {
        let m = static_model(2, vec![Sensor { c: row(&[1.0, 1.0]), v: one(1.0) }], vec![1, 1, 1]);
        let ev = build_evaluator(&m).unwrap();
        let out = greedy_schedule(&ev, &m, &GreedyOptions::default()).unwrap();
        assert_eq!(out.schedule.sets(), &[vec![0], vec![0], vec![0]]);
    }

    #[test]
    fn identical_sensors_tie_break_to_smallest_index() {
        let s = || Sensor { c: row(&[1.0, 0.0]), v: one(1.0) };
        let m = static_model(2, vec![s(), s(), s()], vec![1]);
        let ev = build_evaluator(&m).unwrap();
        for opts in [GreedyOptions::default(), GreedyOptions::eager()] {
            let step = greedy_step(&ev, &Schedule::empty(1), 0, 1, &opts).unwrap();
            assert_eq!(step.selected, vec![0]);
        }
    }

    #[test]
    fn three_sensor_example_picks_precise_then_orthogonal() {
        // a: x₁ with unit noise, b: x₂ with unit noise, c: x₁ with noise 0.5
        let m = static_model(
            2,
            vec![
                Sensor { c: row(&[1.0, 0.0]), v: one(1.0) },
                Sensor { c: row(&[0.0, 1.0]), v: one(1.0) },
                Sensor { c: row(&[1.0, 0.0]), v: one(0.5) },
            ],
            vec![2],
        );
        let ev = build_evaluator(&m).unwrap();
        for opts in [GreedyOptions::default(), GreedyOptions::eager()] {
            let step = greedy_step(&ev, &Schedule::empty(1), 0, 2, &opts).unwrap();
            assert_eq!(step.selected, vec![1, 2]);
            assert_eq!(step.trace[0].sensor, 2);
            assert!((step.trace[0].gain - 3f64.ln()).abs() < 1e-12);
            assert_eq!(step.trace[1].sensor, 1);
            assert!((step.trace[1].gain - 2f64.ln()).abs() < 1e-12);
        }
        // frozen by enumeration of all 2-subsets with scalar information:
        // {a,b}: ln 4, {a,c}: ln 4, {b,c}: ln 6, so {b,c} is also optimal
        let best = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(i, j)| {
                let s = Schedule::from_sets(vec![vec![i, j]]).unwrap();
                (ev.objective_logdet(&s).unwrap(), (i, j))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        assert_eq!(best.1, (1, 2));
        assert!((best.0 + 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_gain_sensors_fill_budget_unless_skipped() {
        let m = static_model(
            1,
            vec![
                Sensor { c: one(1.0), v: one(1.0) },
                Sensor { c: one(0.0), v: one(1.0) },
            ],
            vec![2],
        );
        let ev = build_evaluator(&m).unwrap();
        let full = greedy_schedule(&ev, &m, &GreedyOptions::default()).unwrap();
        assert_eq!(full.schedule.at(0), &[0, 1]);
        let opts = GreedyOptions { skip_zero_gain: true, ..GreedyOptions::default() };
        let skipped = greedy_schedule(&ev, &m, &opts).unwrap();
        assert_eq!(skipped.schedule.at(0), &[0]);
    }

    #[test]
    fn lazy_matches_eager_and_saves_work() {
        let mut saved = 0;
        for seed in 0..40 {
            let kind = SystemKind::ALL[seed as usize % 4];
            let m = random_scenario(seed, 3, 6, 3, 3, kind).unwrap();
            let ev = build_evaluator(&m).unwrap();
            let lazy = greedy_schedule(&ev, &m, &GreedyOptions::default()).unwrap();
            let eager = greedy_schedule(&ev, &m, &GreedyOptions::eager()).unwrap();
            assert_eq!(lazy.schedule, eager.schedule);
            assert_eq!(lazy.trace, eager.trace);
            assert!(lazy.evaluations <= eager.evaluations);
            saved += eager.evaluations - lazy.evaluations;
        }
        assert!(saved > 0);
    }

    #[test]
    fn trace_is_monotone() {
        let m = random_scenario(9, 3, 5, 4, 3, SystemKind::ContinuousTimeVariant).unwrap();
        let ev = build_evaluator(&m).unwrap();
        let out = greedy_schedule(&ev, &m, &GreedyOptions::default()).unwrap();
        assert_eq!(out.trace.len(), 12);
        let mut prev = ev.prior_log_det();
        for (t, e) in out.trace.iter().enumerate() {
            assert!(e.objective <= prev + 1e-9);
            prev = e.objective;
            if t > 0 && out.trace[t - 1].time == e.time {
                assert!(e.gain <= out.trace[t - 1].gain + 1e-9);
            }
        }
        assert_eq!(out.trace.last().unwrap().objective, out.objective);
    }

    #[test]
    fn no_trace_when_disabled() {
        let m = random_scenario(2, 2, 3, 2, 2, SystemKind::DiscreteTimeInvariant).unwrap();
        let ev = build_evaluator(&m).unwrap();
        let opts = GreedyOptions { record_trace: false, ..GreedyOptions::default() };
        let out = greedy_schedule(&ev, &m, &opts).unwrap();
        assert!(out.trace.is_empty());
        assert_eq!(out.schedule.total_selected(), 4);
    }

    #[test]
    fn random_schedule_is_feasible_and_seeded() {
        let m = random_scenario(2, 2, 5, 4, 3, SystemKind::DiscreteTimeInvariant).unwrap();
        let a = random_schedule(&m, 11);
        assert!(a.is_feasible(&m));
        assert_eq!(a.total_selected(), 12);
        assert_eq!(a, random_schedule(&m, 11));
    }
}
