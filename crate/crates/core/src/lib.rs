//! Sensor scheduling for batch state estimation of linear dynamical systems.
//!
//! Given a linear system sampled at `K` measurement times and a bank of `m`
//! sensors, choose at every time at most `r_k` sensors so that the
//! log-determinant of the error covariance of the batch estimate of
//! `x(t_1), …, x(t_K)` is as small as possible.
//!
//! ```no_run
//! use batchsched::{build_evaluator, greedy_schedule, load_scenario, GreedyOptions};
//!
//! let model = load_scenario("scenario.json".as_ref())?;
//! let ev = build_evaluator(&model)?;
//! let out = greedy_schedule(&ev, &model, &GreedyOptions::default())?;
//! println!("{:?} -> {}", out.schedule, out.objective);
//! # Ok::<(), batchsched::Error>(())
//! ```

pub mod analysis;
pub mod block_tridiagonal;
pub mod caps;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod model;
pub mod objective;
pub mod prior;
pub mod scenario;
pub mod scheduler;

pub use block_tridiagonal::BlockTridiagonal;
pub use caps::OracleCaps;
pub use error::{Error, Result};
pub use model::{validate_model, ModelCandidate, Schedule, Sensor, SystemKind, SystemModel};
pub use objective::{build_evaluator, ObjectiveEvaluator};
pub use prior::{build_prior_information, dense_prior_covariance};
pub use scenario::{fingerprint, load_scenario, parse_scenario, random_scenario, scenario_json};
pub use scheduler::{greedy_schedule, greedy_step, random_schedule, GreedyOptions, GreedyOutcome};
