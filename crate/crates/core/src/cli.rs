//! Command-line front end.
//!
//! Exit codes: 0 success, 1 numeric failure, 2 invalid configuration or
//! arguments, 3 oracle cap exceeded, 4 guarantee or property violated.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    brute_force_opt, certify_ratio, fuzz_property, BoundInputs, Property, RatioCertificate,
};
use crate::caps::OracleCaps;
use crate::error::{Error, Result};
use crate::model::{Schedule, SystemKind, SystemModel};
use crate::objective::ObjectiveEvaluator;
use crate::scenario::{fingerprint, load_scenario, random_scenario, scenario_json};
use crate::scheduler::{greedy_schedule, random_schedule, GreedyOptions, TraceEntry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "batchsched", version, about = "Sensor scheduling for batch state estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Greedy,
    LazyGreedy,
    Brute,
    Random,
    Empty,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::LazyGreedy => "lazy-greedy",
            Algorithm::Brute => "brute",
            Algorithm::Random => "random",
            Algorithm::Empty => "empty",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PropertyArg {
    Mono,
    Super,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a schedule and write a run report.
    Schedule {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "lazy-greedy")]
        algorithm: Algorithm,
        /// Seed for `--algorithm random`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the greedy trace as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Attach a brute-force ratio certificate.
        #[arg(long)]
        certify: bool,
        /// Record wall time per phase (makes the report non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Check the greedy schedule against the exhaustive optimum.
    Certify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace lower bound and minimum sensor count.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        /// Target error trace for the minimum sensor count.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a random scenario.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        r: usize,
        /// cti, ctv, dti or dtv.
        #[arg(long, default_value = "cti")]
        kind: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized check of monotonicity or supermodularity.
    Fuzz {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        property: PropertyArg,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBounds {
    pub lower_bound: f64,
    /// Objective of the empty schedule.
    pub prior_objective: f64,
    /// `tr Σ` of the reported schedule; omitted above the dense cap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_trace: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub fingerprint: String,
    pub algorithm: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub schedule: Schedule,
    pub objective: f64,
    pub trace: Vec<TraceEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<RatioCertificate>,
    pub bounds: ReportBounds,
    /// Seconds per phase, only with `--timing`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub fingerprint: String,
    pub inputs: BoundInputs,
    pub lower_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_sensors: Option<f64>,
    pub greedy_schedule: Schedule,
    pub greedy_trace: f64,
    pub empty_trace: f64,
}

/// Runs one algorithm on a validated model.
pub fn schedule_report(
    ev: &ObjectiveEvaluator,
    model: &SystemModel,
    algorithm: Algorithm,
    seed: Option<u64>,
    caps: &OracleCaps,
) -> Result<RunReport> {
    let (schedule, objective, trace, evaluations) = match algorithm {
        Algorithm::Greedy | Algorithm::LazyGreedy => {
            let opts = GreedyOptions {
                lazy: algorithm == Algorithm::LazyGreedy,
                ..GreedyOptions::default()
            };
            let out = greedy_schedule(ev, model, &opts)?;
            (out.schedule, out.objective, out.trace, Some(out.evaluations))
        }
        Algorithm::Brute => {
            let (s, v) = brute_force_opt(ev, model, caps)?;
            (s, v, Vec::new(), None)
        }
        Algorithm::Random => {
            let seed = seed.ok_or_else(|| {
                Error::InvalidArgument("--algorithm random requires --seed".into())
            })?;
            let s = random_schedule(model, seed);
            let v = ev.objective_logdet(&s)?;
            (s, v, Vec::new(), None)
        }
        Algorithm::Empty => {
            let s = Schedule::empty(model.horizon());
            (s, ev.prior_log_det(), Vec::new(), None)
        }
    };
    let error_trace = match ev.batch_error_trace(&schedule, caps) {
        Ok(t) => Some(t),
        Err(Error::OracleCapExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    let bounds = ReportBounds {
        lower_bound: BoundInputs::new(ev, model)?.error_lower_bound(),
        prior_objective: ev.prior_log_det(),
        error_trace,
    };
    Ok(RunReport {
        fingerprint: fingerprint(model),
        algorithm: algorithm.name().to_string(),
        seed: if algorithm == Algorithm::Random { seed } else { None },
        schedule,
        objective,
        trace,
        evaluations,
        certificate: None,
        bounds,
        timing: None,
    })
}

pub fn bounds_report(
    ev: &ObjectiveEvaluator,
    model: &SystemModel,
    alpha: Option<f64>,
    caps: &OracleCaps,
) -> Result<BoundsReport> {
    let inputs = BoundInputs::new(ev, model)?;
    let min_sensors = alpha.map(|a| inputs.min_sensors_for_error(a)).transpose()?;
    let greedy = greedy_schedule(ev, model, &GreedyOptions::default())?;
    Ok(BoundsReport {
        fingerprint: fingerprint(model),
        inputs,
        lower_bound: inputs.error_lower_bound(),
        alpha,
        min_sensors,
        greedy_trace: ev.batch_error_trace(&greedy.schedule, caps)?,
        empty_trace: ev.batch_error_trace(&Schedule::empty(model.horizon()), caps)?,
        greedy_schedule: greedy.schedule,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    /// Loading and validating input; every failure is a configuration error.
    Config,
    Run,
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn classify(err: &Error, stage: Stage) -> i32 {
    match err {
        Error::OracleCapExceeded { .. } | Error::EnumerationCapExceeded { .. } => EXIT_CAP,
        Error::GuaranteeViolated(_) | Error::PropertyViolated(_) => EXIT_VIOLATION,
        _ if stage == Stage::Config => EXIT_CONFIG,
        Error::Json { .. }
        | Error::DimensionMismatch { .. }
        | Error::NonFinite { .. }
        | Error::NonIncreasingTimes { .. }
        | Error::BudgetOutOfRange { .. }
        | Error::InvalidArgument(_)
        | Error::InvalidSchedule(_)
        | Error::SensorAlreadySelected { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

fn fail(stage: Stage) -> impl Fn(Error) -> Failure {
    move |err| Failure {
        code: classify(&err, stage),
        message: err.to_string(),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Writes via a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> std::result::Result<(), Failure> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()).map_err(|e| Failure {
            code: EXIT_NUMERIC,
            message: format!("cannot write {}: {e}", p.display()),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn trace_csv(trace: &[TraceEntry]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in trace {
        w.serialize(row)
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

struct Loaded {
    model: SystemModel,
    ev: ObjectiveEvaluator,
    caps: OracleCaps,
}

fn load(config: &Path) -> std::result::Result<Loaded, Failure> {
    let caps = OracleCaps::from_env().map_err(fail(Stage::Config))?;
    let model = load_scenario(config).map_err(|e| match e {
        Error::Io(io) => Failure {
            code: EXIT_CONFIG,
            message: format!("cannot read {}: {io}", config.display()),
        },
        other => fail(Stage::Config)(other),
    })?;
    let ev = ObjectiveEvaluator::new(&model).map_err(fail(Stage::Config))?;
    Ok(Loaded { model, ev, caps })
}

fn secs(since: Instant) -> f64 {
    since.elapsed().as_secs_f64()
}

/// Executes a parsed command line; returns `Ok` or a failure with exit code.
pub fn execute(cli: Cli) -> std::result::Result<(), Failure> {
    let run = fail(Stage::Run);
    match cli.command {
        Command::Schedule {
            config,
            algorithm,
            seed,
            out,
            csv: csv_path,
            certify,
            timing,
        } => {
            let t0 = Instant::now();
            let Loaded { model, ev, caps } = load(&config)?;
            let t_load = secs(t0);
            let t1 = Instant::now();
            let mut report = schedule_report(&ev, &model, algorithm, seed, &caps).map_err(&run)?;
            let t_alg = secs(t1);
            let mut t_cert = None;
            if certify {
                let t2 = Instant::now();
                report.certificate =
                    Some(certify_ratio(&ev, &model, &GreedyOptions::default(), &caps).map_err(&run)?);
                t_cert = Some(secs(t2));
            }
            if timing {
                let mut m = BTreeMap::new();
                m.insert("load".to_string(), t_load);
                m.insert("algorithm".to_string(), t_alg);
                if let Some(t) = t_cert {
                    m.insert("certify".to_string(), t);
                }
                report.timing = Some(m);
            }
            if let Some(p) = csv_path {
                let bytes = trace_csv(&report.trace).map_err(&run)?;
                write_atomic(&p, &bytes).map_err(|e| Failure {
                    code: EXIT_NUMERIC,
                    message: format!("cannot write {}: {e}", p.display()),
                })?;
            }
            emit(out.as_deref(), &to_json(&report))
        }
        Command::Certify { config, out } => {
            let Loaded { model, ev, caps } = load(&config)?;
            match certify_ratio(&ev, &model, &GreedyOptions::default(), &caps) {
                Ok(cert) => emit(out.as_deref(), &to_json(&cert)),
                Err(Error::GuaranteeViolated(v)) => {
                    emit(out.as_deref(), &to_json(&v))?;
                    Err(run(Error::GuaranteeViolated(v)))
                }
                Err(e) => Err(run(e)),
            }
        }
        Command::Bounds { config, alpha, out } => {
            let Loaded { model, ev, caps } = load(&config)?;
            let report = bounds_report(&ev, &model, alpha, &caps).map_err(&run)?;
            emit(out.as_deref(), &to_json(&report))
        }
        Command::Gen {
            n,
            m,
            k,
            r,
            kind,
            seed,
            out,
        } => {
            let config = fail(Stage::Config);
            let kind: SystemKind = kind.parse().map_err(&config)?;
            let model = random_scenario(seed, n, m, k, r, kind).map_err(&config)?;
            let mut text = scenario_json(&model);
            text.push('\n');
            emit(out.as_deref(), &text)
        }
        Command::Fuzz {
            config,
            property,
            trials,
            seed,
            out,
        } => {
            let Loaded { model, ev, .. } = load(&config)?;
            let property = match property {
                PropertyArg::Mono => Property::Monotonicity,
                PropertyArg::Super => Property::Supermodularity,
            };
            let report = fuzz_property(property, &ev, &model, trials, seed).map_err(&run)?;
            emit(out.as_deref(), &to_json(&report))?;
            report.into_result().map(|_| ()).map_err(&run)
        }
    }
}

/// Entry point used by the binary: parses `args`, runs, returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::build_evaluator;

    fn instance() -> (ObjectiveEvaluator, SystemModel) {
        let m = random_scenario(11, 2, 3, 3, 1, SystemKind::DiscreteTimeInvariant).unwrap();
        (build_evaluator(&m).unwrap(), m)
    }

    #[test]
    fn classification() {
        let cap = Error::EnumerationCapExceeded { count: 2, cap: 1 };
        assert_eq!(classify(&cap, Stage::Run), EXIT_CAP);
        assert_eq!(classify(&cap, Stage::Config), EXIT_CAP);
        let pd = Error::NotPositiveDefinite { matrix: "D_2".into() };
        assert_eq!(classify(&pd, Stage::Config), EXIT_CONFIG);
        assert_eq!(classify(&pd, Stage::Run), EXIT_NUMERIC);
        assert_eq!(classify(&Error::InvalidArgument("x".into()), Stage::Run), EXIT_CONFIG);
    }

    #[test]
    fn all_algorithms_report_feasible_schedules() {
        let (ev, m) = instance();
        let caps = OracleCaps::default();
        for alg in [
            Algorithm::Greedy,
            Algorithm::LazyGreedy,
            Algorithm::Brute,
            Algorithm::Random,
            Algorithm::Empty,
        ] {
            let r = schedule_report(&ev, &m, alg, Some(3), &caps).unwrap();
            assert!(r.schedule.is_feasible(&m));
            assert_eq!(r.objective, ev.objective_logdet(&r.schedule).unwrap());
            assert!(r.bounds.error_trace.unwrap() >= r.bounds.lower_bound - 1e-9);
        }
        let empty = schedule_report(&ev, &m, Algorithm::Empty, None, &caps).unwrap();
        assert_eq!(empty.objective, ev.prior_log_det());
    }

    #[test]
    fn random_requires_seed() {
        let (ev, m) = instance();
        let err = schedule_report(&ev, &m, Algorithm::Random, None, &OracleCaps::default()).unwrap_err();
        assert_eq!(classify(&err, Stage::Run), EXIT_CONFIG);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let (ev, m) = instance();
        let r = schedule_report(&ev, &m, Algorithm::Greedy, None, &OracleCaps::default()).unwrap();
        let text = String::from_utf8(trace_csv(&r.trace).unwrap()).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "time,sensor,gain,objective");
        assert_eq!(lines.len(), 1 + r.trace.len());
    }

    #[test]
    fn reports_round_trip() {
        let (ev, m) = instance();
        let r = schedule_report(&ev, &m, Algorithm::LazyGreedy, None, &OracleCaps::default()).unwrap();
        let back: RunReport = serde_json::from_str(&to_json(&r)).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn scalar_bounds_report() {
        let (ev, m) = instance();
        let b = bounds_report(&ev, &m, Some(1e6), &OracleCaps::default()).unwrap();
        assert!(b.min_sensors.unwrap() <= 0.0);
        assert!(b.greedy_trace <= b.empty_trace);
        assert!(b.lower_bound <= b.greedy_trace);
    }
}
