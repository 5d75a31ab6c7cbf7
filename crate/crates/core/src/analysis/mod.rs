//! Exhaustive oracles, ratio certificates, property fuzzers and bounds.

pub mod bounds;
pub mod certify;
pub mod dense;
pub mod enumerate;
pub mod fuzz;

pub use bounds::{ellipsoid_log_volume, error_lower_bound, min_sensors_for_error, BoundInputs};
pub use certify::{approximation_ratio, certify_ratio, GuaranteeViolation, RatioCertificate};
pub use dense::measurement_form_covariance;
pub use enumerate::{
    brute_force_opt, enumerate_extremes, feasible_count, worst_value, Extremes, ScheduleSpace,
    WorstValue,
};
pub use fuzz::{
    fuzz_monotonicity, fuzz_property, fuzz_supermodularity, Counterexample, FuzzReport, Property,
};
