//! Diagnostics computed from walks: empirical deviations, normalising sequences,
//! exponents, iterated-log ratios, directions, returns and exit times.

mod delta;
mod functional;
mod path;
mod recurrence;
mod report;
mod summary;
mod twosample;

pub use delta::{
    beta_gamma, delta_n, delta_recursion_residual, delta_second_moment_frobenius, mz_rate_trace,
    BetaGamma, CompensatedSum, DeltaObserver, DeltaSeries, MzTrace, RecursionResidual,
};
pub use functional::{Functional, FunctionalSpec};
pub use path::{
    angular_series, escape_exponent, lil_normaliser, lil_ratio, unit, xn, xn_trace, AngularSeries,
    EscapeExponent, LilSeries, LIL_MIN_N,
};
pub use recurrence::{
    default_radius, exit_times, recurrence_stats, ExitTimes, RecurrenceStats, ReturnCounter,
    EXIT_SAFETY_HORIZON,
};
pub use report::DiagnosticsReport;
pub use summary::{median, ols_slope, quantile_sorted, Aggregator, Summary};
pub use twosample::{two_sample_chi2, TwoSampleTest, MIN_EXPECTED};
