//! Declarative parameter sweeps: configuration, deterministic parallel
//! execution, CSV persistence and aggregate reports.

mod execute;
mod report;
mod results;
mod spec;

pub use execute::{execute, execute_collect, run_sweep, ExecOptions, ExecSummary, Sidecar};
pub use report::{
    report, CellKey, CellSummary, DriftCell, Report, ReportMode, ScalingRow, ScalingSummary,
    UShapeSummary, UnbiasedCell,
};
pub use results::{
    read_drift_rows, read_result_rows, write_drift_rows, write_result_rows, DriftRow, ResultRow,
    DRIFT_HEADER, RESULT_HEADER,
};
pub use spec::{materialize, BudgetRule, GridValue, Job, Plan, SkippedCell, SweepSpec, TargetRule};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "OLLGA_THREADS";

/// Worker count from [`THREADS_ENV`], else the number of CPUs.
pub fn default_parallelism() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&t: &usize| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
