use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::results::{ResultRow, RESULT_HEADER};
use super::spec::{materialize, Job, SkippedCell, SweepSpec, TargetRule};
use crate::engine::run;
use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExecOptions {
    pub parallelism: usize,
    /// Fill `wall_ms` with measured time. Off by default so that output
    /// is a pure function of the spec and seed.
    pub record_wall_time: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            parallelism: super::default_parallelism(),
            record_wall_time: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecSummary {
    pub rows: usize,
    pub successes: usize,
    pub budget_exhausted: usize,
    /// `(job index, message)` for rows the sink failed to write.
    pub write_failures: Vec<(usize, String)>,
}

fn run_job(job: &Job, record_wall_time: bool) -> Result<ResultRow> {
    let started = Instant::now();
    let mut rng = RngStream::new(job.seed);
    let outcome = run(&job.params, &job.instance, &mut rng)?;
    Ok(ResultRow {
        n: job.params.n(),
        lambda: job.params.lambda(),
        k: job.params.k(),
        r: job.params.r(),
        variant: job.params.variant(),
        seed: outcome.seed,
        iterations: outcome.iterations,
        evaluations: outcome.evaluations,
        success: outcome.success,
        final_distance: outcome.final_distance,
        wall_ms: if record_wall_time {
            started.elapsed().as_millis() as u64
        } else {
            0
        },
    })
}

/// Runs all jobs on `parallelism` workers and hands rows to `sink` in job
/// order, whatever order they finish in. A failing sink call is recorded
/// and the batch continues.
pub fn execute<S>(jobs: &[Job], options: ExecOptions, mut sink: S) -> Result<ExecSummary>
where
    S: FnMut(&ResultRow) -> std::io::Result<()>,
{
    if jobs.is_empty() {
        return Err(Error::EmptyInput("execute needs at least one job"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism.max(1))
        .build()
        .map_err(|e| invalid(format!("cannot build worker pool: {e}")))?;
    let (tx, rx) = mpsc::channel::<(usize, Result<ResultRow>)>();
    let mut summary = ExecSummary::default();
    let mut first_error = None;

    std::thread::scope(|scope| {
        scope.spawn(move || {
            pool.install(|| {
                jobs.par_iter().enumerate().for_each_with(tx, |tx, (i, job)| {
                    // the receiver outlives the workers
                    let _ = tx.send((i, run_job(job, options.record_wall_time)));
                });
            });
        });

        let mut pending = BTreeMap::new();
        let mut next = 0usize;
        for (i, row) in rx {
            pending.insert(i, row);
            while let Some(row) = pending.remove(&next) {
                match row {
                    Ok(row) => {
                        summary.rows += 1;
                        summary.successes += usize::from(row.success);
                        summary.budget_exhausted += usize::from(!row.success);
                        if let Err(e) = sink(&row) {
                            summary.write_failures.push((next, e.to_string()));
                        }
                    }
                    Err(e) => {
                        first_error.get_or_insert(e);
                    }
                }
                next += 1;
            }
        }
    });

    match first_error {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

/// Runs all jobs and returns the rows in job order.
pub fn execute_collect(jobs: &[Job], options: ExecOptions) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::with_capacity(jobs.len());
    execute(jobs, options, |row| {
        rows.push(row.clone());
        Ok(())
    })?;
    Ok(rows)
}

/// Metadata written next to a results file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tool: String,
    pub version: String,
    pub spec_hash: String,
    pub master_seed: u64,
    pub target: TargetRule,
    pub cells: usize,
    pub jobs: usize,
    pub skipped: Vec<SkippedCell>,
    pub summary: ExecSummary,
    pub spec: SweepSpec,
}

impl Sidecar {
    pub fn path_for(results: &Path) -> PathBuf {
        results.with_extension("json")
    }
}

/// Materializes `spec`, streams rows to `output` as CSV and writes the
/// JSON sidecar next to it.
pub fn run_sweep(spec: &SweepSpec, options: ExecOptions, output: &Path) -> Result<Sidecar> {
    let plan = materialize(spec)?;
    let file = File::create(output)?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    writer.write_record(RESULT_HEADER)?;
    let summary = execute(&plan.jobs, options, |row| {
        writer.write_record(row.record()).map_err(std::io::Error::other)
    })?;
    writer.flush()?;
    let sidecar = Sidecar {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        spec_hash: spec.hash(),
        master_seed: plan.master_seed,
        target: spec.target,
        cells: plan.cells,
        jobs: plan.jobs.len(),
        skipped: plan.skipped,
        summary,
        spec: spec.clone(),
    };
    let mut side = BufWriter::new(File::create(Sidecar::path_for(output))?);
    serde_json::to_writer_pretty(&mut side, &sidecar)?;
    side.write_all(b"\n")?;
    side.flush()?;
    Ok(sidecar)
}
