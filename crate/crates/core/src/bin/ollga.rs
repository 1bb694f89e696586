use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ollga::analysis::{f_star, f_star_closed_form, lambda_star, two_term_runtime, Bootstrap};
use ollga::drift::{
    empirical_law, exact_composed_offspring_law, exact_goodbits_law, probe_drift,
    standard_bit_mutation_law, tvd,
};
use ollga::engine::mutate;
use ollga::sampling::hypergeometric_pmf;
use ollga::sweep::{
    default_parallelism, execute, materialize, report, run_sweep, write_drift_rows, write_result_rows,
    BudgetRule, DriftRow, ExecOptions, GridValue, ReportMode, Sidecar, SweepSpec, TargetRule, THREADS_ENV,
};
use ollga::{BitString, Error, RngStream, Variant};

#[derive(Parser)]
#[command(name = "ollga", version, about = "The (1+(λ,λ)) GA on OneMax: runs, sweeps, drift probes and oracles")]
struct Cli {
    /// Worker threads; defaults to $OLLGA_THREADS, then the CPU count.
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one parameter cell `reps` times and write result rows.
    Run(RunArgs),
    /// Run every cell of a sweep file.
    Sweep(SweepArgs),
    /// Measure one-iteration fitness gains from a fixed distance.
    Drift(DriftArgs),
    /// Check the exact offspring laws; exits 1 on a failed check.
    Oracle(OracleArgs),
    /// Print λ*, F* and the two-term runtime curve.
    Predict(PredictArgs),
    /// Aggregate result files.
    Report(ReportArgs),
}

#[derive(Args)]
struct CellArgs {
    #[arg(short, long)]
    n: usize,
    /// Population size, or `lambda_star`.
    #[arg(short, long, default_value = "lambda_star")]
    lambda: String,
    /// Expected mutation strength, or `lambda` / `lambda_star`.
    #[arg(short, long, default_value = "lambda")]
    k: String,
    #[arg(short, long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = Variant::Standard)]
    variant: Variant,
    #[arg(long)]
    seed: u64,
    /// Fixed evaluation budget per run; default 1e4·n·log2(n).
    #[arg(long)]
    budget: Option<u64>,
    /// `ones` or `random`.
    #[arg(long, default_value = "ones")]
    target: String,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    cell: CellArgs,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// CSV output; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    wall_time: bool,
}

#[derive(Args)]
struct SweepArgs {
    config: PathBuf,
    /// Overrides `master_seed` in the file; required if the file has none.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    wall_time: bool,
}

#[derive(Args)]
struct DriftArgs {
    #[command(flatten)]
    cell: CellArgs,
    #[arg(long)]
    d0: usize,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
    /// Samples for the good-bit chi-square check.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(short, long)]
    n: f64,
    /// Largest λ of the printed curve.
    #[arg(long, default_value_t = 64)]
    lambda_max: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// scaling, u-shape, unbiasedness or drift.
    #[arg(short, long)]
    mode: ReportMode,
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

enum Failure {
    Check(String),
    Config(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.filter(|&t| t > 0).unwrap_or_else(default_parallelism);
    // probe_drift uses the global pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a, threads),
        Command::Sweep(a) => cmd_sweep(a, threads),
        Command::Drift(a) => cmd_drift(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("ollga: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("ollga: {e}");
            ExitCode::from(2)
        }
    }
}

fn grid_value(s: &str) -> GridValue {
    match s.parse::<f64>() {
        Ok(v) => GridValue::Number(v),
        Err(_) => GridValue::Rule(s.to_string()),
    }
}

fn target_rule(s: &str) -> Result<TargetRule, Error> {
    match s {
        "ones" => Ok(TargetRule::Ones),
        "random" => Ok(TargetRule::Random),
        other => Err(Error::Config(format!("unknown target {other:?} (expected ones or random)"))),
    }
}

fn cell_spec(cell: &CellArgs, reps: usize) -> Result<SweepSpec, Error> {
    Ok(SweepSpec {
        sizes: vec![cell.n],
        lambda: vec![grid_value(&cell.lambda)],
        k: vec![grid_value(&cell.k)],
        r: vec![cell.r],
        variants: vec![cell.variant],
        reps,
        master_seed: Some(cell.seed),
        budget: cell.budget.map_or_else(BudgetRule::default, BudgetRule::Fixed),
        target: target_rule(&cell.target)?,
        output: None,
    })
}

fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_run(args: RunArgs, threads: usize) -> Result<(), Failure> {
    let spec = cell_spec(&args.cell, args.reps)?;
    let plan = materialize(&spec)?;
    if let Some(s) = plan.skipped.first() {
        return Err(Error::Config(s.reason.clone()).into());
    }
    let options = ExecOptions {
        parallelism: threads,
        record_wall_time: args.wall_time,
    };
    let mut rows = Vec::with_capacity(plan.jobs.len());
    let summary = execute(&plan.jobs, options, |row| {
        rows.push(row.clone());
        Ok(())
    })?;
    write_result_rows(sink(args.output.as_deref())?, &rows)?;
    eprintln!(
        "{} runs, {} reached the optimum, {} exhausted the budget",
        summary.rows, summary.successes, summary.budget_exhausted
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs, threads: usize) -> Result<(), Failure> {
    let mut spec = SweepSpec::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        spec.master_seed = Some(seed);
    }
    let output = args
        .output
        .or_else(|| spec.output.clone())
        .ok_or_else(|| Error::Config("no output path (set `output` in the file or pass --output)".into()))?;
    let options = ExecOptions {
        parallelism: threads,
        record_wall_time: args.wall_time,
    };
    let sidecar = run_sweep(&spec, options, &output)?;
    eprintln!(
        "{} rows written to {} ({} skipped cells, {} write failures); sidecar {}",
        sidecar.summary.rows,
        output.display(),
        sidecar.skipped.len(),
        sidecar.summary.write_failures.len(),
        Sidecar::path_for(&output).display()
    );
    Ok(())
}

fn cmd_drift(args: DriftArgs) -> Result<(), Failure> {
    let spec = cell_spec(&args.cell, 1)?;
    let plan = materialize(&spec)?;
    if let Some(s) = plan.skipped.first() {
        return Err(Error::Config(s.reason.clone()).into());
    }
    let job = &plan.jobs[0];
    let params = job.params;
    let samples = probe_drift(&params, &job.instance, args.d0, args.reps, args.cell.seed)?;
    let rows: Vec<DriftRow> = samples
        .iter()
        .map(|s| DriftRow {
            n: params.n(),
            lambda: params.lambda(),
            k: params.k(),
            r: params.r(),
            variant: params.variant(),
            d0: s.d0,
            seed: s.seed,
            ell: s.ell,
            gain: s.gain,
            good: s.winner_accounting.map(|a| a.good),
            bad: s.winner_accounting.map(|a| a.bad),
            surviving_good: s.winner_accounting.and_then(|a| a.surviving_good),
            surviving_bad: s.winner_accounting.and_then(|a| a.surviving_bad),
        })
        .collect();
    write_drift_rows(sink(args.output.as_deref())?, &rows)?;
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), Failure> {
    let mut rng = RngStream::new(args.seed);
    let mut failures = 0;
    for n in [2usize, 4, 6, 8] {
        let nf = n as f64;
        for k in dedup(&[1.0, nf / 2.0, nf]) {
            for r in dedup(&[0.5, 1.0, k.min(2.0)]) {
                if r > k {
                    continue;
                }
                let x = BitString::random(n, &mut rng);
                let composed = exact_composed_offspring_law(&x, k, r)?;
                let direct = standard_bit_mutation_law(&x, r / nf)?;
                let d = tvd(&composed, &direct)?;
                let ok = d < args.tolerance;
                failures += usize::from(!ok);
                println!(
                    "{} composition n={n} k={k} r={r} tvd={d:.3e}",
                    if ok { "PASS" } else { "FAIL" }
                );
            }
        }
    }

    let (n, ell, d) = (20usize, 5usize, 8usize);
    let exact = exact_goodbits_law(n, ell, d)?;
    let reference = hypergeometric_pmf(n as u64, ell as u64, d as u64)?;
    let gap = tvd(&exact, &reference)?;
    let ok = gap < args.tolerance;
    failures += usize::from(!ok);
    println!("{} good-bit law n={n} ell={ell} d={d} tvd={gap:.3e}", if ok { "PASS" } else { "FAIL" });

    let inst = ollga::OneMaxInstance::classic(n)?;
    let law = empirical_law(
        |rng| {
            let x = inst.make_state_at_distance(d, rng).expect("d <= n");
            let y = mutate(&x, ell, rng).expect("ell <= n");
            inst.account(&x, &y, None).expect("equal lengths").good as u64
        },
        args.samples,
        &mut rng,
        &reference,
    )?;
    let ok = law.p_value > args.alpha;
    failures += usize::from(!ok);
    println!(
        "{} good-bit sampling samples={} chi2={:.3} dof={} p={:.4}",
        if ok { "PASS" } else { "FAIL" },
        args.samples,
        law.statistic,
        law.dof,
        law.p_value
    );
    if failures > 0 {
        return Err(Failure::Check(format!("{failures} oracle check(s) failed")));
    }
    Ok(())
}

fn dedup(values: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

#[derive(Serialize)]
struct Prediction {
    n: f64,
    lambda_star: f64,
    f_star: f64,
    argmin_lambda: usize,
    curve: Vec<(usize, f64)>,
}

fn cmd_predict(args: PredictArgs) -> Result<(), Failure> {
    if args.n.is_nan() || args.n < 2.0 || args.lambda_max == 0 {
        return Err(Error::Config("predict needs n >= 2 and lambda-max >= 1".into()).into());
    }
    let curve: Vec<(usize, f64)> = (1..=args.lambda_max)
        .map(|l| (l, two_term_runtime(args.n, l as f64)))
        .collect();
    let argmin = curve
        .iter()
        .fold((1, f64::INFINITY), |best, &(l, v)| if v < best.1 { (l, v) } else { best })
        .0;
    let p = Prediction {
        n: args.n,
        lambda_star: lambda_star(args.n),
        f_star: f_star(args.n),
        argmin_lambda: argmin,
        curve,
    };
    debug_assert!((p.f_star - f_star_closed_form(args.n)).abs() <= 1e-9 * p.f_star);
    let mut out = io::stdout().lock();
    if args.json {
        serde_json::to_writer_pretty(&mut out, &p).map_err(Error::from)?;
        writeln!(out)?;
    } else {
        writeln!(out, "n = {}", p.n)?;
        writeln!(out, "lambda* = {:.6}", p.lambda_star)?;
        writeln!(out, "F* = {:.6e}", p.f_star)?;
        writeln!(out, "argmin two-term over 1..={} = {}", args.lambda_max, p.argmin_lambda)?;
        writeln!(out, "lambda\ttwo_term")?;
        for (l, v) in &p.curve {
            writeln!(out, "{l}\t{v:.6e}")?;
        }
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), Failure> {
    let rep = report(&args.paths, args.mode, Bootstrap::default())?;
    print!("{}", rep.to_table());
    if let Some(path) = args.json {
        let f = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(f, &rep).map_err(Error::from)?;
    }
    Ok(())
}
