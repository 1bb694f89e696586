//! Acceptance checks. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use ollga::analysis::{lambda_star, two_term_runtime, Bootstrap};
use ollga::drift::{
    conditional_binomial_check, empirical_law, exact_composed_offspring_law, mean_gain, probe_drift,
    standard_bit_mutation_law, tvd,
};
use ollga::engine::mutate;
use ollga::sampling::hypergeometric_pmf;
use ollga::sweep::{
    read_result_rows, report, run_sweep, BudgetRule, ExecOptions, GridValue, ReportMode, SweepSpec, TargetRule,
};
use ollga::{run, BitString, GaParams, OneMaxInstance, RngStream, Variant};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn options(parallelism: usize) -> ExecOptions {
    ExecOptions {
        parallelism,
        record_wall_time: false,
    }
}

fn spec(sizes: Vec<usize>, lambda: Vec<GridValue>, k: Vec<GridValue>, reps: usize, seed: u64) -> SweepSpec {
    SweepSpec {
        sizes,
        lambda,
        k,
        r: vec![1.0],
        variants: vec![Variant::Standard],
        reps,
        master_seed: Some(seed),
        budget: BudgetRule::default(),
        target: TargetRule::Ones,
        output: None,
    }
}

fn rule(s: &str) -> GridValue {
    GridValue::Rule(s.to_string())
}

fn sweep_to(dir: &Path, name: &str, spec: &SweepSpec) -> Result<PathBuf, String> {
    let path = dir.join(name);
    let sidecar = run_sweep(spec, options(ollga::sweep::default_parallelism()), &path).map_err(err)?;
    if sidecar.summary.budget_exhausted > 0 {
        return Err(format!("{name}: {} runs exhausted the budget", sidecar.summary.budget_exhausted));
    }
    Ok(path)
}

fn composition_law() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in [2usize, 4, 6, 8] {
        let nf = n as f64;
        for k in [1.0, nf / 2.0, nf] {
            for r in [0.5, 1.0, f64::min(2.0, k)] {
                if r > k {
                    continue;
                }
                for index in 0..1u64 << n {
                    let x = BitString::from_index(index, n);
                    let composed = exact_composed_offspring_law(&x, k, r).map_err(err)?;
                    let direct = standard_bit_mutation_law(&x, r / nf).map_err(err)?;
                    worst = worst.max(tvd(&composed, &direct).map_err(err)?);
                    cases += 1;
                }
            }
        }
    }
    check(worst < 1e-12, format!("max tvd {worst:.3e} over {cases} (n, k, r, x) cases"))
}

fn goodbit_law() -> Outcome {
    let (n, ell, d) = (20usize, 5usize, 8usize);
    let inst = OneMaxInstance::classic(n).map_err(err)?;
    let reference = hypergeometric_pmf(n as u64, ell as u64, d as u64).map_err(err)?;
    let law = empirical_law(
        |rng| {
            let x = inst.make_state_at_distance(d, rng).unwrap();
            let y = mutate(&x, ell, rng).unwrap();
            inst.account(&x, &y, None).unwrap().good as u64
        },
        1_000_000,
        &mut RngStream::new(0xc2),
        &reference,
    )
    .map_err(err)?;
    check(
        law.p_value > 0.001,
        format!("chi2 = {:.3}, dof = {}, p = {:.4}", law.statistic, law.dof, law.p_value),
    )
}

fn large_lambda_floor() -> Outcome {
    let (n, lambda) = (16usize, 10_000usize);
    let inst = OneMaxInstance::classic(n).map_err(err)?;
    let params = GaParams::new(n, lambda, 8.0, 1.0).map_err(err)?;
    let root = RngStream::new(0xc3);
    let reps = 500;
    let mut total = 0u64;
    for i in 0..reps {
        let out = run(&params, &inst, &mut root.child(i)).map_err(err)?;
        if !out.success {
            return Err(format!("run {i} exhausted its budget"));
        }
        total += out.evaluations;
    }
    let mean = total as f64 / reps as f64;
    let floor = lambda.min(1 << n) as f64 / 2.0;
    check(mean >= 0.95 * floor, format!("mean F = {mean:.1}, required >= {:.1}", 0.95 * floor))
}

fn drift_cap() -> Outcome {
    let (n, lambda, k, d0) = (1000usize, 8usize, 8.0, 500usize);
    let inst = OneMaxInstance::classic(n).map_err(err)?;
    let mut lines = Vec::new();
    let mut ok = true;
    for variant in [Variant::Standard, Variant::AllCompete] {
        let params = GaParams::new(n, lambda, k, 1.0).map_err(err)?.with_variant(variant);
        let samples = probe_drift(&params, &inst, d0, 100_000, 0xc4).map_err(err)?;
        let violations = samples.iter().filter(|s| s.gain > s.ell).count();
        let (mean, se) = mean_gain(&samples);
        ok &= violations == 0 && mean <= k + 4.0 * se;
        lines.push(format!("{variant}: violations = {violations}, mean gain = {mean:.4} (se {se:.4}, cap {k})"));
    }
    check(ok, lines.join("; "))
}

fn scaling(dir: &Path) -> Outcome {
    let s = spec(
        vec![1 << 10, 1 << 12, 1 << 14, 1 << 16],
        vec![rule("lambda_star")],
        vec![rule("lambda")],
        200,
        0xc5,
    );
    let path = sweep_to(dir, "scaling.csv", &s)?;
    let rep = report(&[path], ReportMode::Scaling, Bootstrap::default()).map_err(err)?;
    let sc = rep.scaling.ok_or("no scaling summary")?;
    let ratios: Vec<String> = sc.rows.iter().map(|r| format!("n={}:{:.3}", r.key.n, r.ratio)).collect();
    check(
        sc.max_over_min <= 3.0,
        format!("max/min = {:.3} (ratios {})", sc.max_over_min, ratios.join(", ")),
    )
}

fn u_shape(dir: &Path) -> Outcome {
    let n = 1usize << 14;
    let lambdas = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
    let s = spec(
        vec![n],
        lambdas.iter().map(|&l| GridValue::Number(l)).collect(),
        vec![rule("lambda")],
        100,
        0xc6,
    );
    let path = sweep_to(dir, "u_shape.csv", &s)?;
    let rep = report(&[path], ReportMode::UShape, Bootstrap::default()).map_err(err)?;
    let u = rep.u_shape.first().ok_or("no u-shape summary")?;
    let ls = lambda_star(n as f64);
    let (lo, hi) = ((ls / 4.0).max(1.0), 8.0 * ls);
    let arg = u.shape.argmin_lambda;
    let ok = (lo..=hi).contains(&arg) && u.shape.left_ratio > 1.25 && u.shape.right_ratio > 1.25;
    check(
        ok,
        format!(
            "argmin = {arg} in [{lo:.3}, {hi:.3}], F(1)/min = {:.3}, F(128)/min = {:.3}",
            u.shape.left_ratio, u.shape.right_ratio
        ),
    )
}

fn unbiasedness(dir: &Path) -> Outcome {
    let n = 1usize << 12;
    let mut ones = spec(vec![n], vec![rule("lambda_star")], vec![rule("lambda")], 300, 0xc7);
    let mut random = ones.clone();
    ones.target = TargetRule::Ones;
    random.target = TargetRule::Random;
    random.master_seed = Some(0xc7 + 1);
    let a = sweep_to(dir, "ones.csv", &ones)?;
    let b = sweep_to(dir, "random.csv", &random)?;
    let rep = report(&[a, b], ReportMode::Unbiasedness, Bootstrap::default()).map_err(err)?;
    let cell = rep.unbiasedness.first().ok_or("no unbiasedness cell")?;
    check(
        cell.overlap,
        format!(
            "ones: mean F {:.0} CI [{:.0}, {:.0}]; random z: mean F {:.0} CI [{:.0}, {:.0}]",
            cell.first.mean, cell.first.ci_low, cell.first.ci_high, cell.second.mean, cell.second.ci_low, cell.second.ci_high
        ),
    )
}

fn variant_ratio(dir: &Path) -> Outcome {
    let mut s = spec(vec![1 << 14], vec![rule("lambda_star")], vec![rule("lambda")], 200, 0xc8);
    s.variants = vec![Variant::Standard, Variant::AllCompete];
    let path = sweep_to(dir, "variants.csv", &s)?;
    let rows = read_result_rows(File::open(&path).map_err(err)?, &path).map_err(err)?;
    let mean = |v: Variant| {
        let f: Vec<f64> = rows.iter().filter(|r| r.variant == v).map(|r| r.evaluations as f64).collect();
        f.iter().sum::<f64>() / f.len() as f64
    };
    let (std, all) = (mean(Variant::Standard), mean(Variant::AllCompete));
    let ratio = all / std;
    check(
        (0.5..=1.1).contains(&ratio),
        format!("mean F standard {std:.0}, all-compete {all:.0}, ratio {ratio:.3}"),
    )
}

fn conditional_binomial() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, (n, p, k)) in [(100u64, 0.1, 15u64), (50, 0.5, 30), (1000, 0.01, 20)].into_iter().enumerate() {
        let c = conditional_binomial_check(n, p, k, 1_000_000, 0xc9 + i as u64).map_err(err)?;
        ok &= c.holds;
        lines.push(format!("({n},{p},{k}): mean {:.4} <= {:.4} + 4*{:.5}", c.mean, c.bound, c.std_error));
    }
    check(ok, lines.join("; "))
}

fn determinism(dir: &Path) -> Outcome {
    let mut s = spec(
        vec![40, 100, 256],
        vec![GridValue::Number(1.0), GridValue::Number(3.0), rule("lambda_star")],
        vec![rule("lambda"), GridValue::Number(2.0)],
        5,
        0xca,
    );
    s.r = vec![1.0, 0.5];
    s.variants = vec![Variant::Standard, Variant::AllCompete];
    s.target = TargetRule::Random;
    let mut outputs = Vec::new();
    for (i, parallelism) in [1usize, 8, 1, 8].into_iter().enumerate() {
        let path = dir.join(format!("det{i}.csv"));
        run_sweep(&s, options(parallelism), &path).map_err(err)?;
        let bytes = std::fs::read(&path).map_err(err)?;
        let mut lines: Vec<&[u8]> = bytes.split(|&b| b == b'\n').collect();
        lines.sort_unstable();
        outputs.push((bytes.clone(), lines.concat()));
    }
    let identical = outputs.windows(2).all(|w| w[0] == w[1]);
    check(
        identical,
        format!("4 executions (parallelism 1, 8, 1, 8), {} bytes each", outputs[0].0.len()),
    )
}

fn predictor_scan() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for e in [10, 20, 30] {
        let n = 2f64.powi(e);
        let (mut best, mut arg) = (f64::INFINITY, 0u64);
        for l in 1..=(1u64 << e) {
            let v = two_term_runtime(n, l as f64);
            if v < best {
                best = v;
                arg = l;
            }
        }
        let ls = lambda_star(n);
        let ratio = arg as f64 / ls;
        ok &= (0.25..=4.0).contains(&ratio);
        lines.push(format!("n=2^{e}: argmin {arg}, lambda* {ls:.3}"));
    }
    check(ok, lines.join("; "))
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let dir = dir.path();
    let criteria: Vec<Criterion> = vec![
        ("1 composition law", Box::new(composition_law)),
        ("2 hypergeometric good bits", Box::new(goodbit_law)),
        ("3 evaluation floor for large lambda", Box::new(large_lambda_floor)),
        ("4 drift cap", Box::new(drift_cap)),
        ("5 scaling at suggested parameters", Box::new(|| scaling(dir))),
        ("6 u-shape in lambda", Box::new(|| u_shape(dir))),
        ("7 unbiasedness", Box::new(|| unbiasedness(dir))),
        ("8 all-compete variant", Box::new(|| variant_ratio(dir))),
        ("9 conditional binomial mean", Box::new(conditional_binomial)),
        ("10 determinism", Box::new(|| determinism(dir))),
        ("11 predictor minimizer", Box::new(predictor_scan)),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let started = Instant::now();
        let outcome = f();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
