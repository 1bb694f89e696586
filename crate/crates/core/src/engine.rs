//! The (1+(λ,λ)) genetic algorithm and a (1+1) EA baseline.
//!
//! Offspring are kept sparse: every mutant and every crossover child is
//! represented by the set of positions where it differs from the parent,
//! and its fitness is updated incrementally from the parent's. A mutant
//! differs from the parent in exactly `ℓ` positions and a crossover child
//! only inside the mutation winner's flip set, so an iteration costs
//! `O(λ ℓ)` instead of `O(λ n)`.

use serde::{Deserialize, Serialize};

use crate::analysis::log2c;
use crate::bitspace::{BitAccounting, BitString, OneMaxInstance};
use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;
use crate::sampling::{
    bernoulli, sample_binomial, sample_k_subset, uniform_choice, SubsetSampler,
};

/// Which offspring competes with the parent in the selection step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// The crossover winner `y` replaces `x` iff `f(y) >= f(x)`.
    #[default]
    Standard,
    /// The best of all `2λ` offspring of the iteration competes with `x`.
    AllCompete,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::AllCompete => "all-compete",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Variant::Standard),
            "all-compete" | "all_compete" | "allcompete" => Ok(Variant::AllCompete),
            other => Err(invalid(format!("unknown variant {other:?}"))),
        }
    }
}

/// Evaluation budget used when none is given: `10^4 * n * log2(n)`.
pub fn default_budget(n: usize) -> u64 {
    (1e4 * n as f64 * log2c(n as f64)).round() as u64
}

/// Parameters of one GA configuration: mutation probability `p = k/n` and
/// crossover bias `c = r/k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    n: usize,
    lambda: usize,
    k: f64,
    r: f64,
    variant: Variant,
    budget: Option<u64>,
}

impl GaParams {
    pub fn new(n: usize, lambda: usize, k: f64, r: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("problem size n must be positive"));
        }
        if lambda == 0 {
            return Err(invalid("offspring population size must be at least 1"));
        }
        if !(k.is_finite() && k > 0.0 && k <= n as f64) {
            return Err(invalid(format!("need 0 < k <= n = {n}, got k = {k}")));
        }
        if !(r.is_finite() && r > 0.0 && r <= k) {
            return Err(invalid(format!("need 0 < r <= k = {k}, got r = {r}")));
        }
        Ok(Self {
            n,
            lambda,
            k,
            r,
            variant: Variant::Standard,
            budget: None,
        })
    }

    /// `λ = k = round(λ*(n))`, `r = 1`.
    pub fn suggested(n: usize) -> Result<Self> {
        let lambda = round_lambda(crate::analysis::lambda_star(n as f64));
        Self::new(n, lambda, (lambda as f64).min(n as f64), 1.0)
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_budget(mut self, budget: Option<u64>) -> Self {
        self.budget = budget;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    /// Mutation probability `k / n`.
    pub fn p(&self) -> f64 {
        self.k / self.n as f64
    }

    /// Crossover bias `r / k`.
    pub fn c(&self) -> f64 {
        self.r / self.k
    }

    pub fn effective_budget(&self) -> u64 {
        self.budget.unwrap_or_else(|| default_budget(self.n))
    }
}

/// Rounds a real population size to the nearest integer, at least 1.
pub fn round_lambda(lambda: f64) -> usize {
    if lambda.is_finite() {
        lambda.round().max(1.0) as usize
    } else {
        1
    }
}

/// Measured runtime of one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOutcome {
    /// Iterations started, including the one in which the run stopped.
    pub iterations: u64,
    /// Fitness evaluations, counting the initial one.
    pub evaluations: u64,
    pub success: bool,
    pub seed: u64,
    /// Fitness distance of the best point at stop.
    pub final_distance: usize,
}

/// Per-iteration instrumentation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub ell: usize,
    /// Fitness of the mutation winner `x'`; `None` if the mutation phase
    /// was cut short.
    pub mutation_winner_fitness: Option<usize>,
    /// Fitness of the crossover winner `y`; `None` if the crossover phase
    /// did not complete.
    pub crossover_winner_fitness: Option<usize>,
    pub parent_fitness_before: usize,
    pub parent_fitness_after: usize,
    /// Accounting of `x'` against `x`, with survival into `y` when the
    /// crossover phase completed.
    #[serde(skip)]
    pub accounting: Option<BitAccounting>,
}

/// How an iteration ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepEnd {
    Completed,
    Optimum,
    BudgetExhausted,
}

/// Result of one iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepReport {
    pub end: StepEnd,
    pub ell: usize,
    pub evaluations: u64,
    pub trace: IterationTrace,
    /// Fitness of the best point created this iteration (the candidate of
    /// the all-compete rule), if any offspring was evaluated.
    pub best_offspring_fitness: Option<usize>,
}

/// Flat storage of sparse offspring: `flips[starts[i]..starts[i+1]]`.
#[derive(Default)]
struct Brood {
    flips: Vec<usize>,
    starts: Vec<usize>,
    fitness: Vec<usize>,
}

impl Brood {
    fn clear(&mut self) {
        self.flips.clear();
        self.starts.clear();
        self.starts.push(0);
        self.fitness.clear();
    }

    fn push(&mut self, flips: impl IntoIterator<Item = usize>, fitness: usize) {
        self.flips.extend(flips);
        self.starts.push(self.flips.len());
        self.fitness.push(fitness);
    }

    fn get(&self, i: usize) -> &[usize] {
        &self.flips[self.starts[i]..self.starts[i + 1]]
    }

    fn best_fitness(&self) -> Option<usize> {
        self.fitness.iter().copied().max()
    }

    fn argmax(&self) -> Vec<usize> {
        match self.best_fitness() {
            Some(best) => (0..self.fitness.len())
                .filter(|&i| self.fitness[i] == best)
                .collect(),
            None => Vec::new(),
        }
    }
}

/// Running state of the GA: parent, evaluation counter and scratch space.
pub struct GaState<'a> {
    params: GaParams,
    inst: &'a OneMaxInstance,
    x: BitString,
    fx: usize,
    evaluations: u64,
    budget: u64,
    sampler: SubsetSampler,
    mutants: Brood,
    children: Brood,
}

impl<'a> GaState<'a> {
    /// State with parent `x`, counting the evaluation of `x`.
    pub fn from_point(params: GaParams, inst: &'a OneMaxInstance, x: BitString) -> Result<Self> {
        check_instance(&params, inst)?;
        let fx = inst.evaluate(&x)?;
        let budget = params.effective_budget();
        if budget == 0 {
            return Err(invalid("evaluation budget must be at least 1"));
        }
        Ok(Self {
            params,
            inst,
            x,
            fx,
            evaluations: 1,
            budget,
            sampler: SubsetSampler::new(params.n),
            mutants: Brood::default(),
            children: Brood::default(),
        })
    }

    pub fn parent(&self) -> &BitString {
        &self.x
    }

    pub fn parent_fitness(&self) -> usize {
        self.fx
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn is_optimal(&self) -> bool {
        self.fx == self.params.n
    }

    /// Counts one evaluation; true when the evaluated point is optimal.
    #[inline]
    fn count_evaluation(&mut self, fitness: usize) -> bool {
        self.evaluations += 1;
        fitness == self.params.n
    }

    #[inline]
    fn budget_left(&self) -> bool {
        self.evaluations < self.budget
    }

    fn adopt(&mut self, flips: &[usize], fitness: usize) {
        for &i in flips {
            self.x.flip_in_place(i);
        }
        self.fx = fitness;
    }

    fn sparse_accounting(&self, xp: &[usize], y: Option<&[usize]>) -> BitAccounting {
        let good = xp.iter().filter(|&&i| self.inst.is_wrong(&self.x, i)).count();
        let (sg, sb) = match y {
            Some(y) => {
                let sg = y.iter().filter(|&&i| self.inst.is_wrong(&self.x, i)).count();
                (Some(sg), Some(y.len() - sg))
            }
            None => (None, None),
        };
        BitAccounting {
            good,
            bad: xp.len() - good,
            surviving_good: sg,
            surviving_bad: sb,
            hamming: xp.len(),
        }
    }

    /// Runs one iteration: mutation phase, crossover phase, selection.
    ///
    /// Stops as soon as an optimal point is evaluated (the parent becomes
    /// that point) or when the budget is used up before an evaluation.
    pub fn step(&mut self, rng: &mut RngStream) -> Result<StepReport> {
        let n = self.params.n;
        let lambda = self.params.lambda;
        let fx_before = self.fx;
        let evals_before = self.evaluations;
        let ell = sample_binomial(n as u64, self.params.p(), rng)? as usize;
        let c = self.params.c();

        let mut trace = IterationTrace {
            ell,
            mutation_winner_fitness: None,
            crossover_winner_fitness: None,
            parent_fitness_before: fx_before,
            parent_fitness_after: fx_before,
            accounting: None,
        };

        let mut mutants = std::mem::take(&mut self.mutants);
        let mut children = std::mem::take(&mut self.children);
        mutants.clear();
        children.clear();

        let end = 'iteration: {
            // mutation phase: λ mutants, all at Hamming distance ℓ
            for _ in 0..lambda {
                if !self.budget_left() {
                    break 'iteration StepEnd::BudgetExhausted;
                }
                let flips = self.sampler.sample(ell, rng);
                let f = fitness_after(self.inst, &self.x, self.fx, flips);
                mutants.push(flips.iter().copied(), f);
                if self.count_evaluation(f) {
                    let last = mutants.fitness.len() - 1;
                    let winner = mutants.get(last).to_vec();
                    trace.mutation_winner_fitness = Some(f);
                    trace.accounting = Some(self.sparse_accounting(&winner, None));
                    self.adopt(&winner, f);
                    break 'iteration StepEnd::Optimum;
                }
            }
            let xp_index = *uniform_choice(&mutants.argmax(), rng)?;
            let xp: Vec<usize> = mutants.get(xp_index).to_vec();
            trace.mutation_winner_fitness = Some(mutants.fitness[xp_index]);
            trace.accounting = Some(self.sparse_accounting(&xp, None));

            // crossover phase: take each of x' 's flips with probability c
            for _ in 0..lambda {
                if !self.budget_left() {
                    break 'iteration StepEnd::BudgetExhausted;
                }
                let start = children.flips.len();
                for &i in &xp {
                    if bernoulli(c, rng)? {
                        children.flips.push(i);
                    }
                }
                let f = fitness_after(self.inst, &self.x, self.fx, &children.flips[start..]);
                children.starts.push(children.flips.len());
                children.fitness.push(f);
                if self.count_evaluation(f) {
                    let winner = children.get(children.fitness.len() - 1).to_vec();
                    trace.crossover_winner_fitness = Some(f);
                    trace.accounting = Some(self.sparse_accounting(&xp, Some(&winner)));
                    self.adopt(&winner, f);
                    break 'iteration StepEnd::Optimum;
                }
            }
            let y_index = *uniform_choice(&children.argmax(), rng)?;
            let y: Vec<usize> = children.get(y_index).to_vec();
            let fy = children.fitness[y_index];
            trace.crossover_winner_fitness = Some(fy);
            trace.accounting = Some(self.sparse_accounting(&xp, Some(&y)));

            // selection
            match self.params.variant {
                Variant::Standard => {
                    if fy >= self.fx {
                        self.adopt(&y, fy);
                    }
                }
                Variant::AllCompete => {
                    let best = mutants
                        .best_fitness()
                        .into_iter()
                        .chain(children.best_fitness())
                        .max()
                        .expect("both phases produced offspring");
                    let mut pool: Vec<(bool, usize)> = Vec::new();
                    pool.extend(mutants.argmax().into_iter().filter(|&i| mutants.fitness[i] == best).map(|i| (false, i)));
                    pool.extend(children.argmax().into_iter().filter(|&i| children.fitness[i] == best).map(|i| (true, i)));
                    let (from_children, i) = *uniform_choice(&pool, rng)?;
                    if best >= self.fx {
                        let flips = if from_children { children.get(i) } else { mutants.get(i) }.to_vec();
                        self.adopt(&flips, best);
                    }
                }
            }
            StepEnd::Completed
        };

        let best_offspring_fitness = mutants.best_fitness().into_iter().chain(children.best_fitness()).max();
        self.mutants = mutants;
        self.children = children;
        trace.parent_fitness_after = self.fx;
        Ok(StepReport {
            end,
            ell,
            evaluations: self.evaluations - evals_before,
            trace,
            best_offspring_fitness,
        })
    }
}

/// Fitness of `x` (with fitness `fx`) after flipping `flips`.
#[inline]
fn fitness_after(inst: &OneMaxInstance, x: &BitString, fx: usize, flips: &[usize]) -> usize {
    let mut f = fx;
    for &i in flips {
        if inst.is_wrong(x, i) {
            f += 1;
        } else {
            f -= 1;
        }
    }
    f
}

fn check_instance(params: &GaParams, inst: &OneMaxInstance) -> Result<()> {
    if params.n != inst.n() {
        return Err(Error::LengthMismatch {
            expected: params.n,
            actual: inst.n(),
        });
    }
    Ok(())
}

/// `mut_ℓ(x)`: flips exactly `ell` uniformly chosen positions.
pub fn mutate(x: &BitString, ell: usize, rng: &mut RngStream) -> Result<BitString> {
    let flips = sample_k_subset(x.len(), ell, rng)?;
    Ok(x.with_flipped(&flips))
}

/// `cross_c(x, xp)`: each position takes `xp`'s bit with probability `c`,
/// otherwise `x`'s bit. Positions where the parents agree are copied, so
/// coins are only tossed where they differ.
pub fn crossover(x: &BitString, xp: &BitString, c: f64, rng: &mut RngStream) -> Result<BitString> {
    if !(0.0..=1.0).contains(&c) {
        return Err(invalid(format!("crossover bias {c} outside [0, 1]")));
    }
    let mut taken = Vec::new();
    for i in x.diff_positions(xp)? {
        if bernoulli(c, rng)? {
            taken.push(i);
        }
    }
    Ok(x.with_flipped(&taken))
}

fn run_inner(
    params: &GaParams,
    inst: &OneMaxInstance,
    rng: &mut RngStream,
    mut trace: Option<&mut Vec<IterationTrace>>,
) -> Result<RunOutcome> {
    check_instance(params, inst)?;
    let x = BitString::random(params.n, rng);
    let mut state = GaState::from_point(*params, inst, x)?;
    let mut iterations = 0;
    let mut success = state.is_optimal();
    while !success && state.budget_left() {
        iterations += 1;
        let report = state.step(rng)?;
        if let Some(t) = trace.as_deref_mut() {
            t.push(report.trace);
        }
        match report.end {
            StepEnd::Completed => {}
            StepEnd::Optimum => success = true,
            StepEnd::BudgetExhausted => break,
        }
    }
    Ok(RunOutcome {
        iterations,
        evaluations: state.evaluations,
        success,
        seed: rng.seed(),
        final_distance: params.n - state.fx,
    })
}

/// One run of the (1+(λ,λ)) GA from a uniformly random start until an
/// optimum is evaluated or the budget runs out.
pub fn run(params: &GaParams, inst: &OneMaxInstance, rng: &mut RngStream) -> Result<RunOutcome> {
    run_inner(params, inst, rng, None)
}

/// Like [`run`], also returning one trace entry per iteration.
pub fn run_traced(
    params: &GaParams,
    inst: &OneMaxInstance,
    rng: &mut RngStream,
) -> Result<(RunOutcome, Vec<IterationTrace>)> {
    let mut trace = Vec::new();
    let outcome = run_inner(params, inst, rng, Some(&mut trace))?;
    Ok((outcome, trace))
}

/// The (1+1) EA with standard bit mutation at `rate`: each iteration flips
/// every bit independently with probability `rate` and keeps the child if
/// it is at least as fit. Copies (no bit flipped) are evaluated too.
pub fn run_opo_ea(
    n: usize,
    rate: f64,
    inst: &OneMaxInstance,
    rng: &mut RngStream,
    budget: Option<u64>,
) -> Result<RunOutcome> {
    if n != inst.n() {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: inst.n(),
        });
    }
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(invalid(format!("mutation rate {rate} outside (0, 1]")));
    }
    let budget = budget.unwrap_or_else(|| default_budget(n));
    if budget == 0 {
        return Err(invalid("evaluation budget must be at least 1"));
    }
    let mut x = BitString::random(n, rng);
    let mut fx = inst.evaluate(&x)?;
    let mut evaluations = 1u64;
    let mut iterations = 0u64;
    let mut sampler = SubsetSampler::new(n);
    while fx < n && evaluations < budget {
        iterations += 1;
        // B(n, rate) flips at uniform positions is standard bit mutation
        let ell = sample_binomial(n as u64, rate, rng)? as usize;
        let flips = sampler.sample(ell, rng);
        let f = fitness_after(inst, &x, fx, flips);
        evaluations += 1;
        if f >= fx {
            for &i in flips {
                x.flip_in_place(i);
            }
            fx = f;
        }
    }
    Ok(RunOutcome {
        iterations,
        evaluations,
        success: fx == n,
        seed: rng.seed(),
        final_distance: n - fx,
    })
}
