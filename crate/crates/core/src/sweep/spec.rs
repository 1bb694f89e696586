use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{lambda_star, log2c};
use crate::bitspace::OneMaxInstance;
use crate::engine::{round_lambda, GaParams, Variant};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, RngStream};

/// A grid entry: a literal value or a rule resolved per cell.
///
/// Rules: `"lambda_star"` (also `"lambda*"`, `"λ*"`, `"λ*(n)"`) is
/// `λ*(n)`; `"lambda"` (also `"λ"`) is the cell's population size and is
/// only meaningful in the `k` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Number(f64),
    Rule(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Rule {
    LambdaStar,
    Lambda,
}

fn parse_rule(s: &str) -> Result<Rule> {
    match s.trim() {
        "lambda_star" | "lambda*" | "lambda*(n)" | "λ*" | "λ*(n)" => Ok(Rule::LambdaStar),
        "lambda" | "λ" => Ok(Rule::Lambda),
        other => Err(Error::Config(format!("unknown grid rule {other:?}"))),
    }
}

/// Evaluation budget per run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetRule {
    /// `factor * n * log2(n)` evaluations.
    Factor(f64),
    /// A fixed number of evaluations.
    Fixed(u64),
}

impl Default for BudgetRule {
    fn default() -> Self {
        BudgetRule::Factor(1e4)
    }
}

impl BudgetRule {
    pub fn budget(&self, n: usize) -> u64 {
        match *self {
            BudgetRule::Factor(f) => (f * n as f64 * log2c(n as f64)).round().max(1.0) as u64,
            BudgetRule::Fixed(b) => b,
        }
    }
}

/// OneMax target used for every size in the sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRule {
    /// Classic OneMax.
    #[default]
    Ones,
    /// A fixed target drawn from the master seed and `n`.
    Random,
}

const TARGET_SALT: u64 = 0x7a72_6765_7473;

impl TargetRule {
    pub fn instance(&self, n: usize, master_seed: u64) -> Result<OneMaxInstance> {
        match self {
            TargetRule::Ones => OneMaxInstance::classic(n),
            TargetRule::Random => {
                let mut rng = RngStream::new(derive_seed(master_seed ^ TARGET_SALT, n as u64));
                OneMaxInstance::random(n, &mut rng)
            }
        }
    }
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::Standard]
}

fn default_r() -> Vec<f64> {
    vec![1.0]
}

/// A sweep over sizes, population sizes, mutation strengths and crossover
/// strengths, read from a TOML file:
///
/// ```toml
/// sizes = [1024, 4096]
/// lambda = [1, 2, 4, "lambda_star"]
/// k = ["lambda"]
/// r = [1.0]
/// variants = ["standard"]
/// reps = 50
/// master_seed = 42
/// budget = { factor = 10000.0 }
/// target = "ones"
/// output = "results.csv"
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub sizes: Vec<usize>,
    pub lambda: Vec<GridValue>,
    pub k: Vec<GridValue>,
    #[serde(default = "default_r")]
    pub r: Vec<f64>,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    pub reps: usize,
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub budget: BudgetRule,
    #[serde(default)]
    pub target: TargetRule,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl SweepSpec {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// SHA-256 over the JSON form of every field that influences results
    /// (the output path is excluded).
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let json = serde_json::to_vec(&canonical).expect("spec serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn validate(&self) -> Result<u64> {
        let empty = |what: &str| Error::Config(format!("{what} grid is empty"));
        if self.sizes.is_empty() {
            return Err(empty("sizes"));
        }
        if self.sizes.contains(&0) {
            return Err(Error::Config("sizes must be positive".into()));
        }
        if self.lambda.is_empty() {
            return Err(empty("lambda"));
        }
        if self.k.is_empty() {
            return Err(empty("k"));
        }
        if self.r.is_empty() {
            return Err(empty("r"));
        }
        if self.variants.is_empty() {
            return Err(empty("variants"));
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        for v in self.lambda.iter() {
            if let GridValue::Rule(s) = v {
                if parse_rule(s)? == Rule::Lambda {
                    return Err(Error::Config("the lambda grid cannot refer to itself".into()));
                }
            }
        }
        for v in self.k.iter() {
            if let GridValue::Rule(s) = v {
                parse_rule(s)?;
            }
        }
        if let BudgetRule::Factor(f) = self.budget {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::Config(format!("budget factor {f} must be positive")));
            }
        }
        self.master_seed
            .ok_or_else(|| Error::Config("master_seed is required (set it in the file or pass --seed)".into()))
    }
}

/// One run to perform.
#[derive(Clone, Debug)]
pub struct Job {
    pub cell: usize,
    pub rep: usize,
    pub params: GaParams,
    pub instance: Arc<OneMaxInstance>,
    pub seed: u64,
}

/// A grid cell whose parameters are not admissible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub cell: usize,
    pub n: usize,
    pub lambda: usize,
    pub k: f64,
    pub r: f64,
    pub variant: Variant,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct Plan {
    pub jobs: Vec<Job>,
    pub skipped: Vec<SkippedCell>,
    /// Number of grid cells, skipped ones included.
    pub cells: usize,
    pub master_seed: u64,
}

/// Expands the grid into jobs in `(size, lambda, k, r, variant, rep)`
/// order. The seed of repetition `rep` of cell `cell` is
/// `derive_seed(derive_seed(master_seed, cell), rep)`.
pub fn materialize(spec: &SweepSpec) -> Result<Plan> {
    let master_seed = spec.validate()?;
    let mut jobs = Vec::new();
    let mut skipped = Vec::new();
    let mut cell = 0usize;
    for &n in &spec.sizes {
        let instance = Arc::new(spec.target.instance(n, master_seed)?);
        for lv in &spec.lambda {
            let lambda = match lv {
                GridValue::Number(v) => round_lambda(*v),
                GridValue::Rule(_) => round_lambda(lambda_star(n as f64)),
            };
            for kv in &spec.k {
                let k = match kv {
                    GridValue::Number(v) => *v,
                    GridValue::Rule(s) => match parse_rule(s)? {
                        Rule::Lambda => lambda as f64,
                        Rule::LambdaStar => lambda_star(n as f64),
                    },
                };
                for &r in &spec.r {
                    for &variant in &spec.variants {
                        let built = GaParams::new(n, lambda, k, r).map(|p| {
                            p.with_variant(variant)
                                .with_budget(Some(spec.budget.budget(n)))
                        });
                        match built {
                            Ok(params) => {
                                let cell_seed = derive_seed(master_seed, cell as u64);
                                jobs.extend((0..spec.reps).map(|rep| Job {
                                    cell,
                                    rep,
                                    params,
                                    instance: Arc::clone(&instance),
                                    seed: derive_seed(cell_seed, rep as u64),
                                }));
                            }
                            Err(e) => skipped.push(SkippedCell {
                                cell,
                                n,
                                lambda,
                                k,
                                r,
                                variant,
                                reason: e.to_string(),
                            }),
                        }
                        cell += 1;
                    }
                }
            }
        }
    }
    if jobs.is_empty() {
        return Err(Error::Config(format!(
            "no admissible cells among {cell} ({} skipped{})",
            skipped.len(),
            skipped.first().map(|s| format!(", first: {}", s.reason)).unwrap_or_default()
        )));
    }
    Ok(Plan {
        jobs,
        skipped,
        cells: cell,
        master_seed,
    })
}
