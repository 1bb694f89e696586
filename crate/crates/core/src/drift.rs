//! One-iteration drift probes, exact enumeration oracles and goodness of
//! fit machinery.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bitspace::{BitAccounting, BitString, OneMaxInstance};
use crate::engine::{GaParams, GaState};
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, RngStream};
use crate::sampling::{binomial_pmf, hypergeometric_pmf, sample_binomial, Pmf};

/// Largest `n` for which full `2^n` laws are enumerated.
pub const ENUMERATION_CAP: usize = 12;

/// Minimum expected count per chi-square bucket.
pub const MIN_EXPECTED: f64 = 5.0;

/// Fitness gain of one iteration started at fitness distance `d0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftSample {
    pub d0: usize,
    /// `f(after) - f(before)` of the parent. With the all-compete variant
    /// the parent after selection is the best of `x` and all offspring.
    pub gain: usize,
    pub ell: usize,
    pub seed: u64,
    #[serde(skip)]
    pub winner_accounting: Option<BitAccounting>,
}

/// Runs `reps` independent single iterations from random states at
/// fitness distance `d0`. Repetition `i` uses the stream
/// `derive_seed(master_seed, i)`, so results do not depend on threading.
pub fn probe_drift(
    params: &GaParams,
    inst: &OneMaxInstance,
    d0: usize,
    reps: usize,
    master_seed: u64,
) -> Result<Vec<DriftSample>> {
    if reps == 0 {
        return Err(invalid("probe_drift needs at least one repetition"));
    }
    if d0 > inst.n() {
        return Err(Error::OutOfRange {
            what: "starting distance",
            value: d0 as u64,
            min: 0,
            max: inst.n() as u64,
        });
    }
    let params = params.with_budget(Some(u64::MAX));
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = RngStream::new(derive_seed(master_seed, rep as u64));
            let x = inst.make_state_at_distance(d0, &mut rng)?;
            let mut state = GaState::from_point(params, inst, x)?;
            let before = state.parent_fitness();
            let report = state.step(&mut rng)?;
            Ok(DriftSample {
                d0,
                gain: state.parent_fitness() - before,
                ell: report.ell,
                seed: rng.seed(),
                winner_accounting: report.trace.accounting,
            })
        })
        .collect()
}

/// Exact law over `{0,1}^n` for small `n`, indexed by
/// [`BitString::to_index`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExactLaw {
    n: usize,
    probs: Vec<f64>,
}

impl ExactLaw {
    fn zeroed(n: usize) -> Result<Self> {
        if n > ENUMERATION_CAP {
            return Err(Error::TooLarge {
                n,
                cap: ENUMERATION_CAP,
            });
        }
        Ok(Self {
            n,
            probs: vec![0.0; 1 << n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, y: &BitString) -> f64 {
        assert_eq!(y.len(), self.n);
        self.probs[y.to_index() as usize]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Probability that position `i` differs from `x`.
    pub fn flip_marginal(&self, x: &BitString, i: usize) -> f64 {
        let xi = (x.to_index() >> i) & 1;
        self.probs
            .iter()
            .enumerate()
            .filter(|(y, _)| (*y as u64 >> i) & 1 != xi)
            .map(|(_, p)| p)
            .sum()
    }
}

/// Law of standard bit mutation of `x`: every bit flips independently
/// with probability `rate`.
pub fn standard_bit_mutation_law(x: &BitString, rate: f64) -> Result<ExactLaw> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(invalid(format!("mutation rate {rate} outside [0, 1]")));
    }
    let mut law = ExactLaw::zeroed(x.len())?;
    let xi = x.to_index();
    for (y, p) in law.probs.iter_mut().enumerate() {
        let h = (y as u64 ^ xi).count_ones() as i32;
        *p = rate.powi(h) * (1.0 - rate).powi(x.len() as i32 - h);
    }
    Ok(law)
}

/// Exact law of one crossover child `cross_{r/k}(x, mut_ℓ(x))` with
/// `ℓ ~ B(n, k/n)`, before any selection.
///
/// Enumerates every step size, every flip set and every crossover mask
/// (`3^n` terms): no independence between positions is assumed.
pub fn exact_composed_offspring_law(x: &BitString, k: f64, r: f64) -> Result<ExactLaw> {
    let n = x.len();
    let mut law = ExactLaw::zeroed(n)?;
    if n == 0 {
        return Err(invalid("empty string"));
    }
    if !(k > 0.0 && k <= n as f64 && r > 0.0 && r <= k) {
        return Err(invalid(format!("need 0 < r <= k <= n, got k={k}, r={r}, n={n}")));
    }
    let c = r / k;
    let step = binomial_pmf(n as u64, k / n as f64)?;
    let subsets_of_size: Vec<f64> = (0..=n)
        .map(|l| (0..l).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64))
        .collect();
    let take: Vec<f64> = (0..=n).map(|t| c.powi(t as i32)).collect();
    let keep: Vec<f64> = (0..=n).map(|t| (1.0 - c).powi(t as i32)).collect();
    let xi = x.to_index() as usize;

    for flips in 0usize..(1 << n) {
        let ell = flips.count_ones() as usize;
        let w = step.prob(ell as u64) / subsets_of_size[ell];
        if w == 0.0 {
            continue;
        }
        // every submask of the flip set is a possible crossover outcome
        let mut taken = flips;
        loop {
            let t = taken.count_ones() as usize;
            law.probs[xi ^ taken] += w * take[t] * keep[ell - t];
            if taken == 0 {
                break;
            }
            taken = (taken - 1) & flips;
        }
    }
    Ok(law)
}

/// Law of the number of good bits `g(x, mut_ℓ(x))` for `d(x) = d`:
/// hypergeometric with population `n`, `ℓ` draws and `d` marked.
pub fn exact_goodbits_law(n: usize, ell: usize, d: usize) -> Result<Pmf> {
    if ell > n || d > n {
        return Err(invalid(format!("need ell, d <= n; got ell={ell}, d={d}, n={n}")));
    }
    hypergeometric_pmf(n as u64, ell as u64, d as u64)
}

/// Total variation distance.
pub trait TotalVariation {
    fn tvd(&self, other: &Self) -> Result<f64>;
}

impl TotalVariation for ExactLaw {
    fn tvd(&self, other: &Self) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }
}

impl TotalVariation for Pmf {
    fn tvd(&self, other: &Self) -> Result<f64> {
        let lo = self.start().min(other.start());
        let hi = self.end().max(other.end());
        Ok(0.5 * (lo..=hi).map(|k| (self.prob(k) - other.prob(k)).abs()).sum::<f64>())
    }
}

/// `½ Σ |a - b|`.
pub fn tvd<L: TotalVariation>(a: &L, b: &L) -> Result<f64> {
    a.tvd(b)
}

/// A merged chi-square bucket covering `lo..=hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: u64,
    pub hi: u64,
    pub observed: u64,
    pub expected: f64,
}

/// Histogram of a sampler against a reference pmf.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalLaw {
    pub reps: u64,
    /// Frequencies over the reference support.
    pub frequencies: Vec<f64>,
    pub buckets: Vec<Bucket>,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Groups the reference support into buckets with expected count at least
/// [`MIN_EXPECTED`], sweeping from the lower tail; a thin remainder at the
/// upper tail joins the last bucket.
fn merge_buckets(reference: &Pmf, reps: u64) -> Vec<Bucket> {
    let mut buckets: Vec<Bucket> = Vec::new();
    let mut open: Option<Bucket> = None;
    for (k, p) in reference.iter() {
        let b = open.get_or_insert(Bucket {
            lo: k,
            hi: k,
            observed: 0,
            expected: 0.0,
        });
        b.hi = k;
        b.expected += p * reps as f64;
        if b.expected >= MIN_EXPECTED {
            buckets.push(open.take().unwrap());
        }
    }
    if let Some(rest) = open {
        match buckets.last_mut() {
            Some(last) => {
                last.hi = rest.hi;
                last.expected += rest.expected;
            }
            None => buckets.push(rest),
        }
    }
    buckets
}

/// Draws `reps` values from `sampler` and runs a chi-square goodness of
/// fit test against `reference`. Values outside the reference support are
/// counted in the nearest edge bucket.
pub fn empirical_law<F>(mut sampler: F, reps: u64, rng: &mut RngStream, reference: &Pmf) -> Result<EmpiricalLaw>
where
    F: FnMut(&mut RngStream) -> u64,
{
    let mut buckets = merge_buckets(reference, reps);
    if buckets.len() < 2 || buckets.iter().any(|b| b.expected < MIN_EXPECTED) {
        return Err(Error::InsufficientSamples(format!(
            "{reps} draws leave fewer than two buckets with expected count >= {MIN_EXPECTED}"
        )));
    }
    let width = (reference.end() - reference.start() + 1) as usize;
    let mut counts = vec![0u64; width];
    for _ in 0..reps {
        let v = sampler(rng).clamp(reference.start(), reference.end());
        counts[(v - reference.start()) as usize] += 1;
    }
    for b in &mut buckets {
        b.observed = (b.lo..=b.hi)
            .map(|k| counts[(k - reference.start()) as usize])
            .sum();
    }
    let statistic: f64 = buckets
        .iter()
        .map(|b| (b.observed as f64 - b.expected).powi(2) / b.expected)
        .sum();
    let dof = buckets.len() - 1;
    let p_value = ChiSquared::new(dof as f64)
        .map_err(|e| invalid(e.to_string()))?
        .sf(statistic);
    Ok(EmpiricalLaw {
        reps,
        frequencies: counts.iter().map(|&c| c as f64 / reps as f64).collect(),
        buckets,
        statistic,
        dof,
        p_value,
    })
}

/// Empirical check of `E[X | X >= k] <= k + (n - k) p` for binomial `X`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMeanCheck {
    pub n: u64,
    pub p: f64,
    pub k: u64,
    pub accepted: u64,
    pub draws: u64,
    pub mean: f64,
    pub std_error: f64,
    pub bound: f64,
    /// `mean <= bound + 4 * std_error`
    pub holds: bool,
}

/// Collects `samples` draws of `B(n, p)` conditioned on `X >= k` by
/// rejection. The work is split into 64 fixed chunks with derived
/// streams.
pub fn conditional_binomial_check(n: u64, p: f64, k: u64, samples: u64, master_seed: u64) -> Result<ConditionalMeanCheck> {
    const CHUNKS: u64 = 64;
    if k > n {
        return Err(invalid(format!("threshold {k} exceeds n = {n}")));
    }
    if samples == 0 {
        return Err(invalid("need at least one conditioned sample"));
    }
    if binomial_pmf(n, p)?.iter().filter(|(x, _)| *x >= k).all(|(_, q)| q == 0.0) {
        return Err(invalid("conditioning event has probability zero"));
    }
    let parts: Vec<(u64, f64, f64, u64)> = (0..CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let quota = samples / CHUNKS + u64::from(chunk < samples % CHUNKS);
            let mut rng = RngStream::new(derive_seed(master_seed, chunk));
            let (mut got, mut sum, mut sumsq, mut draws) = (0u64, 0.0, 0.0, 0u64);
            while got < quota {
                let x = sample_binomial(n, p, &mut rng)?;
                draws += 1;
                if x >= k {
                    got += 1;
                    sum += x as f64;
                    sumsq += (x as f64).powi(2);
                }
            }
            Ok((got, sum, sumsq, draws))
        })
        .collect::<Result<_>>()?;
    let accepted: u64 = parts.iter().map(|p| p.0).sum();
    let sum: f64 = parts.iter().map(|p| p.1).sum();
    let sumsq: f64 = parts.iter().map(|p| p.2).sum();
    let draws: u64 = parts.iter().map(|p| p.3).sum();
    let m = accepted as f64;
    let mean = sum / m;
    let var = if accepted > 1 {
        ((sumsq - m * mean * mean) / (m - 1.0)).max(0.0)
    } else {
        0.0
    };
    let std_error = (var / m).sqrt();
    let bound = k as f64 + (n - k) as f64 * p;
    Ok(ConditionalMeanCheck {
        n,
        p,
        k,
        accepted,
        draws,
        mean,
        std_error,
        bound,
        holds: mean <= bound + 4.0 * std_error,
    })
}

/// Mean and standard error of the gains.
pub fn mean_gain(samples: &[DriftSample]) -> (f64, f64) {
    let m = samples.len() as f64;
    let mean = samples.iter().map(|s| s.gain as f64).sum::<f64>() / m;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples
        .iter()
        .map(|s| (s.gain as f64 - mean).powi(2))
        .sum::<f64>()
        / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Fraction of samples whose gain is at least half the starting distance.
pub fn halving_frequency(samples: &[DriftSample]) -> f64 {
    let hits = samples.iter().filter(|s| 2 * s.gain >= s.d0 && s.d0 > 0).count();
    hits as f64 / samples.len() as f64
}
