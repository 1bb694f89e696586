//! Exact samplers used by the algorithm and exact pmfs used by the oracles.

use std::collections::HashMap;

use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;

/// Below this value of `n * min(p, 1-p)` binomials are sampled by inversion.
pub const INVERSION_CUTOFF: f64 = 10.0;

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(format!("probability {p} outside [0, 1]")))
    }
}

/// Draw from Binomial(n, p).
///
/// Small means use sequential inversion of the cdf starting at zero. Larger
/// means use the BTPE rejection sampler from `rand_distr`. Probabilities
/// above one half are handled through `n - B(n, 1 - p)`.
pub fn sample_binomial(n: u64, p: f64, rng: &mut RngStream) -> Result<u64> {
    check_probability(p)?;
    if n == 0 || p == 0.0 {
        return Ok(0);
    }
    if p == 1.0 {
        return Ok(n);
    }
    let (q, mirrored) = if p > 0.5 { (1.0 - p, true) } else { (p, false) };
    let draw = if n as f64 * q < INVERSION_CUTOFF {
        binomial_inversion(n, q, rng)
    } else {
        Binomial::new(n, q)
            .map_err(|e| invalid(format!("binomial({n}, {q}): {e}")))?
            .sample(rng)
    };
    Ok(if mirrored { n - draw } else { draw })
}

fn binomial_inversion(n: u64, q: f64, rng: &mut RngStream) -> u64 {
    let odds = q / (1.0 - q);
    let mut u = rng.unit_f64();
    let mut mass = (1.0 - q).powf(n as f64);
    let mut k = 0u64;
    while u >= mass {
        u -= mass;
        if k == n {
            // rounding left a sliver of mass above n
            return n;
        }
        mass *= odds * (n - k) as f64 / (k + 1) as f64;
        k += 1;
    }
    k
}

/// Uniform random `l`-subset of `0..n` (0-based positions).
///
/// Runs a partial Fisher-Yates shuffle over a virtual identity array kept
/// in a hash map, so the work is `O(min(l, n - l))` plus the output size.
/// For `l > n/2` the complement is sampled instead.
pub fn sample_k_subset(n: usize, l: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
    if l > n {
        return Err(Error::OutOfRange {
            what: "subset size",
            value: l as u64,
            min: 0,
            max: n as u64,
        });
    }
    if 2 * l <= n {
        return Ok(sparse_fisher_yates(n, l, rng));
    }
    let excluded = sparse_fisher_yates(n, n - l, rng);
    let mut keep = vec![true; n];
    for i in excluded {
        keep[i] = false;
    }
    Ok((0..n).filter(|&i| keep[i]).collect())
}

fn sparse_fisher_yates(n: usize, l: usize, rng: &mut RngStream) -> Vec<usize> {
    let mut moved: HashMap<usize, usize> = HashMap::with_capacity(2 * l);
    let mut out = Vec::with_capacity(l);
    for i in 0..l {
        let j = i + rng.below((n - i) as u64) as usize;
        let at_j = *moved.get(&j).unwrap_or(&j);
        let at_i = *moved.get(&i).unwrap_or(&i);
        moved.insert(j, at_i);
        out.push(at_j);
    }
    out
}

/// Reusable subset sampler for hot loops.
///
/// Keeps a dense permutation of `0..n` and runs partial Fisher-Yates on it
/// without restoring it afterwards: whatever order the array is in, the
/// next partial shuffle still yields a uniform subset.
#[derive(Clone, Debug)]
pub struct SubsetSampler {
    perm: Vec<usize>,
}

impl SubsetSampler {
    pub fn new(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    /// Uniform `l`-subset; the slice is valid until the next call.
    pub fn sample(&mut self, l: usize, rng: &mut RngStream) -> &[usize] {
        let n = self.perm.len();
        assert!(l <= n, "subset size {l} exceeds {n}");
        let steps = l.min(n - l);
        for i in 0..steps {
            let j = i + rng.below((n - i) as u64) as usize;
            self.perm.swap(i, j);
        }
        if l == steps {
            &self.perm[..l]
        } else {
            &self.perm[steps..]
        }
    }
}

/// One with probability `p`.
#[inline]
pub fn bernoulli(p: f64, rng: &mut RngStream) -> Result<bool> {
    check_probability(p)?;
    Ok(rng.unit_f64() < p)
}

/// Uniformly chosen element of a nonempty slice.
pub fn uniform_choice<'a, T>(items: &'a [T], rng: &mut RngStream) -> Result<&'a T> {
    if items.is_empty() {
        return Err(Error::EmptyInput("uniform_choice needs at least one item"));
    }
    Ok(&items[rng.below(items.len() as u64) as usize])
}

/// Probability mass function on a contiguous integer support.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf {
    start: u64,
    probs: Vec<f64>,
}

impl Pmf {
    /// Builds a pmf from explicit probabilities starting at `start`.
    pub fn new(start: u64, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyInput("pmf needs at least one point"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid("pmf probabilities must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("pmf sums to {total}, not 1")));
        }
        Ok(Self { start, probs })
    }

    pub fn point_mass(at: u64) -> Self {
        Self {
            start: at,
            probs: vec![1.0],
        }
    }

    /// Smallest value of the support.
    pub fn start(&self) -> u64 {
        self.start
    }

    /// Largest value of the support.
    pub fn end(&self) -> u64 {
        self.start + self.probs.len() as u64 - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, k: u64) -> f64 {
        if k < self.start {
            return 0.0;
        }
        self.probs
            .get((k - self.start) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.start + i as u64, p))
    }

    /// Inverse-cdf draw.
    pub fn sample(&self, rng: &mut RngStream) -> u64 {
        let mut u = rng.unit_f64();
        for (k, p) in self.iter() {
            if u < p {
                return k;
            }
            u -= p;
        }
        // rounding residue: last point with positive mass
        self.iter()
            .filter(|(_, p)| *p > 0.0)
            .last()
            .map(|(k, _)| k)
            .unwrap_or(self.start)
    }
}

/// Fills `weights` (indexed from the support start) by walking the ratio
/// `ratio(k) = P(k+1)/P(k)` outwards from the mode, then normalizes.
fn normalized_from_mode(len: usize, mode: usize, ratio: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut w = vec![0.0; len];
    w[mode] = 1.0;
    for i in mode..len - 1 {
        w[i + 1] = w[i] * ratio(i);
    }
    for i in (0..mode).rev() {
        w[i] = w[i + 1] / ratio(i);
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Exact Binomial(n, p) pmf on `0..=n`.
pub fn binomial_pmf(n: u64, p: f64) -> Result<Pmf> {
    check_probability(p)?;
    if p == 0.0 || p == 1.0 {
        let mut probs = vec![0.0; n as usize + 1];
        probs[if p == 0.0 { 0 } else { n as usize }] = 1.0;
        return Ok(Pmf { start: 0, probs });
    }
    let odds = p / (1.0 - p);
    let mode = (((n + 1) as f64 * p).floor() as usize).min(n as usize);
    let probs = normalized_from_mode(n as usize + 1, mode, |k| {
        odds * (n - k as u64) as f64 / (k + 1) as f64
    });
    Ok(Pmf { start: 0, probs })
}

/// Exact hypergeometric pmf: number of marked elements in a uniform
/// `draws`-subset of a population of `population` elements of which
/// `marked` are marked. Mean is `draws * marked / population`.
pub fn hypergeometric_pmf(population: u64, draws: u64, marked: u64) -> Result<Pmf> {
    if draws > population || marked > population {
        return Err(invalid(format!(
            "hypergeometric({population}, {draws}, {marked}): draws and marked must not exceed the population"
        )));
    }
    let lo = (draws + marked).saturating_sub(population);
    let hi = draws.min(marked);
    let len = (hi - lo + 1) as usize;
    let mode_abs = ((draws + 1) as f64 * (marked + 1) as f64 / (population + 2) as f64).floor() as u64;
    let mode = (mode_abs.clamp(lo, hi) - lo) as usize;
    let probs = normalized_from_mode(len, mode, |i| {
        let k = lo + i as u64;
        ((draws - k) * (marked - k)) as f64 / ((k + 1) * (population + k + 1 - draws - marked)) as f64
    });
    Ok(Pmf { start: lo, probs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn binomial_degenerate_probabilities() {
        let mut rng = RngStream::new(1);
        for _ in 0..100 {
            assert_eq!(sample_binomial(17, 0.0, &mut rng).unwrap(), 0);
            assert_eq!(sample_binomial(17, 1.0, &mut rng).unwrap(), 17);
        }
        assert!(sample_binomial(3, 1.5, &mut rng).is_err());
        assert!(sample_binomial(3, -0.1, &mut rng).is_err());
        assert!(sample_binomial(3, f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn binomial_pmf_three_fair_coins() {
        let pmf = binomial_pmf(3, 0.5).unwrap();
        let expected = [0.125, 0.375, 0.375, 0.125];
        for (got, want) in pmf.probs().iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn binomial_pmf_matches_closed_form() {
        for &(n, p) in &[(20u64, 0.25), (7, 0.9), (60, 0.03), (1, 0.5)] {
            let pmf = binomial_pmf(n, p).unwrap();
            for k in 0..=n {
                let want = binom(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
                assert!((pmf.prob(k) - want).abs() < 1e-13, "n={n} p={p} k={k}");
            }
        }
    }

    #[test]
    fn binomial_pmf_equals_bernoulli_convolution() {
        for &(n, p) in &[(10u64, 0.3), (25, 0.5), (40, 0.05)] {
            let mut law = vec![1.0];
            for _ in 0..n {
                let mut next = vec![0.0; law.len() + 1];
                for (k, w) in law.iter().enumerate() {
                    next[k] += w * (1.0 - p);
                    next[k + 1] += w * p;
                }
                law = next;
            }
            let pmf = binomial_pmf(n, p).unwrap();
            let tvd: f64 = 0.5
                * law
                    .iter()
                    .enumerate()
                    .map(|(k, w)| (w - pmf.prob(k as u64)).abs())
                    .sum::<f64>();
            assert!(tvd < 1e-12, "tvd {tvd}");
        }
    }

    #[test]
    fn hypergeometric_examples() {
        let all = hypergeometric_pmf(10, 10, 4).unwrap();
        assert_eq!(all.start(), 4);
        assert_eq!(all.probs(), &[1.0]);

        let pmf = hypergeometric_pmf(20, 5, 8).unwrap();
        assert!((pmf.mean() - 2.0).abs() < 1e-9);
        // direct count C(8,k) C(12,5-k) / C(20,5)
        for k in 0..=5u64 {
            let want = binom(8, k) * binom(12, 5 - k) / binom(20, 5);
            assert!((pmf.prob(k) - want).abs() < 1e-14);
        }
        assert!(hypergeometric_pmf(5, 6, 1).is_err());
    }

    #[test]
    fn hypergeometric_mean_identity_grid() {
        for pop in 1..=30u64 {
            for draws in 0..=pop {
                for marked in 0..=pop {
                    let pmf = hypergeometric_pmf(pop, draws, marked).unwrap();
                    let want = draws as f64 * marked as f64 / pop as f64;
                    assert!((pmf.mean() - want).abs() < 1e-9);
                    let total: f64 = pmf.probs().iter().sum();
                    assert!((total - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn pmf_rejects_bad_mass() {
        assert!(Pmf::new(0, vec![0.5, 0.4]).is_err());
        assert!(Pmf::new(0, vec![]).is_err());
        assert!(Pmf::new(0, vec![1.5, -0.5]).is_err());
        assert!(Pmf::new(3, vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn subset_edges() {
        let mut rng = RngStream::new(5);
        assert!(sample_k_subset(6, 0, &mut rng).unwrap().is_empty());
        let mut full = sample_k_subset(6, 6, &mut rng).unwrap();
        full.sort_unstable();
        assert_eq!(full, vec![0, 1, 2, 3, 4, 5]);
        assert!(sample_k_subset(6, 7, &mut rng).is_err());
        for l in 0..=9 {
            let mut s = sample_k_subset(9, l, &mut rng).unwrap();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), l);
            assert!(s.iter().all(|&i| i < 9));
        }
    }

    #[test]
    fn dense_sampler_yields_distinct_positions() {
        let mut rng = RngStream::new(8);
        let mut sampler = SubsetSampler::new(13);
        for l in (0..=13).chain(0..=13) {
            let mut s = sampler.sample(l, &mut rng).to_vec();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), l);
        }
    }

    #[test]
    fn choice_and_coin_edges() {
        let mut rng = RngStream::new(2);
        assert_eq!(*uniform_choice(&[42], &mut rng).unwrap(), 42);
        assert!(uniform_choice::<u8>(&[], &mut rng).is_err());
        assert!(!bernoulli(0.0, &mut rng).unwrap());
        assert!(bernoulli(1.0, &mut rng).unwrap());
        assert!(bernoulli(2.0, &mut rng).is_err());
    }

    #[test]
    fn pmf_sampler_respects_support() {
        let pmf = hypergeometric_pmf(12, 9, 7).unwrap();
        let mut rng = RngStream::new(4);
        for _ in 0..1000 {
            let k = pmf.sample(&mut rng);
            assert!(k >= pmf.start() && k <= pmf.end());
        }
    }
}
