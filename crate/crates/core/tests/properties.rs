use proptest::prelude::*;

use ollga::analysis::{summarize, two_term_runtime, Bootstrap};
use ollga::sampling::{binomial_pmf, hypergeometric_pmf, sample_k_subset};
use ollga::sweep::{read_drift_rows, read_result_rows, write_drift_rows, write_result_rows, DriftRow, ResultRow};
use ollga::{run, BitString, GaParams, OneMaxInstance, RngStream, Variant};
use std::path::Path;

fn bits(max: usize) -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), 1..max)
}

fn pair(max: usize) -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
    (1..max).prop_flat_map(|n| (prop::collection::vec(any::<bool>(), n), prop::collection::vec(any::<bool>(), n)))
}

fn triple(max: usize) -> impl Strategy<Value = (Vec<bool>, Vec<bool>, Vec<bool>, Vec<bool>)> {
    (1..max).prop_flat_map(|n| {
        let v = || prop::collection::vec(any::<bool>(), n);
        (v(), v(), v(), v())
    })
}

fn xor(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

proptest! {
    #[test]
    fn text_and_index_round_trip(v in bits(200)) {
        let x = BitString::from_bools(v.clone());
        prop_assert_eq!(x.len(), v.len());
        prop_assert_eq!(x.to_string().parse::<BitString>().unwrap(), x.clone());
        prop_assert_eq!(BitString::from_bytes(&x.to_bytes()).unwrap(), x.clone());
        prop_assert_eq!(x.count_ones(), v.iter().filter(|&&b| b).count());
        prop_assert_eq!(x.complement().complement(), x.clone());
        if v.len() <= 64 {
            prop_assert_eq!(BitString::from_index(x.to_index(), v.len()), x);
        }
    }

    #[test]
    fn hamming_is_a_metric((a, b) in pair(150), c_seed in any::<u64>()) {
        let x = BitString::from_bools(a);
        let y = BitString::from_bools(b);
        let z = BitString::random(x.len(), &mut RngStream::new(c_seed));
        let dxy = x.hamming(&y).unwrap();
        prop_assert_eq!(dxy, y.hamming(&x).unwrap());
        prop_assert_eq!(x.hamming(&x).unwrap(), 0);
        prop_assert!(dxy <= x.hamming(&z).unwrap() + z.hamming(&y).unwrap());
        prop_assert_eq!(x.diff_positions(&y).unwrap().len(), dxy);
        prop_assert_eq!(x.with_flipped(&x.diff_positions(&y).unwrap()), y);
    }

    #[test]
    fn fitness_plus_distance_is_n((a, b) in pair(150)) {
        let inst = OneMaxInstance::new(BitString::from_bools(a)).unwrap();
        let x = BitString::from_bools(b);
        let n = inst.n();
        prop_assert_eq!(inst.evaluate(&x).unwrap() + inst.fitness_distance(&x).unwrap(), n);
        prop_assert_eq!(inst.evaluate(inst.target()).unwrap(), n);
        prop_assert_eq!(inst.evaluate(&x.complement()).unwrap(), n - inst.evaluate(&x).unwrap());
    }

    #[test]
    fn fitness_is_invariant_under_symmetries((z, x, m, _) in triple(100), seed in any::<u64>()) {
        let n = z.len();
        let inst = OneMaxInstance::new(BitString::from_bools(z.clone())).unwrap();
        let fx = inst.evaluate(&BitString::from_bools(x.clone())).unwrap();
        // xor both point and target with the same mask
        let shifted = OneMaxInstance::new(BitString::from_bools(xor(&z, &m))).unwrap();
        prop_assert_eq!(shifted.evaluate(&BitString::from_bools(xor(&x, &m))).unwrap(), fx);
        // permute both point and target with the same permutation
        let perm = sample_k_subset(n, n, &mut RngStream::new(seed)).unwrap();
        let pz: Vec<bool> = perm.iter().map(|&i| z[i]).collect();
        let px: Vec<bool> = perm.iter().map(|&i| x[i]).collect();
        let permuted = OneMaxInstance::new(BitString::from_bools(pz)).unwrap();
        prop_assert_eq!(permuted.evaluate(&BitString::from_bools(px)).unwrap(), fx);
    }

    #[test]
    fn accounting_identities((z, x, xp, y) in triple(120)) {
        let inst = OneMaxInstance::new(BitString::from_bools(z)).unwrap();
        let (x, xp, y) = (BitString::from_bools(x), BitString::from_bools(xp), BitString::from_bools(y));
        let acc = inst.account(&x, &xp, Some(&y)).unwrap();
        prop_assert_eq!(acc.good + acc.bad, acc.hamming);
        prop_assert_eq!(acc.hamming, x.hamming(&xp).unwrap());
        let (sg, sb) = (acc.surviving_good.unwrap(), acc.surviving_bad.unwrap());
        prop_assert!(sg <= acc.good && sb <= acc.bad);
        let fx = inst.evaluate(&x).unwrap() as i64;
        prop_assert_eq!(inst.evaluate(&xp).unwrap() as i64 - fx, acc.good as i64 - acc.bad as i64);
        let plain = inst.account(&x, &xp, None).unwrap();
        prop_assert_eq!(plain.surviving_good, None);
        prop_assert_eq!((plain.good, plain.bad), (acc.good, acc.bad));
    }

    #[test]
    fn states_at_distance(n in 1usize..300, frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed);
        let inst = OneMaxInstance::random(n, &mut rng).unwrap();
        let d = (frac * n as f64) as usize;
        let x = inst.make_state_at_distance(d, &mut rng).unwrap();
        prop_assert_eq!(inst.fitness_distance(&x).unwrap(), d);
    }

    #[test]
    fn subsets_are_distinct_and_in_range(n in 0usize..500, frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let l = (frac * n as f64) as usize;
        let mut s = sample_k_subset(n, l, &mut RngStream::new(seed)).unwrap();
        prop_assert_eq!(s.len(), l);
        s.sort_unstable();
        s.dedup();
        prop_assert_eq!(s.len(), l);
        prop_assert!(s.iter().all(|&i| i < n));
    }

    #[test]
    fn pmfs_are_normalized(n in 0u64..3000, p in 0.0f64..=1.0, draws_frac in 0.0f64..=1.0, marked_frac in 0.0f64..=1.0) {
        let b = binomial_pmf(n, p).unwrap();
        prop_assert!((b.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!((b.mean() - n as f64 * p).abs() <= 1e-7 * (1.0 + n as f64));
        let draws = (draws_frac * n as f64) as u64;
        let marked = (marked_frac * n as f64) as u64;
        let h = hypergeometric_pmf(n, draws, marked).unwrap();
        prop_assert!((h.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        if n > 0 {
            let want = draws as f64 * marked as f64 / n as f64;
            prop_assert!((h.mean() - want).abs() <= 1e-7 * (1.0 + want));
        }
    }

    #[test]
    fn summarize_is_permutation_invariant(v in prop::collection::vec(-1e6f64..1e6, 1..60), seed in any::<u64>()) {
        let mut w = v.clone();
        let perm = sample_k_subset(v.len(), v.len(), &mut RngStream::new(seed)).unwrap();
        for (i, &j) in perm.iter().enumerate() {
            w[i] = v[j];
        }
        let boot = Bootstrap { resamples: 200, seed: 3 };
        let a = summarize(&v, boot).unwrap();
        let b = summarize(&w, boot).unwrap();
        prop_assert_eq!(a.median, b.median);
        prop_assert_eq!((a.ci_low, a.ci_high), (b.ci_low, b.ci_high));
        prop_assert!((a.mean - b.mean).abs() <= 1e-9 * (1.0 + a.mean.abs()));
        prop_assert!(a.ci_low <= a.ci_high);
    }

    #[test]
    fn result_rows_round_trip(rows in prop::collection::vec(result_row(), 0..20)) {
        let mut buf = Vec::new();
        write_result_rows(&mut buf, &rows).unwrap();
        let back = read_result_rows(buf.as_slice(), Path::new("mem")).unwrap();
        prop_assert_eq!(back, rows);
    }

    #[test]
    fn drift_rows_round_trip(rows in prop::collection::vec(drift_row(), 0..20)) {
        let mut buf = Vec::new();
        write_drift_rows(&mut buf, &rows).unwrap();
        let back = read_drift_rows(buf.as_slice(), Path::new("mem")).unwrap();
        prop_assert_eq!(back, rows);
    }
}

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::Standard), Just(Variant::AllCompete)]
}

fn real() -> impl Strategy<Value = f64> {
    prop_oneof![1e-300f64..1e300, 0.0f64..100.0, Just(1.0 / 3.0), Just(f64::MIN_POSITIVE)]
}

fn result_row() -> impl Strategy<Value = ResultRow> {
    (
        (1usize..1 << 30, 1usize..10_000, real(), real(), variant()),
        (any::<u64>(), any::<u64>(), any::<u64>(), any::<bool>(), any::<usize>(), any::<u64>()),
    )
        .prop_map(|((n, lambda, k, r, variant), (seed, t, f, success, d, wall))| ResultRow {
            n,
            lambda,
            k,
            r,
            variant,
            seed,
            iterations: t,
            evaluations: f,
            success,
            final_distance: d,
            wall_ms: wall,
        })
}

fn drift_row() -> impl Strategy<Value = DriftRow> {
    (
        (1usize..1 << 30, 1usize..10_000, real(), real(), variant(), any::<usize>()),
        (any::<u64>(), any::<usize>(), any::<usize>()),
        prop::option::of((any::<usize>(), any::<usize>(), prop::option::of((any::<usize>(), any::<usize>())))),
    )
        .prop_map(|((n, lambda, k, r, variant, d0), (seed, ell, gain), acc)| DriftRow {
            n,
            lambda,
            k,
            r,
            variant,
            d0,
            seed,
            ell,
            gain,
            good: acc.map(|a| a.0),
            bad: acc.map(|a| a.1),
            surviving_good: acc.and_then(|a| a.2.map(|s| s.0)),
            surviving_bad: acc.and_then(|a| a.2.map(|s| s.1)),
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn runs_satisfy_evaluation_bracket(
        n in 1usize..80,
        lambda in 1usize..12,
        kf in 0.01f64..=1.0,
        rf in 0.01f64..=1.0,
        all in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let k = (kf * n as f64).max(1e-3);
        let r = rf * k;
        let variant = if all { Variant::AllCompete } else { Variant::Standard };
        let params = GaParams::new(n, lambda, k, r).unwrap().with_variant(variant).with_budget(Some(200_000));
        let mut rng = RngStream::new(seed);
        let inst = OneMaxInstance::random(n, &mut rng).unwrap();
        let out = run(&params, &inst, &mut rng).unwrap();
        let (t, f, l) = (out.iterations, out.evaluations, lambda as u64);
        prop_assert_eq!(out.success, out.final_distance == 0);
        if out.success && t > 0 {
            prop_assert!(2 * (t - 1) * l + 1 < f && f <= 2 * l * t + 1);
        }
        if !out.success {
            prop_assert_eq!(f, 200_000);
        }
    }

    #[test]
    fn two_term_runtime_is_quasi_convex(e in 10u32..=40) {
        let n = 2f64.powi(e as i32);
        let vals: Vec<f64> = (1..=256).map(|l| two_term_runtime(n, l as f64)).collect();
        let argmin = vals.iter().enumerate().fold(0, |b, (i, v)| if *v < vals[b] { i } else { b });
        prop_assert!(vals[..=argmin].windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(vals[argmin..].windows(2).all(|w| w[1] >= w[0]));
    }
}
