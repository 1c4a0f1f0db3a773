use levyflux::path_sim::{pinned_path, sample_rng, BVPath};
use levyflux::model::SizeDist;
use proptest::prelude::*;

const T: f64 = 4.0;

/// Times on a 1/1024 grid and sizes on a 1/256 grid keep every shift exact.
fn dyadic_path() -> impl Strategy<Value = BVPath> {
    prop::collection::vec((1u32..4096, 1u32..1024), 0..12).prop_map(|raw| {
        let mut raw = raw;
        raw.sort_unstable();
        raw.dedup_by_key(|p| p.0);
        let times = raw.iter().map(|p| p.0 as f64 / 1024.0).collect();
        let sizes = raw.iter().map(|p| p.1 as f64 / 256.0).collect();
        BVPath::new(T, 0.0, -1.0, times, sizes).unwrap()
    })
}

fn dyadic_time() -> impl Strategy<Value = f64> {
    (0u32..=4096).prop_map(|k| k as f64 / 1024.0)
}

fn generic_path() -> impl Strategy<Value = BVPath> {
    (prop::collection::vec((1e-6..T, 0.01..3.0f64), 0..10), 0.2..3.0f64).prop_map(|(raw, c)| {
        let mut raw = raw;
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        raw.dedup_by(|a, b| a.0 == b.0);
        let times = raw.iter().map(|p| p.0).collect();
        let sizes = raw.iter().map(|p| p.1).collect();
        BVPath::new(T, 0.0, -c, times, sizes).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn shifts_compose_like_rotations(p in dyadic_path(), u in dyadic_time(), v in dyadic_time()) {
        let twice = p.shift(u).unwrap().shift(v).unwrap();
        let mut w = u + v;
        if w > T {
            w -= T;
        }
        let once = p.shift(w).unwrap();
        // Same jumps up to the order in which they are listed.
        let sorted = |q: &BVPath| {
            let mut pairs: Vec<(f64, f64)> = q.jump_times.iter().copied().zip(q.jump_sizes.iter().copied()).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            pairs
        };
        prop_assert_eq!(sorted(&twice), sorted(&once));
    }

    #[test]
    fn shift_keeps_both_ends(p in dyadic_path(), u in dyadic_time()) {
        let q = p.shift(u).unwrap();
        prop_assert_eq!(q.evaluate(0.0).unwrap(), p.evaluate(0.0).unwrap());
        prop_assert_eq!(q.end_value(), p.end_value());
    }

    #[test]
    fn ladder_set_measure_is_shift_invariant(p in dyadic_path(), u in dyadic_time()) {
        // E is defined for a path that ends at −x.
        let x = -p.end_value();
        prop_assume!(x > 0.0);
        prop_assert_eq!(p.shift(u).unwrap().lebesgue_e(x).unwrap(), p.lebesgue_e(x).unwrap());
    }

    #[test]
    fn running_extrema_bracket_the_path(p in generic_path(), s in 0.0..T) {
        let v = p.evaluate(s).unwrap();
        prop_assert!(p.running_inf(s).unwrap() <= v);
        prop_assert!(v <= p.running_sup(s).unwrap());
        prop_assert!(p.running_inf(s).unwrap() <= p.start && p.start <= p.running_sup(s).unwrap());
    }

    #[test]
    fn time_spent_at_the_infimum_is_drift_limited(p in generic_path()) {
        // New minima are only made by the drift, at rate c.
        let inf = p.running_inf(T).unwrap();
        let whole = p.lebesgue_e(p.start - inf + 1.0).unwrap();
        prop_assert!((whole - (p.start - inf) / p.c()).abs() <= 1e-12 * T);
    }

    #[test]
    fn time_reversal_is_an_involution(p in dyadic_path()) {
        prop_assert_eq!(p.time_reverse().time_reverse(), p);
    }

    #[test]
    fn time_reversal_keeps_the_endpoint(p in generic_path()) {
        let r = p.time_reverse();
        prop_assert!((r.end_value() - p.end_value()).abs() < 1e-12);
        let back = r.time_reverse();
        for (a, b) in back.jump_times.iter().zip(&p.jump_times) {
            prop_assert!((a - b).abs() < 1e-14 * T);
        }
        // sup of the reversal is the rise from the original infimum.
        prop_assert!((r.running_sup(T).unwrap() - (p.end_value() - p.running_inf(T).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn shifted_passage_equivalence(seed in any::<u64>(), x in 0.05..2.0f64, u in 1e-9..T) {
        let mut rng = sample_rng(seed, 0);
        let c = 1.0;
        let p = pinned_path(5, &SizeDist::Exponential { mean: 1.0 }, c, T, x, &mut rng).unwrap();
        prop_assert!(p.passage_equivalence_holds(x, u).unwrap());
    }

    #[test]
    fn shifting_to_the_infimum_delays_passage_to_the_end(seed in any::<u64>(), x in 0.05..2.0f64) {
        let mut rng = sample_rng(seed, 1);
        let p = pinned_path(5, &SizeDist::Exponential { mean: 1.0 }, 1.0, T, x, &mut rng).unwrap();
        // The infimum is a left limit, so cut just before it.
        let argmin = p.time_at_infimum();
        let previous = p.jump_times.iter().copied().filter(|&v| v < argmin).fold(0.0, f64::max);
        let u = argmin - 1e-6 * (argmin - previous);
        let q = p.shift(u).unwrap();
        prop_assert!(q.avoids_level_before_horizon(x));
        prop_assert!(p.passage_equivalence_holds(x, u).unwrap());
    }
}

#[test]
fn pure_drift_is_fixed_by_shift_and_reversal() {
    let p = BVPath::pure_drift(T, 1.5);
    for u in [0.3, 2.0, T] {
        assert_eq!(p.shift(u).unwrap(), p);
        assert!(p.passage_equivalence_holds(1.5 * T, u).unwrap());
    }
    assert_eq!(p.time_reverse(), p);
}
