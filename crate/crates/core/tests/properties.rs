use mssc::init::forgy_seed;
use mssc::io::{load_dataset, minmax_normalize, save_dataset, LoadOptions};
use mssc::lima::{dominates, AlgoScore};
use mssc::lloyd::run_lloyd_traced;
use mssc::rng::rng_from_seed;
use mssc::{assign_points, squared_distance, Centroids, Dataset, DistanceCounter, EmptyPolicy, StopRule};
use proptest::prelude::*;

fn score() -> impl Strategy<Value = AlgoScore> {
    // Small grids make ties common, which is where dominance bugs hide.
    (0u8..4, 0u8..4, 5usize..9).prop_map(|(a, t, l)| AlgoScore::new(a as f64 * 0.5, t as f64, l))
}

fn dataset(max_m: usize) -> impl Strategy<Value = Dataset> {
    (1usize..=3, 1usize..=max_m).prop_flat_map(|(n, m)| {
        prop::collection::vec(-1e3f64..1e3, m * n).prop_map(move |v| Dataset::new(v, n).unwrap())
    })
}

proptest! {
    #[test]
    fn dominance_is_a_strict_partial_order(a in score(), b in score(), c in score()) {
        prop_assert!(!dominates(&a, &a, 0.0));
        prop_assert!(!(dominates(&a, &b, 0.0) && dominates(&b, &a, 0.0)));
        if dominates(&a, &b, 0.0) && dominates(&b, &c, 0.0) {
            prop_assert!(dominates(&a, &c, 0.0));
        }
    }

    #[test]
    fn tolerance_only_adds_dominance(a in score(), b in score(), tol in 0.0f64..0.5) {
        if dominates(&a, &b, 0.0) {
            prop_assert!(dominates(&a, &b, tol));
        }
    }

    #[test]
    fn lloyd_objective_never_increases(data in dataset(60), k in 1usize..6, seed in any::<u64>()) {
        let k = k.min(data.m());
        let c0 = forgy_seed(&data, k, &mut rng_from_seed(seed)).unwrap();
        let mut trace = Vec::new();
        let stop = StopRule::new(100, 0.0).unwrap();
        let r = run_lloyd_traced(&data, c0, stop, EmptyPolicy::KeepPrevious, &DistanceCounter::new(), Some(&mut trace)).unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0], "{} then {}", w[0], w[1]);
        }
        prop_assert_eq!(*trace.last().unwrap(), r.objective);
        prop_assert!(r.verify(&data, 1e-9).unwrap());
    }

    #[test]
    fn assignment_picks_a_nearest_centroid(data in dataset(40), seed in any::<u64>(), k in 1usize..5) {
        let k = k.min(data.m());
        let c: Centroids = forgy_seed(&data, k, &mut rng_from_seed(seed)).unwrap();
        let counter = DistanceCounter::new();
        let (a, _) = assign_points(&data, &c, &counter).unwrap();
        prop_assert_eq!(counter.get(), (data.m() * k) as u64);
        for (i, &l) in a.labels().iter().enumerate() {
            let mine = squared_distance(data.row(i), c.row(l), &counter).unwrap();
            for j in 0..k {
                prop_assert!(mine <= squared_distance(data.row(i), c.row(j), &counter).unwrap());
            }
        }
    }

    #[test]
    fn minmax_is_idempotent_and_bounded(data in dataset(30)) {
        let once = minmax_normalize(&data);
        prop_assert!(once.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert_eq!(minmax_normalize(&once), once);
    }

    #[test]
    fn save_load_round_trips_bits(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..40)) {
        let data = Dataset::new(values, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        save_dataset(&p, &data).unwrap();
        let back = load_dataset(&p, LoadOptions::default()).unwrap();
        let bits = |d: &Dataset| d.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&data), bits(&back));
    }
}
