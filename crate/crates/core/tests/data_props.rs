use proptest::prelude::*;
use qsvm::data::{balance, repeated_split, smote_class, synth_fraud, Dataset, Origin, SplitPlan, Standardizer};
use qsvm::metrics::ConfusionCounts;

fn imbalanced(seed: u64) -> Dataset {
    synth_fraud(seed, 3000, 3, 0.02, 3.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn splits_never_leak(seed in any::<u64>(), n_train in 2usize..10, per_class in 20usize..60, frac in prop::option::of(0.1f64..0.6)) {
        let ds = imbalanced(seed);
        let plan = SplitPlan {
            seed: seed ^ 1,
            n_train,
            validation_fraction: frac,
            repeats: 3,
            balanced_per_class: per_class,
            smote_k: 5,
        };
        for r in repeated_split(&ds, &plan).unwrap() {
            prop_assert!(!r.leaks());
            prop_assert_eq!(r.train.len(), n_train);
            prop_assert_eq!(r.train.count(1), n_train.div_ceil(2));
            let untouched = r.test.origin().iter().all(|o| matches!(o, Origin::Original { .. }));
            prop_assert!(untouched);
            prop_assert_eq!(r.test.count(1), ds.count(1).div_ceil(2));
            prop_assert_eq!(r.test.count(-1), ds.count(-1).div_ceil(2));
            if frac.is_none() {
                prop_assert_eq!(r.train.len() + r.validation.len(), 2 * per_class);
            }
        }
    }

    #[test]
    fn smote_points_are_convex_combinations(seed in any::<u64>(), target in 61usize..400, k in 1usize..8) {
        let ds = imbalanced(seed);
        let out = smote_class(&ds, 1, target, k, seed).unwrap();
        prop_assert_eq!(out.count(1), target);
        prop_assert_eq!(out.count(-1), ds.count(-1));
        for (i, o) in out.origin().iter().enumerate() {
            if let Origin::Synthetic { base, neighbor, weight } = *o {
                prop_assert!((0.0..=1.0).contains(&weight));
                prop_assert_eq!(ds.y()[base], 1);
                prop_assert_eq!(ds.y()[neighbor], 1);
                for f in 0..ds.dim() {
                    let rebuilt = ds.x()[base][f] + weight * (ds.x()[neighbor][f] - ds.x()[base][f]);
                    prop_assert!((out.x()[i][f] - rebuilt).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn balancing_hits_the_requested_sizes(seed in any::<u64>(), per_class in 10usize..300) {
        let ds = imbalanced(seed);
        let b = balance(&ds, per_class, 5, seed).unwrap();
        prop_assert_eq!(b.count(1), per_class);
        prop_assert_eq!(b.count(-1), per_class);
    }

    #[test]
    fn accuracy_equals_balanced_accuracy_on_balanced_truth(half in 1usize..50, pred in prop::collection::vec(prop::bool::ANY, 100)) {
        let truth: Vec<i8> = (0..2 * half).map(|i| if i < half { 1 } else { -1 }).collect();
        let predicted: Vec<i8> = pred[..2 * half].iter().map(|&b| if b { 1 } else { -1 }).collect();
        let m = ConfusionCounts::from_predictions(&truth, &predicted).unwrap().metrics();
        prop_assert!((m.accuracy - m.balanced_accuracy).abs() <= 1e-12);
    }

    #[test]
    fn standardized_columns_are_centered(rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 2..40)) {
        let s = Standardizer::fit(&rows);
        let z: Vec<Vec<f64>> = rows.iter().map(|r| s.apply(r)).collect();
        for f in 0..3 {
            let mean = z.iter().map(|r| r[f]).sum::<f64>() / z.len() as f64;
            prop_assert!(mean.abs() <= 1e-9);
        }
    }
}
