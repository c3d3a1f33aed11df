use proptest::prelude::*;
use qsvm::baselines::BaselineSpec;
use qsvm::ensemble::{default_base_specs, optimize_vote_count, stack_train, VotingEnsemble};
use qsvm::metrics::{ConfusionCounts, SelectionMetric};
use qsvm::qubo::BitString;
use qsvm::solver::{SolverBackend, SolverConfig};
use qsvm::svm::{Encoding, Kernel, QuboSvmModel, TrainingSet};

fn base_set() -> TrainingSet {
    TrainingSet::new(
        vec![vec![1.0, 0.2], vec![0.6, 1.0], vec![1.4, -0.3], vec![-1.0, 0.1], vec![-0.4, -1.2], vec![-1.3, 0.7]],
        vec![1, 1, 1, -1, -1, -1],
    )
    .unwrap()
}

/// Every distinct bitstring of the base set, in a seeded order, as members.
fn members(seed: u64, count: usize) -> Vec<QuboSvmModel> {
    let ts = base_set();
    let enc = Encoding::default();
    let vars = ts.len() * enc.k;
    (0..count)
        .map(|i| {
            let idx = seed.wrapping_add(i as u64 * 0x9e37_79b9) % (1u64 << vars);
            QuboSvmModel::from_bitstring(&ts, &Kernel::Linear, &enc, &BitString::from_index(idx, vars)).unwrap()
        })
        .collect()
}

fn probabilities(count: usize) -> Vec<f64> {
    let total = (count * (count + 1) / 2) as f64;
    (0..count).map(|i| (count - i) as f64 / total).collect()
}

fn points() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<i8>)> {
    prop::collection::vec(((-2.0f64..2.0, -2.0f64..2.0), prop::bool::ANY), 2..20).prop_map(|rows| {
        let x = rows.iter().map(|((a, b), _)| vec![*a, *b]).collect();
        let mut y: Vec<i8> = rows.iter().map(|(_, l)| if *l { 1 } else { -1 }).collect();
        y[0] = 1;
        y[1] = -1;
        (x, y)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn single_vote_is_the_modal_member(seed in any::<u64>(), count in 1usize..8, (x, _) in points(), weighted in prop::bool::ANY) {
        let m = members(seed, count);
        let ens = VotingEnsemble::new(m.clone(), probabilities(count), 1, weighted).unwrap();
        for row in &x {
            prop_assert_eq!(ens.vote_predict(row).unwrap(), m[0].predict(row).unwrap());
        }
    }

    #[test]
    fn optimized_vote_count_never_loses_to_one(
        seed in any::<u64>(),
        count in 1usize..8,
        (x, y) in points(),
        metric in prop_oneof![Just(SelectionMetric::Recall), Just(SelectionMetric::BalancedAccuracy)],
        weighted in prop::bool::ANY,
    ) {
        let m = members(seed, count);
        let p = probabilities(count);
        let opt = optimize_vote_count(m.clone(), p.clone(), &x, &y, metric, weighted).unwrap();
        prop_assert!(opt.n_used >= 1 && opt.n_used <= count);
        let score = |e: &VotingEnsemble| metric.score(&ConfusionCounts::from_predictions(&y, &e.predict_all(&x).unwrap()).unwrap().metrics());
        let one = VotingEnsemble::new(m.clone(), p.clone(), 1, weighted).unwrap();
        prop_assert!(score(&opt) >= score(&one));
        for n in 1..=count {
            let e = VotingEnsemble::new(m.clone(), p.clone(), n, weighted).unwrap();
            prop_assert!(score(&opt) >= score(&e));
        }
    }
}

#[test]
fn duplicating_a_base_learner_grows_the_meta_features() {
    let cfg = SolverConfig {
        backend: SolverBackend::BruteForce,
        ..Default::default()
    };
    let ts = base_set();
    let specs = default_base_specs(4);
    let (m, _) = stack_train(&specs, &ts, &ts, &cfg).unwrap();
    assert_eq!(m.meta_dim(), 4);
    let mut more = specs.clone();
    more.push(BaselineSpec::logistic());
    let (d, _) = stack_train(&more, &ts, &ts, &cfg).unwrap();
    assert_eq!(d.meta_dim(), 5);
    assert_eq!(d.meta.training.dim(), 5);
    assert_eq!(d.base_names[4], "Logistic Regression");
}
