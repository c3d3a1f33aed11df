use proptest::prelude::*;
use qsvm::qubo::{brute_force_solve, BitString, QuboProblem};

fn raw_problem(max_n: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1..=max_n).prop_flat_map(|n| (Just(n), prop::collection::vec(-5.0f64..5.0, n * n)))
}

/// Σ_ij q_ij a_i a_j over the matrix exactly as given.
fn naive_energy(n: usize, raw: &[f64], idx: u64) -> f64 {
    let bit = |i: usize| (idx >> (n - 1 - i)) & 1 == 1;
    let mut e = 0.0;
    for i in (0..n).filter(|&i| bit(i)) {
        for j in (0..n).filter(|&j| bit(j)) {
            e += raw[i * n + j];
        }
    }
    e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetrized_storage_keeps_every_energy((n, raw) in raw_problem(8)) {
        let p = QuboProblem::from_dense(n, raw.clone()).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(p.get(i, j), p.get(j, i));
            }
        }
        for idx in 0..(1u64 << n) {
            let e = p.energy(&BitString::from_index(idx, n)).unwrap();
            prop_assert!((e - naive_energy(n, &raw, idx)).abs() <= 1e-9);
        }
    }

    #[test]
    fn full_enumeration_is_sorted_and_complete((n, raw) in raw_problem(7)) {
        let p = QuboProblem::from_dense(n, raw.clone()).unwrap();
        let all = brute_force_solve(&p, 1 << n).unwrap();
        prop_assert_eq!(all.len(), 1 << n);
        for w in all.windows(2) {
            prop_assert!(w[0].1 <= w[1].1);
        }
        let mut seen: Vec<u64> = all.iter().map(|(b, _)| b.to_index()).collect();
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), 1 << n);
        for (b, e) in &all {
            prop_assert!((e - naive_energy(n, &raw, b.to_index())).abs() <= 1e-9);
        }
        let min = (0..(1u64 << n)).map(|i| naive_energy(n, &raw, i)).fold(f64::INFINITY, f64::min);
        prop_assert!((all[0].1 - min).abs() <= 1e-9);
    }

    #[test]
    fn energy_is_permutation_equivariant(
        (n, raw, perm, idx) in raw_problem(8).prop_flat_map(|(n, raw)| {
            let perm = Just((0..n).collect::<Vec<usize>>()).prop_shuffle();
            (Just(n), Just(raw), perm, 0..(1u64 << n))
        })
    ) {
        let p = QuboProblem::from_dense(n, raw.clone()).unwrap();
        let mut permuted = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                permuted[i * n + j] = raw[perm[i] * n + perm[j]];
            }
        }
        let pp = QuboProblem::from_dense(n, permuted).unwrap();
        let a = BitString::from_index(idx, n);
        let pa = BitString::new(perm.iter().map(|&k| a.bits()[k]).collect()).unwrap();
        prop_assert!((p.energy(&a).unwrap() - pp.energy(&pa).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn text_format_round_trips((n, raw) in raw_problem(6)) {
        let p = QuboProblem::from_dense(n, raw).unwrap();
        let back = QuboProblem::parse_text(&p.to_text()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn bitstring_index_round_trips(n in 1usize..20, seed in any::<u64>()) {
        let idx = seed & ((1u64 << n) - 1);
        let b = BitString::from_index(idx, n);
        prop_assert_eq!(b.to_index(), idx);
        prop_assert_eq!(b.to_string().parse::<BitString>().unwrap(), b.clone());
        prop_assert_eq!(b.get(0), (idx >> (n - 1)) & 1 == 1);
    }
}
