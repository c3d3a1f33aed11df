use proptest::prelude::*;
use qsvm::embedding::{coupling_target, embed, lattice_sites, residual, EmbeddingConfig, EmbeddingMode};
use qsvm::qubo::QuboProblem;

fn problem() -> impl Strategy<Value = QuboProblem> {
    (2usize..=5).prop_flat_map(|n| {
        prop::collection::vec(-3.0f64..6.0, n * n).prop_map(move |v| QuboProblem::from_dense(n, v).unwrap())
    })
}

fn cfg(mode: EmbeddingMode, seed: u64) -> EmbeddingConfig {
    EmbeddingConfig {
        mode,
        seed,
        max_iters: 400,
        ..Default::default()
    }
}

fn min_pair_distance(coords: &[[f64; 2]]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..coords.len() {
        for j in (i + 1)..coords.len() {
            m = m.min((coords[i][0] - coords[j][0]).hypot(coords[i][1] - coords[j][1]));
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn registers_respect_geometry(q in problem(), seed in 0u64..1000) {
        for mode in [EmbeddingMode::Continuous, EmbeddingMode::TriangularLattice] {
            let c = cfg(mode, seed);
            let rep = embed(&q, &c).unwrap();
            let coords = &rep.register.coords;
            prop_assert_eq!(coords.len(), q.n());
            prop_assert!(min_pair_distance(coords) >= c.min_distance - 1e-9);
            for p in coords {
                prop_assert!(p[0].hypot(p[1]) <= c.max_radius + 1e-6);
            }
            prop_assert!((rep.objective - residual(coords, &rep.target.t, c.c6)).abs() <= 1e-9 * (1.0 + rep.objective));
        }
    }

    #[test]
    fn lattice_mode_uses_lattice_sites(q in problem(), seed in 0u64..1000) {
        let c = cfg(EmbeddingMode::TriangularLattice, seed);
        let sites = lattice_sites(c.lattice_constant, c.max_radius);
        let rep = embed(&q, &c).unwrap();
        for p in &rep.register.coords {
            prop_assert!(sites.iter().any(|s| (s[0] - p[0]).abs() < 1e-9 && (s[1] - p[1]).abs() < 1e-9));
        }
    }

    #[test]
    fn continuous_is_no_worse_than_lattice(q in problem(), seed in 0u64..1000) {
        let lat = embed(&q, &cfg(EmbeddingMode::TriangularLattice, seed)).unwrap();
        let cont = embed(&q, &cfg(EmbeddingMode::Continuous, seed)).unwrap();
        prop_assert!(lat.objective >= cont.objective - 1e-9, "lattice {} continuous {}", lat.objective, cont.objective);
    }

    #[test]
    fn embedding_is_seed_deterministic(q in problem(), seed in 0u64..1000) {
        for mode in [EmbeddingMode::Continuous, EmbeddingMode::TriangularLattice] {
            prop_assert_eq!(embed(&q, &cfg(mode, seed)).unwrap(), embed(&q, &cfg(mode, seed)).unwrap());
        }
    }

    #[test]
    fn target_accounts_for_every_pair(q in problem()) {
        let t = coupling_target(&q);
        let n = q.n();
        let mut clipped = 0.0;
        for i in 0..n {
            prop_assert_eq!(t.t[i][i], 0.0);
            for j in (i + 1)..n {
                let c = q.get(i, j) + q.get(j, i);
                prop_assert_eq!(t.t[i][j], t.t[j][i]);
                prop_assert!((t.t[i][j] - c.max(0.0)).abs() <= 1e-12);
                clipped += (-c).max(0.0);
            }
        }
        prop_assert!((t.clipped_mass - clipped).abs() <= 1e-9);
    }
}
