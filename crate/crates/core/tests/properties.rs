use mdsat::encoding::{clause_projectors, theta_string_state, Angle};
use mdsat::formula::{generate, parse_dimacs, Assignment, Formula, GeneratorKind, Propagation};
use mdsat::linalg::spectral_norm;
use mdsat::phf::{build_layers, density_algorithm, verify_phf};
use mdsat::statevec::clause_check_probabilities;
use proptest::prelude::*;

fn formula() -> impl Strategy<Value = Formula> {
    (2usize..=6, 1usize..=14, 1usize..=3, any::<u64>())
        .prop_map(|(n, m, k, seed)| generate(GeneratorKind::RandomKsat, n, m, k.min(n), seed).unwrap())
}

fn with_assignment() -> impl Strategy<Value = (Formula, Assignment)> {
    formula().prop_flat_map(|f| {
        let n = f.num_vars();
        (Just(f), proptest::collection::vec(any::<bool>(), n).prop_map(Assignment::new))
    })
}

fn theta() -> impl Strategy<Value = Angle> {
    (0.05f64..=1.0).prop_map(|x| Angle::from_fraction(x).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dimacs_round_trip(f in formula()) {
        prop_assert_eq!(parse_dimacs(&f.to_dimacs()).unwrap(), f);
    }

    #[test]
    fn assignment_index_round_trip(n in 1usize..=16, raw in any::<u32>()) {
        let idx = raw as usize & ((1 << n) - 1);
        let a = Assignment::from_index(idx, n);
        prop_assert_eq!(a.to_index(), idx);
        prop_assert_eq!(a.to_string().parse::<Assignment>().unwrap(), a);
    }

    #[test]
    fn propagation_preserves_truth((f, a) in with_assignment()) {
        let rest = Assignment::new(a.bits()[1..].to_vec());
        match f.propagate(1, a.get(1)).unwrap() {
            Propagation::Unsat => prop_assert!(!f.evaluate(&a).unwrap()),
            Propagation::Reduced(g) => {
                let g = g.remove_variable(1).unwrap();
                prop_assert_eq!(g.evaluate(&rest).unwrap(), f.evaluate(&a).unwrap());
            }
        }
    }

    #[test]
    fn clause_checks_detect_violations((f, a) in with_assignment(), t in theta()) {
        let psi = theta_string_state(&a, t).unwrap();
        for (c, p) in f.clauses().iter().zip(clause_projectors(&f, t).unwrap()) {
            let fail = clause_check_probabilities(&psi, &p).p_fail;
            if c.is_satisfied_by(&a) {
                prop_assert!(fail < 1e-12, "satisfied clause fails with {}", fail);
            } else {
                prop_assert!(fail > 1e-6, "violated clause passes");
            }
        }
    }

    #[test]
    fn structural_commutation_matches_dense(f in formula(), t in theta()) {
        let ps = clause_projectors(&f, t).unwrap();
        let dense: Vec<_> = ps.iter().map(|p| p.to_dense().unwrap()).collect();
        for i in 0..ps.len() {
            for j in i + 1..ps.len() {
                let comm = spectral_norm(&(&dense[i] * &dense[j] - &dense[j] * &dense[i]));
                prop_assert_eq!(ps[i].commutes_with(&ps[j]), comm < 1e-12, "pair ({}, {}) norm {}", i, j, comm);
            }
        }
    }

    #[test]
    fn layers_partition_clauses_into_commuting_sets(f in formula(), t in theta()) {
        let layers = build_layers(&f).unwrap();
        let mut seen: Vec<usize> = layers.iter().flat_map(|l| l.clauses().iter().copied()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..f.num_clauses()).collect::<Vec<_>>());
        let ps = clause_projectors(&f, t).unwrap();
        for l in &layers {
            for &i in l.clauses() {
                for &j in l.clauses() {
                    prop_assert!(ps[i].commutes_with(&ps[j]));
                }
            }
        }
    }

    #[test]
    fn density_families_are_perfect(n in 2usize..=10, k in 1usize..=4) {
        prop_assume!(k <= n);
        prop_assert!(verify_phf(&density_algorithm(n, k).unwrap()));
    }
}
