use pdsgd_core::problems::{ProblemInfo, QuadraticParams};
use pdsgd_core::tuner::{c2_of, constants_thm1, suggest, validate};
use pdsgd_core::{Graph, Problem, Theorem, TunerConfig};
use proptest::prelude::*;

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (2usize..16, 0.0f64..0.7, any::<u64>()).prop_map(|(n, q, seed)| Graph::random_connected(n, q, seed).unwrap())
}

/// A small random quadratic, optionally presented with an estimated L_f.
fn problem_strategy() -> impl Strategy<Value = (usize, u64, usize, bool)> {
    (2usize..6, any::<u64>(), 0usize..2, any::<bool>())
}

fn info_for(n: usize, p: usize, seed: u64, deficit: usize, estimated: bool) -> ProblemInfo {
    let mut params = QuadraticParams::new(n, p, seed);
    params.rank_deficit = deficit;
    let mut info = Problem::make_quadratic(&params).unwrap().info();
    info.lf_estimated = estimated;
    info
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn every_suggestion_validates(g in graph_strategy(), (p, seed, deficit, estimated) in problem_strategy(), t_exp in 1.0f64..12.0) {
        let n = g.n();
        let spectrum = g.spectrum().unwrap();
        let info = info_for(n, p, seed, deficit, estimated);
        let cfg = TunerConfig::default();
        let horizon = Some(10f64.powf(t_exp) as u64);
        for theorem in Theorem::ALL {
            let s = suggest(&spectrum, n, &info, theorem, horizon, &cfg).unwrap();
            let report = validate(&s.schedule, &spectrum, n, &info, s.validated_as, &cfg).unwrap();
            prop_assert!(report.pass, "{theorem} -> {:?}: {:?}", s, report.violations().collect::<Vec<_>>());
            if s.validated_as != theorem {
                prop_assert!(!s.notes.is_empty());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn admissible_kappas_give_positive_descent_constants(g in graph_strategy(), l_f in 0.1f64..20.0) {
        let s = g.spectrum().unwrap();
        let c1 = constants_thm1(&s, l_f, 2.0, 0.01).c1;
        prop_assert!(c1 > 1.0);
        for i in 1..=30 {
            let kappa1 = c1 * (1.0 + 0.2 * i as f64);
            let c2 = c2_of(&s, kappa1);
            prop_assert!(c2 > 0.0);
            let eps = constants_thm1(&s, l_f, kappa1, 1.0);
            for j in 1..30 {
                let kappa2 = c2 * j as f64 / 30.0;
                let c = constants_thm1(&s, l_f, kappa1, kappa2);
                prop_assert!(c.eps3 > 0.0 && c.eps4 > 0.0, "κ₁={kappa1} κ₂={kappa2}: {c:?}");
                // ε₃ > 0 on the whole of (0, ε₁/ε₂).
                let k2 = eps.eps1 / eps.eps2 * j as f64 / 30.0;
                prop_assert!(constants_thm1(&s, l_f, kappa1, k2).eps3 > 0.0);
            }
        }
    }

    #[test]
    fn constant_formulas_are_pure(g in graph_strategy(), l_f in 0.1f64..20.0, k1 in 1.0f64..50.0, k2 in 1e-6f64..0.2) {
        let s = g.spectrum().unwrap();
        let a = constants_thm1(&s, l_f, k1, k2);
        let b = constants_thm1(&s, l_f, k1, k2);
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
