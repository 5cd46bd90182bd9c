use pdsgd_core::{Graph, Stacked, Topology};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Number of eigenvalues of the symmetric matrix `a` strictly below `lambda`,
/// by Sylvester's law of inertia: the count of negative pivots in the LDLᵀ
/// factorisation of `a − λI`.
fn count_below(a: &[Vec<f64>], lambda: f64) -> usize {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= lambda;
    }
    let mut negatives = 0;
    for k in 0..n {
        let mut pivot = m[k][k];
        if pivot == 0.0 {
            pivot = -1e-300;
        }
        if pivot < 0.0 {
            negatives += 1;
        }
        for i in k + 1..n {
            let f = m[i][k] / pivot;
            for j in k + 1..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    negatives
}

/// The `index`-th smallest eigenvalue (0-based) by bisection on the inertia count.
fn bisect_eigenvalue(a: &[Vec<f64>], index: usize, hi: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(a, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn laplacian_rows(g: &Graph) -> Vec<Vec<f64>> {
    let l = g.laplacian();
    (0..g.n()).map(|i| l.row(i).iter().map(|&v| v as f64).collect()).collect()
}

#[test]
fn fig1_spectrum_matches_inertia_oracle() {
    let g = Graph::named(Topology::Fig1, 10).unwrap();
    let s = g.spectrum().unwrap();
    let rows = laplacian_rows(&g);
    // Gershgorin: every eigenvalue is at most twice the largest degree.
    let bound = 2.0 * (0..10).map(|i| g.degree(i)).max().unwrap() as f64 + 1.0;
    let lambda2 = bisect_eigenvalue(&rows, 1, bound);
    let lambda_max = bisect_eigenvalue(&rows, 9, bound);
    assert!((s.rho2 - lambda2).abs() < 1e-9, "{} vs {lambda2}", s.rho2);
    assert!((s.rho - lambda_max).abs() < 1e-9, "{} vs {lambda_max}", s.rho);
    for (idx, ev) in s.eigenvalues.iter().enumerate() {
        assert!((ev - bisect_eigenvalue(&rows, idx, bound)).abs() < 1e-9);
    }
    assert!((s.rho_l2 - s.rho * s.rho).abs() <= 1e-10 * s.rho_l2);
}

#[test]
fn fig1_metropolis_rows() {
    let w = Graph::named(Topology::Fig1, 10).unwrap().metropolis_weights().unwrap();
    assert!((w.get(0, 0) - 0.75).abs() < 1e-15);
    assert!((w.get(0, 1) - 0.25).abs() < 1e-15);
    assert!((w.get(3, 3) - 0.2).abs() < 1e-15);
    assert!((w.get(3, 1) - 0.2).abs() < 1e-15);
}

#[test]
fn complete_graph_spectrum_is_flat() {
    for n in 2..8 {
        let s = Graph::named(Topology::Complete, n).unwrap().spectrum().unwrap();
        assert!((s.rho - n as f64).abs() < 1e-10);
        assert!((s.rho2 - n as f64).abs() < 1e-10);
    }
}

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (2usize..24, 0.0f64..0.6, any::<u64>()).prop_map(|(n, q, seed)| Graph::random_connected(n, q, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_is_exact_and_psd(g in graph_strategy()) {
        let l = g.laplacian();
        let n = g.n();
        for i in 0..n {
            prop_assert_eq!(l.row(i).iter().sum::<i64>(), 0);
            for j in 0..n {
                prop_assert_eq!(l.get(i, j), l.get(j, i));
            }
        }
        prop_assert!(g.is_connected());
        let s = g.spectrum().unwrap();
        prop_assert!(s.eigenvalues.iter().all(|&e| e >= -1e-10));
        prop_assert_eq!(s.eigenvalues.iter().filter(|e| e.abs() <= 1e-10).count(), 1);
        prop_assert!((s.rho_l2 - s.rho * s.rho).abs() <= 1e-10 * s.rho_l2);
    }

    #[test]
    fn laplacian_is_sandwiched_by_projection(g in graph_strategy(), seed in any::<u64>()) {
        let s = g.spectrum().unwrap();
        let l = g.laplacian();
        let n = g.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mean = x.iter().sum::<f64>() / n as f64;
            let kx2: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
            let q = l.quadratic_form(&Stacked::from_vec(n, 1, x));
            prop_assert!(s.rho2 * kx2 <= q * (1.0 + 1e-8) + 1e-12);
            prop_assert!(q <= s.rho * kx2 * (1.0 + 1e-8) + 1e-12);
        }
    }

    #[test]
    fn metropolis_is_doubly_stochastic(g in graph_strategy()) {
        let w = g.metropolis_weights().unwrap();
        let n = g.n();
        for i in 0..n {
            let row: f64 = (0..n).map(|j| w.get(i, j)).sum();
            let col: f64 = (0..n).map(|j| w.get(j, i)).sum();
            prop_assert!((row - 1.0).abs() <= 1e-12);
            prop_assert!((col - 1.0).abs() <= 1e-12);
            for j in 0..n {
                prop_assert!(w.get(i, j) >= 0.0);
                prop_assert_eq!(w.get(i, j), w.get(j, i));
                if i != j && !g.has_edge(i, j) {
                    prop_assert_eq!(w.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn edge_list_round_trips(g in graph_strategy()) {
        let back = Graph::from_edge_list(&g.to_edge_list(), Some(g.n())).unwrap();
        prop_assert_eq!(back.edges(), g.edges());
    }
}
