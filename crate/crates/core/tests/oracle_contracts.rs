use nalgebra::{DMatrix, DVector};
use pdsgd_core::problems::{CompositionParams, LogisticParams, LogisticSpec, QuadraticParams};
use pdsgd_core::{AgentStreams, NoiseModel, Problem, ProblemKind, QuadraticSpec, Stacked};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn quadratic() -> Problem {
    Problem::make_quadratic(&QuadraticParams::new(4, 5, 11)).unwrap()
}

fn rank_deficient_quadratic() -> Problem {
    let mut params = QuadraticParams::new(4, 6, 12);
    params.rank_deficit = 2;
    Problem::make_quadratic(&params).unwrap()
}

fn logistic() -> Problem {
    Problem::make_logistic(&LogisticParams { n: 3, p: 4, samples_per_agent: 30, lambda: 0.05, seed: 13 }).unwrap()
}

fn composition() -> Problem {
    Problem::make_pl_composition(&CompositionParams::new(3, 4, 14)).unwrap()
}

fn all_problems() -> Vec<Problem> {
    vec![quadratic(), rank_deficient_quadratic(), logistic(), composition()]
}

/// Per-agent empirical mean and mean-square of `g − ∇f_i` at a random stack.
fn noise_moments(problem: &Problem, noise: &NoiseModel, draws: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (n, p) = (problem.n(), problem.p());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Stacked::from_vec(n, p, gaussian(&mut rng, n * p, 1.0));
    let mut exact = Stacked::zeros(n, p);
    problem.stacked_gradient(&x, &mut exact).unwrap();
    let mut streams = AgentStreams::new(seed, n);
    let mut g = Stacked::zeros(n, p);
    let mut sum = vec![vec![0.0; p]; n];
    let mut sq = vec![0.0; n];
    for _ in 0..draws {
        problem.sample_gradients(noise, &x, &mut streams, &mut g).unwrap();
        for i in 0..n {
            for c in 0..p {
                let d = g.get(i, c) - exact.get(i, c);
                sum[i][c] += d;
                sq[i] += d * d;
            }
        }
    }
    let mean_norm: Vec<f64> = sum.iter().map(|s| s.iter().map(|v| (v / draws as f64).powi(2)).sum::<f64>().sqrt()).collect();
    let centered: Vec<f64> = (0..n)
        .map(|i| sq[i] / draws as f64 - sum[i].iter().map(|v| (v / draws as f64).powi(2)).sum::<f64>())
        .collect();
    (mean_norm, sq.iter().map(|s| s / draws as f64).collect(), centered)
}

#[test]
fn additive_noise_is_unbiased_with_bounded_variance() {
    let sigma2 = 0.7;
    for problem in all_problems() {
        let (mean, _, _) = noise_moments(&problem, &NoiseModel::additive(sigma2), 100_000, 1);
        for m in mean {
            assert!(m <= 5.0 * sigma2.sqrt() / (1e5f64).sqrt(), "{:?}: {m}", problem.kind());
        }
        let (_, second, _) = noise_moments(&problem, &NoiseModel::additive(sigma2), 10_000, 2);
        assert!(second.iter().all(|&s| s <= 1.1 * sigma2));
    }
}

#[test]
fn minibatch_noise_is_unbiased_with_enumerated_variance() {
    for problem in [quadratic(), rank_deficient_quadratic(), logistic()] {
        let batch = 3;
        let noise = NoiseModel::minibatch(batch);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Stacked::from_vec(problem.n(), problem.p(), gaussian(&mut rng, problem.n() * problem.p(), 1.0));
        let sigma2: Vec<f64> = (0..problem.n()).map(|i| problem.minibatch_variance(i, x.row(i), batch).unwrap()).collect();
        // Same seed as the moment helper, hence the same x.
        let (mean, _, _) = noise_moments(&problem, &noise, 100_000, 3);
        let (_, second, _) = noise_moments(&problem, &noise, 10_000, 3);
        for i in 0..problem.n() {
            assert!(mean[i] <= 5.0 * sigma2[i].sqrt() / (1e5f64).sqrt(), "agent {i}: {} vs σ² {}", mean[i], sigma2[i]);
            assert!(second[i] <= 1.1 * sigma2[i]);
        }
    }
}

#[test]
fn biased_noise_keeps_its_variance_and_carries_the_bias() {
    let (sigma2, bias) = (0.5, 0.1);
    let problem = quadratic();
    let (mean, _, centered) = noise_moments(&problem, &NoiseModel::biased(sigma2, bias), 10_000, 4);
    for i in 0..problem.n() {
        assert!(centered[i] <= 1.1 * sigma2);
        assert!((mean[i] - bias).abs() < 0.03, "{}", mean[i]);
    }
}

#[test]
fn minibatch_is_rejected_for_compositions() {
    let problem = composition();
    let mut streams = AgentStreams::new(0, problem.n());
    let x = Stacked::zeros(problem.n(), problem.p());
    let mut g = x.clone();
    assert!(problem.sample_gradients(&NoiseModel::minibatch(2), &x, &mut streams, &mut g).is_err());
}

#[test]
fn local_gradients_are_lipschitz() {
    for problem in all_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l_f = problem.l_f();
        for _ in 0..1000 {
            let scale = rng.random_range(0.01..5.0);
            let x = gaussian(&mut rng, problem.p(), scale);
            let y = gaussian(&mut rng, problem.p(), scale);
            for i in 0..problem.n() {
                let gx = problem.local_gradient(i, &x).unwrap();
                let gy = problem.local_gradient(i, &y).unwrap();
                assert!(dist(&gx, &gy) <= l_f * dist(&x, &y) * (1.0 + 1e-6), "{:?}", problem.kind());
            }
        }
    }
}

#[test]
fn gradients_match_central_differences() {
    for problem in all_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = gaussian(&mut rng, problem.p(), 1.0);
        let h = 1e-6;
        for i in 0..problem.n() {
            let g = problem.local_gradient(i, &x).unwrap();
            for c in 0..problem.p() {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[c] += h;
                xm[c] -= h;
                let fd = (problem.local_value(i, &xp) - problem.local_value(i, &xm)) / (2.0 * h);
                assert!((fd - g[c]).abs() <= 1e-5 * (1.0 + g[c].abs()), "{:?} agent {i} coord {c}: {fd} vs {}", problem.kind(), g[c]);
            }
        }
    }
}

#[test]
fn polyak_lojasiewicz_ratio_holds_where_reported() {
    for problem in all_problems() {
        let Some(nu) = problem.nu() else { continue };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        for _ in 0..2000 {
            let scale = rng.random_range(0.01..4.0);
            let x: Vec<f64> = problem.x_star().iter().zip(gaussian(&mut rng, problem.p(), scale)).map(|(a, b)| a + b).collect();
            let gap = problem.optimality_gap(&x);
            if gap <= 1e-12 {
                continue;
            }
            let g = problem.gradient(&x).unwrap();
            let ratio = 0.5 * g.iter().map(|v| v * v).sum::<f64>() / gap;
            assert!(ratio >= nu * (1.0 - 1e-8), "{:?}: ratio {ratio} < ν {nu}", problem.kind());
            checked += 1;
        }
        assert!(checked > 1000);
    }
}

#[test]
fn composition_certificate_lies_below_sampled_ratio() {
    let problem = composition();
    let nu = problem.nu().unwrap();
    let sampled = problem.nu_sampled_min().unwrap();
    assert!(nu > 0.0);
    assert!(nu <= sampled * (1.0 + 1e-8), "{nu} vs {sampled}");
}

/// f* of a pooled least-squares problem by a normal-equation solve in the
/// range of the design.
fn least_squares_reference(spec: &QuadraticSpec) -> f64 {
    let n = spec.a.len();
    let p = spec.a[0].ncols();
    let rows: usize = spec.a.iter().map(|a| a.nrows()).sum();
    let mut a = DMatrix::zeros(rows, p);
    let mut b = DVector::zeros(rows);
    let mut r = 0;
    for (ai, bi) in spec.a.iter().zip(&spec.b) {
        a.view_mut((r, 0), (ai.nrows(), p)).copy_from(ai);
        b.rows_mut(r, ai.nrows()).copy_from(bi);
        r += ai.nrows();
    }
    let x = a.clone().svd(true, true).solve(&b, 1e-10).unwrap();
    0.5 * (&a * x - b).norm_squared() / n as f64
}

#[test]
fn quadratic_optimum_matches_pooled_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for deficit in [0usize, 2] {
        let (n, p) = (3, 5);
        let basis = DMatrix::from_fn(p, p - deficit, |_, _| rng.sample::<f64, _>(StandardNormal));
        let a: Vec<DMatrix<f64>> =
            (0..n).map(|_| DMatrix::from_fn(7, p - deficit, |_, _| rng.sample::<f64, _>(StandardNormal)) * basis.transpose()).collect();
        let b: Vec<DVector<f64>> = (0..n).map(|_| DVector::from_fn(7, |_, _| rng.sample::<f64, _>(StandardNormal))).collect();
        let spec = QuadraticSpec { a, b };
        let problem = Problem::quadratic_from_spec(&spec).unwrap();
        let reference = least_squares_reference(&spec);
        assert!((problem.f_star() - reference).abs() <= 1e-9 * (1.0 + reference.abs()));
        assert!(problem.optimality_gap(problem.x_star()).abs() <= 1e-12);
        assert!(problem.gradient(problem.x_star()).unwrap().iter().all(|g| g.abs() < 1e-9));
    }
}

/// f* of regularised logistic regression by damped Newton iterations.
fn logistic_newton_reference(spec: &LogisticSpec) -> f64 {
    let p = spec.z[0].ncols();
    let n = spec.z.len() as f64;
    let objective = |w: &DVector<f64>| -> (f64, DVector<f64>, DMatrix<f64>) {
        let mut f = 0.5 * spec.lambda * w.norm_squared();
        let mut g = spec.lambda * w.clone();
        let mut h = DMatrix::identity(p, p) * spec.lambda;
        for (z, y) in spec.z.iter().zip(&spec.y) {
            let m = z.nrows() as f64;
            for (j, &yj) in y.iter().enumerate() {
                let row = z.row(j).transpose();
                let t = -yj * row.dot(w);
                let s = 1.0 / (1.0 + (-t).exp());
                f += (t.max(0.0) + (-t.abs()).exp().ln_1p()) / (m * n);
                g += -yj * s / (m * n) * &row;
                h += s * (1.0 - s) / (m * n) * &row * row.transpose();
            }
        }
        (f, g, h)
    };
    let mut w = DVector::zeros(p);
    for _ in 0..100 {
        let (f, g, h) = objective(&w);
        if g.norm() < 1e-14 {
            return f;
        }
        let step = h.cholesky().unwrap().solve(&g);
        let mut t = 1.0;
        while objective(&(&w - t * &step)).0 > f - 0.25 * t * g.dot(&step) && t > 1e-12 {
            t *= 0.5;
        }
        w -= t * step;
    }
    objective(&w).0
}

#[test]
fn logistic_optimum_matches_newton_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (n, p, m) = (3, 3, 25);
    let z: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::from_fn(m, p, |_, _| rng.sample::<f64, _>(StandardNormal))).collect();
    let y: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()).collect();
    let spec = LogisticSpec { z, y, lambda: 0.1 };
    let problem = Problem::logistic_from_spec(&spec).unwrap();
    assert_eq!(problem.kind(), ProblemKind::Logistic);
    let reference = logistic_newton_reference(&spec);
    assert!((problem.f_star() - reference).abs() <= 1e-9, "{} vs {reference}", problem.f_star());
}

#[test]
fn fixtures_round_trip_every_kind() {
    for problem in all_problems() {
        let text = problem.to_fixture_text();
        let back = Problem::from_fixture_text(&text).unwrap();
        assert_eq!(back.kind(), problem.kind());
        assert_eq!(back.to_fixture_text(), text);
        let x = vec![0.3; problem.p()];
        assert_eq!(back.value(&x), problem.value(&x));
    }
}

#[test]
fn problem_generation_is_deterministic() {
    assert_eq!(quadratic().to_fixture_text(), quadratic().to_fixture_text());
    assert_eq!(logistic().to_fixture_text(), logistic().to_fixture_text());
    assert_eq!(composition().f_star(), composition().f_star());
}
