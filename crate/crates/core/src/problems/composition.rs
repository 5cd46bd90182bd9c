//! P–Ł instances of the form `f(x) = g(Ax)` with `g` strongly convex and `A`
//! square and singular: convex, not strongly convex, minimizer set an affine
//! subspace.
//!
//! `f_i(x) = g_i(Ax)` with
//! `g_i(y) = ½ (y − c_i)ᵀ M_i (y − c_i) + γ Σ_k ln cosh(y_k − d_ik)`.
//!
//! The average `g` is `μ`-strongly convex with `μ = λ_min((1/n) Σ M_i)`.
//! Writing `P` for the projector onto `range(A)` and `y* = A x*`,
//! `‖∇f(x)‖ = ‖Aᵀ∇g(Ax)‖ ≥ σ⁺_min(A) ‖P ∇g(Ax)‖` and, since `g` restricted to
//! `range(A)` is `μ`-strongly convex with gradient `P∇g`,
//! `f(x) − f* ≤ ‖P∇g(Ax)‖² / (2μ)`. Hence `ν = μ σ⁺_min(A)²` is a certified
//! P–Ł constant.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::quadratic::{DATA_SEED_SALT, RANK_REL_TOL};
use super::{descend, Costs, NuSource, Problem, ProblemError, ProblemKind};
use crate::linalg::{dot, largest_eigenvalue, matvec_into, norm_sq, sorted_symmetric_eigen};

/// Points drawn when estimating the empirical P–Ł ratio.
pub const NU_SAMPLES: usize = 10_000;
const REFERENCE_TOL: f64 = 1e-12;
const LOCAL_TOL: f64 = 1e-10;
const REFERENCE_MAX_ITERS: usize = 5_000_000;
const NU_SAMPLE_SEED: u64 = 0x504c_5241_5449_4f00;

#[derive(Debug, Clone, PartialEq)]
pub struct CompositionSpec {
    pub a: DMatrix<f64>,
    pub m: Vec<DMatrix<f64>>,
    pub c: Vec<DVector<f64>>,
    pub d: Vec<DVector<f64>>,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionParams {
    pub n: usize,
    pub p: usize,
    pub gamma: f64,
    pub seed: u64,
}

impl CompositionParams {
    pub fn new(n: usize, p: usize, seed: u64) -> Self {
        Self { n, p, gamma: 0.5, seed }
    }
}

#[derive(Debug, Clone)]
pub(super) struct CompositionCosts {
    p: usize,
    a: Vec<f64>,
    at: Vec<f64>,
    m: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    d: Vec<Vec<f64>>,
    gamma: f64,
}

/// `ln cosh t` without overflow.
#[inline]
fn lncosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| (r, c))).map(|(r, c)| m[(r, c)]).collect()
}

impl CompositionCosts {
    pub(super) fn spec(&self) -> CompositionSpec {
        let p = self.p;
        CompositionSpec {
            a: DMatrix::from_row_slice(p, p, &self.a),
            m: self.m.iter().map(|m| DMatrix::from_row_slice(p, p, m)).collect(),
            c: self.c.iter().map(|v| DVector::from_column_slice(v)).collect(),
            d: self.d.iter().map(|v| DVector::from_column_slice(v)).collect(),
            gamma: self.gamma,
        }
    }

    pub(super) fn local_value(&self, i: usize, x: &[f64]) -> f64 {
        let p = self.p;
        let mut y = vec![0.0; p];
        matvec_into(&self.a, x, &mut y);
        let r: Vec<f64> = y.iter().zip(&self.c[i]).map(|(a, b)| a - b).collect();
        let mut mr = vec![0.0; p];
        matvec_into(&self.m[i], &r, &mut mr);
        let smooth: f64 = y.iter().zip(&self.d[i]).map(|(a, b)| lncosh(a - b)).sum();
        0.5 * dot(&r, &mr) + self.gamma * smooth
    }

    pub(super) fn local_gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let p = self.p;
        let mut y = vec![0.0; p];
        matvec_into(&self.a, x, &mut y);
        let r: Vec<f64> = y.iter().zip(&self.c[i]).map(|(a, b)| a - b).collect();
        let mut u = vec![0.0; p];
        matvec_into(&self.m[i], &r, &mut u);
        for k in 0..p {
            u[k] += self.gamma * (y[k] - self.d[i][k]).tanh();
        }
        matvec_into(&self.at, &u, out);
    }
}

pub(super) fn from_spec(spec: &CompositionSpec) -> Result<Problem, ProblemError> {
    let n = spec.m.len();
    let p = spec.a.nrows();
    if n == 0 || spec.c.len() != n || spec.d.len() != n {
        return Err(ProblemError::InvalidParameter("need one (M_i, c_i, d_i) triple per agent".into()));
    }
    if p == 0 || spec.a.ncols() != p {
        return Err(ProblemError::InvalidParameter("A must be square with positive dimension".into()));
    }
    if !(spec.gamma >= 0.0 && spec.gamma.is_finite()) {
        return Err(ProblemError::InvalidParameter("gamma must be finite and ≥ 0".into()));
    }
    for i in 0..n {
        if spec.m[i].shape() != (p, p) || spec.c[i].len() != p || spec.d[i].len() != p {
            return Err(ProblemError::Dimension { expected: p, got: spec.c[i].len() });
        }
    }
    let mut m_avg = DMatrix::zeros(p, p);
    for mi in &spec.m {
        let asym = (mi - mi.transpose()).amax();
        if asym > 1e-12 * mi.amax().max(1.0) {
            return Err(ProblemError::InvalidParameter("M_i must be symmetric".into()));
        }
        m_avg += mi / n as f64;
    }
    let (m_eigs, _) = sorted_symmetric_eigen(m_avg.clone());
    let mu = m_eigs[0];
    if mu <= 0.0 {
        return Err(ProblemError::InvalidParameter("average M must be positive definite".into()));
    }
    let svals = spec.a.clone().svd(false, false).singular_values;
    let s_max = svals.iter().copied().fold(0.0, f64::max);
    let s_min_pos = svals.iter().copied().filter(|&s| s > RANK_REL_TOL.sqrt() * s_max && s > 0.0).fold(f64::INFINITY, f64::min);
    let a2 = s_max * s_max;
    let l_f = spec
        .m
        .iter()
        .map(|mi| a2 * (largest_eigenvalue(mi.clone()) + spec.gamma))
        .fold(0.0, f64::max);
    let l_global = a2 * (largest_eigenvalue(m_avg) + spec.gamma);

    let costs = CompositionCosts {
        p,
        a: row_major(&spec.a),
        at: row_major(&spec.a.transpose()),
        m: spec.m.iter().map(row_major).collect(),
        c: spec.c.iter().map(|v| v.iter().copied().collect()).collect(),
        d: spec.d.iter().map(|v| v.iter().copied().collect()).collect(),
        gamma: spec.gamma,
    };
    let global_value = |x: &[f64]| (0..n).map(|i| costs.local_value(i, x)).sum::<f64>() / n as f64;
    let global_grad = |x: &[f64], out: &mut [f64]| {
        let mut tmp = vec![0.0; p];
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            costs.local_gradient(i, x, &mut tmp);
            out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t / n as f64);
        }
    };

    let degenerate = s_max == 0.0;
    let x_star = if degenerate {
        vec![0.0; p]
    } else {
        descend(vec![0.0; p], l_global, REFERENCE_TOL, REFERENCE_MAX_ITERS, global_grad)?
    };
    let f_star = global_value(&x_star);
    let nu = (!degenerate).then(|| mu * s_min_pos * s_min_pos);

    let local_minima = if degenerate {
        Some((0..n).map(|i| costs.local_value(i, &x_star)).collect())
    } else {
        (0..n)
            .map(|i| {
                let li = a2 * (largest_eigenvalue(spec.m[i].clone()) + spec.gamma);
                descend(vec![0.0; p], li, LOCAL_TOL, REFERENCE_MAX_ITERS, |x, out| costs.local_gradient(i, x, out))
                    .map(|xi| costs.local_value(i, &xi))
                    .ok()
            })
            .collect::<Option<Vec<f64>>>()
    };

    let nu_sampled_min = (!degenerate).then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(NU_SAMPLE_SEED);
        let mut g = vec![0.0; p];
        let mut min_ratio = f64::INFINITY;
        for _ in 0..NU_SAMPLES {
            let x: Vec<f64> = x_star.iter().map(|xs| xs + 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let gap = global_value(&x) - f_star;
            if gap > 1e-12 {
                global_grad(&x, &mut g);
                min_ratio = min_ratio.min(0.5 * norm_sq(&g) / gap);
            }
        }
        min_ratio
    });

    Ok(Problem {
        kind: ProblemKind::PlComposition,
        n,
        p,
        costs: Costs::Composition(costs),
        l_f,
        lf_estimated: false,
        f_star,
        nu,
        nu_source: nu.map(|_| NuSource::Certified),
        nu_sampled_min,
        local_minima,
        x_star,
    })
}

pub(super) fn generate(params: &CompositionParams) -> Result<Problem, ProblemError> {
    let &CompositionParams { n, p, gamma, seed } = params;
    if n == 0 || p < 2 {
        return Err(ProblemError::InvalidParameter("need n ≥ 1 and p ≥ 2 for a singular, nonzero A".into()));
    }
    let mut shared = ChaCha8Rng::seed_from_u64(seed ^ DATA_SEED_SALT);
    let gaussian = |rng: &mut ChaCha8Rng, r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal));
    let u = gaussian(&mut shared, p, p).qr().q();
    let v = gaussian(&mut shared, p, p).qr().q();
    let s = DVector::from_fn(p, |k, _| if k + 1 == p { 0.0 } else { 0.5 + shared.random::<f64>() });
    let a = &u * DMatrix::from_diagonal(&s) * v.transpose();
    let mut m = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ DATA_SEED_SALT);
        rng.set_stream(i as u64 + 1);
        let b = gaussian(&mut rng, p, p);
        let mi = DMatrix::identity(p, p) * 0.5 + &b * b.transpose() / p as f64;
        m.push((&mi + mi.transpose()) * 0.5);
        c.push(DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal)));
        d.push(DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal)));
    }
    from_spec(&CompositionSpec { a, m, c, d, gamma })
}
