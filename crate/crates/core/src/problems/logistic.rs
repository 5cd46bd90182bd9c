//! Regularized logistic regression on agent-local data.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::quadratic::DATA_SEED_SALT;
use super::{descend, Costs, NuSource, Problem, ProblemError, ProblemKind, MAX_ATTEMPTS};
use crate::linalg::{dot, largest_eigenvalue, norm_sq};

/// Gradient-norm target of the reference solve for `f*`.
pub const REFERENCE_TOL: f64 = 1e-10;
const REFERENCE_MAX_ITERS: usize = 5_000_000;
const PERCEPTRON_EPOCHS: usize = 500;

/// Explicit data: feature rows `z[i]` (`m_i × p`) and labels `y[i]` in `{−1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticSpec {
    pub z: Vec<DMatrix<f64>>,
    pub y: Vec<Vec<f64>>,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub n: usize,
    pub p: usize,
    pub samples_per_agent: usize,
    pub lambda: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub(super) struct LogisticCosts {
    p: usize,
    z: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    lambda: f64,
}

/// `ln(1 + eᵗ)` without overflow.
#[inline]
pub(crate) fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

#[inline]
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LogisticCosts {
    pub(super) fn spec(&self) -> LogisticSpec {
        let z = self.z.iter().map(|r| DMatrix::from_row_slice(r.len() / self.p, self.p, r)).collect();
        LogisticSpec { z, y: self.y.clone(), lambda: self.lambda }
    }

    pub(super) fn points(&self, i: usize) -> usize {
        self.y[i].len()
    }

    fn row(&self, i: usize, j: usize) -> &[f64] {
        &self.z[i][j * self.p..(j + 1) * self.p]
    }

    pub(super) fn local_value(&self, i: usize, x: &[f64]) -> f64 {
        let m = self.y[i].len();
        let loss: f64 = (0..m).map(|j| softplus(-self.y[i][j] * dot(self.row(i, j), x))).sum();
        loss / m as f64 + 0.5 * self.lambda * norm_sq(x)
    }

    pub(super) fn local_gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let m = self.y[i].len();
        out.iter_mut().zip(x).for_each(|(o, xv)| *o = self.lambda * xv);
        let inv = 1.0 / m as f64;
        for j in 0..m {
            let row = self.row(i, j);
            let y = self.y[i][j];
            let w = -y * sigmoid(-y * dot(row, x)) * inv;
            out.iter_mut().zip(row).for_each(|(o, z)| *o += w * z);
        }
    }

    pub(super) fn point_gradient(&self, i: usize, j: usize, x: &[f64], out: &mut [f64]) {
        let row = self.row(i, j);
        let y = self.y[i][j];
        let w = -y * sigmoid(-y * dot(row, x));
        out.iter_mut().zip(row.iter().zip(x)).for_each(|(o, (z, xv))| *o = w * z + self.lambda * xv);
    }
}

/// Strict linear separability (through the origin) of the pooled data,
/// detected by the perceptron. A `false` answer after the epoch budget means
/// no separator was found.
pub(crate) fn perceptron_separable(z: &[Vec<f64>], y: &[Vec<f64>], p: usize) -> bool {
    let mut w = vec![0.0; p];
    for _ in 0..PERCEPTRON_EPOCHS {
        let mut mistakes = 0;
        for (rows, labels) in z.iter().zip(y) {
            for (j, &label) in labels.iter().enumerate() {
                let row = &rows[j * p..(j + 1) * p];
                if label * dot(row, &w) <= 0.0 {
                    w.iter_mut().zip(row).for_each(|(wv, zv)| *wv += label * zv);
                    mistakes += 1;
                }
            }
        }
        if mistakes == 0 {
            return true;
        }
    }
    false
}

pub(super) fn from_spec(spec: &LogisticSpec) -> Result<Problem, ProblemError> {
    let n = spec.z.len();
    if n == 0 || spec.y.len() != n {
        return Err(ProblemError::InvalidParameter("need one (Z_i, y_i) pair per agent".into()));
    }
    if !(spec.lambda >= 0.0 && spec.lambda.is_finite()) {
        return Err(ProblemError::InvalidParameter(format!("lambda must be ≥ 0, got {}", spec.lambda)));
    }
    let p = spec.z[0].ncols();
    if p == 0 {
        return Err(ProblemError::InvalidParameter("dimension p must be positive".into()));
    }
    let mut z = Vec::with_capacity(n);
    let mut lmax: f64 = 0.0;
    for (zi, yi) in spec.z.iter().zip(&spec.y) {
        if zi.ncols() != p {
            return Err(ProblemError::Dimension { expected: p, got: zi.ncols() });
        }
        if zi.nrows() != yi.len() || yi.is_empty() {
            return Err(ProblemError::InvalidParameter("samples_per_agent must be ≥ 1 and match labels".into()));
        }
        if yi.iter().any(|&l| l != 1.0 && l != -1.0) {
            return Err(ProblemError::InvalidParameter("labels must be ±1".into()));
        }
        lmax = lmax.max(largest_eigenvalue(zi.transpose() * zi) / (4.0 * zi.nrows() as f64));
        z.push((0..zi.nrows()).flat_map(|r| (0..p).map(move |c| (r, c))).map(|(r, c)| zi[(r, c)]).collect::<Vec<f64>>());
    }
    if spec.lambda == 0.0 && perceptron_separable(&z, &spec.y, p) {
        return Err(ProblemError::Separable(1));
    }
    let costs = LogisticCosts { p, z, y: spec.y.clone(), lambda: spec.lambda };
    let l_f = spec.lambda + lmax;
    let grad_f = |x: &[f64], out: &mut [f64]| {
        let mut tmp = vec![0.0; p];
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            costs.local_gradient(i, x, &mut tmp);
            out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t / n as f64);
        }
    };
    let x_star = descend(vec![0.0; p], l_f, REFERENCE_TOL, REFERENCE_MAX_ITERS, grad_f)?;
    let f_star = (0..n).map(|i| costs.local_value(i, &x_star)).sum::<f64>() / n as f64;
    let local_minima = if spec.lambda > 0.0 {
        let mut mins = Vec::with_capacity(n);
        for i in 0..n {
            let xi = descend(vec![0.0; p], l_f, REFERENCE_TOL, REFERENCE_MAX_ITERS, |x, out| {
                costs.local_gradient(i, x, out)
            })?;
            mins.push(costs.local_value(i, &xi));
        }
        Some(mins)
    } else {
        None
    };
    let nu = (spec.lambda > 0.0).then_some(spec.lambda);
    Ok(Problem {
        kind: ProblemKind::Logistic,
        n,
        p,
        costs: Costs::Logistic(costs),
        l_f,
        lf_estimated: true,
        f_star,
        nu,
        nu_source: nu.map(|_| NuSource::StrongConvexity),
        nu_sampled_min: None,
        local_minima,
        x_star,
    })
}

/// Features `z = μ_i + N(0, I)` with an agent-specific mean shift `μ_i`;
/// labels drawn from a logistic model around a random direction.
pub(super) fn generate(params: &LogisticParams) -> Result<Problem, ProblemError> {
    let &LogisticParams { n, p, samples_per_agent: m, lambda, seed } = params;
    if n == 0 || p == 0 {
        return Err(ProblemError::InvalidParameter("n and p must be positive".into()));
    }
    if m == 0 {
        return Err(ProblemError::InvalidParameter("samples_per_agent must be ≥ 1".into()));
    }
    let mut shared = ChaCha8Rng::seed_from_u64(seed ^ DATA_SEED_SALT);
    let mut agent_rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ DATA_SEED_SALT);
            rng.set_stream(i as u64 + 1);
            rng
        })
        .collect();
    for _ in 0..MAX_ATTEMPTS {
        let w_true: Vec<f64> = (0..p).map(|_| shared.sample(StandardNormal)).collect();
        let mut zs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for rng in agent_rngs.iter_mut() {
            let shift: Vec<f64> = (0..p).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
            let z = DMatrix::from_fn(m, p, |_, c| shift[c] + rng.sample::<f64, _>(StandardNormal));
            let y = (0..m)
                .map(|r| {
                    let t: f64 = (0..p).map(|c| z[(r, c)] * w_true[c]).sum();
                    if rng.random::<f64>() < sigmoid(t) { 1.0 } else { -1.0 }
                })
                .collect();
            zs.push(z);
            ys.push(y);
        }
        match from_spec(&LogisticSpec { z: zs, y: ys, lambda }) {
            Err(ProblemError::Separable(_)) => continue,
            other => return other,
        }
    }
    Err(ProblemError::Separable(MAX_ATTEMPTS))
}
