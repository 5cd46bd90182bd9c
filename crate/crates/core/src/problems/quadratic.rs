//! Distributed least squares `f_i(x) = ½‖A_i x − b_i‖²`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Costs, NuSource, Problem, ProblemError, ProblemKind, MAX_ATTEMPTS};
use crate::linalg::{dot, largest_eigenvalue, matvec_into, psd_pinv_solve, sorted_symmetric_eigen};

/// Relative eigenvalue threshold separating the range of a Gram matrix from
/// its null space.
pub(crate) const RANK_REL_TOL: f64 = 1e-10;

/// Mixed into problem seeds so data streams never coincide with oracle streams.
pub(crate) const DATA_SEED_SALT: u64 = 0x5052_4f42_4c45_4d00;

/// Explicit per-agent data.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSpec {
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DVector<f64>>,
}

/// Random least-squares family.
///
/// `A_i = G_i Qᵀ` with `Q` a random `p × (p − rank_deficit)` orthonormal basis
/// and `G_i` Gaussian with variance `1/rows_per_agent`; `b_i = A_i x_true + o_i`
/// with Gaussian offsets `o_i` of scale `offset_scale`, so local minimizers
/// differ across agents. With `shared_design` every agent uses the same `G`
/// and the offsets are centred across agents, which keeps the global
/// minimizer at `x_true` and `f − f*` independent of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticParams {
    pub n: usize,
    pub p: usize,
    pub rank_deficit: usize,
    pub rows_per_agent: usize,
    pub shared_design: bool,
    pub offset_scale: f64,
    pub seed: u64,
}

impl QuadraticParams {
    pub fn new(n: usize, p: usize, seed: u64) -> Self {
        Self { n, p, rank_deficit: 0, rows_per_agent: 2 * p, shared_design: false, offset_scale: 0.5, seed }
    }
}

#[derive(Debug, Clone)]
pub(super) struct QuadraticCosts {
    p: usize,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    gram: Vec<Vec<f64>>,
    atb: Vec<Vec<f64>>,
    h: Vec<f64>,
    c: Vec<f64>,
}

impl QuadraticCosts {
    fn new(spec: &QuadraticSpec) -> Self {
        let p = spec.a.first().map_or(0, |a| a.ncols());
        let n = spec.a.len();
        let mut h = vec![0.0; p * p];
        let mut c = vec![0.0; p];
        let (mut a_rows, mut b_rows, mut grams, mut atbs) = (vec![], vec![], vec![], vec![]);
        for (a, b) in spec.a.iter().zip(&spec.b) {
            let gram = a.transpose() * a;
            let atb = a.transpose() * b;
            let gram_rm: Vec<f64> = (0..p).flat_map(|r| (0..p).map(move |s| (r, s))).map(|(r, s)| gram[(r, s)]).collect();
            for (hv, gv) in h.iter_mut().zip(&gram_rm) {
                *hv += gv / n as f64;
            }
            for (cv, av) in c.iter_mut().zip(atb.iter()) {
                *cv += av / n as f64;
            }
            a_rows.push((0..a.nrows()).flat_map(|r| (0..p).map(move |s| (r, s))).map(|(r, s)| a[(r, s)]).collect());
            b_rows.push(b.iter().copied().collect());
            grams.push(gram_rm);
            atbs.push(atb.iter().copied().collect());
        }
        Self { p, a: a_rows, b: b_rows, gram: grams, atb: atbs, h, c }
    }

    pub(super) fn spec(&self) -> QuadraticSpec {
        let a = self
            .a
            .iter()
            .map(|rows| DMatrix::from_row_slice(rows.len() / self.p.max(1), self.p, rows))
            .collect();
        let b = self.b.iter().map(|v| DVector::from_column_slice(v)).collect();
        QuadraticSpec { a, b }
    }

    pub(super) fn points(&self, i: usize) -> usize {
        self.b[i].len()
    }

    pub(super) fn local_value(&self, i: usize, x: &[f64]) -> f64 {
        let p = self.p;
        let mut acc = 0.0;
        for (r, bj) in self.b[i].iter().enumerate() {
            let res = dot(&self.a[i][r * p..(r + 1) * p], x) - bj;
            acc += res * res;
        }
        0.5 * acc
    }

    pub(super) fn local_gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
        matvec_into(&self.gram[i], x, out);
        out.iter_mut().zip(&self.atb[i]).for_each(|(o, a)| *o -= a);
    }

    pub(super) fn global_value(&self, x: &[f64]) -> f64 {
        (0..self.a.len()).map(|i| self.local_value(i, x)).sum::<f64>() / self.a.len() as f64
    }

    pub(super) fn global_gradient(&self, x: &[f64], out: &mut [f64]) {
        matvec_into(&self.h, x, out);
        out.iter_mut().zip(&self.c).for_each(|(o, c)| *o -= c);
    }

    pub(super) fn gap(&self, x: &[f64], x_star: &[f64]) -> f64 {
        let d: Vec<f64> = x.iter().zip(x_star).map(|(a, b)| a - b).collect();
        let mut hd = vec![0.0; self.p];
        matvec_into(&self.h, &d, &mut hd);
        0.5 * dot(&d, &hd)
    }

    /// `m · a_j (a_jᵀ x − b_j)`, whose mean over `j` is `∇f_i(x)`.
    pub(super) fn point_gradient(&self, i: usize, j: usize, x: &[f64], out: &mut [f64]) {
        let p = self.p;
        let row = &self.a[i][j * p..(j + 1) * p];
        let scale = self.b[i].len() as f64 * (dot(row, x) - self.b[i][j]);
        out.iter_mut().zip(row).for_each(|(o, a)| *o = scale * a);
    }

    fn h_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.p, self.p, &self.h)
    }
}

pub(super) fn from_spec(spec: &QuadraticSpec) -> Result<Problem, ProblemError> {
    let n = spec.a.len();
    if n == 0 || spec.b.len() != n {
        return Err(ProblemError::InvalidParameter("need one (A_i, b_i) pair per agent".into()));
    }
    let p = spec.a[0].ncols();
    if p == 0 {
        return Err(ProblemError::InvalidParameter("dimension p must be positive".into()));
    }
    for (a, b) in spec.a.iter().zip(&spec.b) {
        if a.ncols() != p {
            return Err(ProblemError::Dimension { expected: p, got: a.ncols() });
        }
        if a.nrows() != b.len() || a.nrows() == 0 {
            return Err(ProblemError::InvalidParameter("A_i rows must match b_i length and be positive".into()));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(ProblemError::NonFinite);
        }
    }
    let costs = QuadraticCosts::new(spec);
    let h = costs.h_matrix();
    let (eigs, _) = sorted_symmetric_eigen(h.clone());
    let top = eigs.last().copied().unwrap_or(0.0);
    let nu = eigs.iter().copied().find(|&e| top > 0.0 && e > RANK_REL_TOL * top);
    let x_star = psd_pinv_solve(&h, &DVector::from_column_slice(&costs.c), RANK_REL_TOL);
    let x_star: Vec<f64> = x_star.iter().copied().collect();
    let f_star = costs.global_value(&x_star);
    let l_f = costs
        .gram
        .iter()
        .map(|g| largest_eigenvalue(DMatrix::from_row_slice(p, p, g)))
        .fold(0.0, f64::max);
    let local_minima = (0..n)
        .map(|i| {
            let g = DMatrix::from_row_slice(p, p, &costs.gram[i]);
            let xi = psd_pinv_solve(&g, &DVector::from_column_slice(&costs.atb[i]), RANK_REL_TOL);
            costs.local_value(i, xi.as_slice())
        })
        .collect();
    Ok(Problem {
        kind: ProblemKind::Quadratic,
        n,
        p,
        costs: Costs::Quadratic(costs),
        l_f,
        lf_estimated: false,
        f_star,
        nu,
        nu_source: nu.map(|_| NuSource::Exact),
        nu_sampled_min: None,
        local_minima: Some(local_minima),
        x_star,
    })
}

/// Numerical rank of `(1/n) Σ A_iᵀ A_i`.
fn stacked_rank(a: &[DMatrix<f64>]) -> usize {
    let p = a[0].ncols();
    let mut h = DMatrix::zeros(p, p);
    for ai in a {
        h += ai.transpose() * ai;
    }
    let (eigs, _) = sorted_symmetric_eigen(h);
    let top = eigs.last().copied().unwrap_or(0.0);
    eigs.iter().filter(|&&e| top > 0.0 && e > RANK_REL_TOL * top).count()
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

pub(super) fn generate(params: &QuadraticParams) -> Result<Problem, ProblemError> {
    let &QuadraticParams { n, p, rank_deficit, rows_per_agent: m, shared_design, offset_scale, seed } = params;
    if n == 0 || p == 0 || m == 0 {
        return Err(ProblemError::InvalidParameter("n, p and rows_per_agent must be positive".into()));
    }
    if rank_deficit >= p {
        return Err(ProblemError::InvalidParameter(format!("rank_deficit {rank_deficit} must be < p = {p}")));
    }
    if !(offset_scale >= 0.0 && offset_scale.is_finite()) {
        return Err(ProblemError::InvalidParameter("offset_scale must be finite and nonnegative".into()));
    }
    let r = p - rank_deficit;
    let mut shared = ChaCha8Rng::seed_from_u64(seed ^ DATA_SEED_SALT);
    let mut agent_rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ DATA_SEED_SALT);
            rng.set_stream(i as u64 + 1);
            rng
        })
        .collect();
    let g_scale = 1.0 / (m as f64).sqrt();
    for _ in 0..MAX_ATTEMPTS {
        let q = gaussian(&mut shared, p, r, 1.0).qr().q();
        let shared_g = shared_design.then(|| gaussian(&mut shared, m, r, g_scale));
        let x_true = DVector::from_fn(p, |_, _| shared.sample::<f64, _>(StandardNormal));
        let mut a = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        for rng in agent_rngs.iter_mut() {
            let g = match &shared_g {
                Some(g) => g.clone(),
                None => gaussian(rng, m, r, g_scale),
            };
            a.push(g * q.transpose());
            offsets.push(DVector::from_fn(m, |_, _| offset_scale * rng.sample::<f64, _>(StandardNormal)));
        }
        if stacked_rank(&a) != r {
            continue;
        }
        if shared_design {
            let mean = offsets.iter().fold(DVector::zeros(m), |acc, o| acc + o) / n as f64;
            offsets.iter_mut().for_each(|o| *o -= &mean);
        }
        let b = a.iter().zip(&offsets).map(|(ai, o)| ai * &x_true + o).collect();
        return from_spec(&QuadraticSpec { a, b });
    }
    Err(ProblemError::RankDeficient { target: r, attempts: MAX_ATTEMPTS })
}
