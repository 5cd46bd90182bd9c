//! Sum-structured test costs `f = (1/n) Σ f_i` with analytic gradients,
//! stochastic gradient oracles, reference optima and P–Ł constants.

mod composition;
mod fixture;
mod logistic;
mod noise;
mod quadratic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{norm_sq, Stacked};

pub use composition::{CompositionParams, CompositionSpec};
pub use logistic::{LogisticParams, LogisticSpec};
pub use noise::{AgentStreams, NoiseMode, NoiseModel, X0_STREAM};
pub use quadratic::{QuadraticParams, QuadraticSpec};

use composition::CompositionCosts;
use logistic::LogisticCosts;
use quadratic::QuadraticCosts;

/// Attempts made before a random construction gives up.
pub const MAX_ATTEMPTS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("invalid problem parameter: {0}")]
    InvalidParameter(String),
    #[error("could not reach rank {target} after {attempts} attempts")]
    RankDeficient { target: usize, attempts: usize },
    #[error("logistic data separable after {0} attempts")]
    Separable(usize),
    #[error("reference solve did not reach gradient norm {tol:e} within {iters} iterations")]
    ReferenceSolve { tol: f64, iters: usize },
    #[error("non-finite input to gradient oracle")]
    NonFinite,
    #[error("noise mode {mode} is incompatible with {kind} problems")]
    IncompatibleNoise { mode: String, kind: ProblemKind },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("fixture parse error on line {line}: {reason}")]
    Fixture { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Quadratic,
    Logistic,
    PlComposition,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Quadratic => "quadratic",
            ProblemKind::Logistic => "logistic",
            ProblemKind::PlComposition => "pl_composition",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "quadratic" => Ok(ProblemKind::Quadratic),
            "logistic" => Ok(ProblemKind::Logistic),
            "pl_composition" => Ok(ProblemKind::PlComposition),
            other => Err(format!("unknown problem kind '{other}'")),
        }
    }
}

/// How the reported P–Ł constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuSource {
    /// Smallest positive eigenvalue of the averaged Hessian (quadratics).
    Exact,
    /// Strong-convexity modulus (regularized logistic).
    StrongConvexity,
    /// Closed-form lower bound `μ σ⁺_min(A)²` for compositions.
    Certified,
}

#[derive(Debug, Clone)]
enum Costs {
    Quadratic(QuadraticCosts),
    Logistic(LogisticCosts),
    Composition(CompositionCosts),
}

/// Immutable test problem shared by every run over it.
#[derive(Debug, Clone)]
pub struct Problem {
    kind: ProblemKind,
    n: usize,
    p: usize,
    costs: Costs,
    l_f: f64,
    lf_estimated: bool,
    f_star: f64,
    nu: Option<f64>,
    nu_source: Option<NuSource>,
    nu_sampled_min: Option<f64>,
    local_minima: Option<Vec<f64>>,
    x_star: Vec<f64>,
}

/// Scalars the tuner needs from a problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemInfo {
    pub l_f: f64,
    pub lf_estimated: bool,
    pub nu: Option<f64>,
    pub sigma_tilde2: Option<f64>,
}

macro_rules! dispatch {
    ($self:expr, $c:ident => $body:expr) => {
        match &$self.costs {
            Costs::Quadratic($c) => $body,
            Costs::Logistic($c) => $body,
            Costs::Composition($c) => $body,
        }
    };
}

impl Problem {
    pub fn make_quadratic(params: &QuadraticParams) -> Result<Self, ProblemError> {
        quadratic::generate(params)
    }

    pub fn quadratic_from_spec(spec: &QuadraticSpec) -> Result<Self, ProblemError> {
        quadratic::from_spec(spec)
    }

    pub fn make_logistic(params: &LogisticParams) -> Result<Self, ProblemError> {
        logistic::generate(params)
    }

    pub fn logistic_from_spec(spec: &LogisticSpec) -> Result<Self, ProblemError> {
        logistic::from_spec(spec)
    }

    pub fn make_pl_composition(params: &CompositionParams) -> Result<Self, ProblemError> {
        composition::generate(params)
    }

    pub fn composition_from_spec(spec: &CompositionSpec) -> Result<Self, ProblemError> {
        composition::from_spec(spec)
    }

    /// Parses the text fixture format written by [`Problem::to_fixture_text`].
    pub fn from_fixture_text(text: &str) -> Result<Self, ProblemError> {
        fixture::parse(text)
    }

    /// Self-describing decimal text dump of the problem data (quadratic and
    /// logistic kinds; compositions serialize their factors too).
    pub fn to_fixture_text(&self) -> String {
        match &self.costs {
            Costs::Quadratic(q) => fixture::write_quadratic(&q.spec()),
            Costs::Logistic(l) => fixture::write_logistic(&l.spec()),
            Costs::Composition(c) => fixture::write_composition(&c.spec()),
        }
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Gradient-Lipschitz constant shared by every `f_i`.
    pub fn l_f(&self) -> f64 {
        self.l_f
    }

    /// True when `l_f` should be treated as an estimate by the tuner.
    pub fn lf_estimated(&self) -> bool {
        self.lf_estimated
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    pub fn nu(&self) -> Option<f64> {
        self.nu
    }

    pub fn nu_source(&self) -> Option<NuSource> {
        self.nu_source
    }

    /// Minimum P–Ł ratio observed over the construction-time sample, when
    /// one was drawn.
    pub fn nu_sampled_min(&self) -> Option<f64> {
        self.nu_sampled_min
    }

    /// Per-agent minima `f_i*`, when they are attained and were computed.
    pub fn local_minima(&self) -> Option<&[f64]> {
        self.local_minima.as_deref()
    }

    /// A minimizer of `f` (the minimum-norm one for quadratics).
    pub fn x_star(&self) -> &[f64] {
        &self.x_star
    }

    /// `σ̃² = 2 L_f f* − 2 L_f (1/n) Σ f_i*`.
    pub fn sigma_tilde2(&self) -> Option<f64> {
        self.local_minima.as_ref().map(|m| {
            let mean = m.iter().sum::<f64>() / m.len() as f64;
            2.0 * self.l_f * self.f_star - 2.0 * self.l_f * mean
        })
    }

    pub fn info(&self) -> ProblemInfo {
        ProblemInfo {
            l_f: self.l_f,
            lf_estimated: self.lf_estimated,
            nu: self.nu,
            sigma_tilde2: self.sigma_tilde2(),
        }
    }

    /// Number of data points held by agent `i` (zero for compositions).
    pub fn local_points(&self, i: usize) -> usize {
        match &self.costs {
            Costs::Quadratic(q) => q.points(i),
            Costs::Logistic(l) => l.points(i),
            Costs::Composition(_) => 0,
        }
    }

    pub fn local_value(&self, i: usize, x: &[f64]) -> f64 {
        dispatch!(self, c => c.local_value(i, x))
    }

    /// `out = ∇f_i(x)`; no finiteness check (hot path).
    pub fn local_gradient_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
        dispatch!(self, c => c.local_gradient(i, x, out))
    }

    pub fn local_gradient(&self, i: usize, x: &[f64]) -> Result<Vec<f64>, ProblemError> {
        self.check_point(x)?;
        let mut out = vec![0.0; self.p];
        self.local_gradient_into(i, x, &mut out);
        Ok(out)
    }

    /// Row `i` of `out` set to `∇f_i(x_i)`.
    pub fn stacked_gradient(&self, x: &Stacked, out: &mut Stacked) -> Result<(), ProblemError> {
        if !x.is_finite() {
            return Err(ProblemError::NonFinite);
        }
        self.check_stack(x)?;
        for i in 0..self.n {
            self.local_gradient_into(i, x.row(i), out.row_mut(i));
        }
        Ok(())
    }

    /// `f(x) = (1/n) Σ f_i(x)`.
    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.costs {
            Costs::Quadratic(q) => q.global_value(x),
            _ => (0..self.n).map(|i| self.local_value(i, x)).sum::<f64>() / self.n as f64,
        }
    }

    /// `out = ∇f(x)`.
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.costs {
            Costs::Quadratic(q) => q.global_gradient(x, out),
            _ => {
                let mut tmp = vec![0.0; self.p];
                out.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..self.n {
                    self.local_gradient_into(i, x, &mut tmp);
                    out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t);
                }
                let inv = 1.0 / self.n as f64;
                out.iter_mut().for_each(|v| *v *= inv);
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, ProblemError> {
        self.check_point(x)?;
        let mut out = vec![0.0; self.p];
        self.gradient_into(x, &mut out);
        Ok(out)
    }

    /// `‖∇f(x̄)‖²`.
    pub fn stationarity(&self, x_bar: &[f64]) -> f64 {
        let mut g = vec![0.0; self.p];
        self.gradient_into(x_bar, &mut g);
        norm_sq(&g)
    }

    /// `f(x̄) − f*`; for quadratics evaluated as `½ (x̄−x*)ᵀ H (x̄−x*)` to avoid
    /// cancellation.
    pub fn optimality_gap(&self, x_bar: &[f64]) -> f64 {
        match &self.costs {
            Costs::Quadratic(q) => q.gap(x_bar, &self.x_star),
            _ => self.value(x_bar) - self.f_star,
        }
    }

    /// Unbiased single-point estimate of `∇f_i(x)` built from local data
    /// point `j`.
    pub fn point_gradient_into(&self, i: usize, j: usize, x: &[f64], out: &mut [f64]) {
        match &self.costs {
            Costs::Quadratic(q) => q.point_gradient(i, j, x, out),
            Costs::Logistic(l) => l.point_gradient(i, j, x, out),
            Costs::Composition(_) => unreachable!("compositions have no data points"),
        }
    }

    /// Exact variance `E‖g − ∇f_i(x)‖²` of the with-replacement minibatch
    /// oracle of size `batch` at `x`, by enumeration of the local data.
    pub fn minibatch_variance(&self, i: usize, x: &[f64], batch: usize) -> Option<f64> {
        let m = self.local_points(i);
        if m == 0 || batch == 0 {
            return None;
        }
        let mut full = vec![0.0; self.p];
        self.local_gradient_into(i, x, &mut full);
        let mut g = vec![0.0; self.p];
        let mut acc = 0.0;
        for j in 0..m {
            self.point_gradient_into(i, j, x, &mut g);
            acc += g.iter().zip(&full).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        Some(acc / m as f64 / batch as f64)
    }

    /// Draws one stochastic gradient per agent at its own row of `x`, each
    /// from that agent's stream.
    pub fn sample_gradients(
        &self,
        noise: &NoiseModel,
        x: &Stacked,
        streams: &mut AgentStreams,
        out: &mut Stacked,
    ) -> Result<(), ProblemError> {
        self.check_stack(x)?;
        noise.check_compatible(self.kind)?;
        if streams.len() != self.n {
            return Err(ProblemError::Dimension { expected: self.n, got: streams.len() });
        }
        noise::sample(self, noise, x, streams, out);
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<(), ProblemError> {
        if x.len() != self.p {
            return Err(ProblemError::Dimension { expected: self.p, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ProblemError::NonFinite);
        }
        Ok(())
    }

    fn check_stack(&self, x: &Stacked) -> Result<(), ProblemError> {
        if x.rows() != self.n {
            return Err(ProblemError::Dimension { expected: self.n, got: x.rows() });
        }
        if x.cols() != self.p {
            return Err(ProblemError::Dimension { expected: self.p, got: x.cols() });
        }
        Ok(())
    }
}

/// Plain gradient descent with step `1/lipschitz` from `x0`, stopping once
/// `‖∇‖ ≤ tol`. Used for reference optima.
pub(crate) fn descend<G>(
    x0: Vec<f64>,
    lipschitz: f64,
    tol: f64,
    max_iters: usize,
    mut grad: G,
) -> Result<Vec<f64>, ProblemError>
where
    G: FnMut(&[f64], &mut [f64]),
{
    let mut x = x0;
    let mut g = vec![0.0; x.len()];
    let step = 1.0 / lipschitz;
    for _ in 0..max_iters {
        grad(&x, &mut g);
        if norm_sq(&g).sqrt() <= tol {
            return Ok(x);
        }
        x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi -= step * gi);
    }
    grad(&x, &mut g);
    if norm_sq(&g).sqrt() <= tol {
        Ok(x)
    } else {
        Err(ProblemError::ReferenceSolve { tol, iters: max_iters })
    }
}
