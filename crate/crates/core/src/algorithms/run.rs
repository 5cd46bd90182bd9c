//! Seeded, deterministic execution of one configuration.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use super::{csgd_step, dsgd_step, AlgError, Algorithm, DsgtState, PdState, ScheduleError};
use crate::graph::{metropolis_weights, Graph, GraphError, MixingMatrix};
use crate::linalg::Stacked;
use crate::metrics::{consensus_error, DualStats, Record, RunMeta, TimeAverages, Trace};
use crate::problems::{AgentStreams, NoiseModel, Problem, ProblemError, X0_STREAM};

/// Fraction of the horizon averaged into the tail (plateau) statistics.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub enum InitPolicy {
    /// Independent `N(0, 1)` entries per agent.
    Normal,
    /// One `N(0, I)` draw shared by every agent; independent of `n`.
    SharedNormal,
    Zeros,
    Explicit(Stacked),
}

impl InitPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            InitPolicy::Normal => "normal",
            InitPolicy::SharedNormal => "shared_normal",
            InitPolicy::Zeros => "zeros",
            InitPolicy::Explicit(_) => "explicit",
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Algorithm(#[from] AlgError),
    #[error("invalid run: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone)]
pub struct RunSpec<'a> {
    pub problem: &'a Problem,
    pub graph: &'a Graph,
    pub algorithm: &'a Algorithm,
    pub noise: NoiseModel,
    pub horizon: u64,
    pub seed: u64,
    pub record_every: u64,
    pub x0: InitPolicy,
    pub tail_fraction: f64,
    /// Mixing matrix for the averaging baselines; Metropolis weights of
    /// `graph` when absent.
    pub mixing: Option<&'a MixingMatrix>,
}

impl<'a> RunSpec<'a> {
    pub fn new(problem: &'a Problem, graph: &'a Graph, algorithm: &'a Algorithm, noise: NoiseModel, horizon: u64, seed: u64) -> Self {
        Self {
            problem,
            graph,
            algorithm,
            noise,
            horizon,
            seed,
            record_every: 1,
            x0: InitPolicy::Normal,
            tail_fraction: DEFAULT_TAIL_FRACTION,
            mixing: None,
        }
    }
}

/// `x_0` for `n` agents in dimension `p` under `policy`, drawn from a stream
/// disjoint from every oracle stream.
pub fn initial_iterate(policy: &InitPolicy, n: usize, p: usize, seed: u64) -> Result<Stacked, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(X0_STREAM);
    let x = match policy {
        InitPolicy::Normal => Stacked::from_vec(n, p, (0..n * p).map(|_| rng.sample(StandardNormal)).collect()),
        InitPolicy::SharedNormal => {
            let row: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
            Stacked::repeat_row(n, &row)
        }
        InitPolicy::Zeros => Stacked::zeros(n, p),
        InitPolicy::Explicit(x) => {
            if (x.rows(), x.cols()) != (n, p) {
                return Err(RunError::Invalid(format!("explicit x0 is {}x{}, expected {n}x{p}", x.rows(), x.cols())));
            }
            if !x.is_finite() {
                return Err(RunError::Invalid("explicit x0 has non-finite entries".into()));
            }
            x.clone()
        }
    };
    Ok(x)
}

enum Engine {
    PrimalDual { state: PdState },
    Csgd { x: Stacked },
    Dsgd { x: Stacked, w: MixingMatrix, scratch: Stacked },
    Dsgt { state: DsgtState, w: MixingMatrix },
}

impl Engine {
    fn x(&self) -> &Stacked {
        match self {
            Engine::PrimalDual { state } => &state.x,
            Engine::Csgd { x } | Engine::Dsgd { x, .. } => x,
            Engine::Dsgt { state, .. } => &state.x,
        }
    }
}

struct Metrics {
    consensus_err: f64,
    grad_norm_sq: f64,
    opt_gap: f64,
}

fn measure(problem: &Problem, x: &Stacked) -> Metrics {
    let x_bar = x.mean_row();
    Metrics {
        consensus_err: consensus_error(x),
        grad_norm_sq: problem.stationarity(&x_bar),
        opt_gap: problem.optimality_gap(&x_bar),
    }
}

/// Runs `spec.horizon` iterations, evaluating the metrics at every iterate
/// (for the time averages) and recording every `record_every` iterations plus
/// the final one. Divergence stops the run and is flagged in the metadata.
pub fn run(spec: &RunSpec<'_>) -> Result<Trace, RunError> {
    let problem = spec.problem;
    let (n, p) = (problem.n(), problem.p());
    let t_total = spec.horizon;
    if spec.graph.n() != n {
        return Err(RunError::Invalid(format!("graph has {} agents, problem has {n}", spec.graph.n())));
    }
    if spec.record_every == 0 {
        return Err(RunError::Invalid("record_every must be ≥ 1".into()));
    }
    if !(spec.tail_fraction > 0.0 && spec.tail_fraction <= 1.0) {
        return Err(RunError::Invalid("tail_fraction must lie in (0, 1]".into()));
    }
    if spec.algorithm.is_distributed() && !spec.graph.is_connected() {
        return Err(GraphError::Disconnected.into());
    }
    spec.noise.check_compatible(problem.kind())?;

    let started = Instant::now();
    let x0 = initial_iterate(&spec.x0, n, p, spec.seed)?;
    let mut streams = AgentStreams::new(spec.seed, n);
    let mut g = Stacked::zeros(n, p);
    let lap = spec.graph.laplacian();
    let mixing = |spec: &RunSpec<'_>| -> Result<MixingMatrix, RunError> {
        Ok(match spec.mixing {
            Some(w) => w.clone(),
            None => metropolis_weights(spec.graph)?,
        })
    };

    let schedule_desc;
    let mut engine = match spec.algorithm {
        Algorithm::PrimalDual { schedule, dual_init } => {
            schedule.validate_params()?;
            schedule.eval(0, n)?;
            schedule_desc = format!("{schedule:?}");
            Engine::PrimalDual { state: PdState::new(x0, dual_init, &lap)? }
        }
        Algorithm::Csgd { step } => {
            step.validate()?;
            schedule_desc = format!("{step:?}");
            Engine::Csgd { x: Stacked::repeat_row(n, &x0.mean_row()) }
        }
        Algorithm::Dsgd { step } => {
            step.validate()?;
            schedule_desc = format!("{step:?}");
            Engine::Dsgd { x: x0, w: mixing(spec)?, scratch: Stacked::zeros(n, p) }
        }
        Algorithm::Dsgt { step } => {
            step.validate()?;
            schedule_desc = format!("{step:?}");
            problem.sample_gradients(&spec.noise, &x0, &mut streams, &mut g)?;
            Engine::Dsgt { state: DsgtState::new(x0, g.clone()), w: mixing(spec)? }
        }
    };

    let meta = RunMeta {
        algorithm: spec.algorithm.name().to_string(),
        n,
        p,
        horizon: t_total,
        seed: spec.seed,
        schedule: schedule_desc,
        noise: format!("{} sigma2={}", spec.noise.mode, spec.noise.sigma2),
        diverged_at: None,
    };
    let mut trace = Trace::new(meta);
    let mut time_avg = TimeAverages::default();
    let mut tail_avg = TimeAverages::default();
    let tail_len = ((t_total as f64) * spec.tail_fraction).ceil() as u64;
    let tail_start = t_total.saturating_sub(tail_len) + 1;
    let mut dual = matches!(engine, Engine::PrimalDual { .. }).then(DualStats::default);
    if let (Some(d), Engine::PrimalDual { state }) = (dual.as_mut(), &engine) {
        d.observe(&state.v);
    }

    let mut k = 0u64;
    loop {
        let m = measure(problem, engine.x());
        let (eta_k, beta_k) = match (&engine, spec.algorithm) {
            (Engine::PrimalDual { .. }, Algorithm::PrimalDual { schedule, .. }) => {
                let params = schedule.eval(k, n)?;
                (params.eta, params.beta)
            }
            (_, Algorithm::Csgd { step } | Algorithm::Dsgd { step } | Algorithm::Dsgt { step }) => (step.eta(k), 0.0),
            _ => unreachable!("engine matches algorithm"),
        };
        if k % spec.record_every == 0 || k == t_total {
            trace.records.push(Record {
                k,
                consensus_err: m.consensus_err,
                grad_norm_sq: m.grad_norm_sq,
                opt_gap: m.opt_gap,
                eta_k,
                beta_k,
                wall_ns: started.elapsed().as_nanos() as u64,
            });
        }
        if k < t_total {
            time_avg.push(m.consensus_err, m.grad_norm_sq, m.opt_gap);
        }
        if k >= tail_start && t_total > 0 {
            tail_avg.push(m.consensus_err, m.grad_norm_sq, m.opt_gap);
        }
        if k == t_total {
            break;
        }

        let outcome = match &mut engine {
            Engine::PrimalDual { state } => {
                let Algorithm::PrimalDual { schedule, .. } = spec.algorithm else { unreachable!() };
                let params = schedule.eval(k, n)?;
                problem.sample_gradients(&spec.noise, &state.x, &mut streams, &mut g)?;
                let r = state.step(&lap, params, &g);
                if let Some(d) = dual.as_mut() {
                    d.observe(&state.v);
                }
                r
            }
            Engine::Csgd { x } => {
                problem.sample_gradients(&spec.noise, x, &mut streams, &mut g)?;
                csgd_step(x, eta_k, &g, k)
            }
            Engine::Dsgd { x, w, scratch } => {
                problem.sample_gradients(&spec.noise, x, &mut streams, &mut g)?;
                dsgd_step(x, w, eta_k, &g, scratch, k)
            }
            Engine::Dsgt { state, w } => state.advance(w, eta_k, k).and_then(|()| {
                problem.sample_gradients(&spec.noise, &state.x, &mut streams, &mut g).map_err(|_| AlgError::Diverged { k: k + 1 })?;
                state.track(w, &g, k)
            }),
        };
        match outcome {
            Ok(()) => k += 1,
            Err(AlgError::Diverged { k: at }) => {
                trace.meta.diverged_at = Some(at);
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    trace.time_avg = time_avg;
    trace.tail_avg = tail_avg;
    trace.dual = dual;
    Ok(trace)
}
