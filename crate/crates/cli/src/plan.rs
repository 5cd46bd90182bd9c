//! Resolution of a [`Config`] into concrete, deterministic run plans.

use std::fs;
use std::path::{Path, PathBuf};

use pdsgd_core::problems::{CompositionParams, LogisticParams, QuadraticParams};
use pdsgd_core::tuner::{self, TunerError};
use pdsgd_core::{
    Algorithm, DualInit, Graph, InitPolicy, NoiseModel, Problem, ProblemKind, Schedule, StepSize, Theorem, TunerConfig,
    ValidationReport,
};

use crate::config::{AlgName, Config, ConfigError, DualInitName, GraphSource, ProblemSource, ScheduleChoice, X0Name};

/// Environment variable added to every run seed.
pub const SEED_OFFSET_VAR: &str = "PDSGD_SEED_OFFSET";

/// Reads [`SEED_OFFSET_VAR`]; unset means 0.
pub fn seed_offset_from_env() -> Result<u64, ConfigError> {
    match std::env::var(SEED_OFFSET_VAR) {
        Ok(v) => v.trim().parse::<u64>().map_err(|e| ConfigError::Invalid {
            key: SEED_OFFSET_VAR.into(),
            value: v.clone(),
            reason: e.to_string(),
        }),
        Err(_) => Ok(0),
    }
}

/// Settings that come from the command line rather than the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub graph_file: Option<PathBuf>,
    pub seed_offset: u64,
    /// Directory that relative paths in the config are resolved against.
    pub base_dir: Option<PathBuf>,
}

impl Overrides {
    fn resolve_path(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }
}

/// One fully resolved configuration, run once per seed.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub label: String,
    pub graph: Graph,
    pub problem: Problem,
    pub noise: NoiseModel,
    pub algorithm: Algorithm,
    pub horizon: u64,
    /// Seeds after the offset.
    pub seeds: Vec<u64>,
    pub record_every: u64,
    pub x0: InitPolicy,
    pub tail_fraction: f64,
    pub theorem: Option<Theorem>,
    pub validation: Option<ValidationReport>,
    pub notes: Vec<String>,
    /// Axis values identifying this plan inside a sweep.
    pub axes: Axes,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Axes {
    pub n: usize,
    pub horizon: u64,
    pub theta: Option<f64>,
    pub sigma2: f64,
    pub algorithm: String,
}

impl Axes {
    /// Key identifying every axis except `skip`.
    pub fn key_without(&self, skip: &str) -> String {
        let mut parts = Vec::new();
        if skip != "n" {
            parts.push(format!("n={}", self.n));
        }
        if skip != "T" {
            parts.push(format!("T={}", self.horizon));
        }
        if let Some(t) = self.theta {
            parts.push(format!("theta={t}"));
        }
        if skip != "sigma2" {
            parts.push(format!("sigma2={}", self.sigma2));
        }
        parts.push(format!("alg={}", self.algorithm));
        parts.join(",")
    }
}

impl PartialEq for RunPlan {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
            && self.graph == other.graph
            && self.problem.to_fixture_text() == other.problem.to_fixture_text()
            && self.noise == other.noise
            && self.algorithm == other.algorithm
            && self.horizon == other.horizon
            && self.seeds == other.seeds
            && self.record_every == other.record_every
            && self.x0 == other.x0
            && self.tail_fraction == other.tail_fraction
            && self.theorem == other.theorem
            && self.validation == other.validation
            && self.notes == other.notes
            && self.axes == other.axes
    }
}

impl RunPlan {
    pub fn passes_validation(&self) -> bool {
        self.validation.as_ref().is_none_or(|r| r.pass)
    }

    /// Human-readable description of the resolved schedule.
    pub fn schedule_description(&self) -> String {
        match &self.algorithm {
            Algorithm::PrimalDual { schedule, .. } => format!("{schedule:?}"),
            Algorithm::Csgd { step } | Algorithm::Dsgd { step } | Algorithm::Dsgt { step } => format!("{step:?}"),
        }
    }
}

fn build_graph(cfg: &Config, ov: &Overrides) -> Result<Graph, ConfigError> {
    let graph_err = |e: pdsgd_core::GraphError| ConfigError::Other(format!("graph: {e}"));
    if let Some(file) = &ov.graph_file {
        return read_graph_file(file, cfg.graph.n);
    }
    match &cfg.graph.source {
        GraphSource::Named(t) => Graph::named(*t, cfg.graph.n.expect("n checked at parse")).map_err(graph_err),
        GraphSource::Random { q, seed } => {
            Graph::random_connected(cfg.graph.n.expect("n checked at parse"), *q, *seed).map_err(graph_err)
        }
        GraphSource::File(path) => read_graph_file(&ov.resolve_path(path), cfg.graph.n),
    }
}

fn read_graph_file(path: &Path, n: Option<usize>) -> Result<Graph, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::Invalid { key: "graph.file".into(), value: path.display().to_string(), reason: e.to_string() })?;
    Graph::from_edge_list(&text, n)
        .map_err(|e| ConfigError::Invalid { key: "graph.file".into(), value: path.display().to_string(), reason: e.to_string() })
}

fn build_problem(cfg: &Config, n: usize, ov: &Overrides) -> Result<Problem, ConfigError> {
    let pc = &cfg.problem;
    let err = |e: pdsgd_core::ProblemError| ConfigError::Other(format!("problem: {e}"));
    let problem = match pc.source {
        ProblemSource::Fixture => {
            let path = ov.resolve_path(pc.file.as_ref().expect("file checked at parse"));
            let text = fs::read_to_string(&path).map_err(|e| ConfigError::Invalid {
                key: "problem.file".into(),
                value: path.display().to_string(),
                reason: e.to_string(),
            })?;
            let p = Problem::from_fixture_text(&text).map_err(err)?;
            if p.n() != n {
                return Err(ConfigError::Other(format!("problem fixture has {} agents, graph has {n}", p.n())));
            }
            p
        }
        ProblemSource::Generated(ProblemKind::Quadratic) => {
            let mut params = QuadraticParams::new(n, pc.p, pc.seed);
            params.rank_deficit = pc.rank_deficit;
            if let Some(r) = pc.rows_per_agent {
                params.rows_per_agent = r;
            }
            params.shared_design = pc.shared_design;
            params.offset_scale = pc.offset_scale;
            Problem::make_quadratic(&params).map_err(err)?
        }
        ProblemSource::Generated(ProblemKind::Logistic) => Problem::make_logistic(&LogisticParams {
            n,
            p: pc.p,
            samples_per_agent: pc.samples_per_agent,
            lambda: pc.lambda,
            seed: pc.seed,
        })
        .map_err(err)?,
        ProblemSource::Generated(ProblemKind::PlComposition) => {
            let mut params = CompositionParams::new(n, pc.p, pc.seed);
            params.gamma = pc.gamma;
            Problem::make_pl_composition(&params).map_err(err)?
        }
    };
    Ok(problem)
}

fn tuner_error(e: TunerError) -> ConfigError {
    ConfigError::Other(format!("tuner: {e}"))
}

/// Resolves `cfg` (with any sweep axes already applied) into a plan.
pub fn resolve(cfg: &Config, ov: &Overrides, label: &str) -> Result<RunPlan, ConfigError> {
    let graph = build_graph(cfg, ov)?;
    let n = graph.n();
    if !graph.is_connected() {
        return Err(ConfigError::Other("graph: not connected (every algorithm run requires a connected graph)".into()));
    }
    let problem = build_problem(cfg, n, ov)?;
    cfg.noise.check_compatible(problem.kind()).map_err(|e| ConfigError::Other(format!("noise: {e}")))?;
    let horizon = cfg.run.horizon;
    let a = &cfg.algorithm;
    let tuner_cfg = TunerConfig { c_hat0: a.c_hat0, nu_override: cfg.problem.nu, theta: a.theta, ..TunerConfig::default() };
    let mut notes = Vec::new();
    let mut theorem = a.theorem;
    let algorithm = match a.name {
        AlgName::Pdsgd => {
            let choice = a.schedule.ok_or_else(|| ConfigError::Missing("algorithm.schedule".into()))?;
            let schedule = match choice {
                ScheduleChoice::Explicit(s) => match s {
                    Schedule::Corollary1 { .. } | Schedule::PolynomialT { .. } => s.with_horizon(horizon),
                    _ => s,
                },
                ScheduleChoice::Suggest(th) => {
                    let spectrum = graph.spectrum().map_err(|e| ConfigError::Other(format!("graph: {e}")))?;
                    let s = tuner::suggest(&spectrum, n, &problem.info(), th, Some(horizon), &tuner_cfg).map_err(tuner_error)?;
                    notes.extend(s.notes);
                    theorem = theorem.or(Some(s.validated_as));
                    s.schedule
                }
            };
            let dual_init = match a.dual_init {
                DualInitName::Zeros => DualInit::Zeros,
                DualInitName::Laplacian => DualInit::Laplacian,
            };
            Algorithm::PrimalDual { schedule, dual_init }
        }
        name => {
            let step: StepSize = a.step.ok_or_else(|| ConfigError::Missing("algorithm.eta".into()))?;
            match name {
                AlgName::Csgd => Algorithm::Csgd { step },
                AlgName::Dsgd => Algorithm::Dsgd { step },
                _ => Algorithm::Dsgt { step },
            }
        }
    };
    let validation = match (theorem, &algorithm) {
        (Some(th), Algorithm::PrimalDual { schedule, .. }) => {
            let spectrum = graph.spectrum().map_err(|e| ConfigError::Other(format!("graph: {e}")))?;
            Some(tuner::validate(schedule, &spectrum, n, &problem.info(), th, &tuner_cfg).map_err(tuner_error)?)
        }
        (Some(th), _) => return Err(ConfigError::Other(format!("algorithm.theorem = {th} applies only to pdsgd"))),
        (None, _) => None,
    };
    let x0 = match cfg.run.x0 {
        X0Name::Normal => InitPolicy::Normal,
        X0Name::SharedNormal => InitPolicy::SharedNormal,
        X0Name::Zeros => InitPolicy::Zeros,
    };
    let theta = match (&algorithm, cfg.sweep.as_ref().and_then(|s| s.theta.as_ref())) {
        (Algorithm::PrimalDual { schedule: Schedule::PolynomialT { theta, .. }, .. }, _) => Some(*theta),
        (_, Some(_)) => Some(a.theta),
        _ => None,
    };
    Ok(RunPlan {
        label: label.to_string(),
        axes: Axes { n, horizon, theta, sigma2: cfg.noise.sigma2, algorithm: algorithm.name().to_string() },
        graph,
        problem,
        noise: cfg.noise,
        algorithm,
        horizon,
        seeds: cfg.run.seeds.iter().map(|s| s.wrapping_add(ov.seed_offset)).collect(),
        record_every: cfg.run.record_every,
        x0,
        tail_fraction: cfg.run.tail_fraction,
        theorem,
        validation,
        notes,
    })
}

/// Cross product of the sweep axes applied to the template, with labels.
pub fn expand(cfg: &Config) -> Result<Vec<(String, Config)>, ConfigError> {
    let Some(sw) = &cfg.sweep else {
        return Ok(vec![("run".to_string(), cfg.clone())]);
    };
    let ns: Vec<Option<usize>> = sw.n.as_ref().map_or(vec![None], |v| v.iter().copied().map(Some).collect());
    let ts: Vec<Option<u64>> = sw.horizon.as_ref().map_or(vec![None], |v| v.iter().copied().map(Some).collect());
    let thetas: Vec<Option<f64>> = sw.theta.as_ref().map_or(vec![None], |v| v.iter().copied().map(Some).collect());
    let sigmas: Vec<Option<f64>> = sw.sigma2.as_ref().map_or(vec![None], |v| v.iter().copied().map(Some).collect());
    let algs: Vec<Option<AlgName>> = sw.algorithm.as_ref().map_or(vec![None], |v| v.iter().copied().map(Some).collect());
    let mut out = Vec::new();
    for &n in &ns {
        for &t in &ts {
            for &theta in &thetas {
                for &s2 in &sigmas {
                    for &alg in &algs {
                        let mut c = cfg.clone();
                        let mut label = Vec::new();
                        if let Some(n) = n {
                            if matches!(c.graph.source, GraphSource::File(_)) {
                                return Err(ConfigError::Other("sweep.n cannot vary a graph read from a file".into()));
                            }
                            c.graph.n = Some(n);
                            label.push(format!("n{n}"));
                        }
                        if let Some(t) = t {
                            c.run.horizon = t;
                            label.push(format!("T{t}"));
                        }
                        if let Some(theta) = theta {
                            c.algorithm.theta = theta;
                            if let Some(ScheduleChoice::Explicit(Schedule::PolynomialT { theta: th, .. })) = &mut c.algorithm.schedule {
                                *th = theta;
                            }
                            label.push(format!("theta{theta}"));
                        }
                        if let Some(s2) = s2 {
                            if matches!(c.noise.mode, pdsgd_core::NoiseMode::Minibatch { .. }) {
                                return Err(ConfigError::Other("sweep.sigma2 does not apply to minibatch noise".into()));
                            }
                            c.noise.sigma2 = s2;
                            label.push(format!("s2_{s2}"));
                        }
                        if let Some(alg) = alg {
                            c.algorithm.name = alg;
                            label.push(alg.to_string());
                        }
                        if label.is_empty() {
                            label.push("run".into());
                        }
                        out.push((label.join("_"), c));
                    }
                }
            }
        }
    }
    Ok(out)
}
