//! Line-oriented experiment configs: `[section]` headers, `key = value`
//! pairs, `#` comments, lists as comma-separated values.
//!
//! ```text
//! [graph]
//! topology = fig1          # path | ring | star | complete | fig1 | random | file
//! n = 10
//!
//! [problem]
//! kind = quadratic         # quadratic | logistic | pl_composition | fixture
//! p = 5
//! seed = 1
//!
//! [noise]
//! mode = additive_gaussian # additive_gaussian | minibatch | biased_additive
//! sigma2 = 1
//!
//! [algorithm]
//! name = pdsgd             # pdsgd | csgd | dsgd | dsgt
//! schedule = suggest:theorem4
//!
//! [run]
//! T = 1000
//! seeds = 1, 2, 3
//!
//! [sweep]                  # optional; axes are crossed
//! n = 4, 16
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use pdsgd_core::{NoiseMode, NoiseModel, ProblemKind, Schedule, StepSize, Theorem, Topology};
use thiserror::Error;

pub const DEFAULT_MAX_RUNS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("missing key '{0}'")]
    Missing(String),
    #[error("invalid value for '{key}' = '{value}': {reason}")]
    Invalid { key: String, value: String, reason: String },
    #[error("unknown key '{0}'")]
    Unknown(String),
    #[error("'{0}': empty axis list")]
    EmptyAxis(String),
    #[error("{0}")]
    Other(String),
}

/// Parsed but untyped config: section → key → (line, raw value).
#[derive(Debug, Clone, Default)]
struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, (usize, String)>>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        let mut current: Option<String> = None;
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Syntax { line: lineno, reason: "unterminated section header".into() })?
                    .trim()
                    .to_string();
                raw.sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: lineno, reason: format!("expected 'key = value', got '{line}'") })?;
            let section = current
                .as_ref()
                .ok_or_else(|| ConfigError::Syntax { line: lineno, reason: "key outside any [section]".into() })?;
            let key = key.trim().to_string();
            let map = raw.sections.get_mut(section).expect("section inserted on header");
            if map.insert(key.clone(), (lineno, value.trim().to_string())).is_some() {
                return Err(ConfigError::Syntax { line: lineno, reason: format!("duplicate key '{section}.{key}'") });
            }
        }
        Ok(raw)
    }
}

/// Typed access to one section that remembers which keys were read.
struct Section<'a> {
    name: &'a str,
    map: Option<&'a BTreeMap<String, (usize, String)>>,
    used: BTreeSet<String>,
}

impl<'a> Section<'a> {
    fn new(raw: &'a RawConfig, name: &'a str) -> Self {
        Self { name, map: raw.sections.get(name), used: BTreeSet::new() }
    }

    fn present(&self) -> bool {
        self.map.is_some()
    }

    fn key(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn raw(&mut self, key: &str) -> Option<&'a str> {
        self.used.insert(key.to_string());
        self.map.and_then(|m| m.get(key)).map(|(_, v)| v.as_str())
    }

    fn parse_value<T: FromStr>(&self, key: &str, value: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        value
            .parse::<T>()
            .map_err(|e| ConfigError::Invalid { key: self.key(key), value: value.to_string(), reason: e.to_string() })
    }

    fn opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            Some(v) => self.parse_value(key, v).map(Some),
            None => Ok(None),
        }
    }

    fn req<T: FromStr>(&mut self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.opt(key)?.ok_or_else(|| ConfigError::Missing(self.key(key)))
    }

    fn or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if items.is_empty() {
            return Err(ConfigError::EmptyAxis(self.key(key)));
        }
        items.into_iter().map(|s| self.parse_value(key, s)).collect::<Result<Vec<T>, _>>().map(Some)
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some(map) = self.map {
            if let Some(k) = map.keys().find(|k| !self.used.contains(*k)) {
                return Err(ConfigError::Unknown(self.key(k)));
            }
        }
        Ok(())
    }
}

/// Numbers that accept scientific notation for integer keys (`T = 1e5`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Count(u64);

impl FromStr for Count {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(v) = s.parse::<u64>() {
            return Ok(Count(v));
        }
        match s.parse::<f64>() {
            Ok(f) if f >= 0.0 && f.fract() == 0.0 && f < u64::MAX as f64 => Ok(Count(f as u64)),
            _ => Err("expected a non-negative integer".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    Named(Topology),
    Random { q: f64, seed: u64 },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphConfig {
    pub source: GraphSource,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemSource {
    Generated(ProblemKind),
    Fixture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub source: ProblemSource,
    pub file: Option<PathBuf>,
    pub p: usize,
    pub seed: u64,
    pub rank_deficit: usize,
    pub rows_per_agent: Option<usize>,
    pub shared_design: bool,
    pub offset_scale: f64,
    pub samples_per_agent: usize,
    pub lambda: f64,
    pub gamma: f64,
    /// Overrides the problem's P–Ł constant in the tuner.
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgName {
    Pdsgd,
    Csgd,
    Dsgd,
    Dsgt,
}

impl AlgName {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgName::Pdsgd => "pdsgd",
            AlgName::Csgd => "csgd",
            AlgName::Dsgd => "dsgd",
            AlgName::Dsgt => "dsgt",
        }
    }
}

impl fmt::Display for AlgName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "pdsgd" | "primal_dual" => Ok(AlgName::Pdsgd),
            "csgd" => Ok(AlgName::Csgd),
            "dsgd" => Ok(AlgName::Dsgd),
            "dsgt" => Ok(AlgName::Dsgt),
            other => Err(format!("unknown algorithm '{other}' (pdsgd, csgd, dsgd, dsgt)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleChoice {
    Suggest(Theorem),
    Explicit(Schedule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualInitName {
    Zeros,
    Laplacian,
}

impl FromStr for DualInitName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zeros" => Ok(DualInitName::Zeros),
            "laplacian" => Ok(DualInitName::Laplacian),
            other => Err(format!("unknown dual init '{other}' (zeros, laplacian)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmConfig {
    pub name: AlgName,
    pub schedule: Option<ScheduleChoice>,
    pub dual_init: DualInitName,
    pub step: Option<StepSize>,
    /// Theorem whose hypotheses gate the run.
    pub theorem: Option<Theorem>,
    pub c_hat0: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum X0Name {
    Normal,
    SharedNormal,
    Zeros,
}

impl X0Name {
    pub fn as_str(&self) -> &'static str {
        match self {
            X0Name::Normal => "normal",
            X0Name::SharedNormal => "shared_normal",
            X0Name::Zeros => "zeros",
        }
    }
}

impl FromStr for X0Name {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normal" => Ok(X0Name::Normal),
            "shared_normal" => Ok(X0Name::SharedNormal),
            "zeros" => Ok(X0Name::Zeros),
            other => Err(format!("unknown x0 policy '{other}' (normal, shared_normal, zeros)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub record_every: u64,
    pub x0: X0Name,
    pub tail_fraction: f64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepConfig {
    pub n: Option<Vec<usize>>,
    pub horizon: Option<Vec<u64>>,
    pub theta: Option<Vec<f64>>,
    pub sigma2: Option<Vec<f64>>,
    pub algorithm: Option<Vec<AlgName>>,
    pub max_runs: usize,
}

impl SweepConfig {
    /// Number of axis combinations (before seeds).
    pub fn combinations(&self) -> usize {
        [
            self.n.as_ref().map_or(1, Vec::len),
            self.horizon.as_ref().map_or(1, Vec::len),
            self.theta.as_ref().map_or(1, Vec::len),
            self.sigma2.as_ref().map_or(1, Vec::len),
            self.algorithm.as_ref().map_or(1, Vec::len),
        ]
        .iter()
        .product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub graph: GraphConfig,
    pub problem: ProblemConfig,
    pub noise: NoiseModel,
    pub algorithm: AlgorithmConfig,
    pub run: RunConfig,
    pub sweep: Option<SweepConfig>,
}

const SECTIONS: [&str; 6] = ["graph", "problem", "noise", "algorithm", "run", "sweep"];

fn parse_schedule(sec: &mut Section<'_>, regime: &str) -> Result<ScheduleChoice, ConfigError> {
    if let Some(th) = regime.strip_prefix("suggest:") {
        let theorem = sec.parse_value::<Theorem>("schedule", th)?;
        return Ok(ScheduleChoice::Suggest(theorem));
    }
    let kappa1 = sec.req("kappa1")?;
    let kappa2 = sec.req("kappa2")?;
    let schedule = match regime {
        "constant" => Schedule::Constant { kappa1, kappa2, beta: sec.req("beta")? },
        "corollary1" => Schedule::Corollary1 { kappa1, kappa2, horizon: None },
        "polynomial_T" | "polynomial_t" => Schedule::PolynomialT { kappa1, kappa2, theta: sec.req("theta")?, horizon: None },
        "linear_k" => Schedule::LinearK { kappa0: sec.req("kappa0")?, kappa1, kappa2, t1: sec.req::<Count>("t1")?.0 },
        "custom_power" => Schedule::CustomPower { kappa1, kappa2, step: sec.req("step")?, exponent: sec.req("exponent")? },
        other => {
            return Err(ConfigError::Invalid {
                key: sec.key("schedule"),
                value: other.to_string(),
                reason: "expected constant, corollary1, polynomial_T, linear_k, custom_power or suggest:<theorem>".into(),
            })
        }
    };
    schedule.validate_params().map_err(|e| ConfigError::Invalid {
        key: sec.key("schedule"),
        value: regime.to_string(),
        reason: e.to_string(),
    })?;
    Ok(ScheduleChoice::Explicit(schedule))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw = RawConfig::parse(text)?;
        if let Some(s) = raw.sections.keys().find(|s| !SECTIONS.contains(&s.as_str())) {
            return Err(ConfigError::Unknown(format!("[{s}]")));
        }

        let mut g = Section::new(&raw, "graph");
        let topology: String = g.req("topology")?;
        let source = match topology.as_str() {
            "random" => GraphSource::Random { q: g.req("q")?, seed: g.req::<Count>("seed")?.0 },
            "file" => GraphSource::File(g.req::<PathBuf>("file")?),
            name => GraphSource::Named(g.parse_value::<Topology>("topology", name)?),
        };
        let mut n = g.opt::<Count>("n")?.map(|c| c.0 as usize);
        if n.is_none() {
            match source {
                GraphSource::Named(Topology::Fig1) => n = Some(10),
                GraphSource::File(_) => {}
                _ => return Err(ConfigError::Missing(g.key("n"))),
            }
        }
        g.finish()?;
        let graph = GraphConfig { source, n };

        let mut pr = Section::new(&raw, "problem");
        let kind: String = pr.req("kind")?;
        let psource = match kind.as_str() {
            "fixture" => ProblemSource::Fixture,
            k => ProblemSource::Generated(pr.parse_value::<ProblemKind>("kind", k)?),
        };
        let file = pr.opt::<PathBuf>("file")?;
        if psource == ProblemSource::Fixture && file.is_none() {
            return Err(ConfigError::Missing(pr.key("file")));
        }
        let generated = matches!(psource, ProblemSource::Generated(_));
        let problem = ProblemConfig {
            source: psource,
            file,
            p: if generated { pr.req::<Count>("p")?.0 as usize } else { pr.or::<Count>("p", Count(0))?.0 as usize },
            seed: if generated { pr.req::<Count>("seed")?.0 } else { pr.or::<Count>("seed", Count(0))?.0 },
            rank_deficit: pr.or::<Count>("rank_deficit", Count(0))?.0 as usize,
            rows_per_agent: pr.opt::<Count>("rows_per_agent")?.map(|c| c.0 as usize),
            shared_design: pr.or("shared_design", false)?,
            offset_scale: pr.or("offset_scale", 0.5)?,
            samples_per_agent: pr.or::<Count>("samples_per_agent", Count(50))?.0 as usize,
            lambda: pr.or("lambda", 0.01)?,
            gamma: pr.or("gamma", 0.5)?,
            nu: pr.opt("nu")?,
        };
        pr.finish()?;

        let mut no = Section::new(&raw, "noise");
        let mode: String = no.or("mode", "additive_gaussian".to_string())?;
        let noise = match mode.as_str() {
            "additive_gaussian" => NoiseModel::additive(no.req("sigma2")?),
            "minibatch" => NoiseModel { mode: NoiseMode::Minibatch { batch: no.req::<Count>("batch")?.0 as usize }, sigma2: 0.0 },
            "biased_additive" => NoiseModel::biased(no.req("sigma2")?, no.req("bias")?),
            other => {
                return Err(ConfigError::Invalid {
                    key: no.key("mode"),
                    value: other.into(),
                    reason: "expected additive_gaussian, minibatch or biased_additive".into(),
                })
            }
        };
        if noise.mode == (NoiseMode::Minibatch { batch: 0 }) {
            return Err(ConfigError::Invalid { key: no.key("batch"), value: "0".into(), reason: "must be ≥ 1".into() });
        }
        no.finish()?;

        let mut al = Section::new(&raw, "algorithm");
        let name: AlgName = al.req("name")?;
        let schedule = match al.raw("schedule") {
            Some(regime) => Some(parse_schedule(&mut al, regime)?),
            None if name == AlgName::Pdsgd => return Err(ConfigError::Missing(al.key("schedule"))),
            None => None,
        };
        let step = match al.opt::<f64>("eta")? {
            Some(eta) => Some(match al.opt::<f64>("eta_exponent")? {
                Some(exponent) => StepSize::Power { step: eta, exponent },
                None => StepSize::Constant { eta },
            }),
            None => None,
        };
        if let Some(s) = &step {
            s.validate().map_err(|e| ConfigError::Invalid { key: al.key("eta"), value: format!("{s:?}"), reason: e.to_string() })?;
        }
        let algorithm = AlgorithmConfig {
            name,
            schedule,
            dual_init: al.or("dual_init", DualInitName::Zeros)?,
            step,
            theorem: al.opt("theorem")?,
            c_hat0: al.or("c_hat0", pdsgd_core::tuner::DEFAULT_C_HAT0)?,
            theta: al.or("suggest_theta", pdsgd_core::tuner::DEFAULT_THETA)?,
        };
        if !(algorithm.c_hat0 > 0.0 && algorithm.c_hat0 < 1.0) {
            return Err(ConfigError::Invalid {
                key: al.key("c_hat0"),
                value: algorithm.c_hat0.to_string(),
                reason: "must lie in (0, 1)".into(),
            });
        }
        if name != AlgName::Pdsgd && step.is_none() && raw.sections.get("sweep").is_none_or(|s| !s.contains_key("algorithm")) {
            return Err(ConfigError::Missing(al.key("eta")));
        }
        al.finish()?;

        let mut ru = Section::new(&raw, "run");
        let run = RunConfig {
            horizon: ru.req::<Count>("T")?.0,
            seeds: ru.list::<Count>("seeds")?.ok_or_else(|| ConfigError::Missing(ru.key("seeds")))?.into_iter().map(|c| c.0).collect(),
            record_every: ru.or::<Count>("record_every", Count(1))?.0,
            x0: ru.or("x0", X0Name::Normal)?,
            tail_fraction: ru.or("tail_fraction", pdsgd_core::algorithms::DEFAULT_TAIL_FRACTION)?,
            out: ru.or("out", PathBuf::from("out"))?,
        };
        if run.record_every == 0 {
            return Err(ConfigError::Invalid { key: ru.key("record_every"), value: "0".into(), reason: "must be ≥ 1".into() });
        }
        if !(run.tail_fraction > 0.0 && run.tail_fraction <= 1.0) {
            return Err(ConfigError::Invalid {
                key: ru.key("tail_fraction"),
                value: run.tail_fraction.to_string(),
                reason: "must lie in (0, 1]".into(),
            });
        }
        ru.finish()?;

        let mut sw = Section::new(&raw, "sweep");
        let sweep = if sw.present() {
            let s = SweepConfig {
                n: sw.list::<Count>("n")?.map(|v| v.into_iter().map(|c| c.0 as usize).collect()),
                horizon: sw.list::<Count>("T")?.map(|v| v.into_iter().map(|c| c.0).collect()),
                theta: sw.list("theta")?,
                sigma2: sw.list("sigma2")?,
                algorithm: sw.list("algorithm")?,
                max_runs: sw.or::<Count>("max_runs", Count(DEFAULT_MAX_RUNS as u64))?.0 as usize,
            };
            sw.finish()?;
            Some(s)
        } else {
            None
        };

        Ok(Config { graph, problem, noise, algorithm, run, sweep })
    }

    /// Canonical text with every default made explicit; reparses to an equal
    /// `Config`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let w = &mut s;
        let _ = writeln!(w, "[graph]");
        match &self.graph.source {
            GraphSource::Named(t) => {
                let _ = writeln!(w, "topology = {t}");
            }
            GraphSource::Random { q, seed } => {
                let _ = writeln!(w, "topology = random\nq = {q:?}\nseed = {seed}");
            }
            GraphSource::File(path) => {
                let _ = writeln!(w, "topology = file\nfile = {}", path.display());
            }
        }
        if let Some(n) = self.graph.n {
            let _ = writeln!(w, "n = {n}");
        }

        let p = &self.problem;
        let _ = writeln!(w, "\n[problem]");
        match p.source {
            ProblemSource::Generated(kind) => {
                let _ = writeln!(w, "kind = {kind}");
            }
            ProblemSource::Fixture => {
                let _ = writeln!(w, "kind = fixture");
            }
        }
        if let Some(f) = &p.file {
            let _ = writeln!(w, "file = {}", f.display());
        }
        let _ = writeln!(w, "p = {}\nseed = {}\nrank_deficit = {}", p.p, p.seed, p.rank_deficit);
        if let Some(r) = p.rows_per_agent {
            let _ = writeln!(w, "rows_per_agent = {r}");
        }
        let _ = writeln!(
            w,
            "shared_design = {}\noffset_scale = {:?}\nsamples_per_agent = {}\nlambda = {:?}\ngamma = {:?}",
            p.shared_design, p.offset_scale, p.samples_per_agent, p.lambda, p.gamma
        );
        if let Some(nu) = p.nu {
            let _ = writeln!(w, "nu = {nu:?}");
        }

        let _ = writeln!(w, "\n[noise]");
        match self.noise.mode {
            NoiseMode::AdditiveGaussian => {
                let _ = writeln!(w, "mode = additive_gaussian\nsigma2 = {:?}", self.noise.sigma2);
            }
            NoiseMode::Minibatch { batch } => {
                let _ = writeln!(w, "mode = minibatch\nbatch = {batch}");
            }
            NoiseMode::BiasedAdditive { bias } => {
                let _ = writeln!(w, "mode = biased_additive\nsigma2 = {:?}\nbias = {bias:?}", self.noise.sigma2);
            }
        }

        let a = &self.algorithm;
        let _ = writeln!(w, "\n[algorithm]\nname = {}", a.name);
        match a.schedule {
            Some(ScheduleChoice::Suggest(th)) => {
                let _ = writeln!(w, "schedule = suggest:{th}");
            }
            Some(ScheduleChoice::Explicit(s)) => {
                let _ = writeln!(w, "schedule = {}", s.regime_name());
                let _ = writeln!(w, "kappa1 = {:?}\nkappa2 = {:?}", s.kappa1(), s.kappa2());
                match s {
                    Schedule::Constant { beta, .. } => {
                        let _ = writeln!(w, "beta = {beta:?}");
                    }
                    Schedule::PolynomialT { theta, .. } => {
                        let _ = writeln!(w, "theta = {theta:?}");
                    }
                    Schedule::LinearK { kappa0, t1, .. } => {
                        let _ = writeln!(w, "kappa0 = {kappa0:?}\nt1 = {t1}");
                    }
                    Schedule::CustomPower { step, exponent, .. } => {
                        let _ = writeln!(w, "step = {step:?}\nexponent = {exponent:?}");
                    }
                    Schedule::Corollary1 { .. } => {}
                }
            }
            None => {}
        }
        match a.step {
            Some(StepSize::Constant { eta }) => {
                let _ = writeln!(w, "eta = {eta:?}");
            }
            Some(StepSize::Power { step, exponent }) => {
                let _ = writeln!(w, "eta = {step:?}\neta_exponent = {exponent:?}");
            }
            None => {}
        }
        let dual = match a.dual_init {
            DualInitName::Zeros => "zeros",
            DualInitName::Laplacian => "laplacian",
        };
        let _ = writeln!(w, "dual_init = {dual}");
        if let Some(th) = a.theorem {
            let _ = writeln!(w, "theorem = {th}");
        }
        let _ = writeln!(w, "c_hat0 = {:?}\nsuggest_theta = {:?}", a.c_hat0, a.theta);

        let r = &self.run;
        let seeds: Vec<String> = r.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(
            w,
            "\n[run]\nT = {}\nseeds = {}\nrecord_every = {}\nx0 = {}\ntail_fraction = {:?}\nout = {}",
            r.horizon,
            seeds.join(", "),
            r.record_every,
            r.x0.as_str(),
            r.tail_fraction,
            r.out.display()
        );

        if let Some(sw) = &self.sweep {
            let _ = writeln!(w, "\n[sweep]");
            fn join<T: fmt::Debug>(v: &[T]) -> String {
                v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
            }
            if let Some(v) = &sw.n {
                let _ = writeln!(w, "n = {}", join(v));
            }
            if let Some(v) = &sw.horizon {
                let _ = writeln!(w, "T = {}", join(v));
            }
            if let Some(v) = &sw.theta {
                let _ = writeln!(w, "theta = {}", join(v));
            }
            if let Some(v) = &sw.sigma2 {
                let _ = writeln!(w, "sigma2 = {}", join(v));
            }
            if let Some(v) = &sw.algorithm {
                let names: Vec<&str> = v.iter().map(AlgName::as_str).collect();
                let _ = writeln!(w, "algorithm = {}", names.join(", "));
            }
            let _ = writeln!(w, "max_runs = {}", sw.max_runs);
        }
        s
    }
}
