//! Simulation library for distributed primal-dual stochastic gradient descent.
//!
//! Agents sit on the nodes of a connected undirected graph and jointly minimize
//! `f(x) = (1/n) Σ f_i(x)`, where agent `i` only has access to noisy gradients of
//! its private cost `f_i`. Each iteration an agent exchanges its primal iterate
//! with its neighbours and updates a primal/dual pair:
//!
//! ```text
//! x_i' = x_i - η (α Σ_j L_ij x_j + β v_i + g_i)
//! v_i' = v_i + η β Σ_j L_ij x_j
//! ```
//!
//! The crate is organized as
//!
//! - [`graph`]: topologies, Laplacians, spectra and Metropolis mixing weights,
//! - [`problems`]: sum-structured test costs and stochastic gradient oracles,
//! - [`algorithms`]: the primal-dual recursion, its parameter schedules, the
//!   baselines (C-SGD, D-SGD, D-SGT) and the seeded run harness,
//! - [`tuner`]: admissible-parameter constants, schedule validation and suggestion,
//! - [`metrics`]: consensus/stationarity/optimality metrics, traces, seed
//!   aggregation and rate fitting.

pub mod algorithms;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod problems;
pub mod tuner;

pub use algorithms::{
    run, Algorithm, AlgError, DualInit, InitPolicy, PdState, RunError, RunSpec, Schedule,
    ScheduleError, StepParams, StepSize,
};
pub use graph::{Graph, GraphError, Laplacian, LaplacianSpectrum, MixingMatrix, Topology};
pub use linalg::Stacked;
pub use metrics::{Aggregate, Record, RunMeta, TimeAverages, Trace};
pub use problems::{
    AgentStreams, CompositionParams, LogisticParams, NoiseMode, NoiseModel, Problem, ProblemError, ProblemInfo,
    ProblemKind, QuadraticParams, QuadraticSpec,
};
pub use tuner::{Suggestion, Theorem, TheoremConstants, TunerConfig, ValidationReport};
