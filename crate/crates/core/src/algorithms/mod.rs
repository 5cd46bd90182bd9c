//! The primal–dual recursion, its schedules, the averaging baselines and the
//! seeded run harness.

pub mod baselines;
pub mod primal_dual;
mod run;
pub mod schedule;

use std::fmt;

use thiserror::Error;

pub use baselines::{csgd_step, dsgd_step, DsgtState};
pub use primal_dual::{DualInit, PdState, DIVERGENCE_LIMIT, DUAL_INIT_TOL};
pub use run::{initial_iterate, run, InitPolicy, RunError, RunSpec, DEFAULT_TAIL_FRACTION};
pub use schedule::{Schedule, ScheduleError, StepParams, StepSize};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgError {
    #[error("initial dual rows sum to a vector of norm {norm:e}, expected 0")]
    DualSum { norm: f64 },
    #[error("iterates diverged (non-finite or above 1e150) at iteration {k}")]
    Diverged { k: u64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    PrimalDual { schedule: Schedule, dual_init: DualInit },
    Csgd { step: StepSize },
    Dsgd { step: StepSize },
    Dsgt { step: StepSize },
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::PrimalDual { .. } => "pdsgd",
            Algorithm::Csgd { .. } => "csgd",
            Algorithm::Dsgd { .. } => "dsgd",
            Algorithm::Dsgt { .. } => "dsgt",
        }
    }

    /// Whether agents communicate over the graph (and so need it connected).
    pub fn is_distributed(&self) -> bool {
        !matches!(self, Algorithm::Csgd { .. })
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
