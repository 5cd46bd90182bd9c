//! Stochastic gradient oracles and per-agent random streams.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Problem, ProblemError, ProblemKind};
use crate::linalg::Stacked;

/// Stream id reserved for the initial-iterate draw; agents use `0..n`.
pub const X0_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum NoiseMode {
    /// `g_i = ∇f_i(x_i) + ζ_i`, `ζ_i ~ N(0, (σ²/p) I)`.
    AdditiveGaussian,
    /// Average of `batch` single-point gradients drawn uniformly with
    /// replacement from the agent's data.
    Minibatch { batch: usize },
    /// Additive Gaussian noise plus the fixed vector `bias · 𝟙/√p`.
    BiasedAdditive { bias: f64 },
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseMode::AdditiveGaussian => f.write_str("additive_gaussian"),
            NoiseMode::Minibatch { batch } => write!(f, "minibatch(batch={batch})"),
            NoiseMode::BiasedAdditive { bias } => write!(f, "biased_additive(bias={bias})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub mode: NoiseMode,
    /// Per-agent, per-draw variance `E‖ζ_i‖²` of the additive part.
    pub sigma2: f64,
}

impl NoiseModel {
    pub fn additive(sigma2: f64) -> Self {
        Self { mode: NoiseMode::AdditiveGaussian, sigma2 }
    }

    pub fn noiseless() -> Self {
        Self::additive(0.0)
    }

    pub fn minibatch(batch: usize) -> Self {
        Self { mode: NoiseMode::Minibatch { batch }, sigma2: 0.0 }
    }

    pub fn biased(sigma2: f64, bias: f64) -> Self {
        Self { mode: NoiseMode::BiasedAdditive { bias }, sigma2 }
    }

    pub fn bias_norm(&self) -> f64 {
        match self.mode {
            NoiseMode::BiasedAdditive { bias } => bias,
            _ => 0.0,
        }
    }

    /// The fixed offset added to every agent's sample.
    pub fn bias_vector(&self, p: usize) -> Vec<f64> {
        vec![self.bias_norm() / (p as f64).sqrt(); p]
    }

    pub fn is_unbiased(&self) -> bool {
        !matches!(self.mode, NoiseMode::BiasedAdditive { bias } if bias != 0.0)
    }

    /// True when no randomness enters the samples.
    pub fn is_noiseless(&self) -> bool {
        match self.mode {
            NoiseMode::Minibatch { .. } => false,
            _ => self.sigma2 == 0.0,
        }
    }

    pub fn check_compatible(&self, kind: ProblemKind) -> Result<(), ProblemError> {
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(ProblemError::InvalidParameter(format!("sigma2 must be ≥ 0, got {}", self.sigma2)));
        }
        match self.mode {
            NoiseMode::Minibatch { batch } => {
                if kind == ProblemKind::PlComposition {
                    return Err(ProblemError::IncompatibleNoise { mode: self.mode.to_string(), kind });
                }
                if batch == 0 {
                    return Err(ProblemError::InvalidParameter("minibatch size must be ≥ 1".into()));
                }
            }
            NoiseMode::BiasedAdditive { bias } if !(bias >= 0.0 && bias.is_finite()) => {
                return Err(ProblemError::InvalidParameter(format!("bias must be ≥ 0, got {bias}")));
            }
            _ => {}
        }
        Ok(())
    }
}

/// One independent ChaCha stream per agent, all derived from one seed.
#[derive(Debug, Clone)]
pub struct AgentStreams {
    rngs: Vec<ChaCha8Rng>,
}

impl AgentStreams {
    pub fn new(seed: u64, n: usize) -> Self {
        let rngs = (0..n)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                rng
            })
            .collect();
        Self { rngs }
    }

    pub fn len(&self) -> usize {
        self.rngs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rngs.is_empty()
    }

    pub fn agent(&mut self, i: usize) -> &mut ChaCha8Rng {
        &mut self.rngs[i]
    }
}

pub(super) fn sample(problem: &Problem, noise: &NoiseModel, x: &Stacked, streams: &mut AgentStreams, out: &mut Stacked) {
    let p = problem.p();
    let std = (noise.sigma2 / p as f64).sqrt();
    let bias = noise.bias_vector(p);
    let mut tmp = vec![0.0; p];
    for i in 0..problem.n() {
        let rng = streams.agent(i);
        let xi = x.row(i);
        let gi = out.row_mut(i);
        match noise.mode {
            NoiseMode::Minibatch { batch } => {
                let m = problem.local_points(i);
                gi.iter_mut().for_each(|v| *v = 0.0);
                for _ in 0..batch {
                    let j = rng.random_range(0..m);
                    problem.point_gradient_into(i, j, xi, &mut tmp);
                    gi.iter_mut().zip(&tmp).for_each(|(g, t)| *g += t);
                }
                let inv = 1.0 / batch as f64;
                gi.iter_mut().for_each(|v| *v *= inv);
            }
            NoiseMode::AdditiveGaussian | NoiseMode::BiasedAdditive { .. } => {
                problem.local_gradient_into(i, xi, gi);
                if std > 0.0 {
                    for g in gi.iter_mut() {
                        *g += std * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                if let NoiseMode::BiasedAdditive { .. } = noise.mode {
                    gi.iter_mut().zip(&bias).for_each(|(g, b)| *g += b);
                }
            }
        }
    }
}
