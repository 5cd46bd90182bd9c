//! The primal–dual recursion
//!
//! ```text
//! x' = x − η (α L x + β v + g)
//! v' = v + η β L x
//! ```
//!
//! Both updates read the pre-update `x`; `L x` is computed once per step.

use super::{AlgError, StepParams};
use crate::graph::Laplacian;
use crate::linalg::{norm_sq, Stacked};

/// Tolerance on `‖Σ_i v_i0‖` for an explicitly supplied dual initialization.
pub const DUAL_INIT_TOL: f64 = 1e-12;

/// Any entry beyond this magnitude (or non-finite) counts as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e150;

#[derive(Debug, Clone, PartialEq)]
pub enum DualInit {
    /// `v_i0 = 0`.
    Zeros,
    /// `v_i0 = Σ_j L_ij x_j0`.
    Laplacian,
    /// Caller-supplied rows; must sum to zero.
    Explicit(Stacked),
}

impl DualInit {
    pub fn name(&self) -> &'static str {
        match self {
            DualInit::Zeros => "zeros",
            DualInit::Laplacian => "laplacian",
            DualInit::Explicit(_) => "explicit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdState {
    pub x: Stacked,
    pub v: Stacked,
    pub k: u64,
    lx: Stacked,
}

impl PdState {
    pub fn new(x0: Stacked, dual: &DualInit, lap: &Laplacian) -> Result<Self, AlgError> {
        let (n, p) = (x0.rows(), x0.cols());
        if lap.n() != n {
            return Err(AlgError::Dimension { expected: lap.n(), got: n });
        }
        let mut lx = Stacked::zeros(n, p);
        let v = match dual {
            DualInit::Zeros => Stacked::zeros(n, p),
            DualInit::Laplacian => {
                lap.apply(&x0, &mut lx);
                lx.clone()
            }
            DualInit::Explicit(v0) => {
                if (v0.rows(), v0.cols()) != (n, p) {
                    return Err(AlgError::Dimension { expected: n * p, got: v0.rows() * v0.cols() });
                }
                let norm = norm_sq(&v0.column_sums()).sqrt();
                if !(norm <= DUAL_INIT_TOL) {
                    return Err(AlgError::DualSum { norm });
                }
                v0.clone()
            }
        };
        Ok(Self { x: x0, v, k: 0, lx })
    }

    /// One step with stochastic gradients `g` sampled at `self.x`.
    pub fn step(&mut self, lap: &Laplacian, params: StepParams, g: &Stacked) -> Result<(), AlgError> {
        let StepParams { alpha, beta, eta } = params;
        lap.apply(&self.x, &mut self.lx);
        let eb = eta * beta;
        let x = self.x.as_mut_slice();
        let v = self.v.as_mut_slice();
        let lx = self.lx.as_slice();
        let g = g.as_slice();
        for idx in 0..x.len() {
            x[idx] -= eta * (alpha * lx[idx] + beta * v[idx] + g[idx]);
            v[idx] += eb * lx[idx];
        }
        self.k += 1;
        if !self.x.is_bounded(DIVERGENCE_LIMIT) || !self.v.is_bounded(DIVERGENCE_LIMIT) {
            return Err(AlgError::Diverged { k: self.k });
        }
        Ok(())
    }

    /// `Σ_i v_i`.
    pub fn dual_sum(&self) -> Vec<f64> {
        self.v.column_sums()
    }
}
