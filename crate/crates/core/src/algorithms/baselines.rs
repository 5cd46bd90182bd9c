//! Averaging baselines: centralized SGD, distributed SGD and distributed
//! stochastic gradient tracking.

use super::primal_dual::DIVERGENCE_LIMIT;
use super::AlgError;
use crate::graph::MixingMatrix;
use crate::linalg::Stacked;

fn guard(x: &Stacked, k: u64) -> Result<(), AlgError> {
    if x.is_bounded(DIVERGENCE_LIMIT) {
        Ok(())
    } else {
        Err(AlgError::Diverged { k })
    }
}

/// Centralized SGD on a single iterate held in every row:
/// `x' = x̄ − η (1/n) Σ_i g_i`.
pub fn csgd_step(x: &mut Stacked, eta: f64, g: &Stacked, k: u64) -> Result<(), AlgError> {
    let mut next = x.mean_row();
    let gbar = g.mean_row();
    next.iter_mut().zip(&gbar).for_each(|(xv, gv)| *xv -= eta * gv);
    for i in 0..x.rows() {
        x.row_mut(i).copy_from_slice(&next);
    }
    guard(x, k + 1)
}

/// Distributed SGD: `x_i' = Σ_j W_ij x_j − η g_i`.
pub fn dsgd_step(
    x: &mut Stacked,
    w: &MixingMatrix,
    eta: f64,
    g: &Stacked,
    scratch: &mut Stacked,
    k: u64,
) -> Result<(), AlgError> {
    w.apply(x, scratch);
    let out = x.as_mut_slice();
    for ((o, s), gv) in out.iter_mut().zip(scratch.as_slice()).zip(g.as_slice()) {
        *o = s - eta * gv;
    }
    guard(x, k + 1)
}

/// Gradient tracking: `x' = W x − η y`, then `y' = W y + g(x') − g(x)`, with
/// `y_0 = g_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DsgtState {
    pub x: Stacked,
    pub y: Stacked,
    pub g_prev: Stacked,
    scratch: Stacked,
}

impl DsgtState {
    pub fn new(x0: Stacked, g0: Stacked) -> Self {
        let scratch = Stacked::zeros(x0.rows(), x0.cols());
        Self { x: x0, y: g0.clone(), g_prev: g0, scratch }
    }

    /// Primal half-step `x ← W x − η y`.
    pub fn advance(&mut self, w: &MixingMatrix, eta: f64, k: u64) -> Result<(), AlgError> {
        w.apply(&self.x, &mut self.scratch);
        for ((o, s), yv) in self.x.as_mut_slice().iter_mut().zip(self.scratch.as_slice()).zip(self.y.as_slice()) {
            *o = s - eta * yv;
        }
        guard(&self.x, k + 1)
    }

    /// Tracker update with the gradients sampled at the new `x`.
    pub fn track(&mut self, w: &MixingMatrix, g_new: &Stacked, k: u64) -> Result<(), AlgError> {
        w.apply(&self.y, &mut self.scratch);
        let y = self.y.as_mut_slice();
        let iter = self.scratch.as_slice().iter().zip(g_new.as_slice()).zip(self.g_prev.as_slice());
        for (yv, ((wy, gn), gp)) in y.iter_mut().zip(iter) {
            *yv = wy + gn - gp;
        }
        self.g_prev.as_mut_slice().copy_from_slice(g_new.as_slice());
        guard(&self.y, k + 1)
    }
}
