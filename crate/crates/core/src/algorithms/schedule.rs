//! Parameter sequences `(α_k, β_k, η_k)`. Every regime keeps the coupling
//! `α_k = κ₁ β_k`, `η_k = κ₂ / β_k`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("schedule {0} needs the total horizon T")]
    MissingHorizon(&'static str),
    #[error("iteration {k} exceeds the horizon T = {horizon}")]
    BeyondHorizon { k: u64, horizon: u64 },
    #[error("schedule parameter {name} = {value} must be {requirement}")]
    Parameter { name: &'static str, value: f64, requirement: &'static str },
    #[error("schedule produced non-positive or non-finite beta {0}")]
    BadBeta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "regime")]
pub enum Schedule {
    /// `β_k = β`.
    Constant { kappa1: f64, kappa2: f64, beta: f64 },
    /// `β = κ₂ √T / √n`, then constant.
    Corollary1 { kappa1: f64, kappa2: f64, horizon: Option<u64> },
    /// `β_k = κ₂ (T + 1)^θ` for all `k ≤ T`.
    PolynomialT { kappa1: f64, kappa2: f64, theta: f64, horizon: Option<u64> },
    /// `β_k = κ₀ (k + t₁)`.
    LinearK { kappa0: f64, kappa1: f64, kappa2: f64, t1: u64 },
    /// `η_k = step / (k + 1)^exponent`, `β_k = κ₂ / η_k`. Not a theorem regime.
    CustomPower { kappa1: f64, kappa2: f64, step: f64, exponent: f64 },
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.regime_name())
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), ScheduleError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ScheduleError::Parameter { name, value, requirement: "finite and > 0" })
    }
}

fn horizon_checked(k: u64, name: &'static str, horizon: Option<u64>) -> Result<u64, ScheduleError> {
    let t = horizon.ok_or(ScheduleError::MissingHorizon(name))?;
    if k > t {
        return Err(ScheduleError::BeyondHorizon { k, horizon: t });
    }
    Ok(t)
}

impl Schedule {
    pub fn regime_name(&self) -> &'static str {
        match self {
            Schedule::Constant { .. } => "constant",
            Schedule::Corollary1 { .. } => "corollary1",
            Schedule::PolynomialT { .. } => "polynomial_T",
            Schedule::LinearK { .. } => "linear_k",
            Schedule::CustomPower { .. } => "custom_power",
        }
    }

    pub fn kappa1(&self) -> f64 {
        match *self {
            Schedule::Constant { kappa1, .. }
            | Schedule::Corollary1 { kappa1, .. }
            | Schedule::PolynomialT { kappa1, .. }
            | Schedule::LinearK { kappa1, .. }
            | Schedule::CustomPower { kappa1, .. } => kappa1,
        }
    }

    pub fn kappa2(&self) -> f64 {
        match *self {
            Schedule::Constant { kappa2, .. }
            | Schedule::Corollary1 { kappa2, .. }
            | Schedule::PolynomialT { kappa2, .. }
            | Schedule::LinearK { kappa2, .. }
            | Schedule::CustomPower { kappa2, .. } => kappa2,
        }
    }

    pub fn horizon(&self) -> Option<u64> {
        match *self {
            Schedule::Corollary1 { horizon, .. } | Schedule::PolynomialT { horizon, .. } => horizon,
            _ => None,
        }
    }

    /// Fills in the horizon of T-dependent regimes.
    pub fn with_horizon(mut self, t: u64) -> Self {
        match &mut self {
            Schedule::Corollary1 { horizon, .. } | Schedule::PolynomialT { horizon, .. } => *horizon = Some(t),
            _ => {}
        }
        self
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Schedule::Constant { .. } | Schedule::Corollary1 { .. } | Schedule::PolynomialT { .. })
    }

    pub fn validate_params(&self) -> Result<(), ScheduleError> {
        positive("kappa1", self.kappa1())?;
        positive("kappa2", self.kappa2())?;
        match *self {
            Schedule::Constant { beta, .. } => positive("beta", beta),
            Schedule::Corollary1 { .. } => Ok(()),
            Schedule::PolynomialT { theta, .. } => {
                if theta > 0.0 && theta < 1.0 {
                    Ok(())
                } else {
                    Err(ScheduleError::Parameter { name: "theta", value: theta, requirement: "in (0, 1)" })
                }
            }
            Schedule::LinearK { kappa0, t1, .. } => {
                positive("kappa0", kappa0)?;
                positive("t1", t1 as f64)
            }
            Schedule::CustomPower { step, exponent, .. } => {
                positive("step", step)?;
                if exponent >= 0.0 && exponent.is_finite() {
                    Ok(())
                } else {
                    Err(ScheduleError::Parameter { name: "exponent", value: exponent, requirement: "finite and ≥ 0" })
                }
            }
        }
    }

    /// `β_k` for `n` agents.
    pub fn beta(&self, k: u64, n: usize) -> Result<f64, ScheduleError> {
        let beta = match *self {
            Schedule::Constant { beta, .. } => beta,
            Schedule::Corollary1 { kappa2, horizon, .. } => {
                let t = horizon_checked(k, "corollary1", horizon)?;
                kappa2 * (t as f64).sqrt() / (n as f64).sqrt()
            }
            Schedule::PolynomialT { kappa2, theta, horizon, .. } => {
                let t = horizon_checked(k, "polynomial_T", horizon)?;
                kappa2 * ((t + 1) as f64).powf(theta)
            }
            Schedule::LinearK { kappa0, t1, .. } => kappa0 * (k + t1) as f64,
            Schedule::CustomPower { kappa2, step, exponent, .. } => kappa2 * ((k + 1) as f64).powf(exponent) / step,
        };
        if beta > 0.0 && beta.is_finite() {
            Ok(beta)
        } else {
            Err(ScheduleError::BadBeta(beta))
        }
    }

    /// `(α_k, β_k, η_k)` at iteration `k` for `n` agents.
    pub fn eval(&self, k: u64, n: usize) -> Result<StepParams, ScheduleError> {
        let beta = self.beta(k, n)?;
        Ok(StepParams { alpha: self.kappa1() * beta, beta, eta: self.kappa2() / beta })
    }
}

/// Step sizes for the averaging baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StepSize {
    Constant { eta: f64 },
    /// `η_k = step / (k + 1)^exponent`.
    Power { step: f64, exponent: f64 },
}

impl StepSize {
    pub fn eta(&self, k: u64) -> f64 {
        match *self {
            StepSize::Constant { eta } => eta,
            StepSize::Power { step, exponent } => step / ((k + 1) as f64).powf(exponent),
        }
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        match *self {
            StepSize::Constant { eta } => positive("step", eta),
            StepSize::Power { step, exponent } => {
                positive("step", step)?;
                if exponent >= 0.0 && exponent.is_finite() {
                    Ok(())
                } else {
                    Err(ScheduleError::Parameter { name: "exponent", value: exponent, requirement: "finite and ≥ 0" })
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_substitution() {
        let s = Schedule::Constant { kappa1: 2.0, kappa2: 0.1, beta: 10.0 };
        for k in [0, 7, 1_000_000] {
            let p = s.eval(k, 3).unwrap();
            assert_eq!((p.alpha, p.beta), (20.0, 10.0));
            assert!((p.eta - 0.01).abs() < 1e-18);
        }
    }

    #[test]
    fn corollary1_beta() {
        let s = Schedule::Corollary1 { kappa1: 2.0, kappa2: 0.1, horizon: Some(100) };
        assert!((s.eval(0, 4).unwrap().beta - 0.5).abs() < 1e-15);
        assert!(matches!(s.eval(101, 4), Err(ScheduleError::BeyondHorizon { .. })));
        let no_t = Schedule::Corollary1 { kappa1: 2.0, kappa2: 0.1, horizon: None };
        assert_eq!(no_t.eval(0, 4), Err(ScheduleError::MissingHorizon("corollary1")));
    }

    #[test]
    fn linear_k_start() {
        let s = Schedule::LinearK { kappa0: 0.5, kappa1: 2.0, kappa2: 0.3, t1: 20 };
        let p = s.eval(0, 1).unwrap();
        assert_eq!(p.beta, 10.0);
        assert!((p.eta - 0.03).abs() < 1e-17);
        assert_eq!(s.eval(10, 1).unwrap().beta, 15.0);
    }

    #[test]
    fn polynomial_is_flat_in_k() {
        let s = Schedule::PolynomialT { kappa1: 2.0, kappa2: 0.5, theta: 0.5, horizon: Some(99) };
        let b0 = s.eval(0, 5).unwrap().beta;
        assert!((b0 - 5.0).abs() < 1e-14);
        assert_eq!(s.eval(99, 5).unwrap().beta, b0);
    }

    #[test]
    fn custom_power_keeps_coupling() {
        let s = Schedule::CustomPower { kappa1: 3.0, kappa2: 0.2, step: 0.08, exponent: 0.5 };
        let p = s.eval(3, 2).unwrap();
        assert!((p.eta - 0.04).abs() < 1e-15);
        assert!((p.alpha - 3.0 * p.beta).abs() < 1e-12);
    }

    #[test]
    fn bad_parameters() {
        assert!(Schedule::PolynomialT { kappa1: 1.0, kappa2: 1.0, theta: 1.0, horizon: Some(3) }.validate_params().is_err());
        assert!(Schedule::Constant { kappa1: 1.0, kappa2: -1.0, beta: 1.0 }.validate_params().is_err());
        assert!(Schedule::LinearK { kappa0: 1.0, kappa1: 1.0, kappa2: 1.0, t1: 0 }.validate_params().is_err());
    }
}
