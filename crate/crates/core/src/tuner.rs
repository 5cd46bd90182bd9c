//! Admissible-parameter constants, schedule validation and schedule
//! suggestion for each convergence regime.
//!
//! Theorem ids: `theorem1` (constant β, general smooth case), `corollary1`
//! (β = κ₂√T/√n), `theorem2` (β = κ₂(T+1)^θ, P–Ł), `theorem3`
//! (β_k = κ₀(k+t₁), P–Ł with known ν), `theorem4`/`theorem5` (constant β,
//! P–Ł, unbiased noise) and `theorem6` (constant β, biased noise).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{Schedule, ScheduleError};
use crate::graph::LaplacianSpectrum;
use crate::problems::ProblemInfo;

/// Default `ĉ₀ ∈ (0, 1)` for the κ₀ interval of Theorem 3.
pub const DEFAULT_C_HAT0: f64 = 0.5;
/// Inflation applied to estimated smoothness constants.
pub const LF_INFLATION: f64 = 1.05;
/// Name of Corollary 1's horizon hypothesis in reports.
pub const COR1_HORIZON_CONDITION: &str = "T > max{n(c₀/κ₂)², n³}";
/// Default θ proposed for Theorem-2 suggestions.
pub const DEFAULT_THETA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    Theorem1,
    Corollary1,
    Theorem2,
    Theorem3,
    Theorem4,
    Theorem5,
    Theorem6,
}

impl Theorem {
    pub const ALL: [Theorem; 7] = [
        Theorem::Theorem1,
        Theorem::Corollary1,
        Theorem::Theorem2,
        Theorem::Theorem3,
        Theorem::Theorem4,
        Theorem::Theorem5,
        Theorem::Theorem6,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Theorem::Theorem1 => "theorem1",
            Theorem::Corollary1 => "corollary1",
            Theorem::Theorem2 => "theorem2",
            Theorem::Theorem3 => "theorem3",
            Theorem::Theorem4 => "theorem4",
            Theorem::Theorem5 => "theorem5",
            Theorem::Theorem6 => "theorem6",
        }
    }

    /// Whether the theorem's hypotheses involve the total horizon `T`.
    pub fn needs_horizon(&self) -> bool {
        matches!(self, Theorem::Corollary1 | Theorem::Theorem2)
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Theorem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        Theorem::ALL
            .iter()
            .copied()
            .find(|th| th.id() == t)
            .or(match t.as_str() {
                "thm1" => Some(Theorem::Theorem1),
                "cor1" => Some(Theorem::Corollary1),
                "thm2" => Some(Theorem::Theorem2),
                "thm3" => Some(Theorem::Theorem3),
                "thm4" => Some(Theorem::Theorem4),
                "thm5" => Some(Theorem::Theorem5),
                "thm6" => Some(Theorem::Theorem6),
                _ => None,
            })
            .ok_or_else(|| format!("unknown theorem '{s}'"))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TunerError {
    #[error("{0} requires the P–Ł constant ν, which the problem does not provide")]
    MissingNu(Theorem),
    #[error("{0} requires the total horizon T")]
    MissingHorizon(Theorem),
    #[error("constant formulas produced a non-finite value: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunerConfig {
    pub c_hat0: f64,
    pub lf_inflation: f64,
    /// Replaces the problem's ν when set.
    pub nu_override: Option<f64>,
    /// θ proposed for Theorem-2 suggestions when admissible.
    pub theta: f64,
}

impl Default for TunerConfig {
    fn default() -> Self {
        Self { c_hat0: DEFAULT_C_HAT0, lf_inflation: LF_INFLATION, nu_override: None, theta: DEFAULT_THETA }
    }
}

impl TunerConfig {
    /// `L_f` as used in every bound: inflated when the problem reports it as
    /// an estimate.
    pub fn effective_lf(&self, info: &ProblemInfo) -> f64 {
        if info.lf_estimated {
            info.l_f * self.lf_inflation
        } else {
            info.l_f
        }
    }

    pub fn nu(&self, info: &ProblemInfo) -> Option<f64> {
        self.nu_override.or(info.nu)
    }
}

/// Core tuning constants (functions of the spectrum, `L_f`, κ₁, κ₂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    pub rho: f64,
    pub rho2: f64,
    pub rho_l2: f64,
    pub l_f: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub kappa4: f64,
    pub kappa5: f64,
    pub kappa6: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub eps4: f64,
    pub eps5: f64,
    pub eps6: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub eps6_breve: f64,
    pub c_breve0: f64,
}

/// Additional constants for the linearly growing schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thm3Constants {
    pub nu: f64,
    pub kappa0: f64,
    pub t1: f64,
    pub c_hat0: f64,
    pub eps8: f64,
    pub eps9: f64,
    pub eps10: f64,
    pub eps11: f64,
    pub eps12: f64,
    pub eps13: f64,
    pub eps14: Option<f64>,
    pub eps15: f64,
    pub eps16: Option<f64>,
    pub c_tilde0: f64,
    pub c_hat2: f64,
    pub c_hat3: f64,
    /// `ĉ₀ ν κ₂ / 4`, inclusive lower end of the κ₀ interval.
    pub kappa0_min: f64,
    /// `ν κ₂ / 4`, exclusive upper end of the κ₀ interval.
    pub kappa0_max: f64,
}

pub fn constants_thm1(spec: &LaplacianSpectrum, l_f: f64, kappa1: f64, kappa2: f64) -> TheoremConstants {
    let (rho, rho2, rho_l2) = (spec.rho, spec.rho2, spec.rho_l2);
    let lf2 = l_f * l_f;
    let eps1 = (kappa1 - 1.0) * rho2 - 1.0;
    let eps2 = rho + (2.0 * kappa1 * kappa1 + 1.0) * rho_l2 + 1.0;
    let eps3 = eps1 * kappa2 - eps2 * kappa2 * kappa2;
    let eps4 = 0.5 * (kappa2 - 5.0 * kappa2 * kappa2);
    let kappa3 = 1.0 / rho2 + kappa1 + 1.0;
    let kappa4 = 1.0 / rho2 + kappa1 + 1.5;
    let kappa5 = 0.5 * (kappa1 + 1.0) + 1.0 / (2.0 * rho2);
    let kappa6 = (1.0 / (2.0 * rho)).min((kappa1 - 1.0) / (2.0 * kappa1));
    let eps6 = (0.5 * (2.0 + 3.0 * lf2)).max(kappa3);
    let eps5 = l_f + kappa3 * lf2 / (kappa2 * eps6) + 2.0 * kappa4 * lf2 / (eps6 * eps6);
    let c0 = (4.0 * kappa2 * eps5).max(eps6);
    let c1 = 1.0 / rho2 + 1.0;
    let c2 = (eps1 / eps2).min(0.2);
    let eps6_breve = (1.0 + 3.0 * lf2).max(kappa3);
    let c_breve0 = (4.0 * kappa2 * eps5).max(eps6_breve);
    TheoremConstants {
        rho,
        rho2,
        rho_l2,
        l_f,
        kappa1,
        kappa2,
        kappa3,
        kappa4,
        kappa5,
        kappa6,
        eps1,
        eps2,
        eps3,
        eps4,
        eps5,
        eps6,
        c0,
        c1,
        c2,
        eps6_breve,
        c_breve0,
    }
}

/// `c₂(κ₁)`; independent of κ₂.
pub fn c2_of(spec: &LaplacianSpectrum, kappa1: f64) -> f64 {
    constants_thm1(spec, 1.0, kappa1, 1.0).c2
}

#[allow(clippy::too_many_arguments)]
pub fn constants_thm3(
    spec: &LaplacianSpectrum,
    l_f: f64,
    nu: Option<f64>,
    kappa0: f64,
    kappa1: f64,
    kappa2: f64,
    t1: f64,
    c_hat0: f64,
    sigma2: Option<f64>,
    sigma_tilde2: Option<f64>,
) -> Result<(TheoremConstants, Thm3Constants), TunerError> {
    let nu = nu.ok_or(TunerError::MissingNu(Theorem::Theorem3))?;
    let b = constants_thm1(spec, l_f, kappa1, kappa2);
    let (k0, k1, k2) = (kappa0, kappa1, kappa2);
    let (k3, k4, k5) = (b.kappa3, b.kappa4, b.kappa5);
    let lf2 = l_f * l_f;
    let eps8 = k1 * b.rho2 - 1.0;
    let eps9 = 0.5 * (3.0 * k1 + 2.0) * k1 * b.rho_l2 + b.rho + 1.0;
    let eps10 = k2 * (k3 - 1.0) + k1 * k2 + k3 - 1.0 + 3.0 * k2 * k2;
    let eps11 = k2 * l_f + (2.0 * k3 - 1.0 + k2 * (10.0 * k3 - 4.0)) * lf2;
    let eps12 = 3.0
        + l_f
        + k3 * lf2 / (k0 * k2 * t1)
        + 2.0 * k4 * lf2 / (k0 * k0 * t1 * t1)
        + (2.0 + 2.0 * k3 * lf2) / (k0 * t1 * t1)
        + (k3 - 1.0) * lf2 / (k0 * k0 * k2 * t1.powi(3))
        + (k3 - 1.0) * lf2 / (k0 * k0 * t1.powi(4)) * (2.0 / k0 + 2.0);
    let eps13 = k0 * k3 / (k2 * k2) + (k3 - 1.0) / (k2 * k2 * t1 * t1);
    let eps14 = match (sigma2, sigma_tilde2) {
        (Some(s), Some(st)) => Some(eps12 * s + eps13 * st),
        _ => None,
    };
    let eps15 = (b.eps3 * k0 * t1 / k2).min(b.eps4 * k0 * t1 / (2.0 * k2)).min(nu / 8.0) / k5;
    let eps16 = sigma2.map(|s| 4.0 * l_f * s * k2 * k2 / (k0 * k0 * (nu * k2 / (2.0 * k0) - 1.0)));
    let c_tilde0 = (4.0 * eps11).max(b.eps6).max(eps10 / b.eps4);
    let c_hat2 = (b.eps1 / b.eps2).min(eps8 / eps9).min(0.2);
    let c_hat3 = (c_tilde0 / k0)
        .max(8.0 * l_f * k3 / (nu * k2))
        .max(16.0 * l_f * (k3 - 1.0) / (nu * k0 * k2));
    Ok((
        b,
        Thm3Constants {
            nu,
            kappa0,
            t1,
            c_hat0,
            eps8,
            eps9,
            eps10,
            eps11,
            eps12,
            eps13,
            eps14,
            eps15,
            eps16,
            c_tilde0,
            c_hat2,
            c_hat3,
            kappa0_min: c_hat0 * nu * k2 / 4.0,
            kappa0_max: nu * k2 / 4.0,
        },
    ))
}

/// `ε₇ = (1/κ₅) min{ε₃, ε₄, ν/(2(T+1)^θ)}`.
pub fn eps7(c: &TheoremConstants, nu: f64, horizon: u64, theta: f64) -> f64 {
    c.eps3.min(c.eps4).min(nu / (2.0 * ((horizon + 1) as f64).powf(theta))) / c.kappa5
}

/// Linear-rate factor `ε = (1/κ₅) min{ε₃/η, ε₄/η, ν/2}` of the constant regimes.
pub fn eps_linear(c: &TheoremConstants, eta: f64, nu: f64) -> f64 {
    (c.eps3 / eta).min(c.eps4 / eta).min(nu / 2.0) / c.kappa5
}

/// Noise-floor coefficient `c₅ = (ε₅ + 3n)/(n ε κ₆)`.
pub fn c5(c: &TheoremConstants, eps: f64, n: usize) -> f64 {
    (c.eps5 + 3.0 * n as f64) / (n as f64 * eps * c.kappa6)
}

/// Biased-noise floor coefficient `c̆₅ = (3 + 5η)/(ε κ₆)`.
pub fn c5_breve(c: &TheoremConstants, eps: f64, eta: f64) -> f64 {
    (3.0 + 5.0 * eta) / (eps * c.kappa6)
}

/// One checked hypothesis. `bound` and `value` are NaN for structural checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Condition {
    pub theorem: Theorem,
    pub condition: String,
    #[serde(deserialize_with = "nan_if_null")]
    pub bound: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub value: f64,
    pub pass: bool,
}

// NaN is written as `null` by JSON serializers.
fn nan_if_null<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn same_f64(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

impl PartialEq for Condition {
    fn eq(&self, o: &Self) -> bool {
        self.theorem == o.theorem
            && self.condition == o.condition
            && same_f64(self.bound, o.bound)
            && same_f64(self.value, o.value)
            && self.pass == o.pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub theorem: Theorem,
    pub pass: bool,
    pub conditions: Vec<Condition>,
    pub constants: Option<TheoremConstants>,
    pub thm3: Option<Thm3Constants>,
    /// Informational quantities (rate factors, noise-floor coefficients).
    pub extras: Vec<(String, f64)>,
}

impl ValidationReport {
    pub fn violations(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.pass)
    }

    /// One JSON object per condition: `theorem, condition, bound, value, pass`.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for c in &self.conditions {
            let obj = serde_json::json!({
                "theorem": c.theorem.id(),
                "condition": c.condition,
                "bound": finite_or_null(c.bound),
                "value": finite_or_null(c.value),
                "pass": c.pass,
            });
            out.push_str(&obj.to_string());
            out.push('\n');
        }
        out
    }
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::Value::Null
    }
}

struct Checker {
    theorem: Theorem,
    conditions: Vec<Condition>,
}

impl Checker {
    fn push(&mut self, condition: &str, bound: f64, value: f64, pass: bool) {
        self.conditions.push(Condition { theorem: self.theorem, condition: condition.to_string(), bound, value, pass });
    }

    fn greater(&mut self, condition: &str, value: f64, bound: f64) {
        self.push(condition, bound, value, value > bound);
    }

    fn at_least(&mut self, condition: &str, value: f64, bound: f64) {
        self.push(condition, bound, value, value >= bound);
    }

    fn less(&mut self, condition: &str, value: f64, bound: f64) {
        self.push(condition, bound, value, value < bound);
    }

    fn regime(&mut self, expected: &str, ok: bool) {
        self.push(&format!("schedule regime is {expected}"), f64::NAN, f64::NAN, ok);
    }

    fn kappas(&mut self, c: &TheoremConstants, c2_bound: f64, c2_name: &str) {
        self.greater("κ₁ > c₁", c.kappa1, c.c1);
        self.greater("κ₂ > 0", c.kappa2, 0.0);
        self.less(&format!("κ₂ < {c2_name}"), c.kappa2, c2_bound);
    }
}

fn check_finite(c: &TheoremConstants) -> Result<(), TunerError> {
    let vals = [c.c0, c.c1, c.c2, c.eps1, c.eps2, c.eps5, c.eps6, c.c_breve0];
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(TunerError::NonFinite(format!("{c:?}")))
    }
}

/// Checks every hypothesis of `theorem` for `schedule` on a graph with the
/// given spectrum and `n` agents. Violations are data; only missing inputs
/// (ν for Theorem 3, T for horizon-dependent regimes) are errors.
pub fn validate(
    schedule: &Schedule,
    spectrum: &LaplacianSpectrum,
    n: usize,
    info: &ProblemInfo,
    theorem: Theorem,
    cfg: &TunerConfig,
) -> Result<ValidationReport, TunerError> {
    let l_f = cfg.effective_lf(info);
    let nu = cfg.nu(info);
    let (k1, k2) = (schedule.kappa1(), schedule.kappa2());
    let mut chk = Checker { theorem, conditions: Vec::new() };
    let mut extras = Vec::new();
    let mut thm3 = None;
    let constants;
    match theorem {
        Theorem::Theorem1 | Theorem::Theorem4 | Theorem::Theorem5 | Theorem::Theorem6 | Theorem::Corollary1 => {
            let c = constants_thm1(spectrum, l_f, k1, k2);
            check_finite(&c)?;
            chk.kappas(&c, c.c2, "c₂");
            let beta = match schedule {
                Schedule::Constant { beta, .. } if theorem != Theorem::Corollary1 => {
                    chk.regime("constant or corollary1", true);
                    Some(*beta)
                }
                Schedule::Corollary1 { horizon, .. } => {
                    chk.regime(if theorem == Theorem::Corollary1 { "corollary1" } else { "constant or corollary1" }, true);
                    horizon.ok_or(TunerError::MissingHorizon(theorem))?;
                    Some(schedule.beta(0, n)?)
                }
                _ => {
                    chk.regime(if theorem == Theorem::Corollary1 { "corollary1" } else { "constant or corollary1" }, false);
                    None
                }
            };
            if let Some(beta) = beta {
                if theorem == Theorem::Theorem6 {
                    chk.at_least("β ≥ c̆₀", beta, c.c_breve0);
                } else {
                    chk.at_least("β ≥ c₀", beta, c.c0);
                }
                let eta = k2 / beta;
                if let (Some(nu), true) = (nu, matches!(theorem, Theorem::Theorem4 | Theorem::Theorem5 | Theorem::Theorem6)) {
                    let eps = eps_linear(&c, eta, nu);
                    extras.push(("epsilon".to_string(), eps));
                    if theorem == Theorem::Theorem6 {
                        extras.push(("c5_breve".to_string(), c5_breve(&c, eps, eta)));
                    } else {
                        extras.push(("c5".to_string(), c5(&c, eps, n)));
                    }
                }
            }
            if theorem == Theorem::Corollary1 {
                if let Schedule::Corollary1 { horizon: Some(t), .. } = schedule {
                    let nf = n as f64;
                    let bound = (nf * (c.c0 / k2).powi(2)).max(nf.powi(3));
                    chk.greater(COR1_HORIZON_CONDITION, *t as f64, bound);
                }
            }
            constants = c;
        }
        Theorem::Theorem2 => {
            let c = constants_thm1(spectrum, l_f, k1, k2);
            check_finite(&c)?;
            chk.kappas(&c, c.c2, "c₂");
            match schedule {
                Schedule::PolynomialT { theta, horizon, .. } => {
                    chk.regime("polynomial_T", true);
                    let t = horizon.ok_or(TunerError::MissingHorizon(theorem))?;
                    chk.greater("θ > 0", *theta, 0.0);
                    chk.less("θ < 1", *theta, 1.0);
                    if *theta > 0.0 {
                        chk.at_least("T ≥ (c₀/κ₂)^{1/θ}", t as f64, (c.c0 / k2).powf(1.0 / theta));
                    }
                    if let Some(nu) = nu {
                        extras.push(("epsilon7".to_string(), eps7(&c, nu, t, *theta)));
                    }
                }
                _ => chk.regime("polynomial_T", false),
            }
            constants = c;
        }
        Theorem::Theorem3 => {
            let nu = nu.ok_or(TunerError::MissingNu(theorem))?;
            match schedule {
                Schedule::LinearK { kappa0, t1, .. } => {
                    chk.regime("linear_k", true);
                    let (c, d) = constants_thm3(
                        spectrum,
                        l_f,
                        Some(nu),
                        *kappa0,
                        k1,
                        k2,
                        *t1 as f64,
                        cfg.c_hat0,
                        None,
                        info.sigma_tilde2,
                    )?;
                    check_finite(&c)?;
                    chk.kappas(&c, d.c_hat2, "ĉ₂");
                    chk.at_least("κ₀ ≥ ĉ₀νκ₂/4", *kappa0, d.kappa0_min);
                    chk.less("κ₀ < νκ₂/4", *kappa0, d.kappa0_max);
                    chk.greater("t₁ > ĉ₃", *t1 as f64, d.c_hat3);
                    if !d.c_hat3.is_finite() {
                        return Err(TunerError::NonFinite("ĉ₃".into()));
                    }
                    thm3 = Some(d);
                    constants = c;
                }
                _ => {
                    chk.regime("linear_k", false);
                    let c = constants_thm1(spectrum, l_f, k1, k2);
                    chk.kappas(&c, c.c2, "c₂");
                    constants = c;
                }
            }
        }
    }
    let pass = chk.conditions.iter().all(|c| c.pass);
    Ok(ValidationReport { theorem, pass, conditions: chk.conditions, constants: Some(constants), thm3, extras })
}

/// A schedule built to satisfy a theorem's hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub schedule: Schedule,
    /// The theorem whose hypotheses the schedule satisfies (differs from the
    /// requested one when a fallback was needed).
    pub validated_as: Theorem,
    pub notes: Vec<String>,
}

/// Inverts the validation inequalities: κ₁ = 2c₁, κ₂ = c₂(κ₁)/2 (ĉ₂/2 for
/// Theorem 3), β at its lower bound (or the corollary formula, clipped up to
/// c₀), κ₀ at the midpoint of its interval and t₁ = ⌈ĉ₃⌉ + 1.
pub fn suggest(
    spectrum: &LaplacianSpectrum,
    n: usize,
    info: &ProblemInfo,
    theorem: Theorem,
    horizon: Option<u64>,
    cfg: &TunerConfig,
) -> Result<Suggestion, TunerError> {
    let l_f = cfg.effective_lf(info);
    let c1 = 1.0 / spectrum.rho2 + 1.0;
    let kappa1 = 2.0 * c1;
    let mut notes = Vec::new();
    let suggestion = match theorem {
        Theorem::Theorem3 => {
            let nu = cfg.nu(info).ok_or(TunerError::MissingNu(theorem))?;
            let (_, probe) = constants_thm3(spectrum, l_f, Some(nu), 1.0, kappa1, 1.0, 1.0, cfg.c_hat0, None, None)?;
            let kappa2 = probe.c_hat2 / 2.0;
            let kappa0 = (1.0 + cfg.c_hat0) * nu * kappa2 / 8.0;
            let (_, d) = constants_thm3(spectrum, l_f, Some(nu), kappa0, kappa1, kappa2, 1.0, cfg.c_hat0, None, None)?;
            if !d.c_hat3.is_finite() || d.c_hat3 >= u64::MAX as f64 / 2.0 {
                return Err(TunerError::NonFinite(format!("ĉ₃ = {}", d.c_hat3)));
            }
            let t1 = d.c_hat3.ceil() as u64 + 1;
            Suggestion { schedule: Schedule::LinearK { kappa0, kappa1, kappa2, t1 }, validated_as: theorem, notes }
        }
        _ => {
            let kappa2 = c2_of(spectrum, kappa1) / 2.0;
            let c = constants_thm1(spectrum, l_f, kappa1, kappa2);
            check_finite(&c)?;
            let constant = |beta: f64| Schedule::Constant { kappa1, kappa2, beta };
            match theorem {
                Theorem::Theorem4 | Theorem::Theorem5 => {
                    Suggestion { schedule: constant(c.c0), validated_as: theorem, notes }
                }
                Theorem::Theorem6 => Suggestion { schedule: constant(c.c_breve0), validated_as: theorem, notes },
                Theorem::Theorem1 => match horizon {
                    Some(t) => {
                        if kappa2 * (t as f64 / n as f64).sqrt() >= c.c0 {
                            let cor = Schedule::Corollary1 { kappa1, kappa2, horizon: Some(t) };
                            Suggestion { schedule: cor, validated_as: theorem, notes }
                        } else {
                            notes.push(format!("κ₂√T/√n below c₀ = {:.6e}; β clipped up to c₀", c.c0));
                            Suggestion { schedule: constant(c.c0), validated_as: theorem, notes }
                        }
                    }
                    None => Suggestion { schedule: constant(c.c0), validated_as: theorem, notes },
                },
                Theorem::Corollary1 => {
                    let t = horizon.ok_or(TunerError::MissingHorizon(theorem))?;
                    let nf = n as f64;
                    let bound = (nf * (c.c0 / kappa2).powi(2)).max(nf.powi(3));
                    if t as f64 > bound {
                        Suggestion {
                            schedule: Schedule::Corollary1 { kappa1, kappa2, horizon: Some(t) },
                            validated_as: theorem,
                            notes,
                        }
                    } else {
                        notes.push(format!(
                            "T = {t} does not exceed max{{n(c₀/κ₂)², n³}} = {bound:.6e}; β clipped up to c₀ = {:.6e} (constant schedule, validated as theorem1)",
                            c.c0
                        ));
                        Suggestion { schedule: constant(c.c0), validated_as: Theorem::Theorem1, notes }
                    }
                }
                Theorem::Theorem2 => {
                    let t = horizon.ok_or(TunerError::MissingHorizon(theorem))?;
                    let ratio = c.c0 / kappa2;
                    let theta_min = if t > 1 { ratio.ln() / (t as f64).ln() } else { f64::INFINITY };
                    let admissible = |theta: f64| theta > 0.0 && theta < 1.0 && t as f64 >= ratio.powf(1.0 / theta);
                    if admissible(cfg.theta) {
                        Suggestion {
                            schedule: Schedule::PolynomialT { kappa1, kappa2, theta: cfg.theta, horizon: Some(t) },
                            validated_as: theorem,
                            notes,
                        }
                    } else if theta_min < 1.0 && admissible(0.5 * (theta_min.max(0.0) + 1.0)) {
                        let theta = 0.5 * (theta_min.max(0.0) + 1.0);
                        notes.push(format!("θ raised to {theta:.6} so that T ≥ (c₀/κ₂)^(1/θ)"));
                        Suggestion {
                            schedule: Schedule::PolynomialT { kappa1, kappa2, theta, horizon: Some(t) },
                            validated_as: theorem,
                            notes,
                        }
                    } else {
                        notes.push(format!(
                            "no θ ∈ (0,1) satisfies T ≥ (c₀/κ₂)^(1/θ) for T = {t}; falling back to constant β = c₀ (validated as theorem4)"
                        ));
                        Suggestion { schedule: constant(c.c0), validated_as: Theorem::Theorem4, notes }
                    }
                }
                Theorem::Theorem3 => unreachable!("handled above"),
            }
        }
    };
    Ok(suggestion)
}
