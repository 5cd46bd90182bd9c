//! Per-run summaries and the files written next to the traces.

use std::fs;
use std::path::Path;

use pdsgd_core::metrics::{clamp_gap, MeanStderr};
use pdsgd_core::{NoiseModel, Theorem, TimeAverages, Trace, ValidationReport};
use serde::{Deserialize, Serialize};

use crate::plan::{Axes, RunPlan};
use crate::CliError;

pub const SUMMARY_FILE: &str = "summary.json";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const RESOLVED_FILE: &str = "resolved.ini";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub k: u64,
    pub consensus_err: f64,
    pub grad_norm_sq: f64,
    pub opt_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub diverged_at: Option<u64>,
    #[serde(rename = "final")]
    pub last: Option<Snapshot>,
    pub time_avg: TimeAverages,
    pub tail_avg: TimeAverages,
    /// `max ‖Σ v‖ / (1 + max ‖v_i‖)` for primal–dual runs.
    pub dual_relative_drift: Option<f64>,
}

impl SeedSummary {
    pub fn from_trace(trace: &Trace) -> Self {
        Self {
            seed: trace.meta.seed,
            diverged_at: trace.meta.diverged_at,
            last: trace.last().map(|r| Snapshot {
                k: r.k,
                consensus_err: r.consensus_err,
                grad_norm_sq: r.grad_norm_sq,
                opt_gap: r.opt_gap,
            }),
            time_avg: trace.time_avg,
            tail_avg: trace.tail_avg,
            dual_relative_drift: trace.dual.map(|d| d.relative_drift()),
        }
    }

    /// Named scalar metric; `None` for diverged seeds.
    pub fn metric(&self, name: &str) -> Option<f64> {
        if self.diverged_at.is_some() {
            return None;
        }
        let last = self.last?;
        Some(match name {
            "time_avg_grad_norm_sq" => self.time_avg.grad_norm_sq,
            "time_avg_consensus_err" => self.time_avg.consensus_err,
            "time_avg_opt_gap" => clamp_gap(self.time_avg.opt_gap),
            "tail_combined" => self.tail_avg.consensus_err + clamp_gap(self.tail_avg.opt_gap),
            "final_grad_norm_sq" => last.grad_norm_sq,
            "final_consensus_err" => last.consensus_err,
            "final_opt_gap" => clamp_gap(last.opt_gap),
            _ => return None,
        })
    }
}

pub const METRICS: [&str; 7] = [
    "time_avg_grad_norm_sq",
    "time_avg_consensus_err",
    "time_avg_opt_gap",
    "tail_combined",
    "final_grad_norm_sq",
    "final_consensus_err",
    "final_opt_gap",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub name: String,
    pub value: MeanStderr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub label: String,
    pub algorithm: String,
    pub n: usize,
    pub p: usize,
    pub horizon: u64,
    pub schedule: String,
    pub noise: NoiseModel,
    pub axes: AxesRecord,
    pub theorem: Option<Theorem>,
    pub notes: Vec<String>,
    pub validation: Option<ValidationReport>,
    pub seeds: Vec<SeedSummary>,
    /// Seed means over non-diverged seeds.
    pub aggregate: Vec<MetricSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxesRecord {
    pub n: usize,
    pub horizon: u64,
    pub theta: Option<f64>,
    pub sigma2: f64,
    pub algorithm: String,
}

impl From<&Axes> for AxesRecord {
    fn from(a: &Axes) -> Self {
        Self { n: a.n, horizon: a.horizon, theta: a.theta, sigma2: a.sigma2, algorithm: a.algorithm.clone() }
    }
}

impl Summary {
    pub fn new(plan: &RunPlan, seeds: Vec<SeedSummary>) -> Self {
        let aggregate = METRICS
            .iter()
            .filter_map(|m| {
                let values: Vec<f64> = seeds.iter().filter_map(|s| s.metric(m)).collect();
                (!values.is_empty()).then(|| MetricSummary { name: m.to_string(), value: MeanStderr::of(&values) })
            })
            .collect();
        Self {
            label: plan.label.clone(),
            algorithm: plan.algorithm.name().to_string(),
            n: plan.problem.n(),
            p: plan.problem.p(),
            horizon: plan.horizon,
            schedule: plan.schedule_description(),
            noise: plan.noise,
            axes: (&plan.axes).into(),
            theorem: plan.theorem,
            notes: plan.notes.clone(),
            validation: plan.validation.clone(),
            seeds,
            aggregate,
        }
    }

    pub fn metric(&self, name: &str) -> Option<MeanStderr> {
        self.aggregate.iter().find(|m| m.name == name).map(|m| m.value)
    }

    pub fn noise_free(&self) -> bool {
        self.noise.is_noiseless() && self.noise.is_unbiased()
    }

    pub fn any_diverged(&self) -> bool {
        self.seeds.iter().any(|s| s.diverged_at.is_some())
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        write_file(&dir.join(SUMMARY_FILE), &(text + "\n"))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: not a run summary ({e})", path.display())))
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn trace_file_name(seed: u64) -> String {
    format!("seed_{seed}.csv")
}
