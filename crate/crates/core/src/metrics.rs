//! Evaluation quantities, traces, seed aggregation and rate fitting.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Stacked;
use crate::problems::Problem;

/// Column order of trace CSVs.
pub const TRACE_COLUMNS: [&str; 6] = ["k", "consensus_err", "grad_norm_sq", "opt_gap", "eta_k", "beta_k"];

/// Optimality gaps at or above `−GAP_CLAMP_TOL` are clamped to `≥ 0` before fitting.
pub const GAP_CLAMP_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("log-log fit requires positive values, got ({x}, {y})")]
    NonPositive { x: f64, y: f64 },
    #[error("speedup groups disagree: {0}")]
    Mismatch(String),
    #[error("no traces to aggregate")]
    Empty,
    #[error("trace CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// `(1/n) Σ_i ‖x_i − x̄‖²`.
pub fn consensus_error(x: &Stacked) -> f64 {
    let mean = x.mean_row();
    let mut acc = 0.0;
    for i in 0..x.rows() {
        acc += x.row(i).iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    acc / x.rows() as f64
}

/// `‖∇f(x̄)‖²`.
pub fn stationarity(problem: &Problem, x_bar: &[f64]) -> f64 {
    problem.stationarity(x_bar)
}

/// `f(x̄) − f*`.
pub fn optimality_gap(problem: &Problem, x_bar: &[f64]) -> f64 {
    problem.optimality_gap(x_bar)
}

/// Clamps rounding-level negative gaps to zero; larger negatives pass through.
pub fn clamp_gap(gap: f64) -> f64 {
    if (-GAP_CLAMP_TOL..0.0).contains(&gap) {
        0.0
    } else {
        gap
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub k: u64,
    pub consensus_err: f64,
    pub grad_norm_sq: f64,
    pub opt_gap: f64,
    pub eta_k: f64,
    pub beta_k: f64,
    /// Elapsed time since run start; not written to CSV.
    #[serde(skip)]
    pub wall_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub algorithm: String,
    pub n: usize,
    pub p: usize,
    pub horizon: u64,
    pub seed: u64,
    pub schedule: String,
    pub noise: String,
    pub diverged_at: Option<u64>,
}

/// Running averages of the three metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeAverages {
    pub consensus_err: f64,
    pub grad_norm_sq: f64,
    pub opt_gap: f64,
    pub count: u64,
}

impl TimeAverages {
    pub fn push(&mut self, consensus_err: f64, grad_norm_sq: f64, opt_gap: f64) {
        self.count += 1;
        let w = 1.0 / self.count as f64;
        self.consensus_err += (consensus_err - self.consensus_err) * w;
        self.grad_norm_sq += (grad_norm_sq - self.grad_norm_sq) * w;
        self.opt_gap += (opt_gap - self.opt_gap) * w;
    }

    /// `consensus_err + opt_gap`.
    pub fn combined(&self) -> f64 {
        self.consensus_err + self.opt_gap
    }
}

/// Extremes of the dual iterates seen during a primal–dual run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DualStats {
    /// `max_k ‖Σ_i v_{i,k}‖`.
    pub max_sum_norm: f64,
    /// `max_{i,k} ‖v_{i,k}‖`.
    pub max_row_norm: f64,
}

impl DualStats {
    pub fn observe(&mut self, v: &Stacked) {
        let sum = v.column_sums();
        self.max_sum_norm = self.max_sum_norm.max(sum.iter().map(|s| s * s).sum::<f64>().sqrt());
        self.max_row_norm = self.max_row_norm.max(v.max_row_norm());
    }

    /// `max ‖Σ v‖ / (1 + max ‖v_i‖)`.
    pub fn relative_drift(&self) -> f64 {
        self.max_sum_norm / (1.0 + self.max_row_norm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub meta: RunMeta,
    pub records: Vec<Record>,
    /// Averages over `k = 0..T−1`.
    pub time_avg: TimeAverages,
    /// Averages over the last `⌈fT⌉` iterates `k = T−⌈fT⌉+1..=T`.
    pub tail_avg: TimeAverages,
    pub dual: Option<DualStats>,
}

impl Trace {
    pub fn new(meta: RunMeta) -> Self {
        Self { meta, records: Vec::new(), time_avg: TimeAverages::default(), tail_avg: TimeAverages::default(), dual: None }
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    pub fn diverged(&self) -> bool {
        self.meta.diverged_at.is_some()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        write_records_csv(&self.records, out)
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Writes records with 17 significant digits.
pub fn write_records_csv<W: Write>(records: &[Record], mut out: W) -> io::Result<()> {
    writeln!(out, "{}", TRACE_COLUMNS.join(","))?;
    for r in records {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.k, r.consensus_err, r.grad_norm_sq, r.opt_gap, r.eta_k, r.beta_k
        )?;
    }
    Ok(())
}

/// Parses a trace CSV written by [`write_records_csv`].
pub fn read_records_csv<R: BufRead>(input: R) -> Result<Vec<Record>, MetricsError> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| MetricsError::Csv("empty file".into()))??;
    if header.trim() != TRACE_COLUMNS.join(",") {
        return Err(MetricsError::Csv(format!("unexpected header '{}'", header.trim())));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != TRACE_COLUMNS.len() {
            return Err(MetricsError::Csv(format!("line {}: expected 6 fields", lineno + 2)));
        }
        let num = |i: usize| {
            fields[i].parse::<f64>().map_err(|e| MetricsError::Csv(format!("line {}: {e}", lineno + 2)))
        };
        let k = fields[0].parse::<u64>().map_err(|e| MetricsError::Csv(format!("line {}: {e}", lineno + 2)))?;
        records.push(Record {
            k,
            consensus_err: num(1)?,
            grad_norm_sq: num(2)?,
            opt_gap: num(3)?,
            eta_k: num(4)?,
            beta_k: num(5)?,
            wall_ns: 0,
        });
    }
    Ok(records)
}

/// Mean and standard error of a sample (`stderr = 0` for a single value).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    if m == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanStderr {
    pub fn of(values: &[f64]) -> Self {
        let (mean, stderr) = mean_stderr(values);
        Self { mean, stderr }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub k: u64,
    pub consensus_err: MeanStderr,
    pub grad_norm_sq: MeanStderr,
    pub opt_gap: MeanStderr,
    pub eta_k: f64,
    pub beta_k: f64,
}

/// Seed-averaged view over traces of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n_seeds: usize,
    pub records: Vec<AggregateRecord>,
    pub time_avg_consensus_err: MeanStderr,
    pub time_avg_grad_norm_sq: MeanStderr,
    pub time_avg_opt_gap: MeanStderr,
    pub tail_combined: MeanStderr,
    pub final_consensus_err: MeanStderr,
    pub final_grad_norm_sq: MeanStderr,
    pub final_opt_gap: MeanStderr,
}

impl Aggregate {
    /// Averages traces record-by-record over the `k` values they all share.
    pub fn from_traces(traces: &[&Trace]) -> Result<Self, MetricsError> {
        let first = traces.first().ok_or(MetricsError::Empty)?;
        let common = first
            .records
            .iter()
            .map(|r| r.k)
            .filter(|k| traces.iter().all(|t| t.records.iter().any(|r| r.k == *k)))
            .collect::<Vec<_>>();
        let mut records = Vec::with_capacity(common.len());
        for &k in &common {
            let rows: Vec<&Record> =
                traces.iter().map(|t| t.records.iter().find(|r| r.k == k).expect("k is common")).collect();
            let col = |f: fn(&Record) -> f64| MeanStderr::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
            records.push(AggregateRecord {
                k,
                consensus_err: col(|r| r.consensus_err),
                grad_norm_sq: col(|r| r.grad_norm_sq),
                opt_gap: col(|r| r.opt_gap),
                eta_k: rows[0].eta_k,
                beta_k: rows[0].beta_k,
            });
        }
        let over = |f: &dyn Fn(&Trace) -> f64| MeanStderr::of(&traces.iter().map(|t| f(t)).collect::<Vec<_>>());
        let last = |t: &Trace| *t.records.last().expect("trace has its initial record");
        Ok(Self {
            n_seeds: traces.len(),
            records,
            time_avg_consensus_err: over(&|t| t.time_avg.consensus_err),
            time_avg_grad_norm_sq: over(&|t| t.time_avg.grad_norm_sq),
            time_avg_opt_gap: over(&|t| t.time_avg.opt_gap),
            tail_combined: over(&|t| t.tail_avg.combined()),
            final_consensus_err: over(&|t| last(t).consensus_err),
            final_grad_norm_sq: over(&|t| last(t).grad_norm_sq),
            final_opt_gap: over(&|t| last(t).opt_gap),
        })
    }

    /// Trace columns holding the means, followed by stderr columns and the seed count.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{},consensus_err_stderr,grad_norm_sq_stderr,opt_gap_stderr,n_seeds",
            TRACE_COLUMNS.join(",")
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.k,
                r.consensus_err.mean,
                r.grad_norm_sq.mean,
                r.opt_gap.mean,
                r.eta_k,
                r.beta_k,
                r.consensus_err.stderr,
                r.grad_norm_sq.stderr,
                r.opt_gap.stderr,
                self.n_seeds
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit, MetricsError> {
    if points.len() < 3 {
        return Err(MetricsError::TooFewPoints { need: 3, got: points.len() });
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(MetricsError::NonPositive { x, y });
    }
    let m = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = if points.len() > 2 { (rss / (m - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(SlopeFit { slope, stderr, intercept })
}

/// Per-seed time-averaged metric values for one agent count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupGroup {
    pub n: usize,
    pub values: Vec<f64>,
    /// Everything except `n` that identifies the configuration; must agree
    /// across groups.
    pub config_key: String,
    pub noise_free: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub n: usize,
    pub value: MeanStderr,
    /// Baseline mean divided by this group's mean.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupTable {
    pub baseline_n: usize,
    pub rows: Vec<SpeedupRow>,
    pub flag: Option<String>,
}

pub const NOISE_FREE_FLAG: &str = "noise-free: speedup claim not applicable";

/// Ratios of seed-averaged metrics relative to the smallest `n`.
pub fn speedup_ratio(groups: &[SpeedupGroup]) -> Result<SpeedupTable, MetricsError> {
    let Some(first) = groups.first() else {
        return Err(MetricsError::TooFewPoints { need: 2, got: 0 });
    };
    if let Some(g) = groups.iter().find(|g| g.config_key != first.config_key) {
        return Err(MetricsError::Mismatch(format!("'{}' vs '{}'", first.config_key, g.config_key)));
    }
    if let Some(g) = groups.iter().find(|g| g.values.is_empty()) {
        return Err(MetricsError::Mismatch(format!("group n={} has no runs", g.n)));
    }
    let mut sorted: Vec<&SpeedupGroup> = groups.iter().collect();
    sorted.sort_by_key(|g| g.n);
    let distinct = {
        let mut ns: Vec<usize> = sorted.iter().map(|g| g.n).collect();
        ns.dedup();
        ns.len()
    };
    if distinct < 2 && groups.len() < 2 {
        return Err(MetricsError::TooFewPoints { need: 2, got: groups.len() });
    }
    let base = MeanStderr::of(&sorted[0].values);
    let rows = sorted
        .iter()
        .map(|g| {
            let value = MeanStderr::of(&g.values);
            SpeedupRow { n: g.n, value, ratio: base.mean / value.mean }
        })
        .collect();
    let flag = groups.iter().any(|g| g.noise_free).then(|| NOISE_FREE_FLAG.to_string());
    Ok(SpeedupTable { baseline_n: sorted[0].n, rows, flag })
}
