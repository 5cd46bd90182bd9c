//! Plot-ready whitespace-delimited tables from traces and summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pdsgd_core::metrics::{speedup_ratio, SpeedupGroup, TRACE_COLUMNS};

use crate::output::{Summary, SUMMARY_FILE};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    /// `(k, value)` pairs from trace CSVs.
    Timeseries,
    /// `(ln T, ln metric, relative stderr)` from run summaries.
    Rate,
    /// `(n, ratio)` from run summaries.
    Speedup,
}

pub fn expand_glob(pattern: &str) -> Result<Vec<PathBuf>, CliError> {
    let paths = glob::glob(pattern).map_err(|e| CliError::Usage(format!("bad glob '{pattern}': {e}")))?;
    let mut out: Vec<PathBuf> = paths.filter_map(Result::ok).collect();
    out.sort();
    if out.is_empty() {
        return Err(CliError::Io(format!("no files match '{pattern}'")));
    }
    Ok(out)
}

/// `(k, column)` pairs; tokens are copied from the CSV untouched. Several
/// files become blocks separated by a blank line.
pub fn timeseries(files: &[PathBuf], column: &str) -> Result<String, CliError> {
    let idx = TRACE_COLUMNS
        .iter()
        .position(|c| *c == column)
        .filter(|&i| i > 0)
        .ok_or_else(|| CliError::Usage(format!("unknown trace column '{column}'")))?;
    let header = TRACE_COLUMNS.join(",");
    let mut out = format!("# k {column}\n");
    for (b, path) in files.iter().enumerate() {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut lines = text.lines();
        let first = lines.next().unwrap_or("").trim();
        if first != header {
            return Err(CliError::Schema(format!("{}: header '{first}' differs from '{header}'", path.display())));
        }
        if b > 0 {
            out.push('\n');
        }
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != TRACE_COLUMNS.len() {
                return Err(CliError::Schema(format!("{}: line {} has {} fields", path.display(), i + 2, fields.len())));
            }
            let _ = writeln!(out, "{} {}", fields[0], fields[idx]);
        }
    }
    Ok(out)
}

/// Reads summaries from `summary.json` files or run directories containing one.
pub fn read_summaries(files: &[PathBuf]) -> Result<Vec<Summary>, CliError> {
    let mut out = Vec::new();
    for path in files {
        // Directory globs may also match sibling tables; only JSON is read.
        let file: PathBuf = if path.is_dir() { path.join(SUMMARY_FILE) } else { path.clone() };
        if !file.exists() || file.extension().is_none_or(|e| e != "json") {
            continue;
        }
        out.push(Summary::read(&file)?);
    }
    if out.is_empty() {
        return Err(CliError::Schema("no run summaries among the matched paths".into()));
    }
    Ok(out)
}

/// Identifies a summary by every sweep axis except `skip`.
pub fn group_key(s: &Summary, skip: &str) -> String {
    let a = &s.axes;
    let mut parts = Vec::new();
    if skip != "n" {
        parts.push(format!("n={}", a.n));
    }
    if skip != "T" {
        parts.push(format!("T={}", a.horizon));
    }
    if let Some(t) = a.theta {
        parts.push(format!("theta={t}"));
    }
    parts.push(format!("sigma2={}", a.sigma2));
    parts.push(format!("alg={}", a.algorithm));
    parts.join(" ")
}

fn group_by<'a>(summaries: &'a [Summary], skip: &str) -> BTreeMap<String, Vec<&'a Summary>> {
    let mut groups: BTreeMap<String, Vec<&Summary>> = BTreeMap::new();
    for s in summaries {
        groups.entry(group_key(s, skip)).or_default().push(s);
    }
    groups
}

/// One row per summary, sorted by `T` within each group.
pub fn rate(summaries: &[Summary], metric: &str) -> Result<String, CliError> {
    let mut out = format!("# ln_T ln_{metric} rel_stderr\n");
    for (g, (key, mut members)) in group_by(summaries, "T").into_iter().enumerate() {
        members.sort_by_key(|s| s.horizon);
        if g > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "# {key}");
        for s in members {
            let m = s
                .metric(metric)
                .ok_or_else(|| CliError::Schema(format!("{}: no non-diverged value for '{metric}'", s.label)))?;
            let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", (s.horizon as f64).ln(), m.mean.ln(), m.stderr / m.mean);
        }
    }
    Ok(out)
}

/// Ratio of the smallest-`n` value to each `n` within each group.
pub fn speedup(summaries: &[Summary], metric: &str) -> Result<String, CliError> {
    let mut out = format!("# n ratio_{metric}\n");
    for (g, (key, members)) in group_by(summaries, "n").into_iter().enumerate() {
        let groups: Vec<SpeedupGroup> = members
            .iter()
            .map(|s| SpeedupGroup {
                n: s.n,
                values: s.seeds.iter().filter_map(|seed| seed.metric(metric)).collect(),
                config_key: key.clone(),
                noise_free: s.noise_free(),
            })
            .collect();
        let table = speedup_ratio(&groups).map_err(|e| CliError::Schema(format!("{key}: {e}")))?;
        if g > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "# {key}");
        if let Some(flag) = &table.flag {
            let _ = writeln!(out, "# {flag}");
        }
        for row in table.rows {
            let _ = writeln!(out, "{} {:.17e}", row.n, row.ratio);
        }
    }
    Ok(out)
}

pub fn cmd_plotdata(pattern: &str, kind: PlotKind, column: &str, metric: &str, out: Option<&Path>) -> Result<(), CliError> {
    let files = expand_glob(pattern)?;
    let text = match kind {
        PlotKind::Timeseries => timeseries(&files, column)?,
        PlotKind::Rate => rate(&read_summaries(&files)?, metric)?,
        PlotKind::Speedup => speedup(&read_summaries(&files)?, metric)?,
    };
    match out {
        Some(path) => crate::output::write_file(path, &text),
        None => crate::emit(&text),
    }
}
