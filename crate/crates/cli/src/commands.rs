//! The `run`, `sweep` and `validate` subcommands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pdsgd_core::metrics::{fit_loglog_slope, speedup_ratio, SpeedupGroup};
use pdsgd_core::{run, Aggregate, RunSpec, Trace};
use rayon::prelude::*;

use crate::config::Config;
use crate::output::{trace_file_name, write_file, SeedSummary, Summary, AGGREGATE_FILE, RESOLVED_FILE};
use crate::plotdata::group_key;
use crate::plan::{expand, resolve, seed_offset_from_env, Overrides, RunPlan};
use crate::{CliError, ExitStatus};

/// Flags shared by `run`, `sweep` and `validate`.
#[derive(Debug, Clone, Default)]
pub struct ExecOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub force: bool,
    pub graph_file: Option<PathBuf>,
    pub dump_resolved: bool,
}

pub fn load(opts: &ExecOptions) -> Result<(Config, Overrides), CliError> {
    let text = fs::read_to_string(&opts.config).map_err(|e| CliError::Io(format!("{}: {e}", opts.config.display())))?;
    let cfg = Config::parse(&text)?;
    let ov = Overrides {
        graph_file: opts.graph_file.clone(),
        seed_offset: seed_offset_from_env()?,
        base_dir: opts.config.parent().map(Path::to_path_buf),
    };
    Ok((cfg, ov))
}

/// Resolves every sweep combination (a single one for plain configs).
pub fn plans(cfg: &Config, ov: &Overrides) -> Result<Vec<RunPlan>, CliError> {
    expand(cfg)?.iter().map(|(label, c)| resolve(c, ov, label).map_err(CliError::from)).collect()
}

/// Canonical config text followed by comments describing each resolved plan.
pub fn dump_resolved(cfg: &Config, plans: &[RunPlan]) -> String {
    let mut s = cfg.to_text();
    for p in plans {
        let _ = writeln!(
            s,
            "# resolved {}: algorithm={} schedule={} theorem={} seeds={:?}",
            p.label,
            p.algorithm.name(),
            p.schedule_description(),
            p.theorem.map_or("none".to_string(), |t| t.to_string()),
            p.seeds
        );
        for note in &p.notes {
            let _ = writeln!(s, "#   note: {note}");
        }
    }
    s
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| CliError::Io(e.to_string()))
}

fn report_validation(plans: &[RunPlan]) -> bool {
    let mut ok = true;
    for p in plans {
        if let Some(r) = &p.validation {
            if !r.pass {
                ok = false;
                eprintln!("{}: {} hypotheses violated:", p.label, r.theorem);
                for c in r.violations() {
                    eprintln!("  {}  (bound {:e}, value {:e})", c.condition, c.bound, c.value);
                }
            }
        }
    }
    ok
}

fn run_seed(plan: &RunPlan, seed: u64) -> Result<Trace, CliError> {
    let mut spec = RunSpec::new(&plan.problem, &plan.graph, &plan.algorithm, plan.noise, plan.horizon, seed);
    spec.record_every = plan.record_every;
    spec.x0 = plan.x0.clone();
    spec.tail_fraction = plan.tail_fraction;
    run(&spec).map_err(|e| CliError::Runtime(format!("{} seed {seed}: {e}", plan.label)))
}

struct SeedOutcome {
    plan: usize,
    result: Result<Trace, CliError>,
}

/// Executes every (plan, seed) pair in parallel, writing each trace CSV to
/// `dir_of(plan)/seed_<s>.csv` as it completes.
fn execute(plans: &[RunPlan], dirs: &[PathBuf], jobs: usize) -> Result<Vec<SeedOutcome>, CliError> {
    let work: Vec<(usize, u64)> = plans.iter().enumerate().flat_map(|(i, p)| p.seeds.iter().map(move |&s| (i, s))).collect();
    let outcomes = pool(jobs)?.install(|| {
        work.par_iter()
            .map(|&(i, seed)| {
                let result = run_seed(&plans[i], seed).and_then(|trace| {
                    write_file(&dirs[i].join(trace_file_name(seed)), &trace.to_csv_string())?;
                    Ok(trace)
                });
                SeedOutcome { plan: i, result }
            })
            .collect::<Vec<_>>()
    });
    Ok(outcomes)
}

/// Writes summary.json and aggregate.csv for one plan; returns the summary.
fn finish_plan(plan: &RunPlan, dir: &Path, traces: &[&Trace]) -> Result<Summary, CliError> {
    let seeds: Vec<SeedSummary> = traces.iter().map(|t| SeedSummary::from_trace(t)).collect();
    let summary = Summary::new(plan, seeds);
    summary.write(dir)?;
    let healthy: Vec<&Trace> = traces.iter().copied().filter(|t| !t.diverged()).collect();
    if !healthy.is_empty() {
        let agg = Aggregate::from_traces(&healthy).map_err(|e| CliError::Runtime(e.to_string()))?;
        write_file(&dir.join(AGGREGATE_FILE), &agg.to_csv_string())?;
    }
    Ok(summary)
}

pub fn cmd_run(opts: &ExecOptions) -> Result<ExitStatus, CliError> {
    let (cfg, ov) = load(opts)?;
    if cfg.sweep.is_some() {
        return Err(CliError::Config(crate::config::ConfigError::Other(
            "config has a [sweep] section; use the sweep subcommand".into(),
        )));
    }
    let plans = plans(&cfg, &ov)?;
    if opts.dump_resolved {
        crate::emit(&dump_resolved(&cfg, &plans))?;
        return Ok(ExitStatus::Success);
    }
    let plan = &plans[0];
    if let Some(r) = &plan.validation {
        crate::emit(&r.to_json_lines())?;
    }
    if !report_validation(&plans) && !opts.force {
        eprintln!("run refused: theorem hypotheses violated (pass --force to run anyway)");
        return Ok(ExitStatus::ValidationFailure);
    }
    let dir = opts.out.clone().unwrap_or_else(|| cfg.run.out.clone());
    write_file(&dir.join(RESOLVED_FILE), &cfg.to_text())?;
    let outcomes = execute(&plans, std::slice::from_ref(&dir), opts.jobs)?;
    let mut traces = Vec::new();
    for o in outcomes {
        traces.push(o.result?);
    }
    let refs: Vec<&Trace> = traces.iter().collect();
    let summary = finish_plan(plan, &dir, &refs)?;
    for s in &summary.seeds {
        if let Some(k) = s.diverged_at {
            eprintln!("seed {} diverged at iteration {k}", s.seed);
        }
    }
    Ok(if summary.any_diverged() { ExitStatus::Diverged } else { ExitStatus::Success })
}

pub fn cmd_sweep(opts: &ExecOptions) -> Result<ExitStatus, CliError> {
    let (cfg, ov) = load(opts)?;
    let combos = expand(&cfg)?;
    let seeds = cfg.run.seeds.len();
    let total = combos.len() * seeds;
    let cap = cfg.sweep.as_ref().map_or(crate::config::DEFAULT_MAX_RUNS, |s| s.max_runs);
    eprintln!("sweep: {} configurations x {seeds} seeds = {total} runs", combos.len());
    if total > cap {
        return Err(CliError::Config(crate::config::ConfigError::Other(format!(
            "sweep expands to {total} runs, above sweep.max_runs = {cap}"
        ))));
    }
    let plans = plans(&cfg, &ov)?;
    if opts.dump_resolved {
        crate::emit(&dump_resolved(&cfg, &plans))?;
        return Ok(ExitStatus::Success);
    }
    if !report_validation(&plans) && !opts.force {
        eprintln!("sweep refused: theorem hypotheses violated (pass --force to run anyway)");
        return Ok(ExitStatus::ValidationFailure);
    }
    let root = opts.out.clone().unwrap_or_else(|| cfg.run.out.clone());
    write_file(&root.join(RESOLVED_FILE), &cfg.to_text())?;
    let dirs: Vec<PathBuf> = plans.iter().map(|p| root.join(&p.label)).collect();
    let outcomes = execute(&plans, &dirs, opts.jobs)?;

    let mut per_plan: Vec<Vec<Trace>> = vec![Vec::new(); plans.len()];
    let mut failures = String::from("label,seed,error\n");
    let mut failed = false;
    for o in outcomes {
        match o.result {
            Ok(t) => {
                if let Some(k) = t.meta.diverged_at {
                    failed = true;
                    let _ = writeln!(failures, "{},{},diverged at iteration {k}", plans[o.plan].label, t.meta.seed);
                }
                per_plan[o.plan].push(t);
            }
            Err(e) => {
                failed = true;
                let _ = writeln!(failures, "{},,{}", plans[o.plan].label, e.to_string().replace(',', ";"));
            }
        }
    }
    let mut summaries = Vec::new();
    for ((plan, dir), traces) in plans.iter().zip(&dirs).zip(&per_plan) {
        let refs: Vec<&Trace> = traces.iter().collect();
        summaries.push(finish_plan(plan, dir, &refs)?);
    }
    write_file(&root.join("failures.csv"), &failures)?;
    write_file(&root.join("rates.csv"), &rate_table(&summaries))?;
    write_file(&root.join("speedup.csv"), &speedup_table(&summaries))?;
    Ok(if failed { ExitStatus::Diverged } else { ExitStatus::Success })
}

/// Log-log slopes against `T` for each group of summaries differing only in `T`.
pub fn rate_table(summaries: &[Summary]) -> String {
    let mut groups: BTreeMap<String, Vec<&Summary>> = BTreeMap::new();
    for s in summaries {
        groups.entry(group_key(s, "T")).or_default().push(s);
    }
    let mut out = String::from("group,metric,slope,stderr,intercept,points\n");
    for (key, members) in groups {
        for metric in ["time_avg_grad_norm_sq", "final_opt_gap", "tail_combined"] {
            let pts: Vec<(f64, f64)> =
                members.iter().filter_map(|s| s.metric(metric).map(|m| (s.horizon as f64, m.mean))).collect();
            if pts.len() < 3 {
                continue;
            }
            if let Ok(fit) = fit_loglog_slope(&pts) {
                let _ = writeln!(out, "\"{key}\",{metric},{:e},{:e},{:e},{}", fit.slope, fit.stderr, fit.intercept, pts.len());
            }
        }
    }
    out
}

/// Ratios of time-averaged stationarity across `n` within each group.
pub fn speedup_table(summaries: &[Summary]) -> String {
    let mut groups: BTreeMap<String, Vec<&Summary>> = BTreeMap::new();
    for s in summaries {
        groups.entry(group_key(s, "n")).or_default().push(s);
    }
    let mut out = String::from("group,n,mean,stderr,ratio,flag\n");
    for (key, members) in groups {
        let sg: Vec<SpeedupGroup> = members
            .iter()
            .map(|s| SpeedupGroup {
                n: s.n,
                values: s.seeds.iter().filter_map(|seed| seed.metric("time_avg_grad_norm_sq")).collect(),
                config_key: key.clone(),
                noise_free: s.noise_free(),
            })
            .collect();
        let distinct: std::collections::BTreeSet<usize> = sg.iter().map(|g| g.n).collect();
        if distinct.len() < 2 {
            continue;
        }
        if let Ok(table) = speedup_ratio(&sg) {
            for row in table.rows {
                let _ = writeln!(
                    out,
                    "\"{key}\",{},{:e},{:e},{:e},{}",
                    row.n,
                    row.value.mean,
                    row.value.stderr,
                    row.ratio,
                    table.flag.clone().unwrap_or_default()
                );
            }
        }
    }
    out
}

pub fn cmd_validate(opts: &ExecOptions) -> Result<ExitStatus, CliError> {
    let (cfg, ov) = load(opts)?;
    let plans = plans(&cfg, &ov)?;
    if plans.iter().any(|p| p.validation.is_none()) {
        return Err(CliError::Config(crate::config::ConfigError::Missing(
            "algorithm.theorem (or schedule = suggest:<theorem>)".into(),
        )));
    }
    let mut pass = true;
    for p in &plans {
        let r = p.validation.as_ref().expect("checked above");
        crate::emit(&r.to_json_lines())?;
        for note in &p.notes {
            eprintln!("{}: note: {note}", p.label);
        }
        pass &= r.pass;
    }
    report_validation(&plans);
    eprintln!("{}", if pass { "all hypotheses hold" } else { "validation failed" });
    Ok(if pass { ExitStatus::Success } else { ExitStatus::ValidationFailure })
}
