use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use qpaug::dataset::{
    assign_splits, entry_path, read_manifest, with_jobs, write_manifest, Manifest, ManifestEntry, Split, STATUS_OPTIMAL,
};
use qpaug::io::{read_instance, write_instance, LabeledInstance};
use qpaug::solver::{solve_enumeration, solve_splitting_detailed};
use qpaug::{kkt_residuals, KktReport, SolverConfig};

use super::{emit, fail, usage, Ctx, EXIT_SOLVER_BUDGET, EXIT_VERIFY};

/// A manifest, or a single instance file treated as a one-entry dataset.
pub enum Input {
    Manifest { path: PathBuf, entries: Manifest },
    Single(PathBuf),
}

impl Input {
    pub fn open(path: &Path) -> Result<Input> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let head = text.trim_start().chars().next();
        if head == Some('[') {
            let entries = read_manifest(path)?;
            Ok(Input::Manifest {
                path: path.to_path_buf(),
                entries,
            })
        } else {
            Ok(Input::Single(path.to_path_buf()))
        }
    }

    /// Instance file paths, in manifest order.
    pub fn files(&self) -> Vec<PathBuf> {
        match self {
            Input::Manifest { path, entries } => entries.iter().map(|e| entry_path(path, e)).collect(),
            Input::Single(p) => vec![p.clone()],
        }
    }

    /// Display names: manifest-relative paths, or the file name.
    pub fn names(&self) -> Vec<String> {
        match self {
            Input::Manifest { entries, .. } => entries.iter().map(|e| e.path.clone()).collect(),
            Input::Single(p) => vec![p.display().to_string()],
        }
    }
}

pub fn read_all(ctx: &Ctx, files: &[PathBuf]) -> Result<Vec<LabeledInstance>> {
    with_jobs(ctx.jobs, || {
        files
            .par_iter()
            .map(|f| read_instance(f).with_context(|| format!("reading {}", f.display())))
            .collect()
    })
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Splitting,
    Enumeration,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Manifest or instance file; labels are written back in place.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    penalty: Option<f64>,
    /// Skip the active-set polish.
    #[arg(long)]
    no_polish: bool,
    #[arg(long)]
    max_failure_rate: Option<f64>,
}

pub fn solve(ctx: &Ctx, a: SolveArgs) -> Result<()> {
    let c = &ctx.config;
    let input_path: PathBuf = c.require(a.input, "input")?;
    let method = c.pick(a.method, "method", Method::Splitting)?;
    let d = SolverConfig::default();
    let cfg = SolverConfig {
        tol: c.pick(a.tol, "tol", d.tol)?,
        max_iter: c.pick(a.max_iter, "max-iter", d.max_iter)?,
        penalty: c.pick(a.penalty, "penalty", d.penalty)?,
        polish: !c.switch(a.no_polish, "no-polish")?,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let max_failure_rate = c.pick(a.max_failure_rate, "max-failure-rate", 0.0)?;
    let input = Input::open(&input_path)?;
    let files = input.files();
    let names = input.names();
    ctx.log(format!("solving {} instances", files.len()));

    let results: Vec<Result<(String, Value)>> = with_jobs(ctx.jobs, || {
        files
            .par_iter()
            .map(|f| {
                let li = read_instance(f).with_context(|| format!("reading {}", f.display()))?;
                let outcome = match method {
                    Method::Splitting => solve_splitting_detailed(&li.instance, &cfg)
                        .map(|o| (o.solution, json!({"iterations": o.iterations, "polished": o.polished}))),
                    Method::Enumeration => solve_enumeration(&li.instance).map(|s| (s, json!({}))),
                };
                match outcome {
                    Ok((sol, mut info)) => {
                        write_instance(f, &li.instance, Some(&sol))?;
                        info["objective"] = json!(sol.objective);
                        Ok((STATUS_OPTIMAL.to_string(), info))
                    }
                    Err(e) => Ok((e.status().to_string(), json!({"error": e.to_string()}))),
                }
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    let mut statuses = Vec::with_capacity(results.len());
    for (name, r) in names.iter().zip(results) {
        let (status, mut info) = r?;
        info["path"] = json!(name);
        info["status"] = json!(status);
        rows.push(info);
        statuses.push(status);
    }
    if let Input::Manifest { path, mut entries } = input {
        for (e, s) in entries.iter_mut().zip(&statuses) {
            e.labeled = s == STATUS_OPTIMAL;
            e.solver_status = s.clone();
        }
        write_manifest(&path, &entries)?;
    }
    let failed = statuses.iter().filter(|s| *s != STATUS_OPTIMAL).count();
    emit(&json!({
        "solved": statuses.len() - failed,
        "failed": failed,
        "instances": rows,
    }))?;
    let total = statuses.len().max(1) as f64;
    if failed as f64 / total > max_failure_rate {
        return Err(fail(EXIT_SOLVER_BUDGET, format!("solver failed on {failed} of {} instances", statuses.len())));
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Manifest or instance file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Largest accepted relative KKT residual.
    #[arg(long)]
    tol: Option<f64>,
}

fn report_json(r: &KktReport) -> Value {
    json!({
        "stationarity": r.stationarity_inf_norm,
        "primal_violation": r.primal_violation,
        "dual_violation": r.dual_violation,
        "complementarity": r.complementarity,
    })
}

pub fn verify(ctx: &Ctx, a: VerifyArgs) -> Result<()> {
    let c = &ctx.config;
    let input_path: PathBuf = c.require(a.input, "input")?;
    let tol = c.pick(a.tol, "tol", 1e-6)?;
    let input = Input::open(&input_path)?;
    let names = input.names();
    let instances = read_all(ctx, &input.files())?;

    let mut worst = KktReport::zero(true);
    let mut failing = Vec::new();
    let mut checked = 0;
    for (name, li) in names.iter().zip(&instances) {
        let Some(sol) = &li.solution else { continue };
        checked += 1;
        let r = kkt_residuals(&li.instance, sol, true)?;
        worst = worst.worst(&r);
        if !r.within(tol) {
            failing.push(json!({"path": name, "residuals": report_json(&r)}));
        }
    }
    emit(&json!({
        "checked": checked,
        "unlabeled": instances.len() - checked,
        "tol": tol,
        "worst": report_json(&worst),
        "failing": failing,
    }))?;
    if !failing.is_empty() {
        let list: Vec<&str> = failing.iter().filter_map(|f| f["path"].as_str()).collect();
        return Err(fail(EXIT_VERIFY, format!("{} instance(s) exceed tol {tol}: {}", list.len(), list.join(", "))));
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    /// Manifest to reassign.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the new manifest (default: overwrite the input).
    #[arg(long)]
    output: Option<PathBuf>,
}

pub fn split(ctx: &Ctx, a: SplitArgs) -> Result<()> {
    let c = &ctx.config;
    let input_path: PathBuf = c.require(a.input, "input")?;
    let seed = c.pick(a.seed, "seed", 0u64)?;
    let output: PathBuf = c.pick(a.output, "output", input_path.clone())?;
    let mut entries: Vec<ManifestEntry> = read_manifest(&input_path)?;
    if output.parent() != input_path.parent() {
        // keep entry paths valid relative to the new location
        for e in &mut entries {
            let abs = entry_path(&input_path, e);
            e.path = std::path::absolute(&abs).unwrap_or(abs).display().to_string();
        }
    }
    let splits = assign_splits(entries.len(), seed);
    for (e, s) in entries.iter_mut().zip(splits) {
        e.split = s;
    }
    write_manifest(&output, &entries)?;
    let count = |k: Split| entries.iter().filter(|e| e.split == k).count();
    ctx.log(format!("wrote {}", output.display()));
    emit(&json!({
        "manifest": output,
        "train": count(Split::Train),
        "val": count(Split::Val),
        "test": count(Split::Test),
    }))
}
