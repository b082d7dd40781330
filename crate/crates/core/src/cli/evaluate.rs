use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use qpaug::dataset::with_jobs;
use qpaug::graph::{embed_instance, graph_to_json, MpnnWeights, DEFAULT_LAYERS, DEFAULT_WIDTH};
use qpaug::io::{read_instance, write_atomic};
use qpaug::metrics::mean_relative_objective_error;
use qpaug::partition_constraints;
use qpaug::transforms::{default_k, heuristic_accuracy, heuristic_inactive_with, HeuristicConfig};

use super::data::{read_all, Input};
use super::{emit, usage, Ctx};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KRule {
    /// k = m − |active rows at the label|.
    ActiveCount,
    /// k = m − n.
    MMinusN,
}

#[derive(Args, Debug)]
pub struct HeuristicEvalArgs {
    /// Labeled manifest (or a single instance file).
    #[arg(long)]
    input: Option<PathBuf>,
    /// How many rows the heuristic reports inactive.
    #[arg(long, value_enum)]
    k_rule: Option<KRule>,
    /// Finite probe distance; omitted means the t → ∞ ordering.
    #[arg(long)]
    probe_step: Option<f64>,
    /// Slack tolerance for ground-truth activity.
    #[arg(long)]
    active_tol: Option<f64>,
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn heuristic_eval(ctx: &Ctx, a: HeuristicEvalArgs) -> Result<()> {
    let c = &ctx.config;
    let input_path: PathBuf = c.require(a.input, "input")?;
    let rule = c.pick(a.k_rule, "k-rule", KRule::ActiveCount)?;
    let step: Option<f64> = c.pick_opt(a.probe_step, "probe-step")?;
    let tol = c.pick(a.active_tol, "active-tol", 1e-6)?;
    let cfg = HeuristicConfig { step };
    let input = Input::open(&input_path)?;
    let instances = read_all(ctx, &input.files())?;

    let mut buckets: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut all = Vec::new();
    let (mut unlabeled, mut empty) = (0usize, 0usize);
    for li in &instances {
        let Some(sol) = &li.solution else {
            unlabeled += 1;
            continue;
        };
        let inst = &li.instance;
        let part = partition_constraints(inst, sol, tol);
        let k = match rule {
            KRule::ActiveCount => inst.m() - part.active.len(),
            KRule::MMinusN => default_k(inst),
        };
        if k == 0 {
            // nothing to report inactive, accuracy undefined
            empty += 1;
            continue;
        }
        let heu = heuristic_inactive_with(inst, k, &cfg)?;
        let acc = heuristic_accuracy(&part.inactive, &heu)?;
        buckets.entry(format!("{}x{}", inst.m(), inst.n())).or_default().push(acc);
        all.push(acc);
    }
    let summary = |v: &[f64]| {
        let (m, s) = mean_std(v);
        json!({"count": v.len(), "mean": m, "std": s})
    };
    let by_size: BTreeMap<&String, Value> = buckets.iter().map(|(k, v)| (k, summary(v))).collect();
    emit(&json!({
        "k_rule": match rule { KRule::ActiveCount => "active-count", KRule::MMinusN => "m-minus-n" },
        "probe_step": step,
        "overall": summary(&all),
        "by_size": by_size,
        "skipped_unlabeled": unlabeled,
        "skipped_k_zero": empty,
    }))
}

#[derive(Args, Debug)]
pub struct GraphArgs {
    /// Manifest (or a single instance file).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory for `<stem>.graph.json` files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write pooled embeddings from a seeded reference network.
    #[arg(long)]
    embed: bool,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    /// Seed for the reference network's weights.
    #[arg(long)]
    weights_seed: Option<u64>,
}

pub fn graph(ctx: &Ctx, a: GraphArgs) -> Result<()> {
    let c = &ctx.config;
    let input_path: PathBuf = c.require(a.input, "input")?;
    let out: PathBuf = c.require(a.out, "out")?;
    let embed = c.switch(a.embed, "embed")?;
    let weights = if embed {
        let layers = c.pick(a.layers, "layers", DEFAULT_LAYERS)?;
        let width = c.pick(a.width, "width", DEFAULT_WIDTH)?;
        let seed = c.pick(a.weights_seed, "weights-seed", 0u64)?;
        Some(MpnnWeights::seeded(layers, width, seed).map_err(|e| usage(e.to_string()))?)
    } else {
        None
    };
    let input = Input::open(&input_path)?;
    let files = input.files();
    let names = input.names();
    ctx.log(format!("encoding {} instances", files.len()));

    let results: Vec<Result<(String, Option<Vec<f64>>)>> = with_jobs(ctx.jobs, || {
        files
            .par_iter()
            .map(|f| {
                let li = read_instance(f).with_context(|| format!("reading {}", f.display()))?;
                let stem = Path::new(f).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let file = format!("{stem}.graph.json");
                write_atomic(&out.join(&file), graph_to_json(&li.instance)?.as_bytes())?;
                let pooled = match &weights {
                    Some(w) => Some(embed_instance(&li.instance, w)?.iter().copied().collect()),
                    None => None,
                };
                Ok((file, pooled))
            })
            .collect()
    });
    let mut written = Vec::with_capacity(results.len());
    let mut embeddings = Vec::new();
    for (name, r) in names.iter().zip(results) {
        let (file, pooled) = r?;
        if let Some(p) = pooled {
            embeddings.push(json!({"instance": name, "embedding": p}));
        }
        written.push(file);
    }
    if embed {
        let mut s = serde_json::to_string(&embeddings)?;
        s.push('\n');
        write_atomic(&out.join("embeddings.json"), s.as_bytes())?;
    }
    emit(&json!({"out": out, "graphs": written.len(), "embeddings": embed}))
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// JSON array of `[predicted, optimal]` pairs or
    /// `{"predicted": .., "optimal": ..}` objects.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Pair {
    Tuple(f64, f64),
    Named { predicted: f64, optimal: f64 },
}

pub fn metrics(ctx: &Ctx, a: MetricsArgs) -> Result<()> {
    let input_path: PathBuf = ctx.config.require(a.input, "input")?;
    let text = std::fs::read_to_string(&input_path).with_context(|| format!("reading {}", input_path.display()))?;
    let pairs: Vec<Pair> = serde_json::from_str(&text).with_context(|| format!("parsing {}", input_path.display()))?;
    let pairs: Vec<(f64, f64)> = pairs
        .into_iter()
        .map(|p| match p {
            Pair::Tuple(a, b) | Pair::Named { predicted: a, optimal: b } => (a, b),
        })
        .collect();
    let err = mean_relative_objective_error(&pairs)?;
    emit(&json!({"count": pairs.len(), "mean_relative_error_percent": err}))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_values() {
        assert_eq!(mean_std(&[]), (0.0, 0.0));
        assert_eq!(mean_std(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
