use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde_json::json;

use qpaug::dataset::{with_jobs, write_manifest, Family, ManifestEntry, Split, MANIFEST_FILE};
use qpaug::io::{read_instance, write_instance};
use qpaug::rng::derive_u64;
use qpaug::transforms::{apply_policy, AugmentPolicy};
use qpaug::ProblemKind;

use super::data::Input;
use super::{emit, fail, usage, Ctx, EXIT_POLICY};

/// Status for outputs whose label came from a solution map.
const STATUS_MAPPED: &str = "mapped";
const STATUS_UNLABELED: &str = "unlabeled";

#[derive(Args, Debug)]
pub struct AugmentArgs {
    /// Input manifest (or a single instance file).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `name:strength,...` or `none`. Names: drop-vars, drop-cons,
    /// drop-cons-heuristic, scale-cons, scale-vars, add-cons, add-vars.
    #[arg(long)]
    ops: Option<String>,
    /// Augmented copies per input instance.
    #[arg(long)]
    per_instance: Option<usize>,
    /// Ops sampled per augmented copy.
    #[arg(long)]
    ops_per_instance: Option<usize>,
    /// Use the given strengths as-is instead of scaling each by U(0, 1).
    #[arg(long)]
    no_interpolate: bool,
    /// Emit this many contrastive views per instance using only
    /// solution-independent ops.
    #[arg(long)]
    views: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

struct Job {
    source: usize,
    copy: usize,
    file: String,
    seed: u64,
}

pub fn run(ctx: &Ctx, a: AugmentArgs) -> Result<()> {
    let c = &ctx.config;
    let input_path: PathBuf = c.require(a.input, "input")?;
    let out: PathBuf = c.require(a.out, "out")?;
    let ops_text: Option<String> = c.pick_opt(a.ops, "ops")?;
    let views: Option<usize> = c.pick_opt(a.views, "views")?;
    let per_instance = c.pick(a.per_instance, "per-instance", 1usize)?;
    let ops_per_instance = c.pick(a.ops_per_instance, "ops-per-instance", 2usize)?;
    let no_interpolate = c.switch(a.no_interpolate, "no-interpolate")?;
    let seed = c.pick(a.seed, "seed", 0u64)?;

    let strengths = match &ops_text {
        Some(t) => Some(AugmentPolicy::parse_ops(t).map_err(|e| usage(e.to_string()))?),
        None => None,
    };
    let build_policy = |kind: ProblemKind, s: u64| -> AugmentPolicy {
        match (&strengths, views) {
            (Some(st), _) => AugmentPolicy {
                strengths: st.clone(),
                ops_per_instance,
                interpolate: !no_interpolate,
                seed: s,
            },
            (None, Some(_)) => AugmentPolicy {
                ops_per_instance,
                ..AugmentPolicy::contrastive(kind, s)
            },
            (None, None) => AugmentPolicy {
                ops_per_instance,
                interpolate: !no_interpolate,
                ..AugmentPolicy::combo(s)
            },
        }
    };
    if views == Some(0) {
        return Err(usage("--views must be at least 1"));
    }
    if views.is_some() {
        // views must not depend on labels
        for kind in [ProblemKind::Lp, ProblemKind::Qp] {
            let p = build_policy(kind, 0);
            if let Some((op, _)) = p.strengths.iter().find(|(op, &s)| s > 0.0 && op.needs_solution()) {
                return Err(fail(EXIT_POLICY, format!("op `{op}` depends on the optimal solution and cannot make views")));
            }
        }
    }

    let input = Input::open(&input_path)?;
    let files = input.files();
    let (entries, sources): (Vec<Option<ManifestEntry>>, Vec<String>) = match &input {
        Input::Manifest { entries, .. } => (entries.iter().cloned().map(Some).collect(), input.names()),
        Input::Single(p) => (vec![None], vec![p.display().to_string()]),
    };
    let labeled: Vec<bool> = with_jobs(ctx.jobs, || {
        files
            .par_iter()
            .map(|f| read_instance(f).map(|li| li.solution.is_some()))
            .collect::<qpaug::Result<Vec<bool>>>()
    })?;
    if views.is_none() {
        let probe = build_policy(ProblemKind::Qp, 0);
        if let Some(i) = labeled.iter().position(|l| !l) {
            if let Some((op, _)) = probe.strengths.iter().find(|(op, &s)| s > 0.0 && op.needs_solution()) {
                return Err(fail(
                    EXIT_POLICY,
                    format!("op `{op}` needs an optimal solution but {} is unlabeled", sources[i]),
                ));
            }
        }
    }

    let copies = views.unwrap_or(per_instance);
    let tag = if views.is_some() { "v" } else { "a" };
    let mut jobs = Vec::with_capacity(files.len() * copies);
    for (i, src) in sources.iter().enumerate() {
        let stem = stem_of(src);
        for j in 0..copies {
            let idx = (i * copies + j) as u64;
            jobs.push(Job {
                source: i,
                copy: j,
                file: format!("{stem}-{tag}{j}.json"),
                seed: derive_u64(seed, idx, "augment"),
            });
        }
    }
    ctx.log(format!("augmenting {} instances into {} outputs", files.len(), jobs.len()));

    let results: Vec<Result<(bool, ProblemKind)>> = with_jobs(ctx.jobs, || {
        jobs.par_iter()
            .map(|job| {
                let li = read_instance(&files[job.source])?;
                let policy = build_policy(li.instance.kind(), job.seed);
                let sol = if views.is_some() { None } else { li.solution.as_ref() };
                let mut out_inst = apply_policy(&li.instance, sol, &policy)
                    .with_context(|| format!("augmenting {} (copy {})", sources[job.source], job.copy))?;
                out_inst.instance.name = format!("{}-{tag}{}", li.instance.name, job.copy);
                write_instance(out.join(&job.file), &out_inst.instance, out_inst.solution.as_ref())?;
                Ok((out_inst.solution.is_some(), li.instance.kind()))
            })
            .collect()
    });
    let mut manifest = Vec::with_capacity(jobs.len());
    for (job, r) in jobs.iter().zip(results) {
        let (is_labeled, kind) = r?;
        let src = entries[job.source].as_ref();
        manifest.push(ManifestEntry {
            path: job.file.clone(),
            split: src.map_or(Split::Train, |e| e.split),
            family: src.map_or(
                if kind == ProblemKind::Lp { Family::Lp } else { Family::Qp },
                |e| e.family,
            ),
            seed: job.seed,
            labeled: is_labeled,
            solver_status: if is_labeled { STATUS_MAPPED } else { STATUS_UNLABELED }.to_string(),
        });
    }
    write_manifest(&out.join(MANIFEST_FILE), &manifest)?;
    emit(&json!({
        "manifest": out.join(MANIFEST_FILE),
        "inputs": files.len(),
        "outputs": manifest.len(),
        "labeled": manifest.iter().filter(|e| e.labeled).count(),
        "mode": if views.is_some() { "views" } else { "augment" },
    }))
}

fn stem_of(name: &str) -> String {
    Path::new(name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into())
}
