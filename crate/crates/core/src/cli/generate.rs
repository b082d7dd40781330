use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde_json::json;

use qpaug::dataset::{gen_dataset, DatasetConfig, Family, FamilyParams, MANIFEST_FILE};
use qpaug::io::read_instance;
use qpaug::SolverConfig;

use super::{emit, fail, usage, Ctx, EXIT_SOLVER_BUDGET};

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// lp, qp, svm, portfolio or lasso.
    #[arg(long)]
    family: Option<String>,
    /// Constraint rows (lp/qp) or samples (svm/lasso).
    #[arg(long)]
    rows: Option<usize>,
    /// Variables (lp/qp) or assets (portfolio).
    #[arg(long)]
    cols: Option<usize>,
    /// Feature dimension (svm/lasso).
    #[arg(long)]
    features: Option<usize>,
    #[arg(long)]
    density_a: Option<f64>,
    #[arg(long)]
    density_q: Option<f64>,
    /// Regularization weight (svm/lasso).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Label instances with the splitting solver.
    #[arg(long)]
    solve: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit 3 when the fraction of solver failures exceeds this.
    #[arg(long)]
    max_failure_rate: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

pub fn run(ctx: &Ctx, a: GenerateArgs) -> Result<()> {
    let c = &ctx.config;
    let family: Family = c
        .pick(a.family, "family", "qp".to_string())?
        .parse()
        .map_err(|e: qpaug::Error| usage(e.to_string()))?;
    let defaults = FamilyParams::new(family);
    let params = FamilyParams {
        family,
        rows: c.pick(a.rows, "rows", defaults.rows)?,
        cols: c.pick(a.cols, "cols", defaults.cols)?,
        features: c.pick(a.features, "features", defaults.features)?,
        density_a: c.pick(a.density_a, "density-a", defaults.density_a)?,
        density_q: c.pick(a.density_q, "density-q", defaults.density_q)?,
        lambda: c.pick(a.lambda, "lambda", defaults.lambda)?,
    };
    let count = c.pick(a.count, "count", 10usize)?;
    let seed = c.pick(a.seed, "seed", 0u64)?;
    let out: PathBuf = c.require(a.out, "out")?;
    let max_failure_rate = c.pick(a.max_failure_rate, "max-failure-rate", 0.05)?;
    let solve = if c.switch(a.solve, "solve")? {
        let d = SolverConfig::default();
        let cfg = SolverConfig {
            tol: c.pick(a.tol, "tol", d.tol)?,
            max_iter: c.pick(a.max_iter, "max-iter", d.max_iter)?,
            ..d
        };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Some(cfg)
    } else {
        None
    };
    // catch bad parameters before spawning workers
    if count > 0 {
        params.generate(0).map_err(|e| usage(e.to_string()))?;
    }

    ctx.log(format!("generating {count} {family} instances into {}", out.display()));
    let ds = DatasetConfig {
        params,
        count,
        seed,
        solve,
    };
    let manifest = gen_dataset(&ds, &out, ctx.jobs)?;

    let labeled = manifest.iter().filter(|e| e.labeled).count();
    let failures: Vec<_> = manifest
        .iter()
        .filter(|e| ds.solve.is_some() && !e.labeled)
        .map(|e| json!({"path": e.path, "status": e.solver_status}))
        .collect();
    let (mut nnz_a, mut nnz_q) = (0usize, 0usize);
    for e in &manifest {
        let li = read_instance(out.join(&e.path))?;
        nnz_a += li.instance.a().nnz();
        nnz_q += li.instance.q().nnz();
    }
    let mean = |s: usize| if count == 0 { 0.0 } else { s as f64 / count as f64 };
    let failure_rate = if count == 0 { 0.0 } else { failures.len() as f64 / count as f64 };
    emit(&json!({
        "manifest": out.join(MANIFEST_FILE),
        "family": family.name(),
        "count": count,
        "labeled": labeled,
        "label_rate": if count == 0 { 0.0 } else { labeled as f64 / count as f64 },
        "mean_nnz_a": mean(nnz_a),
        "mean_nnz_q": mean(nnz_q),
        "failures": failures,
    }))?;
    if ds.solve.is_some() && failure_rate > max_failure_rate {
        return Err(fail(
            EXIT_SOLVER_BUDGET,
            format!(
                "solver failed on {} of {count} instances (rate {failure_rate:.3} > {max_failure_rate})",
                failures.len()
            ),
        ));
    }
    Ok(())
}
