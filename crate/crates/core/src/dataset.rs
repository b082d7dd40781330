//! Batch generation, labeling and train/val/test manifests.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{gen_lasso, gen_lp, gen_portfolio, gen_qp, gen_svm};
use crate::instance::LcqpInstance;
use crate::io::{write_atomic, write_instance};
use crate::rng::{derive_rng, derive_u64};
use crate::solver::{solve_splitting, SolverConfig};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Status recorded for instances that were not sent to the solver.
pub const STATUS_UNSOLVED: &str = "unsolved";
pub const STATUS_OPTIMAL: &str = "optimal";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Lp,
    Qp,
    Svm,
    Portfolio,
    Lasso,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Lp, Family::Qp, Family::Svm, Family::Portfolio, Family::Lasso];

    pub fn name(self) -> &'static str {
        match self {
            Family::Lp => "lp",
            Family::Qp => "qp",
            Family::Svm => "svm",
            Family::Portfolio => "portfolio",
            Family::Lasso => "lasso",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown family `{s}` (expected lp, qp, svm, portfolio or lasso)")))
    }
}

/// Size and density parameters. Which fields a family reads:
///
/// | family    | rows      | cols     | features | density_a | density_q | lambda |
/// |-----------|-----------|----------|----------|-----------|-----------|--------|
/// | lp        | m         | n        |          | A         |           |        |
/// | qp        | m         | n        |          | A         | Q         |        |
/// | svm       | samples   |          | d        | X         |           | λ      |
/// | portfolio |           | assets   |          |           | Q         |        |
/// | lasso     | samples   |          | d        | X         |           | λ      |
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub family: Family,
    pub rows: usize,
    pub cols: usize,
    pub features: usize,
    pub density_a: f64,
    pub density_q: f64,
    pub lambda: f64,
}

impl FamilyParams {
    pub fn new(family: Family) -> Self {
        FamilyParams {
            family,
            rows: 100,
            cols: 100,
            features: 100,
            density_a: 0.05,
            density_q: 0.05,
            lambda: 1.0,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<LcqpInstance> {
        match self.family {
            Family::Lp => gen_lp(self.rows, self.cols, self.density_a, seed),
            Family::Qp => gen_qp(self.rows, self.cols, self.density_a, self.density_q, seed),
            Family::Svm => gen_svm(self.rows, self.features, self.lambda, self.density_a, seed),
            Family::Portfolio => gen_portfolio(self.cols, self.density_q, seed),
            Family::Lasso => gen_lasso(self.rows, self.features, self.lambda, self.density_a, seed),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory.
    pub path: String,
    pub split: Split,
    pub family: Family,
    pub seed: u64,
    pub labeled: bool,
    pub solver_status: String,
}

pub type Manifest = Vec<ManifestEntry>;

/// 8:1:1 assignment by a seeded shuffle: `round(0.8·count)` train,
/// `round(0.1·count)` val, the rest test.
pub fn assign_splits(count: usize, seed: u64) -> Vec<Split> {
    let n_train = (0.8 * count as f64).round() as usize;
    let n_val = ((0.1 * count as f64).round() as usize).min(count - n_train);
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut derive_rng(seed, 0, "split"));
    let mut splits = vec![Split::Test; count];
    for (rank, &i) in order.iter().enumerate() {
        splits[i] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    splits
}

/// Instance seed for index `i` of a dataset.
pub fn instance_seed(seed: u64, family: Family, i: usize) -> u64 {
    derive_u64(seed, i as u64, family.name())
}

pub fn instance_file_name(family: Family, i: usize) -> String {
    format!("{}-{i:05}.json", family.name())
}

#[derive(Clone, Debug)]
pub struct DatasetConfig {
    pub params: FamilyParams,
    pub count: usize,
    pub seed: u64,
    /// Label every instance with the splitting solver.
    pub solve: Option<SolverConfig>,
}

/// Generates, optionally labels and writes `count` instances plus
/// `manifest.json` under `out_dir`. The manifest is written last; its
/// content depends only on `ds`, not on `jobs`.
pub fn gen_dataset(ds: &DatasetConfig, out_dir: &Path, jobs: usize) -> Result<Manifest> {
    let splits = assign_splits(ds.count, ds.seed);
    let family = ds.params.family;
    let build = || -> Result<Manifest> {
        (0..ds.count)
            .into_par_iter()
            .map(|i| {
                let seed = instance_seed(ds.seed, family, i);
                let inst = ds.params.generate(seed)?;
                let (solution, status) = match &ds.solve {
                    Some(cfg) => match solve_splitting(&inst, cfg) {
                        Ok(sol) => (Some(sol), STATUS_OPTIMAL.to_string()),
                        Err(e) => (None, e.status().to_string()),
                    },
                    None => (None, STATUS_UNSOLVED.to_string()),
                };
                let name = instance_file_name(family, i);
                write_instance(out_dir.join(&name), &inst, solution.as_ref())?;
                Ok(ManifestEntry {
                    path: name,
                    split: splits[i],
                    family,
                    seed,
                    labeled: solution.is_some(),
                    solver_status: status,
                })
            })
            .collect()
    };
    let manifest = with_jobs(jobs, build)?;
    write_manifest(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Runs `f` on a dedicated pool of `jobs` threads (`0` means rayon's default).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut s = serde_json::to_string_pretty(manifest)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Resolves an entry's path against the manifest location.
pub fn entry_path(manifest_path: &Path, entry: &ManifestEntry) -> PathBuf {
    manifest_path.parent().unwrap_or(Path::new("")).join(&entry.path)
}
