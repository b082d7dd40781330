//! Instance files: one JSON document per instance.
//!
//! ```text
//! { "name", "kind": "lp" | "qp", "n", "m",
//!   "q": {rows, cols, vals}, "a": {rows, cols, vals}, "b", "c",
//!   "solution"?: {x, lam, objective}, "provenance"?: [...],
//!   "witness"?: [...], "flags"?: [...] }
//! ```
//!
//! Floats are written with the shortest decimal that round-trips, so a
//! read/write cycle is bit-exact.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{LcqpInstance, ProblemKind, Solution};
use crate::sparse::{SparseMatrix, Triplets};
use crate::transforms::TransformRecord;

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    name: String,
    kind: ProblemKind,
    n: usize,
    m: usize,
    q: Triplets,
    a: Triplets,
    b: Vec<f64>,
    c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    solution: Option<SolutionDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    provenance: Vec<TransformRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    witness: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    flags: BTreeSet<String>,
}

#[derive(Serialize, Deserialize)]
struct SolutionDoc {
    x: Vec<f64>,
    lam: Vec<f64>,
    objective: f64,
}

/// An instance together with its optional label.
#[derive(Clone, Debug)]
pub struct LabeledInstance {
    pub instance: LcqpInstance,
    pub solution: Option<Solution>,
}

pub fn to_json(inst: &LcqpInstance, sol: Option<&Solution>) -> Result<String> {
    let doc = InstanceDoc {
        name: inst.name.clone(),
        kind: inst.kind(),
        n: inst.n(),
        m: inst.m(),
        q: inst.q().to_parts(),
        a: inst.a().to_parts(),
        b: inst.b().to_vec(),
        c: inst.c().to_vec(),
        solution: sol.map(|s| SolutionDoc {
            x: s.x.clone(),
            lam: s.lam.clone(),
            objective: s.objective,
        }),
        provenance: inst.provenance.clone(),
        witness: inst.witness.clone(),
        flags: inst.flags.clone(),
    };
    let mut s = serde_json::to_string(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<LabeledInstance> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    if doc.b.len() != doc.m || doc.c.len() != doc.n {
        return Err(Error::Dimension(format!(
            "header says n={}, m={} but c has {} and b has {} entries",
            doc.n,
            doc.m,
            doc.c.len(),
            doc.b.len()
        )));
    }
    let q = SparseMatrix::from_parts(doc.n, doc.n, &doc.q)?;
    let a = SparseMatrix::from_parts(doc.m, doc.n, &doc.a)?;
    let mut inst = LcqpInstance::new(doc.name, q, a, doc.b, doc.c)?;
    if inst.kind() != doc.kind {
        // an explicit "qp" with an all-zero Q is accepted as an LP
        if doc.kind == ProblemKind::Lp {
            return Err(Error::InvalidInput(
                "kind is \"lp\" but q has nonzero entries".into(),
            ));
        }
    }
    inst.provenance = doc.provenance;
    inst.witness = doc.witness;
    inst.flags = doc.flags;
    if let Some(w) = &inst.witness {
        if w.len() != inst.n() {
            return Err(Error::Dimension("witness length differs from n".into()));
        }
    }
    let solution = match doc.solution {
        Some(s) => {
            if s.x.len() != inst.n() {
                return Err(Error::Dimension("solution.x length differs from n".into()));
            }
            let sol = Solution::new(&inst, s.x, s.lam)?;
            Some(sol)
        }
        None => None,
    };
    Ok(LabeledInstance {
        instance: inst,
        solution,
    })
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<LabeledInstance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}

pub fn write_instance(
    path: impl AsRef<Path>,
    inst: &LcqpInstance,
    sol: Option<&Solution>,
) -> Result<()> {
    write_atomic(path.as_ref(), to_json(inst, sol)?.as_bytes())
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::{e1, e1_solution};

    #[test]
    fn round_trip_is_bit_exact() {
        let mut inst = e1();
        inst.witness = Some(vec![0.1, 1.0 / 3.0]);
        let sol = e1_solution();
        let text = to_json(&inst, Some(&sol)).unwrap();
        let back = from_json(&text).unwrap();
        assert!(back.instance.same_data(&inst));
        assert_eq!(back.instance.witness, inst.witness);
        assert_eq!(back.solution.unwrap(), sol);
        assert_eq!(to_json(&back.instance, Some(&sol)).unwrap(), text);
    }

    #[test]
    fn unlabeled_has_no_solution_field() {
        let text = to_json(&e1(), None).unwrap();
        assert!(!text.contains("\"solution\""));
        assert!(from_json(&text).unwrap().solution.is_none());
    }

    #[test]
    fn rejects_inconsistent_header() {
        let text = to_json(&e1(), None).unwrap().replace("\"n\":2", "\"n\":3");
        assert!(from_json(&text).is_err());
    }
}
