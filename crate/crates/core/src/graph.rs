//! Bipartite graph encoding, a forward-only message-passing reference network
//! and the NT-Xent contrastive loss.
//!
//! Variable node `v` carries `c_v`, constraint node `c` carries `b_c`. Each
//! nonzero `A_cv` is a constraint–variable edge and each nonzero `Q_uv`
//! (diagonal included, as a self-loop) a variable–variable edge.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::LcqpInstance;
use crate::rng::derive_rng;

pub const DEFAULT_WIDTH: usize = 16;
pub const DEFAULT_LAYERS: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteGraph {
    pub n_var_nodes: usize,
    pub n_con_nodes: usize,
    pub var_features: Vec<f64>,
    pub con_features: Vec<f64>,
    /// `(con, var, A_cv)`.
    pub ca_edges: Vec<(usize, usize, f64)>,
    /// `(u, v, Q_uv)`; both orientations of every off-diagonal entry.
    pub vv_edges: Vec<(usize, usize, f64)>,
}

pub fn to_bipartite_graph(inst: &LcqpInstance) -> BipartiteGraph {
    BipartiteGraph {
        n_var_nodes: inst.n(),
        n_con_nodes: inst.m(),
        var_features: inst.c().to_vec(),
        con_features: inst.b().to_vec(),
        ca_edges: inst.a().entries().to_vec(),
        vv_edges: inst.q().entries().to_vec(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Var,
    Con,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Ca,
    Vv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeArrays {
    pub side: Vec<Side>,
    pub feature: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeArrays {
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    pub weight: Vec<f64>,
    pub kind: Vec<EdgeKind>,
}

/// Export layout. Node ids are global: variables `0..n`, constraints
/// `n..n+m`. Constraint–variable edges run from the constraint node to the
/// variable node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub name: String,
    pub n_var_nodes: usize,
    pub n_con_nodes: usize,
    pub nodes: NodeArrays,
    pub edges: EdgeArrays,
}

impl BipartiteGraph {
    pub fn to_doc(&self, name: &str) -> GraphDoc {
        let n = self.n_var_nodes;
        let mut side = vec![Side::Var; n];
        side.extend(std::iter::repeat_n(Side::Con, self.n_con_nodes));
        let mut feature = self.var_features.clone();
        feature.extend_from_slice(&self.con_features);
        let total = self.ca_edges.len() + self.vv_edges.len();
        let mut edges = EdgeArrays {
            src: Vec::with_capacity(total),
            dst: Vec::with_capacity(total),
            weight: Vec::with_capacity(total),
            kind: Vec::with_capacity(total),
        };
        for &(c, v, w) in &self.ca_edges {
            edges.src.push(n + c);
            edges.dst.push(v);
            edges.weight.push(w);
            edges.kind.push(EdgeKind::Ca);
        }
        for &(u, v, w) in &self.vv_edges {
            edges.src.push(u);
            edges.dst.push(v);
            edges.weight.push(w);
            edges.kind.push(EdgeKind::Vv);
        }
        GraphDoc {
            name: name.to_string(),
            n_var_nodes: n,
            n_con_nodes: self.n_con_nodes,
            nodes: NodeArrays { side, feature },
            edges,
        }
    }
}

pub fn graph_to_json(inst: &LcqpInstance) -> Result<String> {
    let mut s = serde_json::to_string(&to_bipartite_graph(inst).to_doc(&inst.name))?;
    s.push('\n');
    Ok(s)
}

/// One round of message passing. Constraint nodes update first:
/// `h_c ← tanh(W_cs h_c + W_ca Σ_v A_cv h_v + β_c)`, then variables consume
/// the new constraint states:
/// `h_v ← tanh(W_vs h_v + W_vq Σ_u Q_uv h_u + W_va Σ_c A_cv h_c + β_v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpnnLayer {
    pub con_self: DMatrix<f64>,
    pub con_agg: DMatrix<f64>,
    pub con_bias: DVector<f64>,
    pub var_self: DMatrix<f64>,
    pub var_q: DMatrix<f64>,
    pub var_a: DMatrix<f64>,
    pub var_bias: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpnnWeights {
    pub width: usize,
    pub seed: u64,
    /// Initial embedding `h⁰ = feature·w + β`, per side.
    pub var_embed: (DVector<f64>, DVector<f64>),
    pub con_embed: (DVector<f64>, DVector<f64>),
    pub layers: Vec<MpnnLayer>,
    /// Maps the concatenated `[Σ h_v; Σ h_c]` (length `2·width`) to `width`.
    pub readout: DMatrix<f64>,
    pub readout_bias: DVector<f64>,
}

impl MpnnWeights {
    /// Entries `U(−1, 1)/√fan_in`, drawn in a fixed order from `seed`.
    pub fn seeded(layers: usize, width: usize, seed: u64) -> Result<Self> {
        check_shape(layers, width)?;
        let mut rng = derive_rng(seed, 0, "mpnn");
        let mut mat = |rows: usize, cols: usize| {
            let s = 1.0 / (cols as f64).sqrt();
            DMatrix::from_fn(rows, cols, |_, _| s * rng.random_range(-1.0..1.0))
        };
        let d = width;
        let var_embed = (mat(d, 1).column(0).into_owned(), mat(d, 1).column(0).into_owned());
        let con_embed = (mat(d, 1).column(0).into_owned(), mat(d, 1).column(0).into_owned());
        let layers = (0..layers)
            .map(|_| MpnnLayer {
                con_self: mat(d, d),
                con_agg: mat(d, d),
                con_bias: mat(d, 1).column(0).into_owned(),
                var_self: mat(d, d),
                var_q: mat(d, d),
                var_a: mat(d, d),
                var_bias: mat(d, 1).column(0).into_owned(),
            })
            .collect();
        let readout = mat(d, 2 * d);
        let readout_bias = mat(d, 1).column(0).into_owned();
        Ok(MpnnWeights {
            width,
            seed,
            var_embed,
            con_embed,
            layers,
            readout,
            readout_bias,
        })
    }

    pub fn zeros(layers: usize, width: usize) -> Result<Self> {
        check_shape(layers, width)?;
        let d = width;
        let v = || DVector::zeros(d);
        let m = || DMatrix::zeros(d, d);
        Ok(MpnnWeights {
            width,
            seed: 0,
            var_embed: (v(), v()),
            con_embed: (v(), v()),
            layers: (0..layers)
                .map(|_| MpnnLayer {
                    con_self: m(),
                    con_agg: m(),
                    con_bias: v(),
                    var_self: m(),
                    var_q: m(),
                    var_a: m(),
                    var_bias: v(),
                })
                .collect(),
            readout: DMatrix::zeros(d, 2 * d),
            readout_bias: v(),
        })
    }
}

fn check_shape(layers: usize, width: usize) -> Result<()> {
    if layers == 0 || width == 0 {
        return Err(Error::InvalidInput(format!(
            "network needs at least one layer and positive width (got {layers} layers, width {width})"
        )));
    }
    Ok(())
}

/// Final node states, one row per node.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeEmbeddings {
    pub var: DMatrix<f64>,
    pub con: DMatrix<f64>,
}

pub fn mpnn_forward(graph: &BipartiteGraph, w: &MpnnWeights) -> Result<NodeEmbeddings> {
    if w.layers.is_empty() {
        return Err(Error::InvalidInput("network has no layers".into()));
    }
    let d = w.width;
    let embed = |features: &[f64], (scale, bias): &(DVector<f64>, DVector<f64>)| {
        DMatrix::from_fn(features.len(), d, |i, k| features[i] * scale[k] + bias[k])
    };
    let mut hv = embed(&graph.var_features, &w.var_embed);
    let mut hc = embed(&graph.con_features, &w.con_embed);
    for layer in &w.layers {
        // Σ_v A_cv h_v
        let mut agg_c = DMatrix::zeros(graph.n_con_nodes, d);
        for &(c, v, a) in &graph.ca_edges {
            for k in 0..d {
                agg_c[(c, k)] += a * hv[(v, k)];
            }
        }
        let hc_new = update(&hc, &[(&layer.con_self, &hc), (&layer.con_agg, &agg_c)], &layer.con_bias);
        let mut agg_q = DMatrix::zeros(graph.n_var_nodes, d);
        for &(u, v, q) in &graph.vv_edges {
            for k in 0..d {
                agg_q[(v, k)] += q * hv[(u, k)];
            }
        }
        let mut agg_a = DMatrix::zeros(graph.n_var_nodes, d);
        for &(c, v, a) in &graph.ca_edges {
            for k in 0..d {
                agg_a[(v, k)] += a * hc_new[(c, k)];
            }
        }
        let hv_new = update(
            &hv,
            &[(&layer.var_self, &hv), (&layer.var_q, &agg_q), (&layer.var_a, &agg_a)],
            &layer.var_bias,
        );
        hv = hv_new;
        hc = hc_new;
    }
    Ok(NodeEmbeddings { var: hv, con: hc })
}

/// `tanh(Σ_j X_j W_jᵀ + β)` row-wise.
fn update(shape: &DMatrix<f64>, terms: &[(&DMatrix<f64>, &DMatrix<f64>)], bias: &DVector<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::from_fn(shape.nrows(), shape.ncols(), |_, k| bias[k]);
    for (wm, x) in terms {
        out += *x * wm.transpose();
    }
    out.map(f64::tanh)
}

/// Sum of node states per side: `(Σ h_v, Σ h_c)`.
pub fn pool_sums(emb: &NodeEmbeddings) -> (DVector<f64>, DVector<f64>) {
    let sum_rows = |m: &DMatrix<f64>| DVector::from_fn(m.ncols(), |k, _| m.column(k).sum());
    (sum_rows(&emb.var), sum_rows(&emb.con))
}

/// Readout of the concatenated per-side sums.
pub fn pooled_embedding(emb: &NodeEmbeddings, w: &MpnnWeights) -> Result<DVector<f64>> {
    if emb.var.nrows() + emb.con.nrows() == 0 {
        return Err(Error::InvalidInput("graph has no nodes".into()));
    }
    let (sv, sc) = pool_sums(emb);
    let mut cat = DVector::zeros(2 * w.width);
    cat.rows_mut(0, w.width).copy_from(&sv);
    cat.rows_mut(w.width, w.width).copy_from(&sc);
    Ok(&w.readout * cat + &w.readout_bias)
}

/// Encodes, propagates and pools one instance.
pub fn embed_instance(inst: &LcqpInstance, w: &MpnnWeights) -> Result<DVector<f64>> {
    let emb = mpnn_forward(&to_bipartite_graph(inst), w)?;
    pooled_embedding(&emb, w)
}

/// NT-Xent over `2N` embeddings with `N` anchor/positive pairs `(i, j)`:
/// `−(1/N) Σ log[exp(s_ij/τ) / Σ_{k≠i} exp(s_ik/τ)]`, `s` the cosine
/// similarity. Only the `N` listed anchors contribute.
pub fn nt_xent_loss(embeddings: &[Vec<f64>], pairs: &[(usize, usize)], tau: f64) -> Result<f64> {
    let n = pairs.len();
    if n == 0 {
        return Err(Error::InvalidInput("need at least one positive pair".into()));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidInput(format!("temperature {tau} must be positive")));
    }
    if embeddings.len() != 2 * n {
        return Err(Error::Dimension(format!("{} embeddings for {n} pairs, expected {}", embeddings.len(), 2 * n)));
    }
    let dim = embeddings[0].len();
    let mut unit = Vec::with_capacity(embeddings.len());
    for (i, z) in embeddings.iter().enumerate() {
        if z.len() != dim {
            return Err(Error::Dimension(format!("embedding {i} has length {}, expected {dim}", z.len())));
        }
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::NonFinite("embedding"));
        }
        if norm == 0.0 {
            return Err(Error::InvalidInput(format!("embedding {i} has zero norm")));
        }
        unit.push(z.iter().map(|v| v / norm).collect::<Vec<f64>>());
    }
    let sim = |i: usize, k: usize| -> f64 { unit[i].iter().zip(&unit[k]).map(|(a, b)| a * b).sum() };
    let mut total = 0.0;
    for &(i, j) in pairs {
        if i >= 2 * n || j >= 2 * n || i == j {
            return Err(Error::InvalidInput(format!("bad pair ({i}, {j})")));
        }
        let logits: Vec<f64> = (0..2 * n).filter(|&k| k != i).map(|k| sim(i, k) / tau).collect();
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + logits.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
        total += lse - sim(i, j) / tau;
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::e1;

    #[test]
    fn e1_graph_shape() {
        let g = to_bipartite_graph(&e1());
        assert_eq!((g.n_var_nodes, g.n_con_nodes), (2, 3));
        assert_eq!(g.ca_edges.len(), 4);
        assert_eq!(g.vv_edges.len(), 2);
        assert!(g.vv_edges.iter().all(|&(u, v, _)| u == v));
        let doc = g.to_doc("e1");
        assert_eq!(doc.nodes.side.len(), 5);
        assert_eq!(doc.edges.kind.iter().filter(|&&k| k == EdgeKind::Ca).count(), 4);
        // constraint ids start at n
        assert!(doc.edges.src[..4].iter().all(|&s| s >= 2));
    }

    #[test]
    fn zero_weights_give_identical_nodes() {
        let g = to_bipartite_graph(&e1());
        let w = MpnnWeights::zeros(2, 4).unwrap();
        let emb = mpnn_forward(&g, &w).unwrap();
        assert!(emb.var.iter().all(|&v| v == 0.0));
        assert!(emb.con.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn e1_forward_is_locked() {
        let w = MpnnWeights::seeded(DEFAULT_LAYERS, DEFAULT_WIDTH, 0).unwrap();
        let emb = mpnn_forward(&to_bipartite_graph(&e1()), &w).unwrap();
        let pooled = pooled_embedding(&emb, &w).unwrap();
        let checksum = emb.var.sum() + emb.con.sum() + pooled.sum();
        assert!((checksum - E1_CHECKSUM).abs() < 1e-12, "checksum {checksum:.17}");
    }

    const E1_CHECKSUM: f64 = -5.013_207_192_212_873;

    #[test]
    fn single_nodes_pool_to_themselves() {
        let inst = LcqpInstance::new(
            "one",
            crate::sparse::SparseMatrix::zeros(1, 1),
            crate::sparse::SparseMatrix::from_triplets(1, 1, [(0, 0, 2.0)]).unwrap(),
            vec![1.0],
            vec![-1.0],
        )
        .unwrap();
        let w = MpnnWeights::seeded(1, 3, 5).unwrap();
        let emb = mpnn_forward(&to_bipartite_graph(&inst), &w).unwrap();
        let (sv, sc) = pool_sums(&emb);
        assert_eq!(sv, emb.var.row(0).transpose());
        assert_eq!(sc, emb.con.row(0).transpose());
    }

    #[test]
    fn nt_xent_examples() {
        let same = vec![vec![0.3, -1.0], vec![0.3, -1.0]];
        assert_eq!(nt_xent_loss(&same, &[(0, 1)], 0.5).unwrap(), 0.0);

        let e = std::f64::consts::E;
        let z = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]];
        let loss = nt_xent_loss(&z, &[(0, 1), (2, 3)], 1.0).unwrap();
        assert!((loss - (-(e / (e + 2.0)).ln())).abs() < 1e-15);

        let scaled: Vec<Vec<f64>> = z.iter().map(|v| v.iter().map(|x| 10.0 * x).collect()).collect();
        assert!((nt_xent_loss(&scaled, &[(0, 1), (2, 3)], 1.0).unwrap() - loss).abs() < 1e-15);
    }

    #[test]
    fn nt_xent_rejects_bad_input() {
        let z = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
        assert!(nt_xent_loss(&z, &[(0, 1)], 1.0).is_err());
        let z = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(nt_xent_loss(&z, &[(0, 1)], 0.0).is_err());
        assert!(nt_xent_loss(&z, &[], 1.0).is_err());
        assert!(nt_xent_loss(&z, &[(0, 0)], 1.0).is_err());
    }
}
