//! Model families and the `srr-model-v1` container.
//!
//! Container layout, all integers little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `SRRMODEL` |
//! | 4     | u32 version (1) |
//! | 8     | u64 header length `L` |
//! | L     | UTF-8 JSON header |
//! | rest  | f64 tensor data, in header order, each row-major |
//!
//! Header fields: `format` (`"srr-model-v1"`), `kind`, `seed`, `hyper`,
//! `n_features`, `feature_names`, `standardization_ref` (sha256 of the
//! fitted standardization file, if any) and `tensors`, a list of
//! `{name, rows, cols}`. Forest trees are stored one tensor per tree with a
//! row per node: `[is_leaf, feature, threshold, left, right, p1]`, followed
//! by a `1 × F` `importance` tensor.

pub mod baseline;
pub mod forest;
pub mod gcn;
pub mod gru;
pub mod logistic;
pub mod temporal;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tensor::{sigmoid, LossKind, Matrix, SeededRng};
use crate::{Error, Result};

pub use baseline::{baseline_day_features, baseline_feature_names, baseline_feature_sources};
pub use forest::{forest_fit, gini, DecisionTree, ForestConfig, RandomForest, TreeNode};
pub use gcn::{gcn_normalize, GcnEncoder, PreparedGraph, SnapshotGcn};
pub use gru::Gru;
pub use logistic::{logistic_fit, LogisticConfig, LogisticModel};
pub use temporal::TemporalGcn;

pub const MODEL_FORMAT: &str = "srr-model-v1";
const MAGIC: &[u8; 8] = b"SRRMODEL";
const VERSION: u32 = 1;

/// Glorot-uniform initialisation, `U(±√(6 / (fan_in + fan_out)))`.
pub fn glorot(rows: usize, cols: usize, rng: &mut SeededRng) -> Matrix {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.uniform(-a, a)).collect();
    Matrix::from_vec(rows, cols, data).expect("length matches shape")
}

/// A differentiable classifier over one or more prepared graphs.
pub trait GraphModel {
    type Cache;

    /// Logit for the sequence (snapshot models read the last graph).
    fn forward_cached(&self, graphs: &[&PreparedGraph]) -> Result<(f64, Self::Cache)>;

    /// Accumulates `dlogit`-scaled parameter gradients into `grads`, which is
    /// laid out like `tensors()`.
    fn backward(&self, graphs: &[&PreparedGraph], cache: &Self::Cache, dlogit: f64, grads: &mut [Matrix]) -> Result<()>;

    fn tensors(&self) -> Vec<&Matrix>;

    fn tensors_mut(&mut self) -> Vec<&mut Matrix>;

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn zero_grads(&self) -> Vec<Matrix> {
        self.tensors().iter().map(|t| Matrix::zeros(t.rows(), t.cols())).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SnapshotGcn,
    TemporalGcn,
    Logistic,
    RandomForest,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::SnapshotGcn,
        ModelKind::TemporalGcn,
        ModelKind::Logistic,
        ModelKind::RandomForest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::SnapshotGcn => "snapshot_gcn",
            ModelKind::TemporalGcn => "temporal_gcn",
            ModelKind::Logistic => "logistic",
            ModelKind::RandomForest => "random_forest",
        }
    }

    /// Label used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::SnapshotGcn => "GNN (snapshot)",
            ModelKind::TemporalGcn => "Temporal GNN",
            ModelKind::Logistic => "Logistic Regression",
            ModelKind::RandomForest => "Random Forest",
        }
    }

    pub fn is_graph(self) -> bool {
        matches!(self, ModelKind::SnapshotGcn | ModelKind::TemporalGcn)
    }

    pub fn parse(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ModelKind::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidArgument(format!("unknown model kind '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelHyper {
    pub gcn_hidden: usize,
    pub mlp_hidden: usize,
    pub gru_hidden: usize,
    pub seq_len: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub loss: LossKind,
    pub logistic: LogisticConfig,
    pub forest: ForestConfig,
}

impl Default for ModelHyper {
    fn default() -> Self {
        ModelHyper {
            gcn_hidden: 32,
            mlp_hidden: 16,
            gru_hidden: 64,
            seq_len: 5,
            epochs: 50,
            batch_size: 8,
            lr: 1e-3,
            loss: LossKind::Bce,
            logistic: LogisticConfig::default(),
            forest: ForestConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Snapshot(SnapshotGcn),
    Temporal(TemporalGcn),
    Logistic(LogisticModel),
    Forest(RandomForest),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Snapshot(_) => ModelKind::SnapshotGcn,
            Model::Temporal(_) => ModelKind::TemporalGcn,
            Model::Logistic(_) => ModelKind::Logistic,
            Model::Forest(_) => ModelKind::RandomForest,
        }
    }

    /// Fresh, seeded parameters for a graph model; baselines start empty.
    pub fn init(kind: ModelKind, n_features: usize, hyper: &ModelHyper, seed: u64) -> Self {
        match kind {
            ModelKind::SnapshotGcn => Model::Snapshot(SnapshotGcn::new(n_features, hyper.gcn_hidden, hyper.mlp_hidden, seed)),
            ModelKind::TemporalGcn => Model::Temporal(TemporalGcn::new(
                n_features,
                hyper.gcn_hidden,
                hyper.gru_hidden,
                hyper.seq_len,
                seed,
            )),
            ModelKind::Logistic => Model::Logistic(LogisticModel::zeros(n_features)),
            ModelKind::RandomForest => Model::Forest(RandomForest {
                trees: Vec::new(),
                n_features,
                importance: vec![0.0; n_features],
            }),
        }
    }

    fn named_tensors(&self) -> Vec<(String, Matrix)> {
        let named = |names: &[&str], ts: Vec<&Matrix>| -> Vec<(String, Matrix)> {
            names.iter().zip(ts).map(|(n, t)| (n.to_string(), t.clone())).collect()
        };
        const ENC: [&str; 4] = ["gcn.w1", "gcn.b1", "gcn.w2", "gcn.b2"];
        match self {
            Model::Snapshot(m) => {
                let names: Vec<&str> = ENC.iter().copied().chain(["mlp.w1", "mlp.b1", "mlp.w2", "mlp.b2"]).collect();
                named(&names, m.tensors())
            }
            Model::Temporal(m) => {
                let gru = [
                    "gru.wz", "gru.uz", "gru.bz", "gru.wr", "gru.ur", "gru.br", "gru.wn", "gru.un", "gru.bn", "gru.bhn",
                ];
                let names: Vec<&str> = ENC.iter().copied().chain(gru).chain(["head.w", "head.b"]).collect();
                named(&names, m.tensors())
            }
            Model::Logistic(m) => named(&["w", "b"], vec![&m.w, &m.b]),
            Model::Forest(f) => {
                let mut out: Vec<(String, Matrix)> = f
                    .trees
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let rows = t.to_rows();
                        let data = rows.iter().flatten().copied().collect();
                        (format!("tree.{i:04}"), Matrix::from_vec(rows.len(), 6, data).expect("six columns"))
                    })
                    .collect();
                out.push(("importance".into(), Matrix::from_vec(1, f.n_features, f.importance.clone()).expect("1×F")));
                out
            }
        }
    }

    /// Trainable scalars (forest: number of tree nodes).
    pub fn parameter_count(&self) -> usize {
        match self {
            Model::Snapshot(m) => m.parameter_count(),
            Model::Temporal(m) => m.parameter_count(),
            Model::Logistic(m) => m.w.len() + m.b.len(),
            Model::Forest(f) => f.trees.iter().map(|t| t.nodes.len()).sum(),
        }
    }

    /// Probability for a graph sequence (graph models only).
    pub fn predict_graphs(&self, graphs: &[&PreparedGraph]) -> Result<f64> {
        match self {
            Model::Snapshot(m) => Ok(sigmoid(m.forward_cached(graphs)?.0)),
            Model::Temporal(m) => Ok(sigmoid(m.forward_cached(graphs)?.0)),
            _ => Err(Error::InvalidArgument(format!("{} does not score graphs", self.kind()))),
        }
    }

    /// Probabilities for day-level feature vectors (baselines only).
    pub fn predict_vectors(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        match self {
            Model::Logistic(m) => m.predict(xs),
            Model::Forest(f) => f.predict(xs),
            _ => Err(Error::InvalidArgument(format!("{} does not score feature vectors", self.kind()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TensorSpec {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    kind: ModelKind,
    seed: u64,
    hyper: ModelHyper,
    n_features: usize,
    feature_names: Vec<String>,
    standardization_ref: Option<String>,
    tensors: Vec<TensorSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub model: Model,
    pub seed: u64,
    pub hyper: ModelHyper,
    /// Input names, in column order.
    pub feature_names: Vec<String>,
    pub standardization_ref: Option<String>,
}

impl ModelState {
    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    pub fn parameter_count(&self) -> usize {
        self.model.parameter_count()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let tensors = self.model.named_tensors();
        let header = Header {
            format: MODEL_FORMAT.into(),
            kind: self.kind(),
            seed: self.seed,
            hyper: self.hyper,
            n_features: self.feature_names.len(),
            feature_names: self.feature_names.clone(),
            standardization_ref: self.standardization_ref.clone(),
            tensors: tensors
                .iter()
                .map(|(name, t)| TensorSpec {
                    name: name.clone(),
                    rows: t.rows(),
                    cols: t.cols(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(20 + json.len() + tensors.iter().map(|(_, t)| 8 * t.len()).sum::<usize>());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, t) in &tensors {
            for v in t.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Format(format!("{MODEL_FORMAT}: {m}"));
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("missing SRRMODEL magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let body = &bytes[20..];
        if body.len() < hlen {
            return Err(bad("truncated header"));
        }
        let header: Header = serde_json::from_slice(&body[..hlen]).map_err(|e| bad(&format!("header: {e}")))?;
        if header.format != MODEL_FORMAT {
            return Err(bad(&format!("format tag is '{}'", header.format)));
        }
        let mut data = &body[hlen..];
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for spec in &header.tensors {
            let n = spec.rows * spec.cols;
            if data.len() < 8 * n {
                return Err(bad(&format!("tensor {} is truncated", spec.name)));
            }
            let vals = data[..8 * n]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            data = &data[8 * n..];
            tensors.push((spec.name.clone(), Matrix::from_vec(spec.rows, spec.cols, vals)?));
        }
        if !data.is_empty() {
            return Err(bad("trailing bytes after tensors"));
        }
        let f = header.n_features;
        let model = match header.kind {
            ModelKind::RandomForest => {
                let (imp, trees) = tensors.split_last().ok_or_else(|| bad("forest without tensors"))?;
                if imp.0 != "importance" || imp.1.shape() != (1, f) {
                    return Err(bad("forest importance tensor missing or misshapen"));
                }
                let trees = trees
                    .iter()
                    .map(|(_, t)| {
                        if t.cols() != 6 {
                            return Err(bad("tree tensor must have 6 columns"));
                        }
                        let rows: Vec<[f64; 6]> = (0..t.rows()).map(|r| t.row(r).try_into().expect("6 columns")).collect();
                        DecisionTree::from_rows(&rows, f)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Model::Forest(RandomForest {
                    trees,
                    n_features: f,
                    importance: imp.1.as_slice().to_vec(),
                })
            }
            kind => {
                let mut model = Model::init(kind, f, &header.hyper, 0);
                let expected = model.named_tensors();
                if expected.len() != tensors.len() {
                    return Err(bad(&format!(
                        "{kind} expects {} tensors, file has {}",
                        expected.len(),
                        tensors.len()
                    )));
                }
                for ((en, et), (gn, gt)) in expected.iter().zip(&tensors) {
                    if en != gn || et.shape() != gt.shape() {
                        return Err(bad(&format!(
                            "tensor {gn} {:?} does not match architecture ({en} {:?})",
                            gt.shape(),
                            et.shape()
                        )));
                    }
                }
                let slots: Vec<&mut Matrix> = match &mut model {
                    Model::Snapshot(m) => m.tensors_mut(),
                    Model::Temporal(m) => m.tensors_mut(),
                    Model::Logistic(m) => vec![&mut m.w, &mut m.b],
                    Model::Forest(_) => unreachable!("handled above"),
                };
                for (slot, (_, t)) in slots.into_iter().zip(tensors) {
                    *slot = t;
                }
                model
            }
        };
        if header.feature_names.len() != f {
            return Err(bad("feature_names length differs from n_features"));
        }
        Ok(ModelState {
            model,
            seed: header.seed,
            hyper: header.hyper,
            feature_names: header.feature_names,
            standardization_ref: header.standardization_ref,
        })
    }
}
