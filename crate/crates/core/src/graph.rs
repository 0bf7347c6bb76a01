//! Rolling Spearman correlation graphs, the optional static sector layer and
//! fixed-length graph sequences.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::features::FeaturePanel;
use crate::market_data::ReturnPanel;
use crate::tensor::Matrix;
use crate::{Error, Result};

pub const GRAPH_FORMAT: &str = "srr-graph-v1";
pub const CORRELATION_LAYER: &str = "correlation";
pub const SECTOR_LAYER: &str = "sector";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    /// Trailing return window for the correlation estimate.
    pub window: usize,
    /// Edge threshold on |ρ| (inclusive).
    pub tau: f64,
    /// Sampling stride between model samples, in trading days.
    pub stride: usize,
    /// Snapshots per temporal sequence.
    pub seq_len: usize,
    /// Adds the static same-sector layer (fused by edge-set union).
    pub sector_layer: bool,
    /// Feed |ρ| weights to the GCN instead of binary edges.
    pub weighted: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            window: 7,
            tau: 0.5,
            stride: 5,
            seq_len: 5,
            sector_layer: false,
            weighted: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spearman {
    pub rho: f64,
    /// Set when either rank vector is constant; `rho` is then 0.
    pub degenerate: bool,
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && x[idx[end]] == x[idx[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &k in &idx[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson_of_ranks(rx: &[f64], ry: &[f64]) -> Spearman {
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(ry) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Spearman { rho: 0.0, degenerate: true };
    }
    Spearman {
        rho: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Spearman> {
    if x.len() != y.len() {
        return Err(Error::Shape {
            op: "spearman",
            left: (x.len(), 1),
            right: (y.len(), 1),
        });
    }
    if x.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "spearman needs a window of at least 3, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("spearman input"));
    }
    Ok(pearson_of_ranks(&average_ranks(x), &average_ranks(y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// One day's multi-layer market graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSnapshot {
    pub date: String,
    /// Index into the feature panel calendar.
    pub t: usize,
    pub node_ids: Vec<String>,
    pub layers: BTreeMap<String, Vec<Edge>>,
    pub node_features: Matrix,
    pub graph_label: Option<bool>,
}

impl GraphSnapshot {
    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn correlation_edges(&self) -> &[Edge] {
        self.layers.get(CORRELATION_LAYER).map_or(&[], Vec::as_slice)
    }

    /// Share of node pairs joined in the correlation layer.
    pub fn edge_density(&self) -> f64 {
        let n = self.n_nodes();
        if n < 2 {
            return 0.0;
        }
        self.correlation_edges().len() as f64 / (n * (n - 1) / 2) as f64
    }

    /// Symmetric adjacency with zero diagonal. Layers are fused by edge-set
    /// union; weighted mode uses |ρ| (sector edges weigh 1, the larger weight
    /// wins on overlap).
    pub fn adjacency(&self, use_sector: bool, weighted: bool) -> Matrix {
        let n = self.n_nodes();
        let mut a = Matrix::zeros(n, n);
        let mut put = |e: &Edge| {
            let w = if weighted { e.weight.abs() } else { 1.0 };
            let w = w.max(a.get(e.i, e.j));
            a.set(e.i, e.j, w);
            a.set(e.j, e.i, w);
        };
        self.correlation_edges().iter().for_each(&mut put);
        if use_sector {
            if let Some(edges) = self.layers.get(SECTOR_LAYER) {
                edges.iter().for_each(&mut put);
            }
        }
        a
    }
}

fn sector_edges(nodes: &[String], sector_map: &BTreeMap<String, String>) -> Result<Vec<Edge>> {
    for key in sector_map.keys() {
        if !nodes.contains(key) {
            return Err(Error::Data(format!("unknown ticker {key} in sector map")));
        }
    }
    let sectors = nodes
        .iter()
        .map(|n| {
            sector_map
                .get(n)
                .ok_or_else(|| Error::Data(format!("ticker {n} has no entry in the sector map")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut edges = Vec::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if sectors[i] == sectors[j] {
                edges.push(Edge { i, j, weight: 1.0 });
            }
        }
    }
    Ok(edges)
}

fn return_index(returns: &ReturnPanel, date: &str) -> Result<usize> {
    returns
        .dates
        .binary_search_by(|d| d.as_str().cmp(date))
        .map_err(|_| Error::Data(format!("no return observation on {date}")))
}

fn correlation_edges(returns: &ReturnPanel, r_end: usize, cfg: &GraphConfig) -> Result<Vec<Edge>> {
    let w = cfg.window;
    if w < 3 {
        return Err(Error::InvalidArgument(format!("correlation window must be >= 3, got {w}")));
    }
    if r_end + 1 < w {
        return Err(Error::Data(format!(
            "{} return observations before {}, window needs {w}",
            r_end + 1,
            returns.dates[r_end]
        )));
    }
    let ranks: Vec<Vec<f64>> = returns
        .returns
        .iter()
        .map(|r| average_ranks(&r[r_end + 1 - w..=r_end]))
        .collect();
    let mut edges = Vec::new();
    for i in 0..ranks.len() {
        for j in i + 1..ranks.len() {
            let s = pearson_of_ranks(&ranks[i], &ranks[j]);
            if !s.degenerate && s.rho.abs() >= cfg.tau {
                edges.push(Edge { i, j, weight: s.rho });
            }
        }
    }
    Ok(edges)
}

/// Graph for feature date `t`: correlation layer over the trailing window of
/// returns ending on that date, optional sector layer, node features.
pub fn build_snapshot(
    returns: &ReturnPanel,
    features: &FeaturePanel,
    t: usize,
    cfg: &GraphConfig,
    sector_map: Option<&BTreeMap<String, String>>,
) -> Result<GraphSnapshot> {
    let date = features
        .dates
        .get(t)
        .ok_or_else(|| Error::InvalidArgument(format!("feature date index {t} out of range")))?;
    if returns.tickers != features.tickers {
        return Err(Error::Data("return and feature panels list different tickers".into()));
    }
    let r_end = return_index(returns, date)?;
    let mut layers = BTreeMap::new();
    layers.insert(CORRELATION_LAYER.to_string(), correlation_edges(returns, r_end, cfg)?);
    if let Some(map) = sector_map {
        layers.insert(SECTOR_LAYER.to_string(), sector_edges(&features.tickers, map)?);
    }
    Ok(GraphSnapshot {
        date: date.clone(),
        t,
        node_ids: features.tickers.clone(),
        layers,
        node_features: Matrix::from_rows(&features.node_rows(t))?,
        graph_label: features.graph_labels.get(t).copied().flatten(),
    })
}

/// One snapshot per feature date.
pub fn build_all_snapshots(
    returns: &ReturnPanel,
    features: &FeaturePanel,
    cfg: &GraphConfig,
    sector_map: Option<&BTreeMap<String, String>>,
) -> Result<Vec<GraphSnapshot>> {
    (0..features.n_dates())
        .map(|t| build_snapshot(returns, features, t, cfg, sector_map))
        .collect()
}

/// `k` consecutive sampled snapshots, labelled by the last one.
#[derive(Debug, Clone)]
pub struct GraphSequence<'a> {
    pub snapshots: Vec<&'a GraphSnapshot>,
    pub label: Option<bool>,
}

fn check_k_stride(k: usize, stride: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::InvalidArgument("sequence length must be >= 1".into()));
    }
    if stride < 1 {
        return Err(Error::InvalidArgument("sampling stride must be >= 1".into()));
    }
    Ok(())
}

/// Sampled positions inside `range`: the last date of every complete block
/// of `stride` dates, counted from `range.start`.
pub fn sample_positions(range: Range<usize>, stride: usize) -> Vec<usize> {
    if stride == 0 {
        return Vec::new();
    }
    (range.start + stride - 1..range.end).step_by(stride).collect()
}

/// Subsamples every `stride` snapshots, then slides a window of `k`.
pub fn build_sequences(snapshots: &[GraphSnapshot], k: usize, stride: usize) -> Result<Vec<GraphSequence<'_>>> {
    check_k_stride(k, stride)?;
    let sampled: Vec<&GraphSnapshot> = sample_positions(0..snapshots.len(), stride)
        .into_iter()
        .map(|p| &snapshots[p])
        .collect();
    if sampled.len() < k {
        return Err(Error::InvalidArgument(format!(
            "{} sampled snapshots cannot fill a sequence of {k}",
            sampled.len()
        )));
    }
    Ok(sampled
        .windows(k)
        .map(|w| GraphSequence {
            snapshots: w.to_vec(),
            label: w[k - 1].graph_label,
        })
        .collect())
}

/// Position lists for sequences whose final snapshot is a sampled date in
/// `range`. Earlier members may precede `range` (history is input only);
/// samples without `k - 1` strides of history are skipped.
pub fn sequence_positions(range: Range<usize>, k: usize, stride: usize) -> Result<Vec<Vec<usize>>> {
    check_k_stride(k, stride)?;
    let back = (k - 1) * stride;
    Ok(sample_positions(range, stride)
        .into_iter()
        .filter(|&end| end >= back)
        .map(|end| (0..k).map(|j| end - back + j * stride).collect())
        .collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphFileHeader {
    format: String,
    nodes: Vec<String>,
    features: String,
    window: usize,
    tau: f64,
    layers: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphRecord {
    date: String,
    t: usize,
    label: Option<u8>,
    edges: BTreeMap<String, Vec<(usize, usize, f64)>>,
}

/// Line-delimited `srr-graph-v1`: a header line, then one record per date.
/// Node features are referenced by `features_ref` and looked up by date.
pub fn write_graph_file(snapshots: &[GraphSnapshot], cfg: &GraphConfig, features_ref: &str) -> Result<String> {
    let first = snapshots
        .first()
        .ok_or_else(|| Error::InvalidArgument("no snapshots to write".into()))?;
    let header = GraphFileHeader {
        format: GRAPH_FORMAT.into(),
        nodes: first.node_ids.clone(),
        features: features_ref.into(),
        window: cfg.window,
        tau: cfg.tau,
        layers: first.layers.keys().cloned().collect(),
    };
    let mut out = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
    out.push('\n');
    for s in snapshots {
        let rec = GraphRecord {
            date: s.date.clone(),
            t: s.t,
            label: s.graph_label.map(u8::from),
            edges: s
                .layers
                .iter()
                .map(|(k, es)| (k.clone(), es.iter().map(|e| (e.i, e.j, e.weight)).collect()))
                .collect(),
        };
        let _ = writeln!(out, "{}", serde_json::to_string(&rec).map_err(|e| Error::Format(e.to_string()))?);
    }
    Ok(out)
}

/// Header fields of a graph file.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFileInfo {
    pub nodes: Vec<String>,
    pub features: String,
    pub window: usize,
    pub tau: f64,
}

/// Parses a graph file; node features come from `features` (which should
/// already be standardised the way the models expect).
pub fn read_graph_file(text: &str, features: &FeaturePanel) -> Result<(GraphFileInfo, Vec<GraphSnapshot>)> {
    let mut lines = text.lines();
    let header: GraphFileHeader = serde_json::from_str(lines.next().unwrap_or(""))
        .map_err(|e| Error::Format(format!("graph file header: {e}")))?;
    if header.format != GRAPH_FORMAT {
        return Err(Error::Format(format!(
            "graph file has format {:?}, expected {GRAPH_FORMAT}",
            header.format
        )));
    }
    if header.nodes != features.tickers {
        return Err(Error::Data("graph file nodes differ from feature panel tickers".into()));
    }
    let n = header.nodes.len();
    let mut snaps = Vec::new();
    for (k, line) in lines.enumerate() {
        let rec: GraphRecord =
            serde_json::from_str(line).map_err(|e| Error::Format(format!("graph file line {}: {e}", k + 2)))?;
        let t = features
            .date_index(&rec.date)
            .ok_or_else(|| Error::Data(format!("graph date {} missing from features", rec.date)))?;
        let mut layers = BTreeMap::new();
        for (name, es) in rec.edges {
            let edges = es
                .into_iter()
                .map(|(i, j, weight)| {
                    if i >= j || j >= n {
                        Err(Error::Format(format!("graph file line {}: bad edge ({i}, {j})", k + 2)))
                    } else {
                        Ok(Edge { i, j, weight })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            layers.insert(name, edges);
        }
        snaps.push(GraphSnapshot {
            date: rec.date,
            t,
            node_ids: header.nodes.clone(),
            layers,
            node_features: Matrix::from_rows(&features.node_rows(t))?,
            graph_label: rec.label.map(|l| l == 1),
        });
    }
    let info = GraphFileInfo {
        nodes: header.nodes,
        features: header.features,
        window: header.window,
        tau: header.tau,
    };
    Ok((info, snaps))
}
