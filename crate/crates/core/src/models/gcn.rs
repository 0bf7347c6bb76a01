//! Two-layer GCN encoder with global mean pooling and the snapshot
//! classifier (encoder → MLP → sigmoid).

use crate::graph::GraphSnapshot;
use crate::tensor::{relu, relu_grad, sigmoid, Matrix, SeededRng};
use crate::{Error, Result};

use super::{glorot, GraphModel};

/// `D̂^{-1/2} (A + I) D̂^{-1/2}` with `D̂` the degree matrix of `A + I`.
pub fn gcn_normalize(adjacency: &Matrix) -> Result<Matrix> {
    let (n, m) = adjacency.shape();
    if n != m {
        return Err(Error::Shape {
            op: "gcn_normalize",
            left: (n, m),
            right: (m, n),
        });
    }
    if !adjacency.is_symmetric() {
        return Err(Error::InvalidArgument("adjacency is not symmetric".into()));
    }
    if (0..n).any(|i| adjacency.get(i, i) != 0.0) {
        return Err(Error::InvalidArgument("adjacency has a non-zero diagonal".into()));
    }
    if adjacency.as_slice().iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidArgument("adjacency weights must be finite and non-negative".into()));
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| 1.0 / (1.0 + adjacency.row(i).iter().sum::<f64>()).sqrt())
        .collect();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let a = if i == j { 1.0 } else { adjacency.get(i, j) };
            if a != 0.0 {
                out.set(i, j, a * inv_sqrt[i] * inv_sqrt[j]);
            }
        }
    }
    Ok(out)
}

/// Parameter-independent pieces of one graph: `Ã` and `Ã X`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedGraph {
    pub norm_adj: Matrix,
    pub agg_features: Matrix,
}

impl PreparedGraph {
    pub fn new(adjacency: &Matrix, features: &Matrix) -> Result<Self> {
        let norm_adj = gcn_normalize(adjacency)?;
        let agg_features = norm_adj.matmul(features)?;
        Ok(PreparedGraph { norm_adj, agg_features })
    }

    pub fn from_snapshot(s: &GraphSnapshot, use_sector: bool, weighted: bool) -> Result<Self> {
        Self::new(&s.adjacency(use_sector, weighted), &s.node_features)
    }

    pub fn n_features(&self) -> usize {
        self.agg_features.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnEncoder {
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
}

#[derive(Debug, Clone)]
pub struct EncoderCache {
    s1: Matrix,
    p2: Matrix,
    s2: Matrix,
}

impl GcnEncoder {
    pub const N_TENSORS: usize = 4;

    pub fn new(n_features: usize, hidden: usize, rng: &mut SeededRng) -> Self {
        GcnEncoder {
            w1: glorot(n_features, hidden, rng),
            b1: Matrix::zeros(1, hidden),
            w2: glorot(hidden, hidden, rng),
            b2: Matrix::zeros(1, hidden),
        }
    }

    pub fn n_features(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden(&self) -> usize {
        self.w2.cols()
    }

    /// Pooled graph embedding `1 × hidden`.
    pub fn forward(&self, g: &PreparedGraph) -> Result<(Matrix, EncoderCache)> {
        if g.n_features() != self.n_features() {
            return Err(Error::Shape {
                op: "gcn_forward",
                left: g.agg_features.shape(),
                right: self.w1.shape(),
            });
        }
        let s1 = g.agg_features.matmul(&self.w1)?.add_row(&self.b1)?;
        let h1 = s1.map(relu);
        let p2 = g.norm_adj.matmul(&h1)?;
        let s2 = p2.matmul(&self.w2)?.add_row(&self.b2)?;
        let z = s2.map(relu).row_mean()?;
        Ok((z, EncoderCache { s1, p2, s2 }))
    }

    /// Accumulates parameter gradients for an upstream `dz` into
    /// `grads[0..4]`.
    pub fn backward(&self, g: &PreparedGraph, cache: &EncoderCache, dz: &Matrix, grads: &mut [Matrix]) -> Result<()> {
        let n = cache.s2.rows();
        let inv_n = 1.0 / n as f64;
        let mut ds2 = Matrix::zeros(n, self.hidden());
        for i in 0..n {
            for j in 0..self.hidden() {
                ds2.set(i, j, dz.get(0, j) * inv_n * relu_grad(cache.s2.get(i, j)));
            }
        }
        grads[2].add_assign(&cache.p2.t_matmul(&ds2)?)?;
        grads[3].add_assign(&ds2.col_sum())?;
        let dp2 = ds2.matmul_t(&self.w2)?;
        // Ã is symmetric
        let dh1 = g.norm_adj.t_matmul(&dp2)?;
        let ds1 = dh1.hadamard(&cache.s1.map(relu_grad))?;
        grads[0].add_assign(&g.agg_features.t_matmul(&ds1)?)?;
        grads[1].add_assign(&ds1.col_sum())?;
        Ok(())
    }

    pub fn tensors(&self) -> Vec<&Matrix> {
        vec![&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        vec![&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }
}

/// Snapshot classifier: GCN encoder, then a `hidden → mlp → 1` ReLU MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotGcn {
    pub encoder: GcnEncoder,
    pub wm1: Matrix,
    pub bm1: Matrix,
    pub wm2: Matrix,
    pub bm2: Matrix,
}

#[derive(Debug, Clone)]
pub struct SnapshotCache {
    enc: EncoderCache,
    z: Matrix,
    a: Matrix,
    m: Matrix,
}

impl SnapshotGcn {
    pub fn new(n_features: usize, hidden: usize, mlp_hidden: usize, seed: u64) -> Self {
        let mut rng = SeededRng::new(seed);
        let encoder = GcnEncoder::new(n_features, hidden, &mut rng);
        SnapshotGcn {
            encoder,
            wm1: glorot(hidden, mlp_hidden, &mut rng),
            bm1: Matrix::zeros(1, mlp_hidden),
            wm2: glorot(mlp_hidden, 1, &mut rng),
            bm2: Matrix::zeros(1, 1),
        }
    }

    /// Pooled embedding and crash probability for one graph.
    pub fn forward(&self, g: &PreparedGraph) -> Result<(Matrix, f64)> {
        let (logit, cache) = self.forward_one(g)?;
        Ok((cache.z, sigmoid(logit)))
    }

    fn forward_one(&self, g: &PreparedGraph) -> Result<(f64, SnapshotCache)> {
        let (z, enc) = self.encoder.forward(g)?;
        let a = z.matmul(&self.wm1)?.add_row(&self.bm1)?;
        let m = a.map(relu);
        let logit = m.matmul(&self.wm2)?.add_row(&self.bm2)?.get(0, 0);
        Ok((logit, SnapshotCache { enc, z, a, m }))
    }
}

impl GraphModel for SnapshotGcn {
    type Cache = SnapshotCache;

    fn forward_cached(&self, graphs: &[&PreparedGraph]) -> Result<(f64, Self::Cache)> {
        let g = graphs
            .last()
            .ok_or_else(|| Error::InvalidArgument("snapshot model needs one graph".into()))?;
        self.forward_one(g)
    }

    fn backward(&self, graphs: &[&PreparedGraph], cache: &Self::Cache, dlogit: f64, grads: &mut [Matrix]) -> Result<()> {
        let g = graphs.last().expect("checked in forward");
        let dlogit_m = Matrix::from_vec(1, 1, vec![dlogit])?;
        grads[6].add_assign(&cache.m.t_matmul(&dlogit_m)?)?;
        grads[7].add_assign(&dlogit_m)?;
        let dm = dlogit_m.matmul_t(&self.wm2)?;
        let da = dm.hadamard(&cache.a.map(relu_grad))?;
        grads[4].add_assign(&cache.z.t_matmul(&da)?)?;
        grads[5].add_assign(&da)?;
        let dz = da.matmul_t(&self.wm1)?;
        self.encoder.backward(g, &cache.enc, &dz, &mut grads[..GcnEncoder::N_TENSORS])
    }

    fn tensors(&self) -> Vec<&Matrix> {
        let mut t = self.encoder.tensors();
        t.extend([&self.wm1, &self.bm1, &self.wm2, &self.bm2]);
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut t = self.encoder.tensors_mut();
        t.extend([&mut self.wm1, &mut self.bm1, &mut self.wm2, &mut self.bm2]);
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adj(n: usize, edges: &[(usize, usize)]) -> Matrix {
        let mut a = Matrix::zeros(n, n);
        for &(i, j) in edges {
            a.set(i, j, 1.0);
            a.set(j, i, 1.0);
        }
        a
    }

    #[test]
    fn empty_graph_normalizes_to_identity() {
        assert_eq!(gcn_normalize(&Matrix::zeros(4, 4)).unwrap(), Matrix::identity(4));
    }

    #[test]
    fn path_graph_entries() {
        let a = gcn_normalize(&adj(3, &[(0, 1), (1, 2)])).unwrap();
        // d̂ = [2, 3, 2]
        assert!((a.get(0, 1) - 1.0 / 6f64.sqrt()).abs() < 1e-12);
        assert!((a.get(0, 1) - 0.40825).abs() < 1e-5);
        assert!((a.get(0, 0) - 0.5).abs() < 1e-12);
        assert!((a.get(1, 1) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(a.get(0, 2), 0.0);
    }

    #[test]
    fn triangle_is_uniform() {
        let a = gcn_normalize(&adj(3, &[(0, 1), (1, 2), (0, 2)])).unwrap();
        for v in a.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_adjacency() {
        let mut a = Matrix::zeros(2, 2);
        a.set(0, 1, 1.0);
        assert!(gcn_normalize(&a).is_err());
        let mut d = Matrix::zeros(2, 2);
        d.set(0, 0, 1.0);
        assert!(gcn_normalize(&d).is_err());
        assert!(gcn_normalize(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn zero_weights_give_half() {
        let mut m = SnapshotGcn::new(3, 4, 2, 1);
        for t in m.tensors_mut() {
            t.fill(0.0);
        }
        let x = Matrix::from_rows(&[vec![1.0, -2.0, 0.5], vec![0.3, 0.3, 9.0]]).unwrap();
        let g = PreparedGraph::new(&adj(2, &[(0, 1)]), &x).unwrap();
        assert_eq!(m.forward(&g).unwrap().1, 0.5);
    }

    #[test]
    fn isolated_single_node_sees_only_itself() {
        let m = SnapshotGcn::new(2, 8, 4, 3);
        let x = Matrix::from_rows(&[vec![0.4, -1.1]]).unwrap();
        let g = PreparedGraph::new(&Matrix::zeros(1, 1), &x).unwrap();
        assert_eq!(g.norm_adj, Matrix::identity(1));
        assert_eq!(g.agg_features, x);
        let x2 = Matrix::from_rows(&[vec![0.5, -1.1]]).unwrap();
        let g2 = PreparedGraph::new(&Matrix::zeros(1, 1), &x2).unwrap();
        assert_ne!(m.forward(&g).unwrap().1, m.forward(&g2).unwrap().1);
    }

    #[test]
    fn feature_width_mismatch_is_an_error() {
        let m = SnapshotGcn::new(3, 4, 2, 1);
        let g = PreparedGraph::new(&Matrix::zeros(2, 2), &Matrix::zeros(2, 5)).unwrap();
        assert!(m.forward(&g).is_err());
    }
}
