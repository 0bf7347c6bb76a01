//! GCN+GRU prototype: a shared snapshot encoder embeds each graph of the
//! sequence, the GRU aggregates the embeddings and a logistic head reads the
//! final hidden state.

use crate::tensor::{sigmoid, Matrix, SeededRng};
use crate::{Error, Result};

use super::gcn::{EncoderCache, GcnEncoder, PreparedGraph};
use super::gru::{Gru, GruStep};
use super::{glorot, GraphModel};

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalGcn {
    pub encoder: GcnEncoder,
    pub gru: Gru,
    pub wo: Matrix,
    pub bo: Matrix,
    pub seq_len: usize,
}

#[derive(Debug, Clone)]
pub struct TemporalCache {
    enc: Vec<EncoderCache>,
    steps: Vec<GruStep>,
    h: Matrix,
}

impl TemporalGcn {
    pub fn new(n_features: usize, hidden: usize, gru_hidden: usize, seq_len: usize, seed: u64) -> Self {
        let mut rng = SeededRng::new(seed);
        let encoder = GcnEncoder::new(n_features, hidden, &mut rng);
        let gru = Gru::new(hidden, gru_hidden, &mut rng);
        TemporalGcn {
            encoder,
            gru,
            wo: glorot(gru_hidden, 1, &mut rng),
            bo: Matrix::zeros(1, 1),
            seq_len,
        }
    }

    pub fn predict(&self, graphs: &[&PreparedGraph]) -> Result<f64> {
        Ok(sigmoid(self.forward_cached(graphs)?.0))
    }
}

impl GraphModel for TemporalGcn {
    type Cache = TemporalCache;

    fn forward_cached(&self, graphs: &[&PreparedGraph]) -> Result<(f64, Self::Cache)> {
        if graphs.len() != self.seq_len {
            return Err(Error::InvalidArgument(format!(
                "sequence has {} graphs, model expects {}",
                graphs.len(),
                self.seq_len
            )));
        }
        let mut zs = Vec::with_capacity(graphs.len());
        let mut enc = Vec::with_capacity(graphs.len());
        for g in graphs {
            let (z, c) = self.encoder.forward(g)?;
            zs.push(z);
            enc.push(c);
        }
        let (h, steps) = self.gru.forward(&zs)?;
        let logit = h.matmul(&self.wo)?.add(&self.bo)?.get(0, 0);
        Ok((logit, TemporalCache { enc, steps, h }))
    }

    fn backward(&self, graphs: &[&PreparedGraph], cache: &Self::Cache, dlogit: f64, grads: &mut [Matrix]) -> Result<()> {
        let e = GcnEncoder::N_TENSORS;
        let r = e + Gru::N_TENSORS;
        let dl = Matrix::from_vec(1, 1, vec![dlogit])?;
        grads[r].add_assign(&cache.h.t_matmul(&dl)?)?;
        grads[r + 1].add_assign(&dl)?;
        let dh = dl.matmul_t(&self.wo)?;
        let dzs = self.gru.backward(&cache.steps, &dh, &mut grads[e..r])?;
        for ((g, c), dz) in graphs.iter().zip(&cache.enc).zip(&dzs) {
            self.encoder.backward(g, c, dz, &mut grads[..e])?;
        }
        Ok(())
    }

    fn tensors(&self) -> Vec<&Matrix> {
        let mut t = self.encoder.tensors();
        t.extend(self.gru.tensors());
        t.extend([&self.wo, &self.bo]);
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut t = self.encoder.tensors_mut();
        t.extend(self.gru.tensors_mut());
        t.extend([&mut self.wo, &mut self.bo]);
        t
    }
}
