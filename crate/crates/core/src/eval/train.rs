use serde::{Deserialize, Serialize};

use crate::models::{GraphModel, ModelHyper, PreparedGraph};
use crate::tensor::{AdamConfig, AdamState, SeededRng};
use crate::{Error, Result};

/// One training example: indices into a shared list of prepared graphs,
/// plus the binary target.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    pub graphs: Vec<usize>,
    pub target: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    /// Full training loss per epoch; entry 0 is before any update.
    pub epoch_losses: Vec<f64>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
}

impl TrainLog {
    pub fn initial_loss(&self) -> Option<f64> {
        self.epoch_losses.first().copied()
    }

    pub fn best_loss(&self) -> Option<f64> {
        self.epoch_losses.get(self.best_epoch).copied()
    }
}

fn gather<'a>(graphs: &'a [PreparedGraph], idx: &[usize]) -> Vec<&'a PreparedGraph> {
    idx.iter().map(|&i| &graphs[i]).collect()
}

pub fn mean_loss<M: GraphModel>(model: &M, graphs: &[PreparedGraph], samples: &[GraphSample], hyper: &ModelHyper) -> Result<f64> {
    let logits = samples
        .iter()
        .map(|s| Ok(model.forward_cached(&gather(graphs, &s.graphs))?.0))
        .collect::<Result<Vec<f64>>>()?;
    let targets: Vec<f64> = samples.iter().map(|s| s.target).collect();
    Ok(hyper.loss.with_logits(&logits, &targets)?.loss)
}

/// Seeded mini-batch Adam. After every epoch the full training loss is
/// evaluated and the best parameters so far are retained.
pub fn train_graph_model<M: GraphModel + Clone>(
    mut model: M,
    graphs: &[PreparedGraph],
    samples: &[GraphSample],
    hyper: &ModelHyper,
    seed: u64,
) -> Result<(M, TrainLog)> {
    if samples.is_empty() {
        return Err(Error::Data("no training samples".into()));
    }
    let pos = samples.iter().filter(|s| s.target == 1.0).count();
    if pos == 0 || pos == samples.len() {
        let missing = if pos == 0 { "positive (class 1)" } else { "negative (class 0)" };
        return Err(Error::Data(format!("training set has no {missing} samples")));
    }
    if hyper.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be >= 1".into()));
    }
    let shapes: Vec<(usize, usize)> = model.tensors().iter().map(|t| t.shape()).collect();
    let mut adam = AdamState::new(
        AdamConfig {
            lr: hyper.lr,
            ..AdamConfig::default()
        },
        &shapes,
    );
    let mut rng = SeededRng::derive(seed, 0x7261_696e);
    let initial = mean_loss(&model, graphs, samples, hyper)?;
    if !initial.is_finite() {
        return Err(Error::Numerical(format!("initial training loss is {initial}")));
    }
    let mut log = TrainLog {
        epoch_losses: vec![initial],
        best_epoch: 0,
    };
    let mut best = model.clone();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for epoch in 1..=hyper.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(hyper.batch_size) {
            let mut logits = Vec::with_capacity(batch.len());
            let mut caches = Vec::with_capacity(batch.len());
            for &i in batch {
                let (logit, cache) = model.forward_cached(&gather(graphs, &samples[i].graphs))?;
                logits.push(logit);
                caches.push(cache);
            }
            let targets: Vec<f64> = batch.iter().map(|&i| samples[i].target).collect();
            let lv = hyper.loss.with_logits(&logits, &targets)?;
            if !lv.loss.is_finite() {
                return Err(Error::Numerical(format!("batch loss became {} in epoch {epoch}", lv.loss)));
            }
            let mut grads = model.zero_grads();
            for ((&i, cache), &g) in batch.iter().zip(&caches).zip(&lv.grad) {
                model.backward(&gather(graphs, &samples[i].graphs), cache, g, &mut grads)?;
            }
            if grads.iter().any(|g| g.as_slice().iter().any(|v| !v.is_finite())) {
                return Err(Error::Numerical(format!("non-finite gradient in epoch {epoch}")));
            }
            let mut params = model.tensors_mut();
            adam.step(&mut params, &grads)?;
        }
        let loss = mean_loss(&model, graphs, samples, hyper)?;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("training loss became {loss} after epoch {epoch}")));
        }
        log.epoch_losses.push(loss);
        if loss < log.epoch_losses[log.best_epoch] {
            log.best_epoch = epoch;
            best = model.clone();
        }
    }
    Ok((best, log))
}
