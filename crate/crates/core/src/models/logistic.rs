use serde::{Deserialize, Serialize};

use crate::tensor::{bce_with_logits, sigmoid, AdamConfig, AdamState, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Stop once the gradient norm drops below this.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            epochs: 2000,
            lr: 1e-2,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    /// `1 × F`
    pub w: Matrix,
    /// `1 × 1`
    pub b: Matrix,
}

pub(crate) fn check_two_classes(y: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let pos = y.iter().filter(|&&v| v == 1.0).count();
    if pos == 0 {
        return Err(Error::Data("training set has no positive (class 1) samples".into()));
    }
    if pos == y.len() {
        return Err(Error::Data("training set has no negative (class 0) samples".into()));
    }
    Ok(())
}

impl LogisticModel {
    pub fn zeros(n_features: usize) -> Self {
        LogisticModel {
            w: Matrix::zeros(1, n_features),
            b: Matrix::zeros(1, 1),
        }
    }

    pub fn n_features(&self) -> usize {
        self.w.cols()
    }

    pub fn logit(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::Shape {
                op: "logistic_predict",
                left: (1, x.len()),
                right: self.w.shape(),
            });
        }
        Ok(self.w.as_slice().iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b.get(0, 0))
    }

    pub fn predict(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.logit(x).map(sigmoid)).collect()
    }

    /// Mean BCE and its gradients `(dw, db)`.
    pub fn loss_and_grad(&self, xs: &[Vec<f64>], y: &[f64]) -> Result<(f64, Matrix, Matrix)> {
        let logits = xs.iter().map(|x| self.logit(x)).collect::<Result<Vec<_>>>()?;
        let lv = bce_with_logits(&logits, y)?;
        let mut dw = Matrix::zeros(1, self.n_features());
        let mut db = 0.0;
        for (x, g) in xs.iter().zip(&lv.grad) {
            for (d, v) in dw.as_mut_slice().iter_mut().zip(x) {
                *d += g * v;
            }
            db += g;
        }
        Ok((lv.loss, dw, Matrix::from_vec(1, 1, vec![db])?))
    }
}

/// Full-batch Adam on mean BCE. Returns the model and the per-epoch loss
/// (entry 0 is the loss before the first update).
pub fn logistic_fit(xs: &[Vec<f64>], y: &[f64], cfg: &LogisticConfig) -> Result<(LogisticModel, Vec<f64>)> {
    check_two_classes(y)?;
    if xs.len() != y.len() {
        return Err(Error::Shape {
            op: "logistic_fit",
            left: (xs.len(), 1),
            right: (y.len(), 1),
        });
    }
    let f = xs[0].len();
    let mut model = LogisticModel::zeros(f);
    let mut adam = AdamState::new(
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
        &[(1, f), (1, 1)],
    );
    let mut losses = Vec::with_capacity(cfg.epochs + 1);
    for _ in 0..cfg.epochs {
        let (loss, dw, db) = model.loss_and_grad(xs, y)?;
        if !loss.is_finite() {
            return Err(Error::Numerical("logistic loss became non-finite".into()));
        }
        losses.push(loss);
        let norm = (dw.as_slice().iter().map(|g| g * g).sum::<f64>() + db.get(0, 0).powi(2)).sqrt();
        if norm < cfg.tol {
            break;
        }
        adam.step(&mut [&mut model.w, &mut model.b], &[dw, db])?;
    }
    losses.push(model.loss_and_grad(xs, y)?.0);
    Ok((model, losses))
}
