//! Unregularized logistic regression fitted by full-batch gradient descent.

use super::{check_fit_inputs, FittedModel, Model};
use crate::data::{sigmoid, Dataset};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let z = self.bias + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>();
        sigmoid(z)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Fits on `cols` (expected standardized) and returns the mean log-loss
/// before the first epoch and after every epoch (`epochs + 1` values).
pub fn fit_logistic_traced(
    train: &Dataset,
    cols: &[usize],
    lr: f64,
    epochs: usize,
) -> Result<(FittedModel, Vec<f64>)> {
    check_fit_inputs(train, cols)?;
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::invalid(format!("logistic learning rate must be > 0, got {lr}")));
    }
    let n = train.n_rows();
    let x: Vec<&[f64]> = cols.iter().map(|&j| train.column(j)).collect();
    let y: Vec<f64> = train.labels().iter().map(|&l| l as f64).collect();
    let mut weights = vec![0.0; cols.len()];
    let mut bias = 0.0;
    let mut z = vec![0.0; n];
    let mut losses = Vec::with_capacity(epochs + 1);

    for epoch in 0..=epochs {
        z.iter_mut().for_each(|v| *v = bias);
        for (w, col) in weights.iter().zip(&x) {
            for (zi, xi) in z.iter_mut().zip(col.iter()) {
                *zi += w * xi;
            }
        }
        let loss = z.iter().zip(&y).map(|(&zi, &yi)| softplus(zi) - yi * zi).sum::<f64>() / n as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "logistic loss at epoch {epoch} (learning rate {lr} too high?)"
            )));
        }
        losses.push(loss);
        if epoch == epochs {
            break;
        }
        let residual: Vec<f64> = z.iter().zip(&y).map(|(&zi, &yi)| sigmoid(zi) - yi).collect();
        for (w, col) in weights.iter_mut().zip(&x) {
            let g = residual.iter().zip(col.iter()).map(|(r, xi)| r * xi).sum::<f64>() / n as f64;
            *w -= lr * g;
        }
        bias -= lr * residual.iter().sum::<f64>() / n as f64;
    }
    Ok((
        FittedModel {
            model: Model::Logistic(LogisticModel { weights, bias }),
            feature_indices: cols.to_vec(),
        },
        losses,
    ))
}

pub fn fit_logistic(train: &Dataset, cols: &[usize], lr: f64, epochs: usize) -> Result<FittedModel> {
    fit_logistic_traced(train, cols, lr, epochs).map(|(m, _)| m)
}
