//! Primal soft-margin linear SVM trained by mini-batch subgradient descent
//! with the Pegasos step schedule eta_t = 1/(lambda * t).
//!
//! Labels map to {-1, +1} internally. The objective is
//! lambda/2 * |w|^2 + mean(hinge(1 - y (w.x + b))); the bias is updated by
//! the hinge subgradient but not regularized.

use super::fnn::training_error;
use super::{Classifier, TensorData, TensorReader, TrainConfig, TrainHistory, TrainedModel, VectorizedDataset};
use crate::error::{Error, Result};
use crate::numerics::Prng;
use crate::textvec::SparseVector;

/// Hyperplane weights, bias, and the regularization strength used to train.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub w: Vec<f64>,
    pub b: f64,
    pub lambda: f64,
}

impl SvmParams {
    pub fn zeros(input_dim: usize, lambda: f64) -> Self {
        SvmParams {
            w: vec![0.0; input_dim],
            b: 0.0,
            lambda,
        }
    }

    /// Signed margin w.x + b.
    pub fn score(&self, x: &SparseVector) -> Result<f64> {
        if x.dim != self.w.len() {
            return Err(Error::Dimension(format!(
                "input has dimension {}, model expects {}",
                x.dim,
                self.w.len()
            )));
        }
        Ok(x.dot_dense(&self.w) + self.b)
    }

    pub(super) fn tensors(&self) -> Vec<TensorData> {
        vec![
            TensorData::vector("w", &self.w),
            TensorData::scalar("b", self.b),
            TensorData::scalar("lambda", self.lambda),
        ]
    }

    pub(super) fn from_tensors(input_dim: usize, reader: &TensorReader) -> Result<Self> {
        Ok(SvmParams {
            w: reader.vector("w", input_dim)?,
            b: reader.scalar("b")?,
            lambda: reader.scalar("lambda")?,
        })
    }
}

/// Regularized hinge objective over a dataset.
pub fn svm_objective(params: &SvmParams, data: &VectorizedDataset) -> Result<f64> {
    let reg = 0.5 * params.lambda * params.w.iter().map(|w| w * w).sum::<f64>();
    let mut hinge_sum = 0.0;
    for (x, &y) in data.xs.iter().zip(&data.ys) {
        let y = f64::from(y) * 2.0 - 1.0;
        hinge_sum += (1.0 - y * params.score(x)?).max(0.0);
    }
    Ok(reg + hinge_sum / data.len() as f64)
}

/// Train by Pegasos-style subgradient descent: per batch t (counted across
/// epochs, starting at 1), scale w by (1 - 1/t) and add
/// eta_t/|B| * sum of y x over margin violators; eta_t = 1/(lambda t).
pub fn train_svm(
    data: &VectorizedDataset,
    eval: Option<&VectorizedDataset>,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    config.validate()?;
    let mut rng = Prng::new(config.seed);
    let mut params = SvmParams::zeros(data.dim, config.lambda);

    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = TrainHistory {
        train_loss: Vec::with_capacity(config.epochs),
        eval_loss: Vec::new(),
    };
    let mut t: u64 = 0;

    for epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        for (batch_index, batch) in order.chunks(config.batch_size).enumerate() {
            t += 1;
            let eta = 1.0 / (config.lambda * t as f64);
            // Margin violators are judged against the pre-update weights.
            let violators: Vec<usize> = batch
                .iter()
                .copied()
                .filter(|&i| {
                    let y = f64::from(data.ys[i]) * 2.0 - 1.0;
                    y * (data.xs[i].dot_dense(&params.w) + params.b) < 1.0
                })
                .collect();
            // (1 - eta*lambda) = (1 - 1/t); at t = 1 this zeroes w before the
            // first data term, the Pegasos start.
            let shrink = 1.0 - 1.0 / t as f64;
            for w in params.w.iter_mut() {
                *w *= shrink;
            }
            let step = eta / batch.len() as f64;
            let mut bias_step = 0.0;
            for &i in &violators {
                let y = f64::from(data.ys[i]) * 2.0 - 1.0;
                for &(j, v) in &data.xs[i].entries {
                    params.w[j] += step * y * v;
                }
                bias_step += y;
            }
            params.b += step * bias_step;
            if !params.b.is_finite() || params.w.iter().any(|w| !w.is_finite()) {
                return Err(training_error(
                    Error::Numerical("non-finite SVM weights".into()),
                    epoch,
                    batch_index,
                ));
            }
        }
        history.train_loss.push(svm_objective(&params, data)?);
        if let Some(eval) = eval {
            history.eval_loss.push(svm_objective(&params, eval)?);
        }
    }
    Ok(TrainedModel {
        classifier: Classifier::Svm(params),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sparse(dim: usize, pairs: &[(usize, f64)]) -> SparseVector {
        SparseVector {
            dim,
            entries: pairs.to_vec(),
        }
    }

    #[test]
    fn separates_two_opposed_points() {
        let xs = vec![sparse(2, &[(0, 1.0)]), sparse(2, &[(0, -1.0)])];
        let ys = vec![1, 0];
        let data = VectorizedDataset::new(2, xs, ys).unwrap();
        let config = TrainConfig {
            epochs: 20,
            batch_size: 2,
            lambda: 1e-4,
            seed: 1,
            ..TrainConfig::default()
        };
        let trained = train_svm(&data, None, &config).unwrap();
        let preds = trained.classifier.predict_all(&data).unwrap();
        assert_eq!(preds, vec![1, 0]);
    }

    #[test]
    fn objective_trailing_average_decreases() {
        // Separable blob data: class decided by which half of the features
        // carries weight.
        let dim = 8;
        let mut rng = Prng::new(42);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for k in 0..80 {
            let class = k % 2;
            let base = if class == 1 { 0 } else { dim / 2 };
            let j = base + (rng.below(4) as usize);
            xs.push(sparse(dim, &[(j, 1.0)]));
            ys.push(class as u8);
        }
        let data = VectorizedDataset::new(dim, xs, ys).unwrap();
        let config = TrainConfig {
            epochs: 12,
            batch_size: 8,
            lambda: 1e-3,
            seed: 9,
            ..TrainConfig::default()
        };
        let trained = train_svm(&data, None, &config).unwrap();
        let loss = &trained.history.train_loss;
        let first: f64 = loss[..3].iter().sum::<f64>() / 3.0;
        let last: f64 = loss[loss.len() - 3..].iter().sum::<f64>() / 3.0;
        assert!(
            last <= first + 1e-9,
            "objective rose: early {first}, late {last}"
        );
    }

    #[test]
    fn deterministic_under_seed() {
        let xs = vec![
            sparse(3, &[(0, 1.0)]),
            sparse(3, &[(1, 1.0)]),
            sparse(3, &[(2, 1.0)]),
            sparse(3, &[(0, -1.0)]),
        ];
        let ys = vec![1, 0, 1, 0];
        let data = VectorizedDataset::new(3, xs, ys).unwrap();
        let config = TrainConfig {
            epochs: 3,
            batch_size: 2,
            seed: 33,
            ..TrainConfig::default()
        };
        let a = train_svm(&data, None, &config).unwrap();
        let b = train_svm(&data, None, &config).unwrap();
        assert_eq!(a.classifier, b.classifier);
    }

    #[test]
    fn zero_margin_predicts_one() {
        let params = SvmParams::zeros(2, 1e-4);
        let classifier = Classifier::Svm(params);
        let (score, label) = classifier.predict(&sparse(2, &[(0, 1.0)])).unwrap();
        assert_eq!(score, 0.0);
        assert_eq!(label, 1);
    }
}
