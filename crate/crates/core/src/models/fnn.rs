//! Feedforward network: 128-unit ReLU layer, 64-unit ReLU layer, sigmoid
//! output, with inverted dropout after each hidden layer during training.

use super::{
    accumulate_outer_dense, accumulate_outer_sparse, affine_dense, affine_sparse, bce_loss,
    dropout_mask, sigmoid, Classifier, Dropout, TensorData, TensorReader, TrainConfig,
    TrainHistory, TrainedModel, VectorizedDataset, HIDDEN1, HIDDEN2,
};
use crate::error::{Error, Result};
use crate::numerics::{AdamConfig, AdamState, Matrix, Prng};
use crate::textvec::SparseVector;

/// Network weights. Shapes are fixed by the architecture: W1 is 128 x V,
/// W2 is 64 x 128, W3 is 1 x 64.
#[derive(Debug, Clone, PartialEq)]
pub struct FnnParams {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub w3: Matrix,
    pub b3: f64,
}

impl FnnParams {
    /// Glorot-uniform weights and zero biases, drawn in declaration order
    /// from the supplied generator.
    pub fn glorot(input_dim: usize, rng: &mut Prng) -> Self {
        FnnParams {
            w1: Matrix::glorot_uniform(HIDDEN1, input_dim, input_dim, HIDDEN1, rng),
            b1: vec![0.0; HIDDEN1],
            w2: Matrix::glorot_uniform(HIDDEN2, HIDDEN1, HIDDEN1, HIDDEN2, rng),
            b2: vec![0.0; HIDDEN2],
            w3: Matrix::glorot_uniform(1, HIDDEN2, HIDDEN2, 1, rng),
            b3: 0.0,
        }
    }

    pub fn zeros(input_dim: usize) -> Self {
        FnnParams {
            w1: Matrix::zeros(HIDDEN1, input_dim),
            b1: vec![0.0; HIDDEN1],
            w2: Matrix::zeros(HIDDEN2, HIDDEN1),
            b2: vec![0.0; HIDDEN2],
            w3: Matrix::zeros(1, HIDDEN2),
            b3: 0.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    /// All parameters as one flat vector, in (w1, b1, w2, b2, w3, b3) order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(self.w1.as_slice());
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(self.w2.as_slice());
        out.extend_from_slice(&self.b2);
        out.extend_from_slice(self.w3.as_slice());
        out.push(self.b3);
        out
    }

    pub fn from_flat(input_dim: usize, flat: &[f64]) -> Result<Self> {
        let sizes = [
            HIDDEN1 * input_dim,
            HIDDEN1,
            HIDDEN2 * HIDDEN1,
            HIDDEN2,
            HIDDEN2,
            1,
        ];
        let total: usize = sizes.iter().sum();
        if flat.len() != total {
            return Err(Error::Dimension(format!(
                "flat parameter vector has {} entries, expected {total}",
                flat.len()
            )));
        }
        let mut at = 0;
        let mut take = |n: usize| {
            let s = &flat[at..at + n];
            at += n;
            s.to_vec()
        };
        Ok(FnnParams {
            w1: Matrix::from_vec(HIDDEN1, input_dim, take(sizes[0]))?,
            b1: take(sizes[1]),
            w2: Matrix::from_vec(HIDDEN2, HIDDEN1, take(sizes[2]))?,
            b2: take(sizes[3]),
            w3: Matrix::from_vec(1, HIDDEN2, take(sizes[4]))?,
            b3: take(sizes[5])[0],
        })
    }

    pub(super) fn tensors(&self) -> Vec<TensorData> {
        vec![
            TensorData::matrix("w1", &self.w1),
            TensorData::vector("b1", &self.b1),
            TensorData::matrix("w2", &self.w2),
            TensorData::vector("b2", &self.b2),
            TensorData::matrix("w3", &self.w3),
            TensorData::scalar("b3", self.b3),
        ]
    }

    pub(super) fn from_tensors(input_dim: usize, reader: &TensorReader) -> Result<Self> {
        Ok(FnnParams {
            w1: reader.matrix("w1", HIDDEN1, input_dim)?,
            b1: reader.vector("b1", HIDDEN1)?,
            w2: reader.matrix("w2", HIDDEN2, HIDDEN1)?,
            b2: reader.vector("b2", HIDDEN2)?,
            w3: reader.matrix("w3", 1, HIDDEN2)?,
            b3: reader.scalar("b3")?,
        })
    }
}

/// Intermediate activations kept for backpropagation. `a1`/`a2` are the
/// post-ReLU values before dropout; the masks hold the applied scale factors.
pub struct FnnCache {
    a1: Vec<f64>,
    mask1: Option<Vec<f64>>,
    a2: Vec<f64>,
    mask2: Option<Vec<f64>>,
    prob: f64,
}

fn relu_inplace(z: &mut [f64]) {
    for v in z.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

fn apply_mask(a: &[f64], mask: &Option<Vec<f64>>) -> Vec<f64> {
    match mask {
        Some(m) => a.iter().zip(m).map(|(v, s)| v * s).collect(),
        None => a.to_vec(),
    }
}

/// Forward pass: h1 = relu(W1 x + b1), h2 = relu(W2 h1 + b2), p = sigmoid(
/// W3 h2 + b3), with fresh dropout masks applied after each hidden layer in
/// training mode.
pub fn fnn_forward(
    params: &FnnParams,
    x: &SparseVector,
    dropout: Dropout,
) -> Result<(f64, FnnCache)> {
    if x.dim != params.input_dim() {
        return Err(Error::Dimension(format!(
            "input has dimension {}, model expects {}",
            x.dim,
            params.input_dim()
        )));
    }
    let (rate, rng) = match dropout {
        Dropout::Off => (0.0, None),
        Dropout::On { rate, rng } => (rate, if rate > 0.0 { Some(rng) } else { None }),
    };

    let mut a1 = affine_sparse(&params.w1, &params.b1, x);
    relu_inplace(&mut a1);
    let (mask1, rng) = match rng {
        Some(rng) => (Some(dropout_mask(HIDDEN1, rate, rng)), Some(rng)),
        None => (None, None),
    };
    let h1 = apply_mask(&a1, &mask1);

    let mut a2 = affine_dense(&params.w2, &params.b2, &h1);
    relu_inplace(&mut a2);
    let mask2 = rng.map(|rng| dropout_mask(HIDDEN2, rate, rng));
    let h2 = apply_mask(&a2, &mask2);

    let z3 = params.w3.row(0).iter().zip(&h2).map(|(w, h)| w * h).sum::<f64>() + params.b3;
    let prob = sigmoid(z3);
    Ok((
        prob,
        FnnCache {
            a1,
            mask1,
            a2,
            mask2,
            prob,
        },
    ))
}

/// Gradients, one tensor per parameter tensor.
#[derive(Debug, Clone)]
pub struct FnnGrads {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub w3: Matrix,
    pub b3: f64,
}

impl FnnGrads {
    fn zeros(input_dim: usize) -> Self {
        FnnGrads {
            w1: Matrix::zeros(HIDDEN1, input_dim),
            b1: vec![0.0; HIDDEN1],
            w2: Matrix::zeros(HIDDEN2, HIDDEN1),
            b2: vec![0.0; HIDDEN2],
            w3: Matrix::zeros(1, HIDDEN2),
            b3: 0.0,
        }
    }

    fn scale(&mut self, s: f64) {
        for v in self.w1.as_mut_slice() {
            *v *= s;
        }
        for v in self.b1.iter_mut() {
            *v *= s;
        }
        for v in self.w2.as_mut_slice() {
            *v *= s;
        }
        for v in self.b2.iter_mut() {
            *v *= s;
        }
        for v in self.w3.as_mut_slice() {
            *v *= s;
        }
        self.b3 *= s;
    }

    /// Flat view matching [`FnnParams::flatten`] ordering.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(self.w1.as_slice());
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(self.w2.as_slice());
        out.extend_from_slice(&self.b2);
        out.extend_from_slice(self.w3.as_slice());
        out.push(self.b3);
        out
    }
}

/// Mean BCE loss and its gradients over a batch, backpropagating through the
/// exact dropout masks drawn in the forward pass.
pub fn fnn_loss_and_gradients(
    params: &FnnParams,
    xs: &[&SparseVector],
    ys: &[u8],
    mut dropout: Dropout,
) -> Result<(f64, FnnGrads)> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::Dimension(format!(
            "batch of {} inputs and {} labels",
            xs.len(),
            ys.len()
        )));
    }
    let mut grads = FnnGrads::zeros(params.input_dim());
    let mut loss_sum = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let pass = match &mut dropout {
            Dropout::Off => Dropout::Off,
            Dropout::On { rate, rng } => Dropout::On {
                rate: *rate,
                rng: &mut **rng,
            },
        };
        let (prob, cache) = fnn_forward(params, x, pass)?;
        let y = f64::from(y);
        loss_sum += bce_loss(prob, y);

        // Sigmoid + BCE collapse to dz3 = p - y.
        let dz3 = cache.prob - y;
        let h2 = apply_mask(&cache.a2, &cache.mask2);
        for (g, h) in grads.w3.as_mut_slice().iter_mut().zip(&h2) {
            *g += dz3 * h;
        }
        grads.b3 += dz3;

        let mut dz2 = vec![0.0; HIDDEN2];
        let w3_row = params.w3.row(0);
        for i in 0..HIDDEN2 {
            let mut d = dz3 * w3_row[i];
            if let Some(mask) = &cache.mask2 {
                d *= mask[i];
            }
            dz2[i] = if cache.a2[i] > 0.0 { d } else { 0.0 };
        }
        let h1 = apply_mask(&cache.a1, &cache.mask1);
        accumulate_outer_dense(&mut grads.w2, &dz2, &h1);
        for (g, d) in grads.b2.iter_mut().zip(&dz2) {
            *g += d;
        }

        let mut dz1 = vec![0.0; HIDDEN1];
        for (i, &d2) in dz2.iter().enumerate() {
            if d2 == 0.0 {
                continue;
            }
            let row = params.w2.row(i);
            for (j, dj) in dz1.iter_mut().enumerate() {
                *dj += d2 * row[j];
            }
        }
        for (j, d) in dz1.iter_mut().enumerate() {
            if let Some(mask) = &cache.mask1 {
                *d *= mask[j];
            }
            if cache.a1[j] <= 0.0 {
                *d = 0.0;
            }
        }
        accumulate_outer_sparse(&mut grads.w1, &dz1, x);
        for (g, d) in grads.b1.iter_mut().zip(&dz1) {
            *g += d;
        }
    }
    let inv = 1.0 / xs.len() as f64;
    grads.scale(inv);
    let loss = loss_sum * inv;
    if !loss.is_finite() {
        return Err(Error::Numerical("non-finite batch loss".into()));
    }
    Ok((loss, grads))
}

/// Train with Adam over shuffled mini-batches. The generator seeded by
/// `config.seed` drives initialization, the per-epoch reshuffle, and all
/// dropout masks, so identical inputs give identical parameters.
pub fn train_fnn(
    data: &VectorizedDataset,
    eval: Option<&VectorizedDataset>,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    config.validate()?;
    let mut rng = Prng::new(config.seed);
    let mut params = FnnParams::glorot(data.dim, &mut rng);
    let adam = AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    };
    let mut st_w1 = AdamState::new(HIDDEN1 * data.dim, adam);
    let mut st_b1 = AdamState::new(HIDDEN1, adam);
    let mut st_w2 = AdamState::new(HIDDEN2 * HIDDEN1, adam);
    let mut st_b2 = AdamState::new(HIDDEN2, adam);
    let mut st_w3 = AdamState::new(HIDDEN2, adam);
    let mut st_b3 = AdamState::new(1, adam);

    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = TrainHistory {
        train_loss: Vec::with_capacity(config.epochs),
        eval_loss: Vec::new(),
    };

    for epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for (batch_index, batch) in order.chunks(config.batch_size).enumerate() {
            let xs: Vec<&SparseVector> = batch.iter().map(|&i| &data.xs[i]).collect();
            let ys: Vec<u8> = batch.iter().map(|&i| data.ys[i]).collect();
            let pass = if config.dropout_rate > 0.0 {
                Dropout::On {
                    rate: config.dropout_rate,
                    rng: &mut rng,
                }
            } else {
                Dropout::Off
            };
            let (loss, grads) = fnn_loss_and_gradients(&params, &xs, &ys, pass)
                .map_err(|e| training_error(e, epoch, batch_index))?;
            if !loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite loss at epoch {epoch}, batch {batch_index}"
                )));
            }
            epoch_loss += loss * xs.len() as f64;
            st_w1.step(params.w1.as_mut_slice(), grads.w1.as_slice())?;
            st_b1.step(&mut params.b1, &grads.b1)?;
            st_w2.step(params.w2.as_mut_slice(), grads.w2.as_slice())?;
            st_b2.step(&mut params.b2, &grads.b2)?;
            st_w3.step(params.w3.as_mut_slice(), grads.w3.as_slice())?;
            let mut b3 = [params.b3];
            st_b3.step(&mut b3, &[grads.b3])?;
            params.b3 = b3[0];
        }
        history.train_loss.push(epoch_loss / n as f64);
        if let Some(eval) = eval {
            history.eval_loss.push(mean_bce(&params, eval)?);
        }
    }
    Ok(TrainedModel {
        classifier: Classifier::Fnn(params),
        history,
    })
}

fn mean_bce(params: &FnnParams, data: &VectorizedDataset) -> Result<f64> {
    let mut sum = 0.0;
    for (x, &y) in data.xs.iter().zip(&data.ys) {
        let (prob, _) = fnn_forward(params, x, Dropout::Off)?;
        sum += bce_loss(prob, f64::from(y));
    }
    Ok(sum / data.len() as f64)
}

pub(super) fn training_error(e: Error, epoch: usize, batch: usize) -> Error {
    match e {
        Error::Numerical(msg) => {
            Error::Numerical(format!("{msg} (epoch {epoch}, batch {batch})"))
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_difference_gradient, DEFAULT_FD_STEP};

    fn sparse(dim: usize, pairs: &[(usize, f64)]) -> SparseVector {
        SparseVector {
            dim,
            entries: pairs.to_vec(),
        }
    }

    #[test]
    fn zero_params_give_half_probability() {
        let params = FnnParams::zeros(4);
        let x = sparse(4, &[(0, 1.0), (2, 0.5)]);
        let (p, _) = fnn_forward(&params, &x, Dropout::Off).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn zero_input_flows_through_biases() {
        let mut rng = Prng::new(8);
        let mut params = FnnParams::glorot(3, &mut rng);
        for b in params.b1.iter_mut() {
            *b = rng.uniform(-1.0, 1.0);
        }
        for b in params.b2.iter_mut() {
            *b = rng.uniform(-1.0, 1.0);
        }
        params.b3 = 0.3;
        let (p, _) = fnn_forward(&params, &SparseVector::zero(3), Dropout::Off).unwrap();
        // Forced by the algebra: p = sigmoid(W3 relu(W2 relu(b1) + b2) + b3).
        let h1: Vec<f64> = params.b1.iter().map(|&v| v.max(0.0)).collect();
        let h2: Vec<f64> = affine_dense(&params.w2, &params.b2, &h1)
            .into_iter()
            .map(|v| v.max(0.0))
            .collect();
        let z3: f64 =
            params.w3.row(0).iter().zip(&h2).map(|(w, h)| w * h).sum::<f64>() + params.b3;
        assert!((p - sigmoid(z3)).abs() < 1e-15);
    }

    /// Independent dense re-implementation of the forward pass.
    fn dense_forward_oracle(params: &FnnParams, x: &[f64]) -> f64 {
        let v = params.input_dim();
        let mut h1 = vec![0.0; HIDDEN1];
        for r in 0..HIDDEN1 {
            let mut z = params.b1[r];
            for c in 0..v {
                z += params.w1.get(r, c) * x[c];
            }
            h1[r] = z.max(0.0);
        }
        let mut h2 = vec![0.0; HIDDEN2];
        for r in 0..HIDDEN2 {
            let mut z = params.b2[r];
            for c in 0..HIDDEN1 {
                z += params.w2.get(r, c) * h1[c];
            }
            h2[r] = z.max(0.0);
        }
        let mut z3 = params.b3;
        for c in 0..HIDDEN2 {
            z3 += params.w3.get(0, c) * h2[c];
        }
        1.0 / (1.0 + (-z3).exp())
    }

    #[test]
    fn forward_matches_dense_oracle() {
        let mut rng = Prng::new(21);
        let params = FnnParams::glorot(5, &mut rng);
        let x = sparse(5, &[(1, 0.7), (3, -0.2), (4, 1.1)]);
        let (p, _) = fnn_forward(&params, &x, Dropout::Off).unwrap();
        let oracle = dense_forward_oracle(&params, &x.to_dense());
        assert!((p - oracle).abs() < 1e-12);
    }

    #[test]
    fn loss_closed_forms() {
        // y = 1, p = 0.5 gives ln 2.
        let params = FnnParams::zeros(2);
        let x = sparse(2, &[(0, 1.0)]);
        let (loss, _) =
            fnn_loss_and_gradients(&params, &[&x], &[1], Dropout::Off).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn near_perfect_predictions_have_tiny_gradients() {
        // Saturate the output so p ~ y for both classes.
        let mut params = FnnParams::zeros(2);
        params.b1[0] = 1.0;
        params.w2.set(0, 0, 1.0);
        params.w3.set(0, 0, 40.0);
        let x_pos = sparse(2, &[(0, 1.0)]);
        let (loss, grads) =
            fnn_loss_and_gradients(&params, &[&x_pos], &[1], Dropout::Off).unwrap();
        assert!(loss < 1e-6, "loss {loss}");
        assert!(grads.flatten().iter().all(|g| g.abs() < 1e-6));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let dim = 7;
        let mut rng = Prng::new(1234);
        let params = FnnParams::glorot(dim, &mut rng);
        let xs = vec![
            sparse(dim, &[(0, 0.9), (2, -0.4), (5, 0.3)]),
            sparse(dim, &[(1, 1.0), (6, 0.8)]),
            sparse(dim, &[(3, -0.7), (4, 0.2), (6, -0.5)]),
        ];
        let ys = [1u8, 0, 1];
        let x_refs: Vec<&SparseVector> = xs.iter().collect();
        let report =
            super::super::gradcheck::check_fnn(&params, &x_refs, &ys, DEFAULT_FD_STEP).unwrap();
        assert!(
            report.passes(),
            "{} of {} components over 1e-4, worst {}",
            report.over_tolerance,
            report.components,
            report.worst
        );
    }

    #[test]
    fn small_flat_round_trip_agrees_with_generic_oracle() {
        // The generic oracle from the numerics module and the in-place
        // harness agree; kept small because from_flat copies everything.
        let dim = 2;
        let mut rng = Prng::new(3);
        let params = FnnParams::glorot(dim, &mut rng);
        let xs = [sparse(dim, &[(0, 1.0), (1, -0.5)])];
        let x_refs: Vec<&SparseVector> = xs.iter().collect();
        let (_, grads) = fnn_loss_and_gradients(&params, &x_refs, &[1], Dropout::Off).unwrap();
        let numeric = finite_difference_gradient(
            |p| {
                let candidate = FnnParams::from_flat(dim, p).unwrap();
                fnn_loss_and_gradients(&candidate, &x_refs, &[1], Dropout::Off)
                    .unwrap()
                    .0
            },
            &params.flatten(),
            DEFAULT_FD_STEP,
        )
        .unwrap();
        for (a, n) in grads.flatten().iter().zip(&numeric) {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
            assert!(rel <= 1e-3, "analytic {a} vs numeric {n}");
        }
    }

    #[test]
    fn training_is_deterministic_under_a_seed() {
        let dim = 6;
        let xs: Vec<SparseVector> = (0..12)
            .map(|i| sparse(dim, &[(i % dim, 1.0), ((i + 1) % dim, 0.5)]))
            .collect();
        let ys: Vec<u8> = (0..12).map(|i| (i % 2) as u8).collect();
        let data = VectorizedDataset::new(dim, xs, ys).unwrap();
        let config = TrainConfig {
            epochs: 2,
            batch_size: 4,
            seed: 77,
            ..TrainConfig::default()
        };
        let a = train_fnn(&data, None, &config).unwrap();
        let b = train_fnn(&data, None, &config).unwrap();
        assert_eq!(a.classifier, b.classifier);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn zero_epochs_is_rejected() {
        let data = VectorizedDataset::new(
            2,
            vec![sparse(2, &[(0, 1.0)]), sparse(2, &[(1, 1.0)])],
            vec![0, 1],
        )
        .unwrap();
        let config = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train_fnn(&data, None, &config),
            Err(Error::Config(_))
        ));
    }
}
