//! The three classifiers behind a common predict interface: a feedforward
//! network (128-ReLU → 64-ReLU → sigmoid), a single-timestep LSTM with the
//! same dense head, and a primal linear SVM.
//!
//! The networks train with Adam on mean binary cross-entropy, inverted
//! dropout after each hidden layer, Glorot-uniform initialization, and
//! seeded per-epoch reshuffling; the SVM trains by Pegasos-style subgradient
//! descent on the hinge objective. Training is single-threaded and fully
//! deterministic under a fixed seed.

mod fnn;
pub mod gradcheck;
mod lstm;
mod svm;

pub use fnn::{fnn_forward, fnn_loss_and_gradients, train_fnn, FnnGrads, FnnParams};
pub use lstm::{lstm_forward, lstm_loss_and_gradients, train_lstm, LstmGrads, LstmParams};
pub use svm::{svm_objective, train_svm, SvmParams};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Prng};
use crate::textvec::SparseVector;
use serde::{Deserialize, Serialize};

/// First dense layer width (also the LSTM unit count).
pub const HIDDEN1: usize = 128;
/// Second dense layer width.
pub const HIDDEN2: usize = 64;

/// Training hyperparameters. `lambda` only applies to the SVM; the dropout
/// and Adam settings only to the networks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            dropout_rate: 0.5,
            learning_rate: 0.001,
            lambda: 1e-4,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.lambda <= 0.0 {
            return Err(Error::Config("lambda must be positive".into()));
        }
        Ok(())
    }
}

/// A corpus after TF-IDF vectorization: one sparse vector and one binary
/// label per message, all sharing the same dimension.
#[derive(Debug, Clone)]
pub struct VectorizedDataset {
    pub dim: usize,
    pub xs: Vec<SparseVector>,
    pub ys: Vec<u8>,
}

impl VectorizedDataset {
    pub fn new(dim: usize, xs: Vec<SparseVector>, ys: Vec<u8>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Dataset("vectorized dataset is empty".into()));
        }
        if xs.len() != ys.len() {
            return Err(Error::Dimension(format!(
                "{} vectors vs {} labels",
                xs.len(),
                ys.len()
            )));
        }
        for x in &xs {
            if x.dim != dim {
                return Err(Error::Dimension(format!(
                    "vector of dimension {} in dataset of dimension {dim}",
                    x.dim
                )));
            }
        }
        if ys.iter().any(|&y| y > 1) {
            return Err(Error::Dataset("labels must be 0 or 1".into()));
        }
        Ok(VectorizedDataset { dim, xs, ys })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

/// Dropout behavior for a forward pass.
pub enum Dropout<'a> {
    Off,
    On { rate: f64, rng: &'a mut Prng },
}

/// Inverted-dropout mask: each unit keeps its activation scaled by
/// 1/(1-rate) with probability 1-rate, else drops to zero, so the expected
/// masked activation equals the unmasked one.
pub fn dropout_mask(len: usize, rate: f64, rng: &mut Prng) -> Vec<f64> {
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    (0..len)
        .map(|_| if rng.next_f64() < keep { scale } else { 0.0 })
        .collect()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// z = W·x + b with sparse x; W is rows x dim.
pub(crate) fn affine_sparse(w: &Matrix, b: &[f64], x: &SparseVector) -> Vec<f64> {
    let mut z = b.to_vec();
    for (r, zr) in z.iter_mut().enumerate() {
        let row = w.row(r);
        *zr += x.entries.iter().map(|&(j, v)| row[j] * v).sum::<f64>();
    }
    z
}

/// z = W·h + b with dense h.
pub(crate) fn affine_dense(w: &Matrix, b: &[f64], h: &[f64]) -> Vec<f64> {
    let mut z = b.to_vec();
    for (r, zr) in z.iter_mut().enumerate() {
        let row = w.row(r);
        *zr += row.iter().zip(h).map(|(a, b)| a * b).sum::<f64>();
    }
    z
}

/// Accumulate the outer product dz ⊗ x into dW (sparse columns only).
pub(crate) fn accumulate_outer_sparse(dw: &mut Matrix, dz: &[f64], x: &SparseVector) {
    let cols = dw.cols();
    let data = dw.as_mut_slice();
    for (r, &d) in dz.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let base = r * cols;
        for &(j, v) in &x.entries {
            data[base + j] += d * v;
        }
    }
}

/// Accumulate dz ⊗ h into dW (dense h).
pub(crate) fn accumulate_outer_dense(dw: &mut Matrix, dz: &[f64], h: &[f64]) {
    let cols = dw.cols();
    let data = dw.as_mut_slice();
    for (r, &d) in dz.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let base = r * cols;
        for (j, &hv) in h.iter().enumerate() {
            data[base + j] += d * hv;
        }
    }
}

/// Mean binary cross-entropy of one probability against a 0/1 label, with
/// the probability clipped to [1e-7, 1-1e-7] so the logs stay finite.
pub(crate) fn bce_loss(p: f64, y: f64) -> f64 {
    let p = p.clamp(1e-7, 1.0 - 1e-7);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Per-epoch loss traces recorded during training. `eval_loss` is empty when
/// no held-out set was supplied; it is never used for parameter selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub eval_loss: Vec<f64>,
}

/// A trained classifier plus its training history.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub classifier: Classifier,
    pub history: TrainHistory,
}

/// Any of the three trained parameter sets.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Fnn(FnnParams),
    Lstm(LstmParams),
    Svm(SvmParams),
}

/// Model kinds as they appear in configs, CLI flags, and checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Fnn,
    Lstm,
    Svm,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Fnn => "fnn",
            ModelKind::Lstm => "lstm",
            ModelKind::Svm => "svm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fnn" => Ok(ModelKind::Fnn),
            "lstm" => Ok(ModelKind::Lstm),
            "svm" => Ok(ModelKind::Svm),
            other => Err(Error::Config(format!(
                "unknown model kind `{other}`, expected fnn, lstm, or svm"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Classifier {
    pub fn kind(&self) -> ModelKind {
        match self {
            Classifier::Fnn(_) => ModelKind::Fnn,
            Classifier::Lstm(_) => ModelKind::Lstm,
            Classifier::Svm(_) => ModelKind::Svm,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Classifier::Fnn(p) => p.input_dim(),
            Classifier::Lstm(p) => p.input_dim(),
            Classifier::Svm(p) => p.w.len(),
        }
    }

    /// Score and label for one vector. Networks score with the sigmoid
    /// probability and threshold at 0.5; the SVM scores with the signed
    /// margin and thresholds at 0. Both thresholds are inclusive: a score
    /// exactly on the boundary maps to label 1.
    pub fn predict(&self, x: &SparseVector) -> Result<(f64, u8)> {
        match self {
            Classifier::Fnn(p) => {
                let (prob, _) = fnn_forward(p, x, Dropout::Off)?;
                Ok((prob, u8::from(prob >= 0.5)))
            }
            Classifier::Lstm(p) => {
                let (prob, _) = lstm_forward(p, x, Dropout::Off)?;
                Ok((prob, u8::from(prob >= 0.5)))
            }
            Classifier::Svm(p) => {
                let score = p.score(x)?;
                Ok((score, u8::from(score >= 0.0)))
            }
        }
    }

    /// Predict labels for a whole dataset.
    pub fn predict_all(&self, data: &VectorizedDataset) -> Result<Vec<u8>> {
        data.xs.iter().map(|x| Ok(self.predict(x)?.1)).collect()
    }
}

/// One named tensor inside a checkpoint file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorData {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl TensorData {
    fn matrix(name: &str, m: &Matrix) -> Self {
        TensorData {
            name: name.to_string(),
            shape: vec![m.rows(), m.cols()],
            data: m.as_slice().to_vec(),
        }
    }

    fn vector(name: &str, v: &[f64]) -> Self {
        TensorData {
            name: name.to_string(),
            shape: vec![v.len()],
            data: v.to_vec(),
        }
    }

    fn scalar(name: &str, v: f64) -> Self {
        TensorData {
            name: name.to_string(),
            shape: vec![],
            data: vec![v],
        }
    }
}

/// Checkpoint container: model kind, input dimension, the training config,
/// and flattened parameter tensors. JSON round trips are bit-exact, so a
/// reloaded model predicts identically to the one that was saved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model_kind: ModelKind,
    pub input_dim: usize,
    pub config: TrainConfig,
    pub tensors: Vec<TensorData>,
}

struct TensorReader<'a> {
    tensors: &'a [TensorData],
}

impl<'a> TensorReader<'a> {
    fn get(&self, name: &str) -> Result<&'a TensorData> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Format(format!("checkpoint is missing tensor `{name}`")))
    }

    fn matrix(&self, name: &str, rows: usize, cols: usize) -> Result<Matrix> {
        let t = self.get(name)?;
        if t.shape != [rows, cols] {
            return Err(Error::Format(format!(
                "tensor `{name}` has shape {:?}, expected [{rows}, {cols}]",
                t.shape
            )));
        }
        Matrix::from_vec(rows, cols, t.data.clone())
    }

    fn vector(&self, name: &str, len: usize) -> Result<Vec<f64>> {
        let t = self.get(name)?;
        if t.shape != [len] || t.data.len() != len {
            return Err(Error::Format(format!(
                "tensor `{name}` has shape {:?}, expected [{len}]",
                t.shape
            )));
        }
        Ok(t.data.clone())
    }

    fn scalar(&self, name: &str) -> Result<f64> {
        let t = self.get(name)?;
        if t.data.len() != 1 {
            return Err(Error::Format(format!("tensor `{name}` is not a scalar")));
        }
        Ok(t.data[0])
    }
}

impl Checkpoint {
    pub fn from_classifier(classifier: &Classifier, config: TrainConfig) -> Self {
        let (model_kind, tensors) = match classifier {
            Classifier::Fnn(p) => (ModelKind::Fnn, p.tensors()),
            Classifier::Lstm(p) => (ModelKind::Lstm, p.tensors()),
            Classifier::Svm(p) => (ModelKind::Svm, p.tensors()),
        };
        Checkpoint {
            model_kind,
            input_dim: classifier.input_dim(),
            config,
            tensors,
        }
    }

    pub fn into_classifier(self) -> Result<Classifier> {
        let reader = TensorReader {
            tensors: &self.tensors,
        };
        match self.model_kind {
            ModelKind::Fnn => Ok(Classifier::Fnn(FnnParams::from_tensors(
                self.input_dim,
                &reader,
            )?)),
            ModelKind::Lstm => Ok(Classifier::Lstm(LstmParams::from_tensors(
                self.input_dim,
                &reader,
            )?)),
            ModelKind::Svm => Ok(Classifier::Svm(SvmParams::from_tensors(
                self.input_dim,
                &reader,
            )?)),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Format(format!("checkpoint JSON: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dropout_mask_values_are_zero_or_scale() {
        let mut rng = Prng::new(1);
        let mask = dropout_mask(1000, 0.5, &mut rng);
        assert!(mask.iter().all(|&m| m == 0.0 || m == 2.0));
        let kept = mask.iter().filter(|&&m| m != 0.0).count();
        assert!(kept > 350 && kept < 650, "kept {kept} of 1000");
    }

    #[test]
    fn dropout_expectation_matches_undropped_activation() {
        // Average of 10,000 masked activations must sit within 2% of the
        // unmasked value for each unit.
        let mut rng = Prng::new(99);
        let activation = [0.8, -1.3, 2.4, 0.05];
        let mut sums = [0.0f64; 4];
        let trials = 10_000;
        for _ in 0..trials {
            let mask = dropout_mask(4, 0.5, &mut rng);
            for (s, (a, m)) in sums.iter_mut().zip(activation.iter().zip(&mask)) {
                *s += a * m;
            }
        }
        for (s, a) in sums.iter().zip(&activation) {
            let mean = s / trials as f64;
            assert!(
                (mean - a).abs() <= 0.02 * a.abs(),
                "mean {mean} vs activation {a}"
            );
        }
    }

    #[test]
    fn vectorized_dataset_validates_dims() {
        let xs = vec![SparseVector::zero(3), SparseVector::zero(4)];
        assert!(matches!(
            VectorizedDataset::new(3, xs, vec![0, 1]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn train_config_validation() {
        let mut cfg = TrainConfig::default();
        cfg.validate().unwrap();
        cfg.epochs = 0;
        assert!(cfg.validate().is_err());
        cfg = TrainConfig { dropout_rate: 1.0, ..TrainConfig::default() };
        assert!(cfg.validate().is_err());
        cfg = TrainConfig { lambda: 0.0, ..TrainConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn model_kind_parses_and_prints() {
        assert_eq!(ModelKind::parse("fnn").unwrap(), ModelKind::Fnn);
        assert_eq!(ModelKind::parse("lstm").unwrap().to_string(), "lstm");
        assert!(ModelKind::parse("tree").is_err());
    }
}
