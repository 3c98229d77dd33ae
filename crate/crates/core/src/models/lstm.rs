//! Single-timestep LSTM classifier.
//!
//! The input shape is one timestep over the whole TF-IDF vector, so the
//! recurrence is degenerate: with zero initial hidden and cell state the
//! gates reduce to i = sigmoid(Wi x + bi), f = sigmoid(Wf x + bf),
//! o = sigmoid(Wo x + bo), g = tanh(Wg x + bg), c = i*g, h = o*tanh(c).
//! The recurrent U matrices and the forget gate never influence the output,
//! and their gradients are exactly zero; they are kept as parameters so the
//! architecture (and checkpoint layout) stays the stated one.

use super::fnn::training_error;
use super::{
    accumulate_outer_dense, accumulate_outer_sparse, affine_dense, affine_sparse, bce_loss,
    dropout_mask, sigmoid, Classifier, Dropout, TensorData, TensorReader, TrainConfig,
    TrainHistory, TrainedModel, VectorizedDataset, HIDDEN1, HIDDEN2,
};
use crate::error::{Error, Result};
use crate::numerics::{AdamConfig, AdamState, Matrix, Prng};
use crate::textvec::SparseVector;

/// LSTM units, fixed by the architecture.
pub const UNITS: usize = HIDDEN1;

/// Gate weights (128 x V input, 128 x 128 recurrent), gate biases, and the
/// dense head shared with the feedforward network.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub wi: Matrix,
    pub wf: Matrix,
    pub wo: Matrix,
    pub wg: Matrix,
    pub ui: Matrix,
    pub uf: Matrix,
    pub uo: Matrix,
    pub ug: Matrix,
    pub bi: Vec<f64>,
    pub bf: Vec<f64>,
    pub bo: Vec<f64>,
    pub bg: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub w3: Matrix,
    pub b3: f64,
}

impl LstmParams {
    pub fn glorot(input_dim: usize, rng: &mut Prng) -> Self {
        let gate = |rng: &mut Prng| Matrix::glorot_uniform(UNITS, input_dim, input_dim, UNITS, rng);
        let recurrent = |rng: &mut Prng| Matrix::glorot_uniform(UNITS, UNITS, UNITS, UNITS, rng);
        let wi = gate(rng);
        let wf = gate(rng);
        let wo = gate(rng);
        let wg = gate(rng);
        let ui = recurrent(rng);
        let uf = recurrent(rng);
        let uo = recurrent(rng);
        let ug = recurrent(rng);
        LstmParams {
            wi,
            wf,
            wo,
            wg,
            ui,
            uf,
            uo,
            ug,
            bi: vec![0.0; UNITS],
            bf: vec![0.0; UNITS],
            bo: vec![0.0; UNITS],
            bg: vec![0.0; UNITS],
            w2: Matrix::glorot_uniform(HIDDEN2, UNITS, UNITS, HIDDEN2, rng),
            b2: vec![0.0; HIDDEN2],
            w3: Matrix::glorot_uniform(1, HIDDEN2, HIDDEN2, 1, rng),
            b3: 0.0,
        }
    }

    pub fn zeros(input_dim: usize) -> Self {
        LstmParams {
            wi: Matrix::zeros(UNITS, input_dim),
            wf: Matrix::zeros(UNITS, input_dim),
            wo: Matrix::zeros(UNITS, input_dim),
            wg: Matrix::zeros(UNITS, input_dim),
            ui: Matrix::zeros(UNITS, UNITS),
            uf: Matrix::zeros(UNITS, UNITS),
            uo: Matrix::zeros(UNITS, UNITS),
            ug: Matrix::zeros(UNITS, UNITS),
            bi: vec![0.0; UNITS],
            bf: vec![0.0; UNITS],
            bo: vec![0.0; UNITS],
            bg: vec![0.0; UNITS],
            w2: Matrix::zeros(HIDDEN2, UNITS),
            b2: vec![0.0; HIDDEN2],
            w3: Matrix::zeros(1, HIDDEN2),
            b3: 0.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.wi.cols()
    }

    fn tensor_list(&self) -> [(&'static str, &Matrix); 10] {
        [
            ("wi", &self.wi),
            ("wf", &self.wf),
            ("wo", &self.wo),
            ("wg", &self.wg),
            ("ui", &self.ui),
            ("uf", &self.uf),
            ("uo", &self.uo),
            ("ug", &self.ug),
            ("w2", &self.w2),
            ("w3", &self.w3),
        ]
    }

    /// Flat parameter vector in (wi, wf, wo, wg, ui, uf, uo, ug, bi, bf, bo,
    /// bg, w2, b2, w3, b3) order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for m in [&self.wi, &self.wf, &self.wo, &self.wg, &self.ui, &self.uf, &self.uo, &self.ug] {
            out.extend_from_slice(m.as_slice());
        }
        for b in [&self.bi, &self.bf, &self.bo, &self.bg] {
            out.extend_from_slice(b);
        }
        out.extend_from_slice(self.w2.as_slice());
        out.extend_from_slice(&self.b2);
        out.extend_from_slice(self.w3.as_slice());
        out.push(self.b3);
        out
    }

    pub fn from_flat(input_dim: usize, flat: &[f64]) -> Result<Self> {
        let expected = flat_len(input_dim);
        if flat.len() != expected {
            return Err(Error::Dimension(format!(
                "flat parameter vector has {} entries, expected {expected}",
                flat.len()
            )));
        }
        let mut at = 0;
        let mut take = |n: usize| {
            let s = &flat[at..at + n];
            at += n;
            s.to_vec()
        };
        let gate_len = UNITS * input_dim;
        let rec_len = UNITS * UNITS;
        Ok(LstmParams {
            wi: Matrix::from_vec(UNITS, input_dim, take(gate_len))?,
            wf: Matrix::from_vec(UNITS, input_dim, take(gate_len))?,
            wo: Matrix::from_vec(UNITS, input_dim, take(gate_len))?,
            wg: Matrix::from_vec(UNITS, input_dim, take(gate_len))?,
            ui: Matrix::from_vec(UNITS, UNITS, take(rec_len))?,
            uf: Matrix::from_vec(UNITS, UNITS, take(rec_len))?,
            uo: Matrix::from_vec(UNITS, UNITS, take(rec_len))?,
            ug: Matrix::from_vec(UNITS, UNITS, take(rec_len))?,
            bi: take(UNITS),
            bf: take(UNITS),
            bo: take(UNITS),
            bg: take(UNITS),
            w2: Matrix::from_vec(HIDDEN2, UNITS, take(HIDDEN2 * UNITS))?,
            b2: take(HIDDEN2),
            w3: Matrix::from_vec(1, HIDDEN2, take(HIDDEN2))?,
            b3: take(1)[0],
        })
    }

    pub(super) fn tensors(&self) -> Vec<TensorData> {
        let mut out: Vec<TensorData> = self
            .tensor_list()
            .iter()
            .map(|(name, m)| TensorData::matrix(name, m))
            .collect();
        out.push(TensorData::vector("bi", &self.bi));
        out.push(TensorData::vector("bf", &self.bf));
        out.push(TensorData::vector("bo", &self.bo));
        out.push(TensorData::vector("bg", &self.bg));
        out.push(TensorData::vector("b2", &self.b2));
        out.push(TensorData::scalar("b3", self.b3));
        out
    }

    pub(super) fn from_tensors(input_dim: usize, reader: &TensorReader) -> Result<Self> {
        Ok(LstmParams {
            wi: reader.matrix("wi", UNITS, input_dim)?,
            wf: reader.matrix("wf", UNITS, input_dim)?,
            wo: reader.matrix("wo", UNITS, input_dim)?,
            wg: reader.matrix("wg", UNITS, input_dim)?,
            ui: reader.matrix("ui", UNITS, UNITS)?,
            uf: reader.matrix("uf", UNITS, UNITS)?,
            uo: reader.matrix("uo", UNITS, UNITS)?,
            ug: reader.matrix("ug", UNITS, UNITS)?,
            bi: reader.vector("bi", UNITS)?,
            bf: reader.vector("bf", UNITS)?,
            bo: reader.vector("bo", UNITS)?,
            bg: reader.vector("bg", UNITS)?,
            w2: reader.matrix("w2", HIDDEN2, UNITS)?,
            b2: reader.vector("b2", HIDDEN2)?,
            w3: reader.matrix("w3", 1, HIDDEN2)?,
            b3: reader.scalar("b3")?,
        })
    }
}

fn flat_len(input_dim: usize) -> usize {
    4 * UNITS * input_dim + 4 * UNITS * UNITS + 4 * UNITS + HIDDEN2 * UNITS + HIDDEN2 + HIDDEN2 + 1
}

/// Forward-pass intermediates for backpropagation.
pub struct LstmCache {
    gate_i: Vec<f64>,
    gate_o: Vec<f64>,
    gate_g: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
    mask_h: Option<Vec<f64>>,
    a2: Vec<f64>,
    mask2: Option<Vec<f64>>,
    prob: f64,
}

/// One timestep from zero initial state, then dropout, the 64-unit ReLU
/// layer, dropout again, and the sigmoid head.
pub fn lstm_forward(
    params: &LstmParams,
    x: &SparseVector,
    dropout: Dropout,
) -> Result<(f64, LstmCache)> {
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

    let zi = affine_sparse(&params.wi, &params.bi, x);
    let zf = affine_sparse(&params.wf, &params.bf, x);
    let zo = affine_sparse(&params.wo, &params.bo, x);
    let zg = affine_sparse(&params.wg, &params.bg, x);
    let gate_i: Vec<f64> = zi.iter().map(|&z| sigmoid(z)).collect();
    // The forget gate only multiplies the zero initial cell state; computed
    // for completeness, it cannot reach the output.
    let _gate_f: Vec<f64> = zf.iter().map(|&z| sigmoid(z)).collect();
    let gate_o: Vec<f64> = zo.iter().map(|&z| sigmoid(z)).collect();
    let gate_g: Vec<f64> = zg.iter().map(|&z| z.tanh()).collect();
    let cell: Vec<f64> = gate_i.iter().zip(&gate_g).map(|(i, g)| i * g).collect();
    let tanh_c: Vec<f64> = cell.iter().map(|&c| c.tanh()).collect();
    let h: Vec<f64> = gate_o.iter().zip(&tanh_c).map(|(o, t)| o * t).collect();

    let (mask_h, rng) = match rng {
        Some(rng) => (Some(dropout_mask(UNITS, rate, rng)), Some(rng)),
        None => (None, None),
    };
    let h_dropped: Vec<f64> = match &mask_h {
        Some(m) => h.iter().zip(m).map(|(v, s)| v * s).collect(),
        None => h.clone(),
    };

    let mut a2 = affine_dense(&params.w2, &params.b2, &h_dropped);
    for v in a2.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let mask2 = rng.map(|rng| dropout_mask(HIDDEN2, rate, rng));
    let a2_dropped: Vec<f64> = match &mask2 {
        Some(m) => a2.iter().zip(m).map(|(v, s)| v * s).collect(),
        None => a2.clone(),
    };
    let z3 = params
        .w3
        .row(0)
        .iter()
        .zip(&a2_dropped)
        .map(|(w, h)| w * h)
        .sum::<f64>()
        + params.b3;
    let prob = sigmoid(z3);
    Ok((
        prob,
        LstmCache {
            gate_i,
            gate_o,
            gate_g,
            tanh_c,
            h,
            mask_h,
            a2,
            mask2,
            prob,
        },
    ))
}

/// Gradients for every parameter tensor. The forget-gate and recurrent
/// gradients are structurally zero at a single timestep from zero state.
#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub wi: Matrix,
    pub wf: Matrix,
    pub wo: Matrix,
    pub wg: Matrix,
    pub ui: Matrix,
    pub uf: Matrix,
    pub uo: Matrix,
    pub ug: Matrix,
    pub bi: Vec<f64>,
    pub bf: Vec<f64>,
    pub bo: Vec<f64>,
    pub bg: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub w3: Matrix,
    pub b3: f64,
}

impl LstmGrads {
    fn zeros(input_dim: usize) -> Self {
        LstmGrads {
            wi: Matrix::zeros(UNITS, input_dim),
            wf: Matrix::zeros(UNITS, input_dim),
            wo: Matrix::zeros(UNITS, input_dim),
            wg: Matrix::zeros(UNITS, input_dim),
            ui: Matrix::zeros(UNITS, UNITS),
            uf: Matrix::zeros(UNITS, UNITS),
            uo: Matrix::zeros(UNITS, UNITS),
            ug: Matrix::zeros(UNITS, UNITS),
            bi: vec![0.0; UNITS],
            bf: vec![0.0; UNITS],
            bo: vec![0.0; UNITS],
            bg: vec![0.0; UNITS],
            w2: Matrix::zeros(HIDDEN2, UNITS),
            b2: vec![0.0; HIDDEN2],
            w3: Matrix::zeros(1, HIDDEN2),
            b3: 0.0,
        }
    }

    fn scale(&mut self, s: f64) {
        for m in [
            &mut self.wi,
            &mut self.wf,
            &mut self.wo,
            &mut self.wg,
            &mut self.ui,
            &mut self.uf,
            &mut self.uo,
            &mut self.ug,
            &mut self.w2,
            &mut self.w3,
        ] {
            for v in m.as_mut_slice() {
                *v *= s;
            }
        }
        for b in [&mut self.bi, &mut self.bf, &mut self.bo, &mut self.bg, &mut self.b2] {
            for v in b.iter_mut() {
                *v *= s;
            }
        }
        self.b3 *= s;
    }

    /// Flat view matching [`LstmParams::flatten`] ordering.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for m in [&self.wi, &self.wf, &self.wo, &self.wg, &self.ui, &self.uf, &self.uo, &self.ug] {
            out.extend_from_slice(m.as_slice());
        }
        for b in [&self.bi, &self.bf, &self.bo, &self.bg] {
            out.extend_from_slice(b);
        }
        out.extend_from_slice(self.w2.as_slice());
        out.extend_from_slice(&self.b2);
        out.extend_from_slice(self.w3.as_slice());
        out.push(self.b3);
        out
    }

    /// True when every recurrent-weight gradient is exactly zero.
    pub fn recurrent_grads_are_zero(&self) -> bool {
        [&self.ui, &self.uf, &self.uo, &self.ug]
            .iter()
            .all(|m| m.as_slice().iter().all(|&v| v == 0.0))
    }
}

/// Mean BCE loss and gradients over a batch, reusing the forward masks.
pub fn lstm_loss_and_gradients(
    params: &LstmParams,
    xs: &[&SparseVector],
    ys: &[u8],
    mut dropout: Dropout,
) -> Result<(f64, LstmGrads)> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::Dimension(format!(
            "batch of {} inputs and {} labels",
            xs.len(),
            ys.len()
        )));
    }
    let mut grads = LstmGrads::zeros(params.input_dim());
    let mut loss_sum = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let pass = match &mut dropout {
            Dropout::Off => Dropout::Off,
            Dropout::On { rate, rng } => Dropout::On {
                rate: *rate,
                rng: &mut **rng,
            },
        };
        let (prob, cache) = lstm_forward(params, x, pass)?;
        let y = f64::from(y);
        loss_sum += bce_loss(prob, y);

        let dz3 = cache.prob - y;
        let a2_dropped: Vec<f64> = match &cache.mask2 {
            Some(m) => cache.a2.iter().zip(m).map(|(v, s)| v * s).collect(),
            None => cache.a2.clone(),
        };
        for (g, h) in grads.w3.as_mut_slice().iter_mut().zip(&a2_dropped) {
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
        let h_dropped: Vec<f64> = match &cache.mask_h {
            Some(m) => cache.h.iter().zip(m).map(|(v, s)| v * s).collect(),
            None => cache.h.clone(),
        };
        accumulate_outer_dense(&mut grads.w2, &dz2, &h_dropped);
        for (g, d) in grads.b2.iter_mut().zip(&dz2) {
            *g += d;
        }

        let mut dh = vec![0.0; UNITS];
        for (i, &d2) in dz2.iter().enumerate() {
            if d2 == 0.0 {
                continue;
            }
            let row = params.w2.row(i);
            for (j, dj) in dh.iter_mut().enumerate() {
                *dj += d2 * row[j];
            }
        }
        if let Some(mask) = &cache.mask_h {
            for (d, s) in dh.iter_mut().zip(mask) {
                *d *= s;
            }
        }

        let mut dzi = vec![0.0; UNITS];
        let mut dzo = vec![0.0; UNITS];
        let mut dzg = vec![0.0; UNITS];
        for k in 0..UNITS {
            let o = cache.gate_o[k];
            let t = cache.tanh_c[k];
            let dok = dh[k] * t;
            dzo[k] = dok * o * (1.0 - o);
            let dc = dh[k] * o * (1.0 - t * t);
            let i = cache.gate_i[k];
            let g = cache.gate_g[k];
            dzi[k] = dc * g * i * (1.0 - i);
            dzg[k] = dc * i * (1.0 - g * g);
        }
        accumulate_outer_sparse(&mut grads.wi, &dzi, x);
        accumulate_outer_sparse(&mut grads.wo, &dzo, x);
        accumulate_outer_sparse(&mut grads.wg, &dzg, x);
        for k in 0..UNITS {
            grads.bi[k] += dzi[k];
            grads.bo[k] += dzo[k];
            grads.bg[k] += dzg[k];
        }
        // dWf, dbf, and all dU stay exactly zero: the cell starts at zero.
    }
    let inv = 1.0 / xs.len() as f64;
    grads.scale(inv);
    let loss = loss_sum * inv;
    if !loss.is_finite() {
        return Err(Error::Numerical("non-finite batch loss".into()));
    }
    Ok((loss, grads))
}

/// Train the LSTM; same optimizer loop as the feedforward network.
pub fn train_lstm(
    data: &VectorizedDataset,
    eval: Option<&VectorizedDataset>,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    config.validate()?;
    let mut rng = Prng::new(config.seed);
    let mut params = LstmParams::glorot(data.dim, &mut rng);
    let adam = AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    };
    let gate_len = UNITS * data.dim;
    let rec_len = UNITS * UNITS;
    let mut st_gates: Vec<AdamState> = (0..4).map(|_| AdamState::new(gate_len, adam)).collect();
    let mut st_recs: Vec<AdamState> = (0..4).map(|_| AdamState::new(rec_len, adam)).collect();
    let mut st_biases: Vec<AdamState> = (0..4).map(|_| AdamState::new(UNITS, adam)).collect();
    let mut st_w2 = AdamState::new(HIDDEN2 * UNITS, adam);
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
            let (loss, grads) = lstm_loss_and_gradients(&params, &xs, &ys, pass)
                .map_err(|e| training_error(e, epoch, batch_index))?;
            if !loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite loss at epoch {epoch}, batch {batch_index}"
                )));
            }
            epoch_loss += loss * xs.len() as f64;

            let gate_params = [&mut params.wi, &mut params.wf, &mut params.wo, &mut params.wg];
            let gate_grads = [&grads.wi, &grads.wf, &grads.wo, &grads.wg];
            for ((p, g), st) in gate_params.into_iter().zip(gate_grads).zip(&mut st_gates) {
                st.step(p.as_mut_slice(), g.as_slice())?;
            }
            let rec_params = [&mut params.ui, &mut params.uf, &mut params.uo, &mut params.ug];
            let rec_grads = [&grads.ui, &grads.uf, &grads.uo, &grads.ug];
            for ((p, g), st) in rec_params.into_iter().zip(rec_grads).zip(&mut st_recs) {
                st.step(p.as_mut_slice(), g.as_slice())?;
            }
            let bias_params = [&mut params.bi, &mut params.bf, &mut params.bo, &mut params.bg];
            let bias_grads = [&grads.bi, &grads.bf, &grads.bo, &grads.bg];
            for ((p, g), st) in bias_params.into_iter().zip(bias_grads).zip(&mut st_biases) {
                st.step(p, g)?;
            }
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
        classifier: Classifier::Lstm(params),
        history,
    })
}

fn mean_bce(params: &LstmParams, data: &VectorizedDataset) -> Result<f64> {
    let mut sum = 0.0;
    for (x, &y) in data.xs.iter().zip(&data.ys) {
        let (prob, _) = lstm_forward(params, x, Dropout::Off)?;
        sum += bce_loss(prob, f64::from(y));
    }
    Ok(sum / data.len() as f64)
}
