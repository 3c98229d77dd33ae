//! Finite-difference verification harness for the network gradients.
//!
//! Perturbs every parameter in place (no flattening copies) and compares the
//! central difference of the batch loss against the analytic gradient. The
//! relative error uses `|a - n| / max(|a|, |n|, 1e-8)`; exactly-flat
//! parameters (unused sparse columns, the recurrent and forget tensors)
//! produce bit-identical losses on both probes and therefore error 0.

use super::{
    bce_loss, fnn_forward, fnn_loss_and_gradients, lstm_forward, lstm_loss_and_gradients,
    Dropout, FnnParams, LstmParams,
};
use crate::error::Result;
use crate::textvec::SparseVector;

/// Outcome of one gradient check.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub components: usize,
    /// Components whose relative error exceeds 1e-4.
    pub over_tolerance: usize,
    pub worst: f64,
}

impl GradCheckReport {
    /// The two-tier acceptance rule: at least 99% of components within 1e-4
    /// and none beyond 1e-3.
    pub fn passes(&self) -> bool {
        let allowed = self.components / 100;
        self.over_tolerance <= allowed && self.worst <= 1e-3
    }
}

#[derive(Default)]
struct Stats {
    components: usize,
    over_tolerance: usize,
    worst: f64,
}

impl Stats {
    fn record(&mut self, analytic: f64, numeric: f64) {
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
        self.components += 1;
        if rel > 1e-4 {
            self.over_tolerance += 1;
        }
        if rel > self.worst {
            self.worst = rel;
        }
    }

    fn report(&self) -> GradCheckReport {
        GradCheckReport {
            components: self.components,
            over_tolerance: self.over_tolerance,
            worst: self.worst,
        }
    }
}

fn fnn_batch_loss(params: &FnnParams, xs: &[&SparseVector], ys: &[u8]) -> f64 {
    let sum: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| {
            let (p, _) = fnn_forward(params, x, Dropout::Off).expect("forward");
            bce_loss(p, f64::from(y))
        })
        .sum();
    sum / xs.len() as f64
}

fn lstm_batch_loss(params: &LstmParams, xs: &[&SparseVector], ys: &[u8]) -> f64 {
    let sum: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| {
            let (p, _) = lstm_forward(params, x, Dropout::Off).expect("forward");
            bce_loss(p, f64::from(y))
        })
        .sum();
    sum / xs.len() as f64
}

fn check_slice<P>(
    probe: &mut P,
    select: impl Fn(&mut P) -> &mut [f64],
    analytic: &[f64],
    eval: impl Fn(&P) -> f64,
    h: f64,
    stats: &mut Stats,
) {
    for i in 0..analytic.len() {
        let orig = select(probe)[i];
        select(probe)[i] = orig + h;
        let plus = eval(probe);
        select(probe)[i] = orig - h;
        let minus = eval(probe);
        select(probe)[i] = orig;
        stats.record(analytic[i], (plus - minus) / (2.0 * h));
    }
}

/// Check every feedforward tensor against central differences.
pub fn check_fnn(
    params: &FnnParams,
    xs: &[&SparseVector],
    ys: &[u8],
    h: f64,
) -> Result<GradCheckReport> {
    let (_, grads) = fnn_loss_and_gradients(params, xs, ys, Dropout::Off)?;
    let mut probe = params.clone();
    let mut stats = Stats::default();
    let eval = |p: &FnnParams| fnn_batch_loss(p, xs, ys);
    check_slice(&mut probe, |p| p.w1.as_mut_slice(), grads.w1.as_slice(), eval, h, &mut stats);
    check_slice(&mut probe, |p| &mut p.b1[..], &grads.b1, eval, h, &mut stats);
    check_slice(&mut probe, |p| p.w2.as_mut_slice(), grads.w2.as_slice(), eval, h, &mut stats);
    check_slice(&mut probe, |p| &mut p.b2[..], &grads.b2, eval, h, &mut stats);
    check_slice(&mut probe, |p| p.w3.as_mut_slice(), grads.w3.as_slice(), eval, h, &mut stats);
    let orig = probe.b3;
    probe.b3 = orig + h;
    let plus = eval(&probe);
    probe.b3 = orig - h;
    let minus = eval(&probe);
    probe.b3 = orig;
    stats.record(grads.b3, (plus - minus) / (2.0 * h));
    Ok(stats.report())
}

/// Check every LSTM tensor against central differences. Also reports whether
/// the recurrent-weight gradients are exactly zero.
pub fn check_lstm(
    params: &LstmParams,
    xs: &[&SparseVector],
    ys: &[u8],
    h: f64,
) -> Result<(GradCheckReport, bool)> {
    let (_, grads) = lstm_loss_and_gradients(params, xs, ys, Dropout::Off)?;
    let recurrent_zero = grads.recurrent_grads_are_zero();
    let mut probe = params.clone();
    let mut stats = Stats::default();
    let eval = |p: &LstmParams| lstm_batch_loss(p, xs, ys);
    check_slice(&mut probe, |p| p.wi.as_mut_slice(), grads.wi.as_slice(), eval, h, &mut stats);
    check_slice(&mut probe, |p| p.wf.as_mut_slice(), grads.wf.as_slice(), eval, h, &mut stats);
    check_slice(&mut probe, |p| p.wo.as_mut_slice(), grads.wo.as_slice(), eval, h, &mut stats);
    check_slice(&mut probe, |p| p.wg.as_mut_slice(), grads.wg.as_slice(), eval, h, &mut stats);
    check_slice(&mut probe, |p| p.ui.as_mut_slice(), grads.ui.as_slice(), eval, h, &mut stats);
    check_slice(&mut probe, |p| p.uf.as_mut_slice(), grads.uf.as_slice(), eval, h, &mut stats);
    check_slice(&mut probe, |p| p.uo.as_mut_slice(), grads.uo.as_slice(), eval, h, &mut stats);
    check_slice(&mut probe, |p| p.ug.as_mut_slice(), grads.ug.as_slice(), eval, h, &mut stats);
    check_slice(&mut probe, |p| &mut p.bi[..], &grads.bi, eval, h, &mut stats);
    check_slice(&mut probe, |p| &mut p.bf[..], &grads.bf, eval, h, &mut stats);
    check_slice(&mut probe, |p| &mut p.bo[..], &grads.bo, eval, h, &mut stats);
    check_slice(&mut probe, |p| &mut p.bg[..], &grads.bg, eval, h, &mut stats);
    check_slice(&mut probe, |p| p.w2.as_mut_slice(), grads.w2.as_slice(), eval, h, &mut stats);
    check_slice(&mut probe, |p| &mut p.b2[..], &grads.b2, eval, h, &mut stats);
    check_slice(&mut probe, |p| p.w3.as_mut_slice(), grads.w3.as_slice(), eval, h, &mut stats);
    let orig = probe.b3;
    probe.b3 = orig + h;
    let plus = eval(&probe);
    probe.b3 = orig - h;
    let minus = eval(&probe);
    probe.b3 = orig;
    stats.record(grads.b3, (plus - minus) / (2.0 * h));
    Ok((stats.report(), recurrent_zero))
}
