//! Recurrent text + metadata classifier.
//!
//! Token embeddings feed a gated recurrent cell (input, forget, candidate
//! and output gates). Its final hidden state is concatenated with the
//! numeric features and passed through two rectified-linear dense layers
//! and a logistic output unit.
//!
//! Padding (index 0) is masked: padded positions leave the recurrent state
//! untouched, so with left padding the scan starts at the first real token.
//!
//! All parameters live in one flat vector; [`Layout`] records where each
//! block starts. Back-propagation through time is written out by hand and
//! checked against central finite differences by [`gradient_check`].

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::PAD_INDEX;

pub const HIDDEN: usize = 64;
pub const DENSE1: usize = 128;
pub const DENSE2: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden: usize,
    pub dense1: usize,
    pub dense2: usize,
    pub numeric: usize,
}

impl ModelDims {
    /// 64-unit recurrent layer, dense layers of 128 and 64.
    pub fn standard(vocab_size: usize, embed_dim: usize, numeric: usize) -> Self {
        ModelDims {
            vocab_size,
            embed_dim,
            hidden: HIDDEN,
            dense1: DENSE1,
            dense2: DENSE2,
            numeric,
        }
    }

    pub fn layout(&self) -> Layout {
        Layout::new(*self)
    }

    pub fn param_count(&self) -> usize {
        self.layout().total
    }
}

/// Offsets of each parameter block inside the flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub dims: ModelDims,
    /// vocab_size × embed_dim
    pub embedding: usize,
    /// 4·hidden × (embed_dim + hidden), gate blocks i, f, g, o
    pub cell_w: usize,
    pub cell_b: usize,
    /// dense1 × (hidden + numeric)
    pub d1_w: usize,
    pub d1_b: usize,
    /// dense2 × dense1
    pub d2_w: usize,
    pub d2_b: usize,
    /// dense2
    pub out_w: usize,
    pub out_b: usize,
    pub total: usize,
}

impl Layout {
    fn new(d: ModelDims) -> Self {
        let embedding = 0;
        let cell_w = embedding + d.vocab_size * d.embed_dim;
        let cell_b = cell_w + 4 * d.hidden * (d.embed_dim + d.hidden);
        let d1_w = cell_b + 4 * d.hidden;
        let d1_b = d1_w + d.dense1 * (d.hidden + d.numeric);
        let d2_w = d1_b + d.dense1;
        let d2_b = d2_w + d.dense2 * d.dense1;
        let out_w = d2_b + d.dense2;
        let out_b = out_w + d.dense2;
        Layout {
            dims: d,
            embedding,
            cell_w,
            cell_b,
            d1_w,
            d1_b,
            d2_w,
            d2_b,
            out_w,
            out_b,
            total: out_b + 1,
        }
    }

    fn cell_in(&self) -> usize {
        self.dims.embed_dim + self.dims.hidden
    }

    fn dense_in(&self) -> usize {
        self.dims.hidden + self.dims.numeric
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextualModel {
    pub dims: ModelDims,
    pub params: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit, computed without overflow.
fn bce_from_logit(logit: f64, label: f64) -> f64 {
    logit.max(0.0) - logit * label + (-logit.abs()).exp().ln_1p()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4 * 4;
    for (x, y) in a[..chunks].chunks_exact(4).zip(b[..chunks].chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in a[chunks..].iter().zip(&b[chunks..]) {
        sum += x * y;
    }
    sum
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// out = W·x + b, with W stored row-major as rows × x.len().
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        *o = b[r] + dot(&w[r * cols..(r + 1) * cols], x);
    }
}

/// Intermediate values of one forward pass, kept for back-propagation.
#[derive(Debug, Clone, Default)]
pub struct ForwardTrace {
    tokens: Vec<usize>,
    /// Per step: concatenated [x; h_prev].
    inputs: Vec<Vec<f64>>,
    /// Per step: gate activations i, f, g, o (4·hidden).
    gates: Vec<Vec<f64>>,
    /// c_0 = 0, then the cell state after each step.
    cells: Vec<Vec<f64>>,
    /// tanh of each post-step cell state.
    cell_tanh: Vec<Vec<f64>>,
    dense_in: Vec<f64>,
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    a2: Vec<f64>,
    pub logit: f64,
}

impl ContextualModel {
    pub fn zeros(dims: ModelDims) -> Self {
        ContextualModel {
            dims,
            params: vec![0.0; dims.param_count()],
        }
    }

    /// Every parameter drawn from uniform(−scale, scale).
    pub fn init(dims: ModelDims, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..dims.param_count())
            .map(|_| if scale > 0.0 { rng.random_range(-scale..scale) } else { 0.0 })
            .collect();
        ContextualModel { dims, params }
    }

    pub fn layout(&self) -> Layout {
        self.dims.layout()
    }

    fn check_inputs(&self, sequence: &[u32], numeric: &[f64]) -> Result<()> {
        if numeric.len() != self.dims.numeric {
            return Err(Error::DimensionMismatch {
                expected: self.dims.numeric,
                actual: numeric.len(),
            });
        }
        if let Some(&bad) = sequence.iter().find(|&&t| t as usize >= self.dims.vocab_size) {
            return Err(Error::TokenOutOfRange {
                index: bad,
                vocab_size: self.dims.vocab_size,
            });
        }
        Ok(())
    }

    pub fn forward_trace(&self, sequence: &[u32], numeric: &[f64]) -> Result<ForwardTrace> {
        self.check_inputs(sequence, numeric)?;
        let l = self.layout();
        let d = self.dims;
        let p = &self.params;
        let h4 = 4 * d.hidden;
        let cell_w = &p[l.cell_w..l.cell_b];
        let cell_b = &p[l.cell_b..l.cell_b + h4];

        let mut trace = ForwardTrace {
            cells: vec![vec![0.0; d.hidden]],
            ..Default::default()
        };
        let mut h = vec![0.0; d.hidden];
        let mut z = vec![0.0; h4];
        for &tok in sequence {
            if tok == PAD_INDEX {
                continue;
            }
            let tok = tok as usize;
            let mut xh = Vec::with_capacity(l.cell_in());
            xh.extend_from_slice(&p[l.embedding + tok * d.embed_dim..][..d.embed_dim]);
            xh.extend_from_slice(&h);
            affine(cell_w, cell_b, &xh, &mut z);

            let c_prev = trace.cells.last().expect("c_0 present");
            let mut gates = vec![0.0; h4];
            let mut c = vec![0.0; d.hidden];
            let mut tc = vec![0.0; d.hidden];
            for k in 0..d.hidden {
                let i = sigmoid(z[k]);
                let f = sigmoid(z[d.hidden + k]);
                let g = z[2 * d.hidden + k].tanh();
                let o = sigmoid(z[3 * d.hidden + k]);
                gates[k] = i;
                gates[d.hidden + k] = f;
                gates[2 * d.hidden + k] = g;
                gates[3 * d.hidden + k] = o;
                c[k] = f * c_prev[k] + i * g;
                tc[k] = c[k].tanh();
                h[k] = o * tc[k];
            }
            trace.tokens.push(tok);
            trace.inputs.push(xh);
            trace.gates.push(gates);
            trace.cells.push(c);
            trace.cell_tanh.push(tc);
        }

        let mut dense_in = h;
        dense_in.extend_from_slice(numeric);
        let mut z1 = vec![0.0; d.dense1];
        affine(&p[l.d1_w..l.d1_b], &p[l.d1_b..l.d2_w], &dense_in, &mut z1);
        let a1: Vec<f64> = z1.iter().map(|v| v.max(0.0)).collect();
        let mut z2 = vec![0.0; d.dense2];
        affine(&p[l.d2_w..l.d2_b], &p[l.d2_b..l.out_w], &a1, &mut z2);
        let a2: Vec<f64> = z2.iter().map(|v| v.max(0.0)).collect();
        trace.logit = p[l.out_b] + dot(&p[l.out_w..l.out_b], &a2);
        trace.dense_in = dense_in;
        trace.z1 = z1;
        trace.a1 = a1;
        trace.z2 = z2;
        trace.a2 = a2;
        Ok(trace)
    }

    /// Probability that the post is sponsored.
    pub fn forward(&self, sequence: &[u32], numeric: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.forward_trace(sequence, numeric)?.logit))
    }

    pub fn loss(&self, sequence: &[u32], numeric: &[f64], label: u8) -> Result<f64> {
        let trace = self.forward_trace(sequence, numeric)?;
        Ok(bce_from_logit(trace.logit, f64::from(label)))
    }

    /// Adds `scale · ∂loss/∂θ` for one example into `grad` and returns the
    /// example's loss.
    pub fn accumulate_gradient(
        &self,
        sequence: &[u32],
        numeric: &[f64],
        label: u8,
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        let trace = self.forward_trace(sequence, numeric)?;
        let y = f64::from(label);
        let loss = bce_from_logit(trace.logit, y);
        self.backward(&trace, (sigmoid(trace.logit) - y) * scale, grad);
        Ok(loss)
    }

    fn backward(&self, t: &ForwardTrace, dlogit: f64, grad: &mut [f64]) {
        let l = self.layout();
        let d = self.dims;
        let p = &self.params;
        let hd = d.hidden;

        // output unit
        axpy(dlogit, &t.a2, &mut grad[l.out_w..l.out_b]);
        grad[l.out_b] += dlogit;
        let dz2: Vec<f64> = (0..d.dense2)
            .map(|k| if t.z2[k] > 0.0 { dlogit * p[l.out_w + k] } else { 0.0 })
            .collect();

        // dense 2
        let mut da1 = vec![0.0; d.dense1];
        for (r, &g) in dz2.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let row = l.d2_w + r * d.dense1;
            axpy(g, &t.a1, &mut grad[row..row + d.dense1]);
            grad[l.d2_b + r] += g;
            axpy(g, &p[row..row + d.dense1], &mut da1);
        }
        let dz1: Vec<f64> = (0..d.dense1)
            .map(|k| if t.z1[k] > 0.0 { da1[k] } else { 0.0 })
            .collect();

        // dense 1
        let din = l.dense_in();
        let mut ddense_in = vec![0.0; din];
        for (r, &g) in dz1.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let row = l.d1_w + r * din;
            axpy(g, &t.dense_in, &mut grad[row..row + din]);
            grad[l.d1_b + r] += g;
            axpy(g, &p[row..row + din], &mut ddense_in);
        }

        // recurrent cell, back through time
        let cin = l.cell_in();
        let mut dh: Vec<f64> = ddense_in[..hd].to_vec();
        let mut dc_next = vec![0.0; hd];
        let mut dz = vec![0.0; 4 * hd];
        let mut dxh = vec![0.0; cin];
        for step in (0..t.tokens.len()).rev() {
            let gates = &t.gates[step];
            let c_prev = &t.cells[step];
            let tc = &t.cell_tanh[step];
            for k in 0..hd {
                let (i, f, g, o) = (gates[k], gates[hd + k], gates[2 * hd + k], gates[3 * hd + k]);
                let dc = dh[k] * o * (1.0 - tc[k] * tc[k]) + dc_next[k];
                dz[k] = dc * g * i * (1.0 - i);
                dz[hd + k] = dc * c_prev[k] * f * (1.0 - f);
                dz[2 * hd + k] = dc * i * (1.0 - g * g);
                dz[3 * hd + k] = dh[k] * tc[k] * o * (1.0 - o);
                dc_next[k] = dc * f;
            }
            dxh.iter_mut().for_each(|v| *v = 0.0);
            let xh = &t.inputs[step];
            let (gw, gb) = grad[l.cell_w..l.cell_b + 4 * hd].split_at_mut(4 * hd * cin);
            let rows = gw.chunks_exact_mut(cin).zip(p[l.cell_w..l.cell_b].chunks_exact(cin));
            for (((grow, wrow), &g), gbias) in rows.zip(&dz).zip(gb.iter_mut()) {
                for ((gv, wv), (xv, dv)) in grow.iter_mut().zip(wrow).zip(xh.iter().zip(dxh.iter_mut())) {
                    *gv += g * xv;
                    *dv += g * wv;
                }
                *gbias += g;
            }
            let emb = l.embedding + t.tokens[step] * d.embed_dim;
            axpy(1.0, &dxh[..d.embed_dim], &mut grad[emb..emb + d.embed_dim]);
            dh.copy_from_slice(&dxh[d.embed_dim..]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub init_scale: f64,
    /// Rescales each batch gradient to at most this L2 norm.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 15,
            batch_size: 32,
            learning_rate: 0.05,
            momentum: 0.9,
            init_scale: 0.08,
            clip_norm: Some(5.0),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchLoss {
    pub epoch: usize,
    pub batch: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub batches: Vec<BatchLoss>,
    /// Mean training loss of each epoch, summed in example order so that
    /// it does not depend on the shuffle.
    pub epochs: Vec<f64>,
}

impl LossTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,batch,loss\n");
        for b in &self.batches {
            out.push_str(&format!("{},{},{}\n", b.epoch, b.batch, b.loss));
        }
        out
    }
}

/// One training example as the network sees it.
pub struct TrainingRow<'a> {
    pub sequence: &'a [u32],
    pub numeric: &'a [f64],
    pub label: u8,
}

/// Mini-batch momentum SGD on mean binary cross-entropy.
///
/// Examples are reshuffled each epoch from a generator seeded by
/// `config.seed`; given the same rows, dims and config the result is
/// bit-identical.
pub fn train_contextual(
    rows: &[TrainingRow<'_>],
    dims: ModelDims,
    config: &TrainConfig,
) -> Result<(ContextualModel, LossTrace)> {
    config.validate()?;
    if rows.is_empty() {
        return Err(Error::Data("cannot train on zero examples".into()));
    }
    let mut model = ContextualModel::init(dims, config.init_scale, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_5eed);
    let n = model.params.len();
    let mut velocity = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut example_loss = vec![0.0; rows.len()];
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut trace = LossTrace::default();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for (batch, chunk) in order.chunks(config.batch_size).enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / chunk.len() as f64;
            let mut batch_loss = 0.0;
            for &i in chunk {
                let row = &rows[i];
                let loss =
                    model.accumulate_gradient(row.sequence, row.numeric, row.label, scale, &mut grad)?;
                example_loss[i] = loss;
                batch_loss += loss;
            }
            batch_loss *= scale;
            if !batch_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    batch,
                    loss: batch_loss,
                });
            }
            trace.batches.push(BatchLoss {
                epoch,
                batch,
                loss: batch_loss,
            });
            if let Some(limit) = config.clip_norm {
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > limit {
                    let s = limit / norm;
                    grad.iter_mut().for_each(|g| *g *= s);
                }
            }
            if config.learning_rate > 0.0 {
                for ((theta, v), g) in model.params.iter_mut().zip(&mut velocity).zip(&grad) {
                    *v = config.momentum * *v - config.learning_rate * g;
                    *theta += *v;
                }
            }
        }
        trace.epochs.push(example_loss.iter().sum::<f64>() / rows.len() as f64);
    }
    Ok((model, trace))
}

/// Largest relative difference between the back-propagated gradient and a
/// central finite difference, over every parameter. Differences where both
/// gradients are below 1e-10 in magnitude count as zero.
pub fn gradient_check(
    model: &ContextualModel,
    sequence: &[u32],
    numeric: &[f64],
    label: u8,
    epsilon: f64,
) -> Result<f64> {
    if !(1e-6..=1e-3).contains(&epsilon) {
        return Err(Error::Config(format!(
            "epsilon must be in [1e-6, 1e-3], got {epsilon}"
        )));
    }
    let mut analytic = vec![0.0; model.params.len()];
    model.accumulate_gradient(sequence, numeric, label, 1.0, &mut analytic)?;
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for (k, &a) in analytic.iter().enumerate() {
        let original = probe.params[k];
        probe.params[k] = original + epsilon;
        let plus = probe.loss(sequence, numeric, label)?;
        probe.params[k] = original - epsilon;
        let minus = probe.loss(sequence, numeric, label)?;
        probe.params[k] = original;
        let numeric_grad = (plus - minus) / (2.0 * epsilon);
        let scale = a.abs().max(numeric_grad.abs());
        if scale < 1e-10 {
            continue;
        }
        worst = worst.max((a - numeric_grad).abs() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelDims {
        ModelDims {
            vocab_size: 6,
            embed_dim: 3,
            hidden: 4,
            dense1: 5,
            dense2: 4,
            numeric: 11,
        }
    }

    #[test]
    fn zero_model_outputs_half() {
        let m = ContextualModel::zeros(tiny());
        assert_eq!(m.forward(&[1, 2, 3], &[0.0; 11]).unwrap(), 0.5);
        assert_eq!(m.forward(&[0, 0, 0], &[0.0; 11]).unwrap(), 0.5);
    }

    #[test]
    fn standard_dims() {
        let d = ModelDims::standard(100, 8, 11);
        assert_eq!((d.hidden, d.dense1, d.dense2), (64, 128, 64));
        let l = d.layout();
        assert_eq!(l.d1_b - l.d1_w, 128 * 75);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = ContextualModel::zeros(tiny());
        assert!(matches!(m.forward(&[6], &[0.0; 11]), Err(Error::TokenOutOfRange { .. })));
        assert!(matches!(m.forward(&[1], &[0.0; 3]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn padding_is_masked() {
        let m = ContextualModel::init(tiny(), 0.3, 4);
        let a = m.forward(&[0, 0, 2, 3], &[0.1; 11]).unwrap();
        let b = m.forward(&[2, 3], &[0.1; 11]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = ContextualModel::init(tiny(), 0.5, 11);
        let numeric: Vec<f64> = (0..11).map(|i| (i as f64 - 5.0) / 5.0).collect();
        let err = gradient_check(&m, &[0, 1, 4, 2, 4], &numeric, 1, 1e-4).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn epsilon_range_enforced() {
        let m = ContextualModel::zeros(tiny());
        assert!(gradient_check(&m, &[1], &[0.0; 11], 0, 1e-2).is_err());
    }
}
