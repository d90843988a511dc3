use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_rows, ClassifierError};

pub const HIDDEN_UNITS: usize = 256;
pub const N_CLASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Epochs without a validation-loss improvement before the rate halves.
    pub patience: usize,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self { hidden: HIDDEN_UNITS, epochs: 50, batch_size: 128, learning_rate: 1e-3, patience: 5, seed: 0 }
    }
}

/// `input → hidden (ReLU) → 2` with softmax output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub input_dim: usize,
    pub hidden: usize,
    /// `[input_dim x hidden]`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `[hidden x 2]`, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Gradients laid out like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpTraining {
    pub model: MlpModel,
    pub best_epoch: usize,
    pub initial_train_loss: f64,
    pub history: Vec<EpochRecord>,
}

impl MlpModel {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            hidden,
            w1: vec![0.0; input_dim * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden * N_CLASSES],
            b2: vec![0.0; N_CLASSES],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(input_dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut m = Self::zeros(input_dim, hidden);
        let l1 = (6.0 / (input_dim + hidden) as f64).sqrt();
        m.w1.iter_mut().for_each(|w| *w = rng.random_range(-l1..=l1));
        let l2 = (6.0 / (hidden + N_CLASSES) as f64).sqrt();
        m.w2.iter_mut().for_each(|w| *w = rng.random_range(-l2..=l2));
        m
    }

    fn hidden_pre(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.b1);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                let row = &self.w1[i * self.hidden..(i + 1) * self.hidden];
                out.iter_mut().zip(row).for_each(|(o, w)| *o += xi * w);
            }
        }
    }

    fn output(&self, h: &[f64]) -> [f64; N_CLASSES] {
        let mut z = [self.b2[0], self.b2[1]];
        for (j, &hj) in h.iter().enumerate() {
            z[0] += hj * self.w2[j * N_CLASSES];
            z[1] += hj * self.w2[j * N_CLASSES + 1];
        }
        z
    }

    pub fn logits(&self, x: &[f64]) -> Result<[f64; N_CLASSES], ClassifierError> {
        if x.len() != self.input_dim {
            return Err(ClassifierError::DimMismatch { expected: self.input_dim, got: x.len() });
        }
        let mut h = vec![0.0; self.hidden];
        self.hidden_pre(x, &mut h);
        h.iter_mut().for_each(|v| *v = v.max(0.0));
        Ok(self.output(&h))
    }

    /// Mean cross-entropy over the batch and its gradient.
    pub fn loss_and_gradient(&self, x: &[Vec<f64>], y: &[usize]) -> (f64, MlpGradients) {
        let mut g = MlpGradients {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.hidden],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; N_CLASSES],
        };
        let scale = 1.0 / x.len() as f64;
        let mut pre = vec![0.0; self.hidden];
        let mut h = vec![0.0; self.hidden];
        let mut dh = vec![0.0; self.hidden];
        let mut loss = 0.0;
        for (xi, &yi) in x.iter().zip(y) {
            self.hidden_pre(xi, &mut pre);
            h.iter_mut().zip(&pre).for_each(|(a, &p)| *a = p.max(0.0));
            let z = self.output(&h);
            let p = softmax(z);
            loss -= log_softmax(z)[yi];
            let dz = [(p[0] - f64::from(u8::from(yi == 0))) * scale, (p[1] - f64::from(u8::from(yi == 1))) * scale];
            g.b2[0] += dz[0];
            g.b2[1] += dz[1];
            for j in 0..self.hidden {
                g.w2[j * N_CLASSES] += h[j] * dz[0];
                g.w2[j * N_CLASSES + 1] += h[j] * dz[1];
                dh[j] = if pre[j] > 0.0 {
                    self.w2[j * N_CLASSES] * dz[0] + self.w2[j * N_CLASSES + 1] * dz[1]
                } else {
                    0.0
                };
            }
            g.b1.iter_mut().zip(&dh).for_each(|(b, d)| *b += d);
            for (i, &xv) in xi.iter().enumerate() {
                if xv != 0.0 {
                    let row = &mut g.w1[i * self.hidden..(i + 1) * self.hidden];
                    row.iter_mut().zip(&dh).for_each(|(w, d)| *w += xv * d);
                }
            }
        }
        (loss * scale, g)
    }

    pub fn loss(&self, x: &[Vec<f64>], y: &[usize]) -> f64 {
        let mut h = vec![0.0; self.hidden];
        let total: f64 = x
            .iter()
            .zip(y)
            .map(|(xi, &yi)| {
                self.hidden_pre(xi, &mut h);
                h.iter_mut().for_each(|v| *v = v.max(0.0));
                -log_softmax(self.output(&h))[yi]
            })
            .sum();
        total / x.len() as f64
    }

    fn params_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }
}

impl MlpGradients {
    fn parts(&self) -> [&Vec<f64>; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }
}

fn softmax(z: [f64; N_CLASSES]) -> [f64; N_CLASSES] {
    let m = z[0].max(z[1]);
    let e = [(z[0] - m).exp(), (z[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

fn log_softmax(z: [f64; N_CLASSES]) -> [f64; N_CLASSES] {
    let m = z[0].max(z[1]);
    let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
    [z[0] - lse, z[1] - lse]
}

/// Argmax of the two logits, exact ties going to class 1.
pub fn mlp_predict(model: &MlpModel, x: &[f64]) -> Result<(usize, [f64; N_CLASSES]), ClassifierError> {
    let z = model.logits(x)?;
    Ok((if z[1] >= z[0] { 1 } else { 0 }, softmax(z)))
}

fn accuracy(model: &MlpModel, x: &[Vec<f64>], y: &[usize]) -> f64 {
    let correct = x.iter().zip(y).filter(|(xi, &yi)| mlp_predict(model, xi).map(|p| p.0) == Ok(yi)).count();
    correct as f64 / x.len() as f64
}

struct Adam {
    m: [Vec<f64>; 4],
    v: [Vec<f64>; 4],
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(model: &MlpModel) -> Self {
        let z = |n: usize| vec![0.0; n];
        let shapes = [model.w1.len(), model.b1.len(), model.w2.len(), model.b2.len()];
        Self { m: shapes.map(z), v: shapes.map(z), t: 0 }
    }

    fn step(&mut self, model: &mut MlpModel, g: &MlpGradients, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for (k, (p, gk)) in model.params_mut().into_iter().zip(g.parts()).enumerate() {
            for ((w, &gi), (m, v)) in p.iter_mut().zip(gk).zip(self.m[k].iter_mut().zip(self.v[k].iter_mut())) {
                *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * gi;
                *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * gi * gi;
                *w -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
            }
        }
    }
}

fn check_classes(y: &[usize], n: usize) -> Result<(), ClassifierError> {
    if y.len() != n {
        return Err(ClassifierError::LengthMismatch { samples: n, labels: y.len() });
    }
    if let Some(&bad) = y.iter().find(|&&v| v >= N_CLASSES) {
        return Err(ClassifierError::InvalidLabel(bad as i64));
    }
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(ClassifierError::SingleClass);
    }
    Ok(())
}

/// Mini-batch Adam on cross-entropy. Validation loss and accuracy are
/// checked after every epoch; the learning rate halves after `patience`
/// epochs without a new best validation loss, and the parameters from the
/// epoch with the best validation accuracy are returned.
pub fn mlp_train(
    x: &[Vec<f64>],
    y: &[usize],
    val_x: &[Vec<f64>],
    val_y: &[usize],
    params: &MlpParams,
) -> Result<MlpTraining, ClassifierError> {
    check_rows(x, 2)?;
    check_classes(y, x.len())?;
    if val_x.is_empty() {
        return Err(ClassifierError::EmptyValidation);
    }
    if val_y.len() != val_x.len() {
        return Err(ClassifierError::LengthMismatch { samples: val_x.len(), labels: val_y.len() });
    }
    let dim = x[0].len();
    if let Some(bad) = val_x.iter().find(|v| v.len() != dim) {
        return Err(ClassifierError::DimMismatch { expected: dim, got: bad.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut model = MlpModel::init(dim, params.hidden, &mut rng);
    let initial_train_loss = model.loss(x, y);
    let mut adam = Adam::new(&model);
    let mut lr = params.learning_rate;
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut best = (f64::NEG_INFINITY, model.clone(), 0usize);
    let mut best_val_loss = f64::INFINITY;
    let mut stale = 0;
    let mut history = Vec::with_capacity(params.epochs);
    let batch = params.batch_size.max(1);
    let mut bx: Vec<Vec<f64>> = Vec::with_capacity(batch);
    let mut by: Vec<usize> = Vec::with_capacity(batch);

    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut train_loss = 0.0;
        for chunk in order.chunks(batch) {
            bx.clear();
            by.clear();
            for &i in chunk {
                bx.push(x[i].clone());
                by.push(y[i]);
            }
            let (loss, g) = model.loss_and_gradient(&bx, &by);
            train_loss += loss * chunk.len() as f64;
            adam.step(&mut model, &g, lr);
        }
        train_loss /= x.len() as f64;
        let val_loss = model.loss(val_x, val_y);
        let val_accuracy = accuracy(&model, val_x, val_y);
        history.push(EpochRecord { train_loss, val_loss, val_accuracy, learning_rate: lr });
        if val_accuracy > best.0 {
            best = (val_accuracy, model.clone(), epoch);
        }
        if val_loss < best_val_loss {
            best_val_loss = val_loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= params.patience {
                lr /= 2.0;
                stale = 0;
            }
        }
    }
    let (_, model, best_epoch) = best;
    Ok(MlpTraining { model, best_epoch, initial_train_loss, history })
}
