//! A small fully connected network with rectified-linear hidden units,
//! trained by softmax cross-entropy and Adam.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::sim::{stream, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major, one row per output.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

impl Mlp {
    /// Layer widths from input to output, e.g. `[12, 32, 32, 9]`. Weights
    /// are drawn uniformly with He scaling.
    pub fn new(widths: &[usize], seed: u64) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidArgument(format!("bad layer widths {widths:?}")));
        }
        let mut rng = stream(seed, 0, Purpose::Training);
        let layers = widths
            .windows(2)
            .map(|w| {
                let bound = (6.0 / w[0] as f64).sqrt();
                Layer {
                    inputs: w[0],
                    outputs: w[1],
                    weights: (0..w[0] * w[1]).map(|_| rng.random_range(-bound..bound)).collect(),
                    bias: vec![0.0; w[1]],
                }
            })
            .collect();
        Ok(Mlp { layers })
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    /// Output scores.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&cur, &mut next);
            if i + 1 < self.layers.len() {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Activations of every layer, input included.
    fn trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::new();
            layer.apply(acts.last().unwrap(), &mut out);
            if i + 1 < self.layers.len() {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        acts
    }

    fn all_params_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}

/// Softmax of `scores` with the usual max shift.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 64,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainReport {
    /// Mean cross-entropy over the data after training.
    pub loss: f64,
    /// Fraction of samples whose unmasked argmax equals the label.
    pub accuracy: f64,
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

/// Minimizes mean cross-entropy of `labels` given `inputs` by mini-batch
/// Adam. Errors if the loss turns non-finite.
pub fn train_classifier(net: &mut Mlp, inputs: &[Vec<f64>], labels: &[usize], cfg: &TrainConfig) -> Result<TrainReport> {
    if inputs.len() != labels.len() || inputs.is_empty() {
        return Err(Error::InvalidArgument("need equally many inputs and labels".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= net.outputs()) {
        return Err(Error::InvalidArgument(format!("label {bad} outside {} classes", net.outputs())));
    }
    let sizes: Vec<usize> = net
        .layers
        .iter()
        .map(|l| l.weights.len() + l.bias.len())
        .collect();
    let mut adam = Adam {
        m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        t: 0,
    };
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut grads: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
    for epoch in 0..cfg.epochs {
        let mut rng = stream(cfg.seed, epoch as u64 + 1, Purpose::Training);
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size.max(1)) {
            grads.iter_mut().for_each(|g| g.fill(0.0));
            for &i in batch {
                accumulate(net, &inputs[i], labels[i], &mut grads);
            }
            let scale = 1.0 / batch.len() as f64;
            adam_step(net, &mut adam, &grads, scale, cfg.learning_rate);
        }
        if !net.all_params_finite() {
            return Err(Error::Training(format!("non-finite weights after epoch {epoch}")));
        }
    }
    let mut loss = 0.0;
    let mut hits = 0;
    for (x, &y) in inputs.iter().zip(labels) {
        let p = softmax(&net.forward(x));
        loss -= p[y].max(1e-300).ln();
        if argmax(&p) == y {
            hits += 1;
        }
    }
    let loss = loss / inputs.len() as f64;
    if !loss.is_finite() {
        return Err(Error::Training("loss is not finite".into()));
    }
    Ok(TrainReport {
        loss,
        accuracy: hits as f64 / inputs.len() as f64,
    })
}

/// Index of the largest entry, the first on ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Adds the cross-entropy gradient of one sample to `grads`, laid out per
/// layer as weights then biases.
fn accumulate(net: &Mlp, x: &[f64], label: usize, grads: &mut [Vec<f64>]) {
    let acts = net.trace(x);
    let mut delta = softmax(acts.last().unwrap());
    delta[label] -= 1.0;
    for (li, layer) in net.layers.iter().enumerate().rev() {
        let input = &acts[li];
        let g = &mut grads[li];
        let (gw, gb) = g.split_at_mut(layer.weights.len());
        for o in 0..layer.outputs {
            let d = delta[o];
            if d == 0.0 {
                continue;
            }
            gb[o] += d;
            let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
            row.iter_mut().zip(input).for_each(|(w, v)| *w += d * v);
        }
        if li == 0 {
            break;
        }
        let mut back = vec![0.0; layer.inputs];
        for o in 0..layer.outputs {
            let d = delta[o];
            if d == 0.0 {
                continue;
            }
            let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
            back.iter_mut().zip(row).for_each(|(b, w)| *b += d * w);
        }
        // Rectifier derivative at the previous layer's output.
        for (b, a) in back.iter_mut().zip(input) {
            if *a <= 0.0 {
                *b = 0.0;
            }
        }
        delta = back;
    }
}

fn adam_step(net: &mut Mlp, adam: &mut Adam, grads: &[Vec<f64>], scale: f64, lr: f64) {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;
    adam.t += 1;
    let c1 = 1.0 - B1.powi(adam.t);
    let c2 = 1.0 - B2.powi(adam.t);
    for (li, layer) in net.layers.iter_mut().enumerate() {
        let nw = layer.weights.len();
        let (m, v, g) = (&mut adam.m[li], &mut adam.v[li], &grads[li]);
        for k in 0..g.len() {
            let gk = g[k] * scale;
            m[k] = B1 * m[k] + (1.0 - B1) * gk;
            v[k] = B2 * v[k] + (1.0 - B2) * gk * gk;
            let step = lr * (m[k] / c1) / ((v[k] / c2).sqrt() + EPS);
            if k < nw {
                layer.weights[k] -= step;
            } else {
                layer.bias[k - nw] -= step;
            }
        }
    }
}
