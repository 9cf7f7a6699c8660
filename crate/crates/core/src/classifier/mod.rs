//! Feedforward binary classifier for the per-window regime label.
//!
//! A small fully connected network with a logistic output, trained by
//! mini-batch gradient descent on (optionally class-weighted) binary
//! cross-entropy with an L2 penalty on weights.

mod report;

pub use report::{classification_report, estimate_theta, ClassMetrics, ClassificationReport, ThetaEstimate, ThetaRule};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rng::RngStream;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Logistic,
    Rectifier,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Logistic => sigmoid(z),
            Activation::Rectifier => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Logistic => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Rectifier => (z > 0.0) as u8 as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    None,
    /// Each class contributes half of the total weight.
    #[default]
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    /// Input width, hidden widths..., 1.
    pub layer_sizes: Vec<usize>,
    /// One per hidden layer.
    pub activations: Vec<Activation>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub l2: f64,
    pub class_weighting: ClassWeighting,
    pub threshold: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            layer_sizes: vec![10, 16, 1],
            activations: vec![Activation::Rectifier],
            learning_rate: 0.05,
            epochs: 200,
            batch_size: 32,
            seed: 0,
            l2: 1e-4,
            class_weighting: ClassWeighting::Balanced,
            threshold: 0.5,
        }
    }
}

impl NetConfig {
    pub fn with_input_width(mut self, w: usize) -> Self {
        if let Some(first) = self.layer_sizes.first_mut() {
            *first = w;
        }
        self
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let n = self.layer_sizes.len();
        if n < 2 {
            v.push("layer_sizes needs an input and an output size".into());
        } else {
            if self.layer_sizes.contains(&0) {
                v.push("layer sizes must be positive".into());
            }
            if self.layer_sizes[n - 1] != 1 {
                v.push("output layer must have size 1".into());
            }
            if self.activations.len() != n - 2 {
                v.push(format!("{} hidden layers but {} activations", n - 2, self.activations.len()));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            v.push("learning_rate must be positive".into());
        }
        if self.epochs == 0 {
            v.push("epochs must be positive".into());
        }
        if self.batch_size == 0 {
            v.push("batch_size must be positive".into());
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            v.push("l2 must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            v.push("threshold must lie in [0, 1]".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            domain(v.join("; "))
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub activations: Vec<Activation>,
}

/// Forward-pass intermediates for one input.
struct Trace {
    /// Pre-activations per layer.
    z: Vec<Vec<f64>>,
    /// Activations per layer, with the input at position 0.
    a: Vec<Vec<f64>>,
}

impl Network {
    /// Uniform Glorot-style initialization from `stream`.
    pub fn init(layer_sizes: &[usize], activations: &[Activation], stream: RngStream) -> Self {
        let mut rng = stream.rng();
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights: (0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)).collect(),
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        Network {
            layers,
            activations: activations.to_vec(),
        }
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Parameters in layer order, weights before biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return domain(format!("expected {} parameters, got {}", self.n_params(), flat.len()));
        }
        let mut i = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[i..i + nw]);
            i += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&flat[i..i + nb]);
            i += nb;
        }
        Ok(())
    }

    fn forward(&self, x: &[f64]) -> Trace {
        let mut z_all = Vec::with_capacity(self.layers.len());
        let mut a_all = Vec::with_capacity(self.layers.len() + 1);
        a_all.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let input = &a_all[li];
            let z: Vec<f64> = (0..l.outputs)
                .map(|o| {
                    let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                    l.biases[o] + row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>()
                })
                .collect();
            let a = if li == last {
                z.iter().map(|&v| sigmoid(v)).collect()
            } else {
                let act = self.activations[li];
                z.iter().map(|&v| act.apply(v)).collect()
            };
            z_all.push(z);
            a_all.push(a);
        }
        Trace { z: z_all, a: a_all }
    }

    /// Output logit for an already standardized input.
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.forward(x).z.last().expect("at least one layer")[0]
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Weighted mean cross-entropy plus `l2 / 2 * |W|^2`, and its gradient
    /// in the layout of [`Network::to_flat`].
    pub fn loss_and_grad(&self, xs: &[Vec<f64>], ys: &[u8], weights: &[f64], l2: f64) -> (f64, Vec<f64>) {
        let total_w: f64 = weights.iter().sum();
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = self
            .layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
            .collect();
        let mut loss = 0.0;
        for ((x, &y), &w) in xs.iter().zip(ys).zip(weights) {
            let tr = self.forward(x);
            let zo = tr.z.last().expect("output layer")[0];
            let yf = y as f64;
            loss += w * (softplus(zo) - yf * zo);
            let mut delta = vec![w * (sigmoid(zo) - yf)];
            for li in (0..self.layers.len()).rev() {
                let l = &self.layers[li];
                let input = &tr.a[li];
                let (gw, gb) = &mut grads[li];
                for o in 0..l.outputs {
                    gb[o] += delta[o];
                    for i in 0..l.inputs {
                        gw[o * l.inputs + i] += delta[o] * input[i];
                    }
                }
                if li > 0 {
                    let act = self.activations[li - 1];
                    delta = (0..l.inputs)
                        .map(|i| {
                            let back: f64 = (0..l.outputs).map(|o| l.weights[o * l.inputs + i] * delta[o]).sum();
                            back * act.derivative(tr.z[li - 1][i])
                        })
                        .collect();
                }
            }
        }
        let scale = if total_w > 0.0 { 1.0 / total_w } else { 0.0 };
        loss *= scale;
        let mut flat = Vec::with_capacity(self.n_params());
        for (l, (gw, gb)) in self.layers.iter().zip(grads) {
            for (g, w) in gw.iter().zip(&l.weights) {
                flat.push(g * scale + l2 * w);
            }
            flat.extend(gb.iter().map(|g| g * scale));
            loss += 0.5 * l2 * l.weights.iter().map(|w| w * w).sum::<f64>();
        }
        (loss, flat)
    }
}

/// Per-feature standardization fitted on training rows. Features with zero
/// spread are dropped: they always map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorm {
    pub mean: Vec<f64>,
    pub stdev: Vec<f64>,
    pub dropped: Vec<usize>,
}

impl FeatureNorm {
    pub fn fit(xs: &[Vec<f64>]) -> Self {
        let w = xs[0].len();
        let n = xs.len() as f64;
        let mut mean = vec![0.0; w];
        let mut stdev = vec![0.0; w];
        let mut dropped = Vec::new();
        for j in 0..w {
            let col: Vec<f64> = xs.iter().map(|r| r[j]).collect();
            let m = crate::numeric::mean(&col);
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            mean[j] = m;
            stdev[j] = var.sqrt();
            if !(stdev[j] > 0.0) {
                dropped.push(j);
            }
        }
        FeatureNorm { mean, stdev, dropped }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, v)| {
                if self.stdev[j] > 0.0 {
                    (v - self.mean[j]) / self.stdev[j]
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub config: NetConfig,
    pub norm: FeatureNorm,
    pub network: Network,
    /// Set when training saw a single class; the model always predicts it.
    pub degenerate_class: Option<u8>,
    /// Full-data training loss before the first epoch and after each epoch.
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: u8,
    pub probability: f64,
}

fn sample_weights(ys: &[u8], weighting: ClassWeighting) -> Vec<f64> {
    match weighting {
        ClassWeighting::None => vec![1.0; ys.len()],
        ClassWeighting::Balanced => {
            let n1 = ys.iter().filter(|&&y| y == 1).count() as f64;
            let n0 = ys.len() as f64 - n1;
            let n = ys.len() as f64;
            ys.iter()
                .map(|&y| if y == 1 { n / (2.0 * n1) } else { n / (2.0 * n0) })
                .collect()
        }
    }
}

fn check_rows(xs: &[Vec<f64>], ys: &[u8], width: usize) -> Result<()> {
    if xs.len() != ys.len() {
        return domain(format!("{} rows but {} labels", xs.len(), ys.len()));
    }
    for (i, x) in xs.iter().enumerate() {
        if x.len() != width {
            return domain(format!("row {i} has width {}, expected {width}", x.len()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return domain(format!("row {i} has a non-finite feature"));
        }
    }
    if ys.iter().any(|&y| y > 1) {
        return domain("labels must be 0 or 1");
    }
    Ok(())
}

/// Deterministic in `(xs, ys, config)`.
pub fn train(xs: &[Vec<f64>], ys: &[u8], config: &NetConfig) -> Result<TrainedModel> {
    config.validate()?;
    if xs.len() < 2 {
        return domain(format!("training needs at least 2 rows, got {}", xs.len()));
    }
    let width = config.layer_sizes[0];
    check_rows(xs, ys, width)?;
    let root = RngStream::new(config.seed, 0);
    let norm = FeatureNorm::fit(xs);
    let mut network = Network::init(&config.layer_sizes, &config.activations, root.named("init"));

    let ones = ys.iter().filter(|&&y| y == 1).count();
    if ones == 0 || ones == ys.len() {
        return Ok(TrainedModel {
            format_version: MODEL_FORMAT_VERSION,
            config: config.clone(),
            norm,
            network,
            degenerate_class: Some(ys[0]),
            loss_history: Vec::new(),
        });
    }

    let zs: Vec<Vec<f64>> = xs.iter().map(|x| norm.apply(x)).collect();
    let sw = sample_weights(ys, config.class_weighting);
    let full_loss = |net: &Network| net.loss_and_grad(&zs, ys, &sw, config.l2).0;
    let mut history = vec![full_loss(&network)];
    let mut order: Vec<usize> = (0..zs.len()).collect();
    let mut params = network.to_flat();
    for epoch in 0..config.epochs {
        order.shuffle(&mut root.named("shuffle").derive(epoch as u64).rng());
        for batch in order.chunks(config.batch_size) {
            let bx: Vec<Vec<f64>> = batch.iter().map(|&i| zs[i].clone()).collect();
            let by: Vec<u8> = batch.iter().map(|&i| ys[i]).collect();
            let bw: Vec<f64> = batch.iter().map(|&i| sw[i]).collect();
            let (_, g) = network.loss_and_grad(&bx, &by, &bw, config.l2);
            for (p, gi) in params.iter_mut().zip(&g) {
                *p -= config.learning_rate * gi;
            }
            network.set_flat(&params)?;
        }
        history.push(full_loss(&network));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return domain("training diverged; lower the learning rate");
    }
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        config: config.clone(),
        norm,
        network,
        degenerate_class: None,
        loss_history: history,
    })
}

impl TrainedModel {
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let width = self.network.input_width();
        if x.len() != width {
            return domain(format!("feature width {} does not match model width {width}", x.len()));
        }
        if let Some(c) = self.degenerate_class {
            return Ok(Prediction {
                class: c,
                probability: c as f64,
            });
        }
        let probability = self.network.probability(&self.norm.apply(x));
        Ok(Prediction {
            class: (probability >= self.config.threshold) as u8,
            probability,
        })
    }

    pub fn predict_all(&self, xs: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}
