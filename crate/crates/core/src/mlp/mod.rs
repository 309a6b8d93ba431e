//! Joint credibility + repair feedforward network.
//!
//! `h0 = x`, `h_i = g(W_i h_{i-1} + b_i)` over square hidden layers, then a
//! sigmoid credibility head and a softmax repair head over the last hidden
//! state. Everything is f64; shapes are checked at the public boundary.

mod io;
mod train;

pub use io::{load_model, save_model, MODEL_VERSION};
pub use train::{sgd_step, train, train_balanced, Sgd, TrainConfig, TrainOutcome};

use rand::distributions::{Distribution, Uniform};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::LabeledInstance;
use crate::seeds::{self, Rng};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` inside logs.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    /// tanh for shallow nets (≤ 2 hidden layers), ReLU beyond.
    pub fn for_depth(depth: usize) -> Self {
        if depth <= 2 {
            Activation::Tanh
        } else {
            Activation::Relu
        }
    }

    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }
}

/// Row-major `rows × cols` weight matrix with a bias per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
        }
    }

    fn xavier(rows: usize, cols: usize, rng: &mut Rng) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        Dense {
            rows,
            cols,
            weights: (0..rows * cols).map(|_| dist.sample(rng)).collect(),
            bias: vec![0.0; rows],
        }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.cols)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }

    /// Adds `delta ⊗ input` to the weights and `delta` to the bias.
    fn accumulate_outer(&mut self, delta: &[f64], input: &[f64]) {
        for ((row, b), d) in self.weights.chunks_exact_mut(self.cols).zip(&mut self.bias).zip(delta) {
            *b += d;
            if *d != 0.0 {
                for (w, x) in row.iter_mut().zip(input) {
                    *w += d * x;
                }
            }
        }
    }

    /// `out += Wᵀ delta`.
    fn backprop_into(&self, delta: &[f64], out: &mut [f64]) {
        for (row, d) in self.weights.chunks_exact(self.cols).zip(delta) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * d;
            }
        }
    }
}

/// All trainable tensors. Also used for gradients and momentum buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub hidden: Vec<Dense>,
    pub cred: Dense,
    pub repair: Dense,
}

impl Params {
    pub fn zeros_like(other: &Params) -> Self {
        Params {
            hidden: other.hidden.iter().map(|d| Dense::zeros(d.rows, d.cols)).collect(),
            cred: Dense::zeros(other.cred.rows, other.cred.cols),
            repair: Dense::zeros(other.repair.rows, other.repair.cols),
        }
    }

    pub fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.hidden.iter().chain([&self.cred, &self.repair])
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.hidden.iter_mut().chain([&mut self.cred, &mut self.repair])
    }

    pub fn same_shape(&self, other: &Params) -> bool {
        self.hidden.len() == other.hidden.len()
            && self
                .layers()
                .zip(other.layers())
                .all(|(a, b)| a.rows == b.rows && a.cols == b.cols)
    }

    /// Σ|w| over weights only (biases are not regularized).
    pub fn l1_norm(&self) -> f64 {
        self.layers().flat_map(|d| &d.weights).map(|w| w.abs()).sum()
    }

    pub fn num_parameters(&self) -> usize {
        self.layers().map(|d| d.weights.len() + d.bias.len()).sum()
    }

    pub(crate) fn scale(&mut self, s: f64) {
        for d in self.layers_mut() {
            d.weights.iter_mut().chain(d.bias.iter_mut()).for_each(|v| *v *= s);
        }
    }
}

/// Network dimensions: `e` embedding, `n` flags, `r` repair classes, hidden `depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub embedding_dim: usize,
    pub num_flags: usize,
    pub num_classes: usize,
    pub depth: usize,
}

impl ModelDims {
    pub fn input_dim(&self) -> usize {
        self.embedding_dim + self.num_flags
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim() == 0 {
            return Err(Error::Dimension("input dimension e+n must be positive".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::Dimension(format!(
                "repair head needs at least 2 classes, got {}",
                self.num_classes
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub params: Params,
    pub dims: ModelDims,
    pub activation: Activation,
    pub dropout_rate: f64,
    pub l1_lambda: f64,
    /// `(w_cred, w_repair)` task weights in the joint loss.
    pub loss_weights: (f64, f64),
}

/// Everything `backward` needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[0] = x`; `inputs[i]` is the (dropped-out) output of hidden layer `i`.
    inputs: Vec<Vec<f64>>,
    /// Post-activation, pre-dropout outputs per hidden layer.
    activations: Vec<Vec<f64>>,
    /// Inverted-dropout multipliers per hidden layer (empty when inactive).
    masks: Vec<Vec<f64>>,
    cred: f64,
    repair: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Forward {
    pub cred: f64,
    pub repair: Vec<f64>,
    pub cache: ForwardCache,
}

/// Output of [`MlpModel::predict`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub credible: bool,
    pub cred_score: f64,
    /// Suggested class index when judged incredible and repairable.
    pub repair: Option<usize>,
    pub unrepairable: bool,
    /// Class indices by decreasing repair probability, ties by index.
    pub ranking: Vec<usize>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Binary cross entropy with natural log.
pub fn bce(p: f64, label: u8) -> f64 {
    let p = clamp_prob(p);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Categorical cross entropy of the gold class.
pub fn categorical_ce(probs: &[f64], gold: usize) -> f64 {
    -clamp_prob(probs[gold]).ln()
}

/// Class indices sorted by decreasing score, ties broken by lower index.
pub fn rank_classes(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

impl MlpModel {
    /// Xavier-uniform weights, zero biases, activation chosen by depth.
    pub fn init_xavier(dims: ModelDims, seed: u64) -> Result<Self> {
        dims.validate()?;
        let mut rng = seeds::rng(seed, "init");
        let d = dims.input_dim();
        let hidden = (0..dims.depth).map(|_| Dense::xavier(d, d, &mut rng)).collect();
        let cred = Dense::xavier(1, d, &mut rng);
        let repair = Dense::xavier(dims.num_classes, d, &mut rng);
        Ok(MlpModel {
            params: Params { hidden, cred, repair },
            dims,
            activation: Activation::for_depth(dims.depth),
            dropout_rate: 0.0,
            l1_lambda: 0.0,
            loss_weights: (1.0, 1.0),
        })
    }

    /// A model with every weight and bias zero.
    pub fn zeros(dims: ModelDims) -> Result<Self> {
        dims.validate()?;
        let d = dims.input_dim();
        Ok(MlpModel {
            params: Params {
                hidden: (0..dims.depth).map(|_| Dense::zeros(d, d)).collect(),
                cred: Dense::zeros(1, d),
                repair: Dense::zeros(dims.num_classes, d),
            },
            dims,
            activation: Activation::for_depth(dims.depth),
            dropout_rate: 0.0,
            l1_lambda: 0.0,
            loss_weights: (1.0, 1.0),
        })
    }

    pub fn depth(&self) -> usize {
        self.params.hidden.len()
    }

    pub fn input_dim(&self) -> usize {
        self.dims.input_dim()
    }

    pub fn num_classes(&self) -> usize {
        self.dims.num_classes
    }

    pub fn forward(&self, x: &[f64], mode: Mode, rng: &mut Rng) -> Result<Forward> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input has length {}, model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let drop = mode == Mode::Train && self.dropout_rate > 0.0;
        let keep_scale = 1.0 / (1.0 - self.dropout_rate);
        let mut inputs = Vec::with_capacity(self.depth() + 1);
        let mut activations = Vec::with_capacity(self.depth());
        let mut masks = Vec::with_capacity(self.depth());
        inputs.push(x.to_vec());
        for layer in &self.params.hidden {
            let a: Vec<f64> = layer
                .affine(inputs.last().unwrap())
                .into_iter()
                .map(|z| self.activation.apply(z))
                .collect();
            if drop {
                let mask: Vec<f64> = (0..a.len())
                    .map(|_| {
                        if rng.gen::<f64>() < self.dropout_rate {
                            0.0
                        } else {
                            keep_scale
                        }
                    })
                    .collect();
                inputs.push(a.iter().zip(&mask).map(|(v, m)| v * m).collect());
                masks.push(mask);
            } else {
                inputs.push(a.clone());
                masks.push(Vec::new());
            }
            activations.push(a);
        }
        let last = inputs.last().unwrap();
        let cred = sigmoid(self.params.cred.affine(last)[0]);
        let repair = softmax(&self.params.repair.affine(last));
        Ok(Forward {
            cred,
            repair: repair.clone(),
            cache: ForwardCache {
                inputs,
                activations,
                masks,
                cred,
                repair,
            },
        })
    }

    /// Deterministic forward pass without dropout.
    pub fn infer(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut unused = seeds::rng(0, "infer");
        let f = self.forward(x, Mode::Infer, &mut unused)?;
        Ok((f.cred, f.repair))
    }

    /// Weighted BCE + CE of one instance plus the L1 penalty on weights.
    pub fn loss(&self, cred: f64, repair: &[f64], inst: &LabeledInstance) -> f64 {
        self.data_loss(cred, repair, inst) + self.l1_lambda * self.params.l1_norm()
    }

    pub fn data_loss(&self, cred: f64, repair: &[f64], inst: &LabeledInstance) -> f64 {
        let (wc, wr) = self.loss_weights;
        let mut total = 0.0;
        if wc != 0.0 {
            total += wc * bce(cred, inst.cred_label);
        }
        if wr != 0.0 {
            total += wr * categorical_ce(repair, inst.repair_label);
        }
        total
    }

    /// Analytic gradient of [`MlpModel::loss`] for the forward pass in `cache`.
    pub fn backward(&self, cache: &ForwardCache, inst: &LabeledInstance) -> Result<Params> {
        let mut grads = Params::zeros_like(&self.params);
        self.backward_into(cache, inst, &mut grads)?;
        self.add_l1_subgradient(&mut grads);
        Ok(grads)
    }

    /// Accumulates the data-loss gradient (no L1 term) into `grads`.
    pub(crate) fn backward_into(&self, cache: &ForwardCache, inst: &LabeledInstance, grads: &mut Params) -> Result<()> {
        let depth = self.depth();
        let d = self.input_dim();
        if cache.inputs.len() != depth + 1
            || cache.activations.len() != depth
            || cache.inputs.iter().any(|h| h.len() != d)
            || cache.repair.len() != self.num_classes()
        {
            return Err(Error::Dimension("forward cache does not match model shape".into()));
        }
        if inst.repair_label >= self.num_classes() || inst.cred_label > 1 {
            return Err(Error::Invalid(format!(
                "labels out of range: cred {}, repair {}",
                inst.cred_label, inst.repair_label
            )));
        }
        let (wc, wr) = self.loss_weights;
        let dz_cred = [wc * (cache.cred - f64::from(inst.cred_label))];
        let dz_repair: Vec<f64> = cache
            .repair
            .iter()
            .enumerate()
            .map(|(k, p)| wr * (p - if k == inst.repair_label { 1.0 } else { 0.0 }))
            .collect();

        let last = &cache.inputs[depth];
        grads.cred.accumulate_outer(&dz_cred, last);
        grads.repair.accumulate_outer(&dz_repair, last);

        let mut dh = vec![0.0; d];
        self.params.cred.backprop_into(&dz_cred, &mut dh);
        self.params.repair.backprop_into(&dz_repair, &mut dh);

        for i in (0..depth).rev() {
            let mask = &cache.masks[i];
            let dz: Vec<f64> = cache.activations[i]
                .iter()
                .enumerate()
                .map(|(j, &a)| {
                    let through_drop = if mask.is_empty() { dh[j] } else { dh[j] * mask[j] };
                    through_drop * self.activation.derivative_from_output(a)
                })
                .collect();
            grads.hidden[i].accumulate_outer(&dz, &cache.inputs[i]);
            if i > 0 {
                dh.iter_mut().for_each(|v| *v = 0.0);
                self.params.hidden[i].backprop_into(&dz, &mut dh);
            }
        }
        Ok(())
    }

    /// Adds `l1_lambda · sign(w)` (with sign(0) = 0) to every weight gradient.
    pub(crate) fn add_l1_subgradient(&self, grads: &mut Params) {
        if self.l1_lambda == 0.0 {
            return;
        }
        for (g, p) in grads.layers_mut().zip(self.params.layers()) {
            for (gw, w) in g.weights.iter_mut().zip(&p.weights) {
                if *w > 0.0 {
                    *gw += self.l1_lambda;
                } else if *w < 0.0 {
                    *gw -= self.l1_lambda;
                }
            }
        }
    }

    /// Credible iff the credibility score is at least 0.5. An incredible
    /// fact gets the top-ranked repair unless that is the reserved class.
    pub fn predict(&self, x: &[f64], cannot_repair: usize) -> Result<Verdict> {
        let (cred, repair) = self.infer(x)?;
        Ok(verdict_from_scores(cred, &repair, cannot_repair))
    }
}

pub fn verdict_from_scores(cred: f64, repair_scores: &[f64], cannot_repair: usize) -> Verdict {
    let ranking = rank_classes(repair_scores);
    let credible = cred >= 0.5;
    let top = ranking[0];
    let (repair, unrepairable) = if credible {
        (None, false)
    } else if top == cannot_repair {
        (None, true)
    } else {
        (Some(top), false)
    };
    Verdict {
        credible,
        cred_score: cred,
        repair,
        unrepairable,
        ranking,
    }
}
