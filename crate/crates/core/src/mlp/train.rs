use serde::{Deserialize, Serialize};

use super::{MlpModel, Mode, Params};
use crate::error::{Error, Result};
use crate::sampler::{make_batches, Batch, LabeledInstance};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub momentum: f64,
    /// Learning-rate decay per update: `lr / (1 + decay · step)`.
    pub decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l1_lambda: f64,
    pub dropout: f64,
    pub seed: u64,
    /// `(w_cred, w_repair)`.
    pub loss_weights: (f64, f64),
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.1,
            momentum: 0.9,
            decay: 1e-6,
            epochs: 5,
            batch_size: 64,
            l1_lambda: 1e-5,
            dropout: 0.2,
            seed: 0,
            loss_weights: (1.0, 1.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be non-negative, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if self.decay.is_nan() || self.decay < 0.0 {
            return bad(format!("decay must be ≥ 0, got {}", self.decay));
        }
        if self.epochs == 0 {
            return bad("epochs must be ≥ 1".into());
        }
        if self.batch_size == 0 || !self.batch_size.is_multiple_of(2) {
            return bad(format!("batch size must be even, got {}", self.batch_size));
        }
        if self.l1_lambda.is_nan() || self.l1_lambda < 0.0 {
            return bad(format!("l1_lambda must be ≥ 0, got {}", self.l1_lambda));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        let (wc, wr) = self.loss_weights;
        if wc < 0.0 || wr < 0.0 || wc + wr == 0.0 {
            return bad(format!(
                "loss weights {:?} must be non-negative and not both zero",
                self.loss_weights
            ));
        }
        Ok(())
    }
}

/// Momentum SGD with inverse-time learning-rate decay.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub velocity: Params,
    pub step_count: u64,
}

impl Sgd {
    pub fn new(params: &Params) -> Self {
        Sgd {
            velocity: Params::zeros_like(params),
            step_count: 0,
        }
    }

    pub fn step(&mut self, params: &mut Params, grads: &Params, cfg: &TrainConfig) -> Result<()> {
        sgd_step(params, grads, &mut self.velocity, cfg, self.step_count)?;
        self.step_count += 1;
        Ok(())
    }
}

/// `v ← μ·v − lr_t·g; p ← p + v` with `lr_t = lr / (1 + decay·step_count)`.
pub fn sgd_step(
    params: &mut Params,
    grads: &Params,
    velocity: &mut Params,
    cfg: &TrainConfig,
    step_count: u64,
) -> Result<()> {
    if !params.same_shape(grads) || !params.same_shape(velocity) {
        return Err(Error::Dimension(
            "gradient or velocity shape differs from parameters".into(),
        ));
    }
    let lr_t = cfg.lr / (1.0 + cfg.decay * step_count as f64);
    for ((p, g), v) in params.layers_mut().zip(grads.layers()).zip(velocity.layers_mut()) {
        let pairs = p
            .weights
            .iter_mut()
            .chain(p.bias.iter_mut())
            .zip(g.weights.iter().chain(&g.bias))
            .zip(v.weights.iter_mut().chain(v.bias.iter_mut()));
        for ((param, grad), vel) in pairs {
            *vel = cfg.momentum * *vel - lr_t * grad;
            *param += *vel;
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    /// Mean batch loss per epoch.
    pub loss_trace: Vec<f64>,
}

/// Runs `cfg.epochs` passes over the batches produced by `epoch_batches`.
///
/// Each batch takes one momentum step on the mean per-instance loss
/// (including the L1 term). Dropout masks come from the `dropout`
/// substream of `cfg.seed`, so a fixed seed gives a bit-identical run.
pub fn train<'a, F>(mut model: MlpModel, cfg: &TrainConfig, mut epoch_batches: F) -> Result<TrainOutcome>
where
    F: FnMut(usize) -> Result<Vec<Batch<'a>>>,
{
    cfg.validate()?;
    model.dropout_rate = cfg.dropout;
    model.l1_lambda = cfg.l1_lambda;
    model.loss_weights = cfg.loss_weights;

    let mut opt = Sgd::new(&model.params);
    let mut rng = seeds::rng(cfg.seed, "dropout");
    let mut grads = Params::zeros_like(&model.params);
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let batches = epoch_batches(epoch)?;
        if batches.is_empty() {
            return Err(Error::Invalid(format!("epoch {epoch} produced no batches")));
        }
        let mut epoch_loss = 0.0;
        for batch in &batches {
            if batch.instances.is_empty() {
                return Err(Error::Invalid("empty batch".into()));
            }
            grads.scale(0.0);
            let mut batch_loss = 0.0;
            for inst in &batch.instances {
                let fwd = model.forward(inst.features.values(), Mode::Train, &mut rng)?;
                batch_loss += model.data_loss(fwd.cred, &fwd.repair, inst);
                model.backward_into(&fwd.cache, inst, &mut grads)?;
            }
            let n = batch.instances.len() as f64;
            grads.scale(1.0 / n);
            model.add_l1_subgradient(&mut grads);
            epoch_loss += batch_loss / n + model.l1_lambda * model.params.l1_norm();
            opt.step(&mut model.params, &grads, cfg)?;
        }
        let mean = epoch_loss / batches.len() as f64;
        log::debug!("epoch {} mean loss {mean:.6}", epoch + 1);
        trace.push(mean);
    }
    Ok(TrainOutcome {
        model,
        loss_trace: trace,
    })
}

/// [`train`] over balanced batches reshuffled each epoch.
pub fn train_balanced(
    model: MlpModel,
    pos: &[LabeledInstance],
    neg: &[LabeledInstance],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train(model, cfg, |epoch| {
        make_batches(
            pos,
            neg,
            cfg.batch_size,
            seeds::indexed(cfg.seed, "batches", epoch as u64),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{Dense, ModelDims};

    fn single(v: f64) -> Params {
        Params {
            hidden: vec![],
            cred: Dense {
                rows: 1,
                cols: 1,
                weights: vec![v],
                bias: vec![0.0],
            },
            repair: Dense::zeros(2, 1),
        }
    }

    #[test]
    fn plain_sgd_reduction() {
        let cfg = TrainConfig {
            lr: 0.5,
            momentum: 0.0,
            decay: 0.0,
            ..Default::default()
        };
        let mut p = single(1.0);
        let mut v = Params::zeros_like(&p);
        sgd_step(&mut p, &single(0.2), &mut v, &cfg, 0).unwrap();
        assert!((p.cred.weights[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let cfg = TrainConfig::default();
        let mut p = single(0.7);
        let mut opt = Sgd::new(&p);
        for _ in 0..5 {
            opt.step(&mut p, &single(0.0), &cfg).unwrap();
        }
        assert_eq!(p.cred.weights[0], 0.7);
        assert_eq!(opt.step_count, 5);
    }

    #[test]
    fn two_momentum_steps() {
        let g = 0.3;
        let cfg = TrainConfig {
            lr: 0.1,
            momentum: 0.9,
            decay: 0.0,
            ..Default::default()
        };
        let mut p = single(0.0);
        let mut opt = Sgd::new(&p);
        opt.step(&mut p, &single(g), &cfg).unwrap();
        opt.step(&mut p, &single(g), &cfg).unwrap();
        let expected = -0.1 * g + (-0.09 * g - 0.1 * g);
        assert!((p.cred.weights[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn decay_shrinks_step() {
        let cfg = TrainConfig {
            lr: 1.0,
            momentum: 0.0,
            decay: 1.0,
            ..Default::default()
        };
        let mut p = single(0.0);
        let mut v = Params::zeros_like(&p);
        sgd_step(&mut p, &single(1.0), &mut v, &cfg, 3).unwrap();
        assert!((p.cred.weights[0] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let cfg = TrainConfig::default();
        let mut p = single(0.0);
        let mut v = Params::zeros_like(&p);
        let m = MlpModel::zeros(ModelDims {
            embedding_dim: 2,
            num_flags: 0,
            num_classes: 2,
            depth: 1,
        })
        .unwrap();
        assert!(sgd_step(&mut p, &m.params, &mut v, &cfg, 0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig {
            momentum: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            epochs: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            batch_size: 63,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            dropout: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            loss_weights: (0.0, 0.0),
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
