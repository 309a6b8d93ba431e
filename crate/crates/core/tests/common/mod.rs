//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

pub mod fixture;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kgcred::corpus::DEFAULT_FRACTIONS;
use kgcred::eval::{gen_synthetic, prepare_data, PreparedData, SynthConfig};
use kgcred::features::{FeatureVector, NUM_FLAGS};
use kgcred::mlp::{Activation, MlpModel, Mode, ModelDims};
use kgcred::pipeline::{freeze_negatives, DataBundle, FrozenSplits, SelectionOptions};
use kgcred::sampler::LabeledInstance;
use kgcred::seeds;
use rand::Rng;

/// A random model with `e + NUM_FLAGS` inputs and one random instance.
pub fn random_model(embedding_dim: usize, num_classes: usize, depth: usize, seed: u64) -> (MlpModel, LabeledInstance) {
    let dims = ModelDims {
        embedding_dim,
        num_flags: NUM_FLAGS,
        num_classes,
        depth,
    };
    let mut model = MlpModel::init_xavier(dims, seed).unwrap();
    model.activation = Activation::for_depth(depth);
    model.dropout_rate = 0.0;
    model.l1_lambda = 1e-3;
    model.loss_weights = (1.0, 0.7);
    let mut rng = seeds::rng(seed, "oracle-instance");
    // spread the biases too so every parameter carries gradient, and keep
    // weights clear of the L1 kink at zero
    for layer in model.params.layers_mut() {
        layer.bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
        for w in layer.weights.iter_mut().filter(|w| w.abs() < 1e-3) {
            *w = if *w < 0.0 { -1e-3 } else { 1e-3 };
        }
    }
    let mut x: Vec<f64> = (0..embedding_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    x.extend((0..NUM_FLAGS).map(|_| f64::from(u8::from(rng.gen_bool(0.5)))));
    let inst = LabeledInstance {
        features: FeatureVector::new(x, embedding_dim).unwrap(),
        cred_label: u8::from(rng.gen_bool(0.5)),
        repair_label: rng.gen_range(0..num_classes),
    };
    (model, inst)
}

/// Weight `j` of layer `li`, with biases numbered after the weights.
fn param_mut(model: &mut MlpModel, li: usize, j: usize) -> &mut f64 {
    let d = model.params.layers_mut().nth(li).unwrap();
    let nw = d.weights.len();
    if j < nw {
        &mut d.weights[j]
    } else {
        &mut d.bias[j - nw]
    }
}

fn total_loss(model: &MlpModel, inst: &LabeledInstance) -> f64 {
    let (cred, repair) = model.infer(inst.features.values()).unwrap();
    model.loss(cred, &repair, inst)
}

/// Largest relative gap between the analytic gradient and central
/// differences with step `h`, over every weight and bias. Gradients whose
/// magnitudes are both below `floor` are compared against `floor`.
pub fn max_gradient_error(model: &MlpModel, inst: &LabeledInstance, h: f64, floor: f64) -> (f64, usize) {
    let mut rng = seeds::rng(0, "unused");
    let fwd = model.forward(inst.features.values(), Mode::Infer, &mut rng).unwrap();
    let analytic = model.backward(&fwd.cache, inst).unwrap();
    let analytic: Vec<f64> = analytic
        .layers()
        .flat_map(|d| d.weights.iter().chain(&d.bias).copied())
        .collect();

    let mut probe = model.clone();
    let mut numeric = Vec::with_capacity(analytic.len());
    let shapes: Vec<(usize, usize)> = model.params.layers().map(|d| (d.weights.len(), d.bias.len())).collect();
    for (li, &(nw, nb)) in shapes.iter().enumerate() {
        for j in 0..nw + nb {
            let orig = *param_mut(&mut probe, li, j);
            *param_mut(&mut probe, li, j) = orig + h;
            let up = total_loss(&probe, inst);
            *param_mut(&mut probe, li, j) = orig - h;
            let down = total_loss(&probe, inst);
            *param_mut(&mut probe, li, j) = orig;
            numeric.push((up - down) / (2.0 * h));
        }
    }
    assert_eq!(numeric.len(), analytic.len());
    let worst = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max);
    (worst, analytic.len())
}

/// Chi-square statistic and upper-tail p-value for uniformity of `counts`.
pub fn chi_square_uniform(counts: &[usize]) -> (f64, f64) {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    (stat, 1.0 - dist.cdf(stat))
}

pub struct BruteCred {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn div(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Binary scores read off an explicit 2x2 confusion matrix.
pub fn brute_binary(preds: &[bool], golds: &[bool]) -> BruteCred {
    let mut m = [[0usize; 2]; 2];
    for (&p, &g) in preds.iter().zip(golds) {
        m[usize::from(g)][usize::from(p)] += 1;
    }
    let precision = div(m[1][1], m[1][1] + m[0][1]);
    let recall = div(m[1][1], m[1][1] + m[1][0]);
    BruteCred {
        precision,
        recall,
        f1: harmonic(precision, recall),
    }
}

/// Macro and micro F1 from a full confusion matrix; macro averages over
/// classes with gold support.
#[allow(clippy::needless_range_loop)]
pub fn brute_multiclass(preds: &[usize], golds: &[usize], k: usize) -> (f64, f64) {
    let mut m = vec![vec![0usize; k]; k];
    for (&p, &g) in preds.iter().zip(golds) {
        m[g][p] += 1;
    }
    let mut f1s = Vec::new();
    for c in 0..k {
        let support: usize = m[c].iter().sum();
        if support == 0 {
            continue;
        }
        let tp = m[c][c];
        let predicted: usize = (0..k).map(|g| m[g][c]).sum();
        f1s.push(harmonic(div(tp, predicted), div(tp, support)));
    }
    let macro_f1 = if f1s.is_empty() {
        0.0
    } else {
        f1s.iter().sum::<f64>() / f1s.len() as f64
    };
    let correct: usize = (0..k).map(|c| m[c][c]).sum();
    let n = preds.len();
    let micro = harmonic(div(correct, n), div(correct, n));
    (macro_f1, micro)
}

/// Rank of `gold` under descending `scores`, ties broken by class index.
pub fn brute_rank(scores: &[f64], gold: usize) -> usize {
    1 + (0..scores.len())
        .filter(|&c| scores[c] > scores[gold] || (scores[c] == scores[gold] && c < gold))
        .count()
}

pub fn brute_mrr(scores: &[Vec<f64>], golds: &[usize]) -> f64 {
    if golds.is_empty() {
        return 0.0;
    }
    let total: f64 = scores
        .iter()
        .zip(golds)
        .map(|(s, &g)| 1.0 / brute_rank(s, g) as f64)
        .sum();
    total / golds.len() as f64
}

/// Minimum of `f` over a uniform grid on `[lo, hi]`.
pub fn scan_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> (f64, f64) {
    (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .map(|w| (w, f(w)))
        .fold(
            (f64::NAN, f64::INFINITY),
            |best, cur| if cur.1 < best.1 { cur } else { best },
        )
}

pub struct Synthetic {
    pub bundle: DataBundle,
    pub splits: FrozenSplits,
    pub data: PreparedData,
}

pub fn synthetic(cfg: SynthConfig, seed: u64) -> Synthetic {
    let bundle = gen_synthetic(&cfg).unwrap();
    let splits = freeze_negatives(&bundle, DEFAULT_FRACTIONS, seed).unwrap();
    let data = prepare_data(&bundle, &bundle.catalog, &splits, &SelectionOptions::default(), seed).unwrap();
    Synthetic { bundle, splits, data }
}

pub fn bin_path() -> std::path::PathBuf {
    env!("CARGO_BIN_EXE_kgcred").into()
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin_path()).args(args).output().unwrap()
}

pub fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Runs the full pipeline into `root` and returns every produced file.
pub fn pipeline(root: &Path) -> Vec<(String, Vec<u8>)> {
    let data = root.join("data");
    let splits = root.join("splits");
    let model = root.join("model");
    let lr = root.join("lr");
    let report = root.join("report");
    let ablate = root.join("ablate");
    let preds = root.join("preds.jsonl");
    ok(&[
        "gen-synth",
        "--relations",
        "3",
        "--facts-per-relation",
        "25",
        "--seed",
        "4",
        "--out",
        s(&data),
    ]);
    ok(&[
        "sample-negatives",
        "--data",
        s(&data),
        "--seed",
        "9",
        "--out",
        s(&splits),
    ]);
    ok(&[
        "train",
        "--data",
        s(&data),
        "--splits",
        s(&splits),
        "--epochs",
        "2",
        "--seed",
        "9",
        "--out",
        s(&model),
    ]);
    ok(&[
        "train",
        "--data",
        s(&data),
        "--splits",
        s(&splits),
        "--model",
        "lr-avg",
        "--seed",
        "9",
        "--out",
        s(&lr),
    ]);
    let model_file = model.join("model.bin");
    ok(&[
        "eval",
        "--data",
        s(&data),
        "--splits",
        s(&splits),
        "--model-file",
        s(&model_file),
        "--out",
        s(&report),
    ]);
    ok(&[
        "predict",
        "--data",
        s(&data),
        "--model-file",
        s(&model_file),
        "--facts",
        s(&splits.join("test.neg.jsonl")),
        "--out",
        s(&preds),
    ]);
    ok(&[
        "ablate",
        "sentences",
        "--data",
        s(&data),
        "--splits",
        s(&splits),
        "--ks",
        "1,all",
        "--runs",
        "2",
        "--epochs",
        "1",
        "--seed",
        "9",
        "--out",
        s(&ablate),
    ]);
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}
