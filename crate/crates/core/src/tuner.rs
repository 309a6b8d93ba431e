//! Coordinate-descent hyperparameter search and the ablation sweeps.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::PENALTY_GRID;
use crate::catalog::{FrameMode, RelationCatalog};
use crate::corpus::EmbeddingTable;
use crate::error::{Error, Result};
use crate::eval::{
    evaluate, mean_spread, prepare_data, run_seeds, run_single, train_model, write_csv, Metric, ModelConfig, ModelKind,
    PreparedData,
};
use crate::pipeline::{DataBundle, FrozenSplits, SelectionOptions};
use crate::relevance::{FrameFilter, SentenceCount};

pub const DEFAULT_MAX_CYCLES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Lr,
    L1,
    Dropout,
    /// LR baseline L1 penalty.
    Penalty,
}

impl Param {
    pub fn as_str(self) -> &'static str {
        match self {
            Param::Lr => "lr",
            Param::L1 => "l1",
            Param::Dropout => "dropout",
            Param::Penalty => "penalty",
        }
    }

    pub fn get(self, cfg: &ModelConfig) -> f64 {
        match self {
            Param::Lr => cfg.train.lr,
            Param::L1 => cfg.train.l1_lambda,
            Param::Dropout => cfg.train.dropout,
            Param::Penalty => cfg.penalty,
        }
    }

    pub fn set(self, cfg: &mut ModelConfig, v: f64) {
        match self {
            Param::Lr => cfg.train.lr = v,
            Param::L1 => cfg.train.l1_lambda = v,
            Param::Dropout => cfg.train.dropout = v,
            Param::Penalty => cfg.penalty = v,
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub name: String,
    pub values: Vec<f64>,
}

impl ParamGrid {
    pub fn new(name: impl Into<String>, values: impl Into<Vec<f64>>) -> Self {
        ParamGrid {
            name: name.into(),
            values: values.into(),
        }
    }
}

/// Grids in visit order for a model kind: lr, L1, dropout for the MLP and
/// the penalty for LR.
pub fn default_grids(kind: ModelKind) -> Vec<(Param, Vec<f64>)> {
    match kind {
        ModelKind::Mlp => vec![
            (Param::Lr, vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5]),
            (Param::L1, vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6]),
            (Param::Dropout, vec![0.2, 0.3, 0.4, 0.5]),
        ],
        ModelKind::Lr(_) => vec![(Param::Penalty, PENALTY_GRID.to_vec())],
    }
}

/// One evaluated configuration. The first record of a search is the
/// initial configuration (cycle 0, no parameter).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub cycle: usize,
    pub param: String,
    pub value: Option<f64>,
    pub dev_metric: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: Vec<f64>,
    pub best_metric: f64,
    pub log: Vec<TrialRecord>,
}

fn describe(grids: &[ParamGrid], values: &[f64]) -> String {
    grids
        .iter()
        .zip(values)
        .map(|(g, v)| format!("{}={v}", g.name))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Maximizes `eval` one coordinate at a time.
///
/// Each cycle sweeps the grids in order; within a sweep every value is
/// tried with the other coordinates fixed and replaces the incumbent only
/// when strictly better. The search ends after a cycle without improvement
/// or after `max_cycles` cycles.
pub fn coordinate_descent<F>(
    grids: &[ParamGrid],
    initial: &[f64],
    max_cycles: usize,
    mut eval: F,
) -> Result<SearchOutcome>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if grids.is_empty() || grids.iter().any(|g| g.values.is_empty()) {
        return Err(Error::Invalid("coordinate descent needs nonempty grids".into()));
    }
    if initial.len() != grids.len() {
        return Err(Error::Dimension(format!(
            "{} initial values for {} grids",
            initial.len(),
            grids.len()
        )));
    }
    let mut run = |values: &[f64]| {
        eval(values).map_err(|e| Error::Trial {
            config: describe(grids, values),
            message: e.to_string(),
        })
    };
    let mut current = initial.to_vec();
    let mut best = run(&current)?;
    let mut log = vec![TrialRecord {
        cycle: 0,
        param: "initial".into(),
        value: None,
        dev_metric: best,
        accepted: true,
    }];
    for cycle in 1..=max_cycles.max(1) {
        let mut improved = false;
        for (i, grid) in grids.iter().enumerate() {
            for &v in &grid.values {
                if v == current[i] {
                    continue;
                }
                let mut candidate = current.clone();
                candidate[i] = v;
                let m = run(&candidate)?;
                let accepted = m > best;
                log.push(TrialRecord {
                    cycle,
                    param: grid.name.clone(),
                    value: Some(v),
                    dev_metric: m,
                    accepted,
                });
                if accepted {
                    best = m;
                    current = candidate;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(SearchOutcome {
        best: current,
        best_metric: best,
        log,
    })
}

pub const LOG_HEADER: [&str; 5] = ["cycle", "param", "value", "dev_metric", "accepted"];

pub fn write_log(path: impl AsRef<Path>, log: &[TrialRecord]) -> Result<()> {
    write_csv(path, log, &LOG_HEADER)
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub config: ModelConfig,
    pub dev_metric: f64,
    pub log: Vec<TrialRecord>,
}

/// Tunes `kind` on the dev split with its default grids, training every
/// trial with the same `seed`.
#[allow(clippy::too_many_arguments)]
pub fn tune_model(
    kind: ModelKind,
    base: &ModelConfig,
    data: &PreparedData,
    emb: &EmbeddingTable,
    catalog: &RelationCatalog,
    metric: Metric,
    max_cycles: usize,
    seed: u64,
) -> Result<TuneOutcome> {
    let params = default_grids(kind);
    let grids: Vec<ParamGrid> = params
        .iter()
        .map(|(p, v)| ParamGrid::new(p.as_str(), v.clone()))
        .collect();
    let initial: Vec<f64> = params.iter().map(|(p, _)| p.get(base)).collect();
    let config_for = |values: &[f64]| {
        let mut cfg = base.clone();
        for ((p, _), &v) in params.iter().zip(values) {
            p.set(&mut cfg, v);
        }
        cfg
    };
    let outcome = coordinate_descent(&grids, &initial, max_cycles, |values| {
        let trained = train_model(kind, &config_for(values), &data.train, catalog.len(), emb, seed)?;
        let report = evaluate(&trained.model, &data.dev, emb, catalog)?;
        let m = metric.value(&report);
        log::info!("{kind} tune {} → {} {m:.4}", describe(&grids, values), metric.as_str());
        Ok(m)
    })?;
    Ok(TuneOutcome {
        config: config_for(&outcome.best),
        dev_metric: outcome.best_metric,
        log: outcome.log,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    Sentences,
    Depth,
    Mapping,
}

impl Ablation {
    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::Sentences => "sentences",
            Ablation::Depth => "depth",
            Ablation::Mapping => "mapping",
        }
    }
}

fn mapping_name(mode: FrameMode) -> &'static str {
    match mode {
        FrameMode::Expert => "expert",
        FrameMode::Auto => "auto",
        FrameMode::Off => "off",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub ablation: String,
    pub model: String,
    pub mapping: String,
    pub filter: String,
    pub k: String,
    /// Empty for LR models.
    pub depth: Option<usize>,
    pub seed: u64,
    pub task: String,
    pub metric: String,
    pub value: f64,
}

pub const ABLATION_HEADER: [&str; 10] = [
    "ablation", "model", "mapping", "filter", "k", "depth", "seed", "task", "metric", "value",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationSummary {
    pub ablation: String,
    pub model: String,
    pub mapping: String,
    pub filter: String,
    pub k: String,
    pub depth: Option<usize>,
    pub task: String,
    pub metric: String,
    pub mean: f64,
    pub spread: f64,
    pub runs: usize,
}

pub const ABLATION_SUMMARY_HEADER: [&str; 11] = [
    "ablation", "model", "mapping", "filter", "k", "depth", "task", "metric", "mean", "spread", "runs",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub models: Vec<ModelKind>,
    /// Seeds `seed .. seed + runs`.
    pub runs: usize,
    pub seed: u64,
    pub model: ModelConfig,
    /// Mapping, filter and sentence count used where a sweep does not vary them.
    pub selection: SelectionOptions,
    pub ks: Vec<SentenceCount>,
    pub filters: Vec<FrameFilter>,
    pub depths: Vec<usize>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            models: vec![ModelKind::Mlp],
            runs: 3,
            seed: 0,
            model: ModelConfig::default(),
            selection: SelectionOptions::default(),
            ks: SentenceCount::SWEEP.to_vec(),
            filters: vec![FrameFilter::AllRelevant],
            depths: (1..=4).collect(),
        }
    }
}

struct Sweep<'a> {
    bundle: &'a DataBundle,
    splits: &'a FrozenSplits,
    cfg: &'a AblationConfig,
    ablation: Ablation,
    rows: Vec<AblationRow>,
}

impl Sweep<'_> {
    /// Runs every model of `models` under `opts` for all seeds.
    fn point(&mut self, models: &[ModelKind], opts: &SelectionOptions, model_cfg: &ModelConfig) -> Result<()> {
        let catalog = self.bundle.catalog_for(opts.frame_mode, opts.min_overlap)?;
        for seed in run_seeds(self.cfg.seed, self.cfg.runs) {
            let data = prepare_data(self.bundle, &catalog, self.splits, opts, seed)?;
            for &kind in models {
                log::info!(
                    "ablate {}: {kind} mapping={} filter={} k={} depth={} seed={seed}",
                    self.ablation.as_str(),
                    mapping_name(opts.frame_mode),
                    opts.frame_filter.as_str(),
                    opts.sentences,
                    model_cfg.depth
                );
                let report = run_single(kind, model_cfg, &data, &self.bundle.embeddings, &catalog, seed)?;
                for (task, metric, value) in report.rows() {
                    self.rows.push(AblationRow {
                        ablation: self.ablation.as_str().into(),
                        model: kind.name().into(),
                        mapping: mapping_name(opts.frame_mode).into(),
                        filter: opts.frame_filter.as_str().into(),
                        k: opts.sentences.to_string(),
                        depth: (kind == ModelKind::Mlp).then_some(model_cfg.depth),
                        seed,
                        task: task.into(),
                        metric: metric.into(),
                        value,
                    });
                }
            }
        }
        Ok(())
    }
}

fn check(cfg: &AblationConfig) -> Result<()> {
    if cfg.runs == 0 {
        return Err(Error::Invalid("ablation needs at least one run".into()));
    }
    Ok(())
}

/// Retrains each model for every sentence count and frame filter.
pub fn ablate_sentences(bundle: &DataBundle, splits: &FrozenSplits, cfg: &AblationConfig) -> Result<Vec<AblationRow>> {
    check(cfg)?;
    let mut sweep = Sweep {
        bundle,
        splits,
        cfg,
        ablation: Ablation::Sentences,
        rows: Vec::new(),
    };
    for &filter in &cfg.filters {
        for &k in &cfg.ks {
            let opts = SelectionOptions {
                frame_filter: filter,
                sentences: k,
                ..cfg.selection
            };
            sweep.point(&cfg.models, &opts, &cfg.model)?;
        }
    }
    Ok(sweep.rows)
}

/// Retrains the MLP at each depth; ReLU replaces tanh beyond two layers.
pub fn ablate_depth(bundle: &DataBundle, splits: &FrozenSplits, cfg: &AblationConfig) -> Result<Vec<AblationRow>> {
    check(cfg)?;
    let mut sweep = Sweep {
        bundle,
        splits,
        cfg,
        ablation: Ablation::Depth,
        rows: Vec::new(),
    };
    for &depth in &cfg.depths {
        if depth == 0 {
            return Err(Error::Invalid("depth must be at least 1".into()));
        }
        let model = ModelConfig {
            depth,
            ..cfg.model.clone()
        };
        sweep.point(&[ModelKind::Mlp], &cfg.selection, &model)?;
    }
    Ok(sweep.rows)
}

/// Expert versus automatic frame mapping, each with all relevant sentences
/// and with frame-triggered sentences only.
pub fn ablate_mapping(bundle: &DataBundle, splits: &FrozenSplits, cfg: &AblationConfig) -> Result<Vec<AblationRow>> {
    check(cfg)?;
    let mut sweep = Sweep {
        bundle,
        splits,
        cfg,
        ablation: Ablation::Mapping,
        rows: Vec::new(),
    };
    for mode in [FrameMode::Expert, FrameMode::Auto] {
        for filter in [FrameFilter::AllRelevant, FrameFilter::FramesOnly] {
            let opts = SelectionOptions {
                frame_mode: mode,
                frame_filter: filter,
                ..cfg.selection
            };
            sweep.point(&cfg.models, &opts, &cfg.model)?;
        }
    }
    Ok(sweep.rows)
}

pub fn run_ablation(
    which: Ablation,
    bundle: &DataBundle,
    splits: &FrozenSplits,
    cfg: &AblationConfig,
) -> Result<Vec<AblationRow>> {
    match which {
        Ablation::Sentences => ablate_sentences(bundle, splits, cfg),
        Ablation::Depth => ablate_depth(bundle, splits, cfg),
        Ablation::Mapping => ablate_mapping(bundle, splits, cfg),
    }
}

/// Mean and spread over seeds for each sweep point, in first-seen order.
pub fn summarize_ablation(rows: &[AblationRow]) -> Vec<AblationSummary> {
    let mut out: Vec<(AblationSummary, Vec<f64>)> = Vec::new();
    for r in rows {
        let key = |s: &AblationSummary| {
            s.ablation == r.ablation
                && s.model == r.model
                && s.mapping == r.mapping
                && s.filter == r.filter
                && s.k == r.k
                && s.depth == r.depth
                && s.task == r.task
                && s.metric == r.metric
        };
        match out.iter_mut().find(|(s, _)| key(s)) {
            Some((_, vs)) => vs.push(r.value),
            None => out.push((
                AblationSummary {
                    ablation: r.ablation.clone(),
                    model: r.model.clone(),
                    mapping: r.mapping.clone(),
                    filter: r.filter.clone(),
                    k: r.k.clone(),
                    depth: r.depth,
                    task: r.task.clone(),
                    metric: r.metric.clone(),
                    mean: 0.0,
                    spread: 0.0,
                    runs: 0,
                },
                vec![r.value],
            )),
        }
    }
    out.into_iter()
        .map(|(mut s, vs)| {
            (s.mean, s.spread) = mean_spread(&vs);
            s.runs = vs.len();
            s
        })
        .collect()
}

/// Writes `<name>.csv` and `<name>_summary.csv` into `dir`.
pub fn write_ablation(dir: impl AsRef<Path>, name: &str, rows: &[AblationRow]) -> Result<()> {
    let dir = dir.as_ref();
    write_csv(dir.join(format!("{name}.csv")), rows, &ABLATION_HEADER)?;
    write_csv(
        dir.join(format!("{name}_summary.csv")),
        &summarize_ablation(rows),
        &ABLATION_SUMMARY_HEADER,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_argmax() {
        let grid = [ParamGrid::new("x", vec![1.0, 2.0, 3.0, 4.0, 5.0])];
        let out = coordinate_descent(&grid, &[1.0], 3, |v| Ok(-(v[0] - 4.0).powi(2))).unwrap();
        assert_eq!(out.best, vec![4.0]);
        assert_eq!(out.best_metric, 0.0);
    }

    #[test]
    fn constant_objective_keeps_initial() {
        let grids = [ParamGrid::new("a", vec![1.0, 2.0]), ParamGrid::new("b", vec![3.0, 4.0])];
        let out = coordinate_descent(&grids, &[2.0, 3.0], 3, |_| Ok(0.5)).unwrap();
        assert_eq!(out.best, vec![2.0, 3.0]);
        // initial + one value per grid, single cycle
        assert_eq!(out.log.len(), 3);
        assert!(out.log[1..].iter().all(|t| !t.accepted && t.cycle == 1));
    }

    #[test]
    fn failures_name_the_config() {
        let grids = [ParamGrid::new("lr", vec![0.1, 0.01])];
        let err = coordinate_descent(&grids, &[0.1], 2, |v| {
            if v[0] < 0.05 {
                Err(Error::Invalid("diverged".into()))
            } else {
                Ok(1.0)
            }
        })
        .unwrap_err();
        match err {
            Error::Trial { config, message } => {
                assert_eq!(config, "lr=0.01");
                assert!(message.contains("diverged"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn params_round_trip_through_config() {
        let mut cfg = ModelConfig::default();
        for (p, v) in [
            (Param::Lr, 0.01),
            (Param::L1, 1e-3),
            (Param::Dropout, 0.4),
            (Param::Penalty, 10.0),
        ] {
            p.set(&mut cfg, v);
            assert_eq!(p.get(&cfg), v);
        }
    }
}
