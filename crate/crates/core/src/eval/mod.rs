//! Metrics, the synthetic corpus generator and experiment reporting.

mod experiment;
mod metrics;
pub mod synth;

pub use experiment::{
    evaluate, mean_spread, prepare_data, run_experiment, run_seeds, run_single, summarize, summary_table, train_model,
    write_csv, EvalReport, ExperimentConfig, ExperimentResult, Metric, ModelConfig, ModelKind, PreparedData, ResultRow,
    Scores, SummaryRow, TrainResult, TrainedModel, RESULT_HEADER, SUMMARY_HEADER,
};
pub use metrics::{binary_f1, mrr, multiclass_f1, repair_report, ClassScore, CredReport, MulticlassF1, RepairReport};
pub use synth::{gen_synthetic, SynthConfig};
