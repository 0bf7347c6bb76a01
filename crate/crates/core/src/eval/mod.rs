//! Splitting, training loops, metrics and lead-time analysis.

pub mod experiment;
pub mod lead_time;
pub mod metrics;
pub mod split;
pub mod train;

pub use experiment::{
    build_features, evaluate_state, feature_split, run_experiment, timeline_csv, train_kind, Dataset, EvaluationReport,
    ExperimentConfig, ModelReport, REPORT_FORMAT,
};
pub use lead_time::{crash_windows, lead_times, CrashWindow, LeadTimes, TimelinePoint};
pub use metrics::{auprc, auroc, auroc_oracle, compute_metrics, pr_curve, roc_curve, Confusion, Metrics};
pub use split::{chronological_split, SplitPlan};
pub use train::{mean_loss, train_graph_model, GraphSample, TrainLog};
