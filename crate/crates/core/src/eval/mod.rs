//! Metrics, leave-one-subject-out evaluation, sweeps and report files.

pub mod harness;
pub mod metrics;
pub mod report;

pub use harness::{
    compare_augmentations, run_loso, sweep_label_fraction, sweep_train_subjects, AugmentationCell, Executor,
    FoldOutcome, LosoResult, Method, SweepRow, DEFAULT_LABEL_COUNTS,
};
pub use metrics::{compute_metrics, f1_score, ConfusionCounts, MeanMetrics, MetricFlags, MetricsReport};
pub use report::{emit_report, Report, ReportFormat, ReportRow};
