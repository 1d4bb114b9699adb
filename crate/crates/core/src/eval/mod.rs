//! Evaluation metrics, reports and the speed-up sweep.

pub mod metrics;
pub mod report;
pub mod sweep;

pub use metrics::{
    harmonic_mean, in_segments, mrr, output_speedup, overall_performance, precision_recall_f1, roc_auc,
    speedup_accuracy, uniform_selection, uniform_skip, Prf, OS_SIGMA_FRACTION,
};
pub use report::{evaluate_selection, skip_profile, write_skip_profile, MetricReport, MetricRow, Selection, SkipProfileRow};
pub use sweep::{parse_targets, read_sweep_csv, speedup_sweep, summarize, sweep_traces, write_sweep_csv, SkipSplit, SweepRow};
