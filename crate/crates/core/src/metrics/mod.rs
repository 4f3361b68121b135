//! Cluster-validity metrics and the evaluation report.

mod hard;
mod report;
mod soft;

pub use hard::{calinski_harabasz, davies_bouldin, silhouette, silhouette_samples};
pub use report::{
    evaluate, merge_reports, summary_header, summary_row, EvaluationReport, HardMetrics,
    RunMetadata, SoftMetrics,
};
pub use soft::{fpc, fpe, fuzzy_silhouette, mean_membership};
