//! Dataset ingestion, experimental protocols, statistics and result
//! serialization for the benchmark runner.

pub mod dataset;
pub mod io;
pub mod protocol;
pub mod seeding;
pub mod split;
pub mod stats;

pub use dataset::{load_dataset_csv, synthetic_two_gaussians, Dataset};
pub use protocol::{
    cross_validate, default_u_schedule, learning_curve, summarize_cv, summarize_learning_curve,
    CvSummary, LearningCurveSummary, Method, ProtocolOptions, RepeatResult,
};
pub use split::{auto_labeled_size, sample_split, LabeledSize, SplitPlan};
pub use stats::wilcoxon_signed_rank;
