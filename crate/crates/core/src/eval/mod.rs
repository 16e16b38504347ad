//! Evaluation harness: relatedness correlation, supervised classification
//! and internal consistency of benchmark scores.

pub mod battery;
pub mod classify;
pub mod consistency;
pub mod correlation;
pub mod data;
pub mod logreg;
pub mod relatedness;

pub use classify::{classification_eval, f1_score, labeled_cv, stratified_folds, ClassificationResult, CvOptions, L2_GRID};
pub use consistency::{consistency_report, cronbach_alpha, Cohort, ConsistencyReport, ScoreMatrix, PUBLISHED_SCORES};
pub use correlation::{average_ranks, pearson, spearman};
pub use data::{ClassificationDataset, ClassificationInput, EvalPair, LabeledSentence};
pub use logreg::{train_logreg, LogRegOptions, LogisticRegression};
pub use relatedness::{relatedness_eval, RelatednessResult};
