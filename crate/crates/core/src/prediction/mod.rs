//! Status prediction from conversing pairs: pair construction, feature
//! families, a linear SVM, and in-domain / cross-domain evaluation.

mod dataset;
mod evaluate;
mod features;
mod pairs;
pub mod svm;

pub use dataset::{export_dataset, import_dataset, DatasetRecord};
pub use evaluate::{
    cross_domain, fit_and_score, in_domain_cv, prediction_grid, stratified_folds, CellStatus, DomainData,
    EvalOptions, Evaluation, FoldDetail, GridCell, PredictionGrid, Protocol,
};
pub use features::{
    extract_features, BowVocabulary, FeatureKind, FeatureVector, BOW_BLOCK_SIZE, COORDINATION_DIM, STYLISTIC_DIM,
};
pub use pairs::{build_pairs, PairInstance, PairOptions, PairStats, Pairing, Reply};
pub use svm::{train, LinearModel, SvmParams};
