//! Tree induction, baseline importances, cross-validation and rank stability.

pub mod cv;
pub mod importance;
pub mod selection;
pub mod stability;
pub mod stats;
pub mod tree;

pub use cv::{cross_validate, default_grid, stratified_folds, CvConfig, CvResult, FoldResult};
pub use importance::{
    gini_importance, graph_importance, permutation_importance, ruleset_predict, ImportanceMethod,
    ImportanceReport, Predictor, RuleSetPredictor,
};
pub use selection::{topk_evaluation, TopKReport};
pub use stability::{stability_report, StabilityDesign, StabilityReport};
pub use stats::{average_ranks, spearman};
pub use tree::{fit_tree, DecisionTree, TreeParams};
