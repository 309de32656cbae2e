//! Feature graphs for rule-based classifiers.
//!
//! A rule set fitted on a dataset is turned into a weighted, undirected
//! graph over the features: edge weights reflect how often two features
//! appear together in relevant rules, and node strength gives a global
//! feature importance. Graphs from different rule sets can be compared
//! with a Frobenius distance.
//!
//! ```
//! use rulegraph::{build_graph, feature_importance, parse_rules, Dataset, MetricTags};
//!
//! let ds = Dataset::from_numeric(
//!     &["x", "z"],
//!     vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
//!     &["a", "a", "a", "b"],
//! )
//! .unwrap();
//! let rules = parse_rules("x > 0.5 AND z > 0.5 => b\nx <= 0.5 => a\n").unwrap();
//! let g = build_graph(&ds, &rules, None, MetricTags::default()).unwrap();
//! assert!((g.total_weight() - 100.0).abs() < 1e-9);
//! let imp = feature_importance(&g);
//! assert_eq!(imp.feature_names[imp.ranking[0]], "x");
//! ```

pub mod dataset;
pub mod error;
pub mod graph;
pub mod learner;
pub mod relevance;
pub mod rules;
pub mod synth;

pub use dataset::{load_csv, read_csv, ColumnKind, Dataset, LoadOptions, LoadReport, SampleIndexSet, Value};
pub use error::{Error, Result};
pub use graph::{
    build_graph, export_graph, feature_importance, graph_distance, ExportOptions, FeatureGraph, GraphFormat,
    Importance,
};
pub use relevance::{relevance_matrix, FeatureMetric, MetricTags, RelevanceResult, RuleMetric};
pub use rules::{parse_rules, rules_from_json, rules_to_json, tree_to_rules, Condition, Literal, Predicate, Rule, RuleSet};
