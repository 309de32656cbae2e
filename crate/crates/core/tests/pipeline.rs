use std::path::Path;

use rulegraph::learner::cv::{cross_validate, CvConfig};
use rulegraph::learner::importance::gini_importance;
use rulegraph::learner::tree::{fit_tree, TreeParams};
use rulegraph::synth::{self, SuiteMode};
use rulegraph::{
    build_graph, export_graph, feature_importance, graph_distance, load_csv, tree_to_rules, Dataset, ExportOptions,
    FeatureGraph, GraphFormat, LoadOptions, MetricTags,
};

fn pima() -> Dataset {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/pima.csv");
    load_csv(path, "Outcome", &LoadOptions::default()).unwrap().0
}

#[test]
fn pima_loads_with_expected_shape() {
    let ds = pima();
    assert_eq!(ds.n_samples(), 768);
    assert_eq!(ds.feature_names(), ["P", "G120", "BP", "ST", "I120", "BMI", "DPF", "A"]);
    assert_eq!(ds.class_counts().iter().sum::<usize>(), 768);
}

#[test]
fn pima_tree_graph_puts_glucose_first() {
    let ds = pima();
    let tree = fit_tree(&ds, TreeParams::with_depth(4)).unwrap();
    let g = build_graph(&ds, &tree_to_rules(&tree), None, MetricTags::default()).unwrap();
    let imp = feature_importance(&g);
    assert_eq!(imp.feature_names[imp.ranking[0]], "G120");
    assert!((imp.scores.iter().sum::<f64>() - 100.0).abs() < 1e-9);

    let dot = export_graph(&g, GraphFormat::Dot, ExportOptions { omit_self_edges: true }).unwrap();
    assert!(dot.starts_with("graph feature_graph {"));
    assert!(!dot.contains("\"G120\" -- \"G120\""));
    let back = FeatureGraph::from_json(&g.to_json()).unwrap();
    assert_eq!(graph_distance(&g, &back).unwrap(), 0.0);
}

#[test]
fn class_graphs_are_built_per_label() {
    let ds = pima();
    let rules = tree_to_rules(&fit_tree(&ds, TreeParams::with_depth(3)).unwrap());
    for label in ["0", "1"] {
        let g = build_graph(&ds, &rules, Some(label), MetricTags::default()).unwrap();
        assert_eq!(g.class_filter.as_deref(), Some(label));
        assert!(g.zero || (g.total_weight() - 100.0).abs() < 1e-9);
    }
    let err = build_graph(&ds, &rules, Some("2"), MetricTags::default()).unwrap_err();
    assert!(err.to_string().contains("valid labels"));
}

#[test]
fn gini_concentrates_on_relevant_synthetic_features() {
    let spec = synth::preset_spec(SuiteMode::Independent, 3, 5);
    let ds = synth::generate(&spec).unwrap();
    let cv = cross_validate(&ds, &CvConfig { seed: 5, ..Default::default() }).unwrap();
    for fold in &cv.folds {
        let gini = gini_importance(&fold.tree);
        let relevant: f64 = spec.relevant_indices().iter().map(|&i| gini.scores[i]).sum();
        assert!(relevant > 0.9, "fold {}: relevant share {relevant}", fold.fold);
    }
}

#[test]
fn depth_variants_are_closer_than_unrelated_rule_sets() {
    let ds = pima();
    let graph = |depth| {
        let tree = fit_tree(&ds, TreeParams::with_depth(depth)).unwrap();
        build_graph(&ds, &tree_to_rules(&tree), None, MetricTags::default()).unwrap()
    };
    let (g5, g6) = (graph(5), graph(6));
    let bmi_only = rulegraph::parse_rules("BMI > 30 => 1\nBMI <= 30 => 0\n").unwrap();
    let other = build_graph(&ds, &bmi_only, None, MetricTags::default()).unwrap();
    let near = graph_distance(&g5, &g6).unwrap();
    assert!(near.is_finite());
    assert!(near < graph_distance(&g5, &other).unwrap());
}
