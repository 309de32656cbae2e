//! WebAssembly bindings for the browser demo.
//!
//! Each exported function returns a JSON string; errors surface as thrown
//! JavaScript strings. The `*_json` functions hold the logic and are plain
//! Rust so they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use rulegraph::learner::tree::{fit_tree, TreeParams};
use rulegraph::synth::{self, SuiteMode};
use rulegraph::{
    build_graph, export_graph, feature_importance, graph_distance, parse_rules, read_csv, tree_to_rules, Dataset,
    ExportOptions, FeatureGraph, GraphFormat, LoadOptions, MetricTags,
};

#[derive(Serialize)]
struct Ranked {
    feature: String,
    score: f64,
}

#[derive(Serialize)]
struct GraphView {
    features: Vec<String>,
    matrix: Vec<Vec<f64>>,
    ranking: Vec<Ranked>,
    zero: bool,
    dot: String,
}

impl GraphView {
    fn new(g: &FeatureGraph) -> Result<Self, String> {
        let imp = feature_importance(g);
        Ok(GraphView {
            features: g.feature_names.clone(),
            matrix: g.adjacency.outer_iter().map(|r| r.to_vec()).collect(),
            ranking: imp
                .ranking
                .iter()
                .map(|&f| Ranked { feature: imp.feature_names[f].clone(), score: imp.scores[f] })
                .collect(),
            zero: g.zero,
            dot: export_graph(g, GraphFormat::Dot, ExportOptions { omit_self_edges: true }).map_err(|e| e.to_string())?,
        })
    }
}

fn load(csv: &str, target: &str) -> Result<Dataset, String> {
    read_csv(csv.as_bytes(), target, &LoadOptions::default()).map(|(ds, _)| ds).map_err(|e| e.to_string())
}

fn graph_of(ds: &Dataset, rules: &str, class: &str) -> Result<FeatureGraph, String> {
    let rs = parse_rules(rules).map_err(|e| e.to_string())?;
    let class = Some(class.trim()).filter(|c| !c.is_empty());
    build_graph(ds, &rs, class, MetricTags::default()).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable view")
}

/// Feature graph of a rule set over a CSV dataset; empty `class` means all rules.
pub fn analyze_json(csv: &str, target: &str, rules: &str, class: &str) -> Result<String, String> {
    let ds = load(csv, target)?;
    Ok(to_json(&GraphView::new(&graph_of(&ds, rules, class)?)?))
}

#[derive(Serialize)]
struct SyntheticView {
    csv: String,
    target: String,
    rules: String,
    relevant: Vec<String>,
    train_accuracy: f64,
    graph: GraphView,
}

/// Generates a calibrated synthetic dataset, fits a tree of the given depth,
/// and returns the dataset, the extracted rules and their graph.
pub fn synthetic_json(mode: &str, n_relevant: usize, seed: u64, depth: usize, n_samples: usize) -> Result<String, String> {
    let mode = match mode {
        "independent" => SuiteMode::Independent,
        "combined" => SuiteMode::Combined,
        "mixed" => SuiteMode::Mixed,
        other => return Err(format!("unknown mode '{other}' (expected independent, combined or mixed)")),
    };
    if !(2..=synth::SUITE_FEATURES).contains(&n_relevant) {
        return Err(format!("relevant features must be between 2 and {}", synth::SUITE_FEATURES));
    }
    let mut spec = synth::preset_spec(mode, n_relevant, seed);
    spec.n_samples = n_samples;
    let ds = synth::generate(&spec).map_err(|e| e.to_string())?;
    let tree = fit_tree(&ds, TreeParams::with_depth(depth)).map_err(|e| e.to_string())?;
    let rules = tree_to_rules(&tree);
    let g = build_graph(&ds, &rules, None, MetricTags::default()).map_err(|e| e.to_string())?;
    let mut csv = Vec::new();
    ds.write_csv(&mut csv, synth::TARGET_NAME).map_err(|e| e.to_string())?;
    Ok(to_json(&SyntheticView {
        csv: String::from_utf8(csv).map_err(|e| e.to_string())?,
        target: synth::TARGET_NAME.into(),
        rules: rules.to_dsl(),
        relevant: spec.relevant_indices().iter().map(|&i| ds.feature_names()[i].clone()).collect(),
        train_accuracy: tree.accuracy(&ds),
        graph: GraphView::new(&g)?,
    }))
}

#[derive(Serialize)]
struct Comparison {
    distance: f64,
    a: GraphView,
    b: GraphView,
}

/// Frobenius distance between the graphs of two rule sets on one dataset.
pub fn compare_json(csv: &str, target: &str, rules_a: &str, rules_b: &str, class: &str) -> Result<String, String> {
    let ds = load(csv, target)?;
    let ga = graph_of(&ds, rules_a, class).map_err(|e| format!("rule set A: {e}"))?;
    let gb = graph_of(&ds, rules_b, class).map_err(|e| format!("rule set B: {e}"))?;
    let distance = graph_distance(&ga, &gb).map_err(|e| e.to_string())?;
    Ok(to_json(&Comparison { distance, a: GraphView::new(&ga)?, b: GraphView::new(&gb)? }))
}

#[wasm_bindgen]
pub fn analyze(csv: &str, target: &str, rules: &str, class: &str) -> Result<String, JsValue> {
    analyze_json(csv, target, rules, class).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn synthetic(mode: &str, n_relevant: u32, seed: u32, depth: u32, n_samples: u32) -> Result<String, JsValue> {
    synthetic_json(mode, n_relevant as usize, seed as u64, depth as usize, n_samples as usize).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn compare(csv: &str, target: &str, rules_a: &str, rules_b: &str, class: &str) -> Result<String, JsValue> {
    compare_json(csv, target, rules_a, rules_b, class).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "x,z,y\n0,0,a\n0,1,a\n1,0,a\n1,1,b\n";

    #[test]
    fn analyze_returns_normalized_graph() {
        let out = analyze_json(CSV, "y", "x > 0.5 AND z > 0.5 => b\nx <= 0.5 => a\n", "").unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let total: f64 = v["matrix"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap()).map(|x| x.as_f64().unwrap()).sum();
        assert!((total - 100.0).abs() < 1e-9);
        assert_eq!(v["ranking"][0]["feature"], "x");
        assert!(v["dot"].as_str().unwrap().starts_with("graph feature_graph {"));
    }

    #[test]
    fn errors_are_messages() {
        assert!(analyze_json(CSV, "nope", "x > 1 => a", "").unwrap_err().contains("target column not found"));
        assert!(analyze_json(CSV, "y", "x > => a", "").unwrap_err().contains("parse error"));
        assert!(analyze_json(CSV, "y", "x > 1 => a", "c").unwrap_err().contains("valid labels"));
        assert!(synthetic_json("sideways", 3, 0, 4, 100).is_err());
    }

    #[test]
    fn synthetic_round_trips_through_analyze() {
        let out = synthetic_json("independent", 3, 1, 4, 400).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["relevant"], serde_json::json!(["f0", "f1", "f2"]));
        let again = analyze_json(v["csv"].as_str().unwrap(), "y", v["rules"].as_str().unwrap(), "").unwrap();
        let w: serde_json::Value = serde_json::from_str(&again).unwrap();
        assert_eq!(w["matrix"], v["graph"]["matrix"]);
    }

    #[test]
    fn compare_self_is_zero() {
        let rules = "x > 0.5 => b\nx <= 0.5 => a\n";
        let v: serde_json::Value = serde_json::from_str(&compare_json(CSV, "y", rules, rules, "").unwrap()).unwrap();
        assert_eq!(v["distance"], 0.0);
        let v: serde_json::Value = serde_json::from_str(&compare_json(CSV, "y", rules, "z > 0.5 => b\n", "").unwrap()).unwrap();
        assert!(v["distance"].as_f64().unwrap() > 0.0);
    }
}
