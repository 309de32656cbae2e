//! Weighted feature graphs projected from rule relevance, their
//! normalization, comparison and centrality.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::relevance::{finish_csv, relevance_matrix, MetricTags, RelevanceResult};
use crate::rules::RuleSet;

/// Total edge weight of every non-zero normalized graph.
pub const TOTAL_WEIGHT: f64 = 100.0;

/// Rule counts above which the product over rules is accumulated in log space.
const LOG_SPACE_RULES: usize = 1000;

/// Projects rule relevance onto feature pairs:
/// `a_ij = 1 − ∏_k (1 − p_ki · p_kj · q_k)`, diagonal included.
pub fn project(p: ArrayView2<f64>, q: ArrayView1<f64>) -> Result<Array2<f64>> {
    let (n, m) = p.dim();
    if q.len() != n {
        return Err(Error::Dimension(format!("P has {n} rows but q has {} entries", q.len())));
    }
    let in_unit = |x: &f64| (0.0..=1.0).contains(x);
    if let Some(x) = p.iter().find(|x| !in_unit(x)) {
        return Err(Error::OutOfRange(format!("P entry {x} outside [0, 1]")));
    }
    if let Some(x) = q.iter().find(|x| !in_unit(x)) {
        return Err(Error::OutOfRange(format!("q entry {x} outside [0, 1]")));
    }
    let log_space = n > LOG_SPACE_RULES;
    let mut a = Array2::<f64>::zeros((m, m));
    for i in 0..m {
        for j in i..m {
            let value = if log_space {
                let log_keep: f64 = (0..n).map(|k| (-(p[[k, i]] * p[[k, j]] * q[k])).ln_1p()).sum();
                -log_keep.exp_m1()
            } else {
                let keep: f64 = (0..n).map(|k| 1.0 - p[[k, i]] * p[[k, j]] * q[k]).product();
                1.0 - keep
            };
            a[[i, j]] = value;
            a[[j, i]] = value;
        }
    }
    Ok(a)
}

/// Scales `a` so its entries sum to 100. An all-zero matrix stays zero and
/// the returned flag is set.
pub fn normalize(a: &Array2<f64>) -> (Array2<f64>, bool) {
    let total: f64 = a.iter().sum();
    if total > 0.0 {
        (a.mapv(|x| x * (TOTAL_WEIGHT / total)), false)
    } else {
        (Array2::zeros(a.dim()), true)
    }
}

/// Normalized feature graph with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGraph {
    #[serde(rename = "features")]
    pub feature_names: Vec<String>,
    #[serde(rename = "matrix")]
    pub adjacency: Array2<f64>,
    pub class_filter: Option<String>,
    #[serde(rename = "metric_tags")]
    pub metrics: MetricTags,
    /// Sum of the projected matrix before normalization.
    pub raw_total: f64,
    #[serde(rename = "zero_flag")]
    pub zero: bool,
}

impl FeatureGraph {
    pub fn from_relevance(res: &RelevanceResult, class_filter: Option<String>) -> Result<Self> {
        let raw = project(res.p.view(), res.q.view())?;
        let raw_total = raw.iter().sum();
        let (adjacency, zero) = normalize(&raw);
        Ok(FeatureGraph {
            feature_names: res.feature_names.clone(),
            adjacency,
            class_filter,
            metrics: res.metrics,
            raw_total,
            zero,
        })
    }

    /// The designated all-zero graph.
    pub fn zero(feature_names: Vec<String>, class_filter: Option<String>, metrics: MetricTags) -> Self {
        let m = feature_names.len();
        FeatureGraph {
            feature_names,
            adjacency: Array2::zeros((m, m)),
            class_filter,
            metrics,
            raw_total: 0.0,
            zero: true,
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn total_weight(&self) -> f64 {
        if self.zero {
            0.0
        } else {
            TOTAL_WEIGHT
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Builds the feature graph of `rs` over `ds`. With a class filter only the
/// rules predicting that class are used, and relevance is recomputed over
/// that subset; a class without rules yields the zero graph.
pub fn build_graph(ds: &Dataset, rs: &RuleSet, class_filter: Option<&str>, metrics: MetricTags) -> Result<FeatureGraph> {
    let rules = match class_filter {
        Some(label) => {
            ds.class_index(label)?;
            rs.for_class(label)
        }
        None => rs.clone(),
    };
    if rules.is_empty() {
        return match class_filter {
            Some(label) => Ok(FeatureGraph::zero(ds.feature_names().to_vec(), Some(label.to_string()), metrics)),
            None => Err(Error::Empty("rule set has no rules".into())),
        };
    }
    let res = relevance_matrix(ds, &rules, metrics)?;
    FeatureGraph::from_relevance(&res, class_filter.map(String::from))
}

/// Frobenius norm of the difference of two graphs, after aligning the
/// second graph's features to the first's by name.
pub fn graph_distance(g1: &FeatureGraph, g2: &FeatureGraph) -> Result<f64> {
    if g1.metrics != g2.metrics {
        return Err(Error::MetricMismatch(g1.metrics.to_string(), g2.metrics.to_string()));
    }
    let perm = alignment(&g1.feature_names, &g2.feature_names)?;
    let m = g1.n_features();
    let mut sum = 0.0;
    for i in 0..m {
        for j in 0..m {
            let d = g1.adjacency[[i, j]] - g2.adjacency[[perm[i], perm[j]]];
            sum += d * d;
        }
    }
    Ok(sum.sqrt())
}

/// For each name in `a`, its position in `b`.
fn alignment(a: &[String], b: &[String]) -> Result<Vec<usize>> {
    let mut perm = Vec::with_capacity(a.len());
    let mut used = vec![false; b.len()];
    for name in a {
        match b.iter().position(|x| x == name) {
            Some(k) if !used[k] => {
                used[k] = true;
                perm.push(k);
            }
            _ => return Err(Error::FeatureMismatch(format!("'{name}' missing from second graph"))),
        }
    }
    if let Some(k) = used.iter().position(|u| !u) {
        return Err(Error::FeatureMismatch(format!("'{}' missing from first graph", b[k])));
    }
    Ok(perm)
}

/// Degree-centrality importance of every feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub feature_names: Vec<String>,
    pub scores: Vec<f64>,
    /// Feature indices by descending score; empty for the zero graph.
    pub ranking: Vec<usize>,
    pub zero: bool,
}

/// Ranks by descending score, ties broken by feature order.
pub fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Row sums of the normalized adjacency (self-edges included).
pub fn feature_importance(g: &FeatureGraph) -> Importance {
    let scores: Vec<f64> = g.adjacency.rows().into_iter().map(|r| r.sum()).collect();
    Importance {
        feature_names: g.feature_names.clone(),
        ranking: if g.zero { Vec::new() } else { rank_descending(&scores) },
        scores,
        zero: g.zero,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    GraphMl,
    Json,
    Csv,
}

impl std::str::FromStr for GraphFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(GraphFormat::Dot),
            "graphml" => Ok(GraphFormat::GraphMl),
            "json" => Ok(GraphFormat::Json),
            "csv" => Ok(GraphFormat::Csv),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExportOptions {
    /// Drop diagonal entries from edge lists; importance still counts them.
    pub omit_self_edges: bool,
}

/// Undirected edges `(i, j, weight)` with `i <= j` and positive weight.
fn edges(g: &FeatureGraph, opts: ExportOptions) -> Vec<(usize, usize, f64)> {
    let m = g.n_features();
    let mut out = Vec::new();
    for i in 0..m {
        for j in i..m {
            let w = g.adjacency[[i, j]];
            if w > 0.0 && !(opts.omit_self_edges && i == j) {
                out.push((i, j, w));
            }
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

pub fn export_graph(g: &FeatureGraph, format: GraphFormat, opts: ExportOptions) -> Result<String> {
    match format {
        GraphFormat::Dot => Ok(to_dot(g, opts)),
        GraphFormat::GraphMl => Ok(to_graphml(g, opts)),
        GraphFormat::Json => Ok(g.to_json()),
        GraphFormat::Csv => adjacency_to_csv(g),
    }
}

fn to_dot(g: &FeatureGraph, opts: ExportOptions) -> String {
    use std::fmt::Write;
    let imp = feature_importance(g);
    let es = edges(g, opts);
    let max_w = es.iter().map(|e| e.2).fold(0.0, f64::max);
    let max_imp = imp.scores.iter().copied().fold(0.0, f64::max);
    let mut s = String::from("graph feature_graph {\n");
    if let Some(c) = &g.class_filter {
        let _ = writeln!(s, "  label=\"class {}\";", dot_escape(c));
    }
    for (i, name) in g.feature_names.iter().enumerate() {
        let width = if max_imp > 0.0 { 0.3 + 1.2 * imp.scores[i] / max_imp } else { 0.3 };
        let _ = writeln!(
            s,
            "  \"{}\" [importance={}, width={width:.4}];",
            dot_escape(name),
            imp.scores[i]
        );
    }
    for (i, j, w) in es {
        let pen = 1.0 + 9.0 * w / max_w;
        let _ = writeln!(
            s,
            "  \"{}\" -- \"{}\" [weight={w}, penwidth={pen:.4}];",
            dot_escape(&g.feature_names[i]),
            dot_escape(&g.feature_names[j])
        );
    }
    s.push_str("}\n");
    s
}

fn to_graphml(g: &FeatureGraph, opts: ExportOptions) -> String {
    use std::fmt::Write;
    let imp = feature_importance(g);
    let mut s = String::from(concat!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n",
        "  <key id=\"importance\" for=\"node\" attr.name=\"importance\" attr.type=\"double\"/>\n",
        "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n",
        "  <graph id=\"feature_graph\" edgedefault=\"undirected\">\n"
    ));
    for (i, name) in g.feature_names.iter().enumerate() {
        let _ = writeln!(
            s,
            "    <node id=\"{}\"><data key=\"importance\">{}</data></node>",
            xml_escape(name),
            imp.scores[i]
        );
    }
    for (k, (i, j, w)) in edges(g, opts).into_iter().enumerate() {
        let _ = writeln!(
            s,
            "    <edge id=\"e{k}\" source=\"{}\" target=\"{}\"><data key=\"weight\">{w}</data></edge>",
            xml_escape(&g.feature_names[i]),
            xml_escape(&g.feature_names[j])
        );
    }
    s.push_str("  </graph>\n</graphml>\n");
    s
}

/// Full labeled adjacency matrix.
pub fn adjacency_to_csv(g: &FeatureGraph) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["feature".to_string()];
    header.extend(g.feature_names.iter().cloned());
    w.write_record(&header)?;
    for (i, name) in g.feature_names.iter().enumerate() {
        let mut rec = vec![name.clone()];
        rec.extend(g.adjacency.row(i).iter().map(|x| format!("{x}")));
        w.write_record(&rec)?;
    }
    finish_csv(w)
}

/// Reads a labeled adjacency CSV back into names and matrix.
pub fn adjacency_from_csv(text: &str) -> Result<(Vec<String>, Array2<f64>)> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let names: Vec<String> = rdr.headers()?.iter().skip(1).map(String::from).collect();
    let m = names.len();
    let mut a = Array2::zeros((m, m));
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if i >= m || rec.len() != m + 1 || rec[0] != names[i] {
            return Err(Error::Dimension(format!("adjacency row {i} does not match header")));
        }
        for j in 0..m {
            a[[i, j]] = rec[j + 1]
                .parse()
                .map_err(|_| Error::Row { row: i, msg: format!("bad number '{}'", &rec[j + 1]) })?;
        }
        rows += 1;
    }
    if rows != m {
        return Err(Error::Dimension(format!("{rows} rows for {m} features")));
    }
    Ok((names, a))
}

/// Entrywise mean of several adjacency matrices.
pub fn mean_adjacency(graphs: &[FeatureGraph]) -> Option<Array2<f64>> {
    let first = graphs.first()?;
    let mut acc = Array2::<f64>::zeros(first.adjacency.dim());
    for g in graphs {
        acc += &g.adjacency;
    }
    Some(acc / graphs.len() as f64)
}

/// Vector of row sums.
pub fn row_sums(a: &Array2<f64>) -> Array1<f64> {
    a.rows().into_iter().map(|r| r.sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::parse_rules;
    use ndarray::array;

    fn graph(a: Array2<f64>, names: &[&str]) -> FeatureGraph {
        FeatureGraph {
            feature_names: names.iter().map(|s| s.to_string()).collect(),
            adjacency: a,
            class_filter: None,
            metrics: MetricTags::default(),
            raw_total: 1.0,
            zero: false,
        }
    }

    #[test]
    fn projection_examples() {
        let a = project(array![[1.0, 1.0]].view(), array![1.0].view()).unwrap();
        assert_eq!(a, array![[1.0, 1.0], [1.0, 1.0]]);
        let a = project(array![[0.5, 1.0]].view(), array![0.8].view()).unwrap();
        assert!((a[[0, 0]] - 0.2).abs() < 1e-15 && (a[[0, 1]] - 0.4).abs() < 1e-15);
        let a = project(array![[1.0, 0.0], [0.0, 1.0]].view(), array![1.0, 1.0].view()).unwrap();
        assert_eq!(a, array![[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn projection_errors() {
        assert!(matches!(
            project(array![[0.5, 1.0]].view(), array![0.8, 0.1].view()),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            project(array![[1.5, 1.0]].view(), array![0.8].view()),
            Err(Error::OutOfRange(_))
        ));
        assert!(project(array![[0.5]].view(), array![-0.1].view()).is_err());
    }

    #[test]
    fn log_space_matches_direct() {
        let n = 1500;
        let p = Array2::from_shape_fn((n, 3), |(k, i)| ((k * 7 + i * 13) % 101) as f64 / 400.0);
        let q = Array1::from_shape_fn(n, |k| ((k * 11) % 97) as f64 / 200.0);
        let a = project(p.view(), q.view()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let keep: f64 = (0..n).map(|k| 1.0 - p[[k, i]] * p[[k, j]] * q[k]).product();
                assert!((a[[i, j]] - (1.0 - keep)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normalization_examples() {
        let (n, zero) = normalize(&array![[1.0, 1.0], [1.0, 1.0]]);
        assert_eq!(n, array![[25.0, 25.0], [25.0, 25.0]]);
        assert!(!zero);
        let (n, _) = normalize(&array![[0.2, 0.4], [0.4, 0.8]]);
        let f = 100.0 / 1.8;
        for (x, e) in n.iter().zip([0.2 * f, 0.4 * f, 0.4 * f, 0.8 * f]) {
            assert!((x - e).abs() < 1e-9);
        }
        assert!((n[[0, 0]] - 11.111).abs() < 1e-3);
        let (n, zero) = normalize(&Array2::zeros((2, 2)));
        assert!(zero);
        assert_eq!(n.sum(), 0.0);
    }

    #[test]
    fn distance_examples() {
        let g = graph(array![[25.0, 25.0], [25.0, 25.0]], &["a", "b"]);
        assert_eq!(graph_distance(&g, &g).unwrap(), 0.0);
        let h = graph(array![[28.0, 25.0], [25.0, 25.0]], &["a", "b"]);
        assert_eq!(graph_distance(&g, &h).unwrap(), 3.0);
        let k = graph(array![[25.0, 28.0], [28.0, 25.0]], &["a", "b"]);
        assert!((graph_distance(&g, &k).unwrap() - 18f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn distance_aligns_by_name() {
        let g = graph(array![[60.0, 10.0], [10.0, 20.0]], &["a", "b"]);
        let swapped = graph(array![[20.0, 10.0], [10.0, 60.0]], &["b", "a"]);
        assert_eq!(graph_distance(&g, &swapped).unwrap(), 0.0);
        let other = graph(array![[20.0, 10.0], [10.0, 60.0]], &["b", "c"]);
        assert!(matches!(graph_distance(&g, &other), Err(Error::FeatureMismatch(_))));
        let mut tagged = g.clone();
        tagged.metrics.rule = crate::relevance::RuleMetric::Support;
        assert!(matches!(graph_distance(&g, &tagged), Err(Error::MetricMismatch(..))));
    }

    #[test]
    fn importance_examples() {
        let imp = feature_importance(&graph(array![[25.0, 25.0], [25.0, 25.0]], &["a", "b"]));
        assert_eq!(imp.scores, vec![50.0, 50.0]);
        assert_eq!(imp.ranking, vec![0, 1]);
        let imp = feature_importance(&graph(array![[40.0, 0.0], [0.0, 60.0]], &["a", "b"]));
        assert_eq!(imp.scores, vec![40.0, 60.0]);
        assert_eq!(imp.ranking, vec![1, 0]);
        let z = FeatureGraph::zero(vec!["a".into(), "b".into()], None, MetricTags::default());
        let imp = feature_importance(&z);
        assert_eq!(imp.scores, vec![0.0, 0.0]);
        assert!(imp.ranking.is_empty() && imp.zero);
    }

    fn four_rows() -> Dataset {
        Dataset::from_numeric(
            &["f", "g"],
            vec![vec![0.2, 1.0], vec![0.9, 3.0], vec![0.5, 1.0], vec![0.7, 2.0]],
            &["1", "0", "1", "0"],
        )
        .unwrap()
    }

    #[test]
    fn class_graphs() {
        let ds = four_rows();
        let rs = parse_rules("f <= 0.6 => 1\nf <= 0.6 AND g < 2 => 1\n").unwrap();
        let global = build_graph(&ds, &rs, None, MetricTags::default()).unwrap();
        let class1 = build_graph(&ds, &rs, Some("1"), MetricTags::default()).unwrap();
        assert_eq!(global.adjacency, class1.adjacency);
        let class0 = build_graph(&ds, &rs, Some("0"), MetricTags::default()).unwrap();
        assert!(class0.zero);
        assert_eq!(class0.adjacency.sum(), 0.0);
        assert!(matches!(
            build_graph(&ds, &rs, Some("x"), MetricTags::default()),
            Err(Error::UnknownClass { .. })
        ));
    }

    #[test]
    fn dot_export() {
        let g = graph(array![[20.0, 15.0], [15.0, 50.0]], &["a", "b"]);
        let dot = export_graph(&g, GraphFormat::Dot, ExportOptions::default()).unwrap();
        assert_eq!(dot.matches(" -- ").count(), 3);
        assert!(dot.contains("\"a\" -- \"b\" [weight=15"));
        assert!(dot.contains("\"a\" -- \"a\""));
        let no_self = export_graph(&g, GraphFormat::Dot, ExportOptions { omit_self_edges: true }).unwrap();
        assert_eq!(no_self.matches(" -- ").count(), 1);
        assert!(no_self.contains("importance=35"));
        assert_eq!(dot, export_graph(&g, GraphFormat::Dot, ExportOptions::default()).unwrap());
    }

    #[test]
    fn graphml_export() {
        let g = graph(array![[20.0, 15.0], [15.0, 50.0]], &["a<1>", "b"]);
        let xml = export_graph(&g, GraphFormat::GraphMl, ExportOptions::default()).unwrap();
        assert!(xml.contains("<node id=\"a&lt;1&gt;\"><data key=\"importance\">35</data></node>"));
        assert_eq!(xml.matches("<edge ").count(), 3);
    }

    #[test]
    fn csv_round_trip() {
        let (a, _) = normalize(&array![[0.2, 0.4, 0.0], [0.4, 0.8, 0.1], [0.0, 0.1, 1.0 / 3.0]]);
        let g = graph(a.clone(), &["x", "y, z", "w"]);
        let text = export_graph(&g, GraphFormat::Csv, ExportOptions::default()).unwrap();
        let (names, back) = adjacency_from_csv(&text).unwrap();
        assert_eq!(names, g.feature_names);
        for (x, y) in a.iter().zip(back.iter()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let g = graph(array![[20.0, 15.0], [15.0, 50.0]], &["a", "b"]);
        let text = g.to_json();
        assert!(text.contains("\"zero_flag\": false"));
        assert_eq!(FeatureGraph::from_json(&text).unwrap(), g);
        assert!(matches!("svg".parse::<GraphFormat>(), Err(Error::UnknownFormat(_))));
    }
}
