//! Baseline importance scores and rule-set prediction.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, Node};
use crate::dataset::{Dataset, Value};
use crate::error::{Error, Result};
use crate::graph::{feature_importance, rank_descending, FeatureGraph};
use crate::relevance::{relevance_matrix, MetricTags, RelevanceResult};
use crate::rules::{CompiledRule, RuleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImportanceMethod {
    GraphCentrality,
    Gini,
    Permutation,
}

impl ImportanceMethod {
    pub const ALL: [ImportanceMethod; 3] =
        [ImportanceMethod::GraphCentrality, ImportanceMethod::Gini, ImportanceMethod::Permutation];
}

impl fmt::Display for ImportanceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImportanceMethod::GraphCentrality => "graph",
            ImportanceMethod::Gini => "gini",
            ImportanceMethod::Permutation => "permutation",
        })
    }
}

impl FromStr for ImportanceMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graph" | "graph-centrality" | "centrality" => Ok(ImportanceMethod::GraphCentrality),
            "gini" => Ok(ImportanceMethod::Gini),
            "permutation" | "perm" => Ok(ImportanceMethod::Permutation),
            _ => Err(Error::InvalidSpec(format!("unknown importance method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub method: ImportanceMethod,
    pub feature_names: Vec<String>,
    pub scores: Vec<f64>,
    /// Feature indices by descending score, ties in feature order.
    pub ranking: Vec<usize>,
}

impl ImportanceReport {
    pub fn new(method: ImportanceMethod, feature_names: Vec<String>, scores: Vec<f64>) -> Self {
        let ranking = rank_descending(&scores);
        ImportanceReport { method, feature_names, scores, ranking }
    }

    /// 1-based rank of every feature, in feature order.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.scores.len()];
        for (pos, &f) in self.ranking.iter().enumerate() {
            ranks[f] = pos + 1;
        }
        ranks
    }

    pub fn top_k(&self, k: usize) -> Vec<usize> {
        self.ranking.iter().take(k).copied().collect()
    }

    /// `feature,score,rank` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["feature", "score", "rank"])?;
        let ranks = self.ranks();
        for &f in &self.ranking {
            w.write_record([self.feature_names[f].clone(), format!("{}", self.scores[f]), ranks[f].to_string()])?;
        }
        crate::relevance::finish_csv(w)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Graph-centrality importance as a report.
pub fn graph_importance(g: &FeatureGraph) -> ImportanceReport {
    let imp = feature_importance(g);
    ImportanceReport::new(ImportanceMethod::GraphCentrality, imp.feature_names, imp.scores)
}

/// Total weighted Gini decrease per feature, normalized to sum to 1.
pub fn gini_importance(tree: &DecisionTree) -> ImportanceReport {
    let mut scores = vec![0.0; tree.feature_names.len()];
    let total = tree.nodes[0].n_samples() as f64;
    for node in &tree.nodes {
        if let Node::Split { feature, left, right, .. } = node {
            let (l, r) = (&tree.nodes[*left], &tree.nodes[*right]);
            let n = node.n_samples() as f64;
            let decrease = n * node.impurity() - l.n_samples() as f64 * l.impurity() - r.n_samples() as f64 * r.impurity();
            scores[*feature] += decrease / total;
        }
    }
    let sum: f64 = scores.iter().sum();
    if sum > 0.0 {
        for s in &mut scores {
            *s /= sum;
        }
    }
    ImportanceReport::new(ImportanceMethod::Gini, tree.feature_names.clone(), scores)
}

/// Anything that maps a sample to a class label.
pub trait Predictor {
    fn predict(&self, sample: &[Value]) -> &str;

    fn accuracy(&self, ds: &Dataset) -> f64 {
        let hits = (0..ds.n_samples())
            .filter(|&s| self.predict(ds.row(s)) == ds.targets()[s])
            .count();
        hits as f64 / ds.n_samples() as f64
    }
}

impl Predictor for DecisionTree {
    fn predict(&self, sample: &[Value]) -> &str {
        DecisionTree::predict(self, sample)
    }
}

/// Rule-set classifier: the satisfied rule with the highest q wins (first in
/// rule order on ties); with no satisfied rule, the majority class recorded
/// in the relevance result.
pub struct RuleSetPredictor {
    rules: Vec<CompiledRule>,
    consequents: Vec<String>,
    q: Vec<f64>,
    fallback: String,
}

impl RuleSetPredictor {
    pub fn new(rs: &RuleSet, rd: &RelevanceResult, ds: &Dataset) -> Result<Self> {
        if rd.q.len() != rs.len() {
            return Err(Error::Dimension(format!("{} rules but {} q values", rs.len(), rd.q.len())));
        }
        Ok(RuleSetPredictor {
            rules: rs.rules.iter().map(|r| r.compile(ds)).collect::<Result<_>>()?,
            consequents: rs.rules.iter().map(|r| r.consequent.clone()).collect(),
            q: rd.q.to_vec(),
            fallback: rd.majority_class.clone(),
        })
    }

    /// Computes relevance on `ds` with default metrics, then builds the predictor.
    pub fn fit(rs: &RuleSet, ds: &Dataset) -> Result<Self> {
        let rd = relevance_matrix(ds, rs, MetricTags::default())?;
        RuleSetPredictor::new(rs, &rd, ds)
    }
}

impl Predictor for RuleSetPredictor {
    fn predict(&self, sample: &[Value]) -> &str {
        let mut best: Option<usize> = None;
        for (k, r) in self.rules.iter().enumerate() {
            if r.satisfies(sample) && best.is_none_or(|b| self.q[k] > self.q[b]) {
                best = Some(k);
            }
        }
        best.map_or(&self.fallback, |k| &self.consequents[k])
    }
}

/// Predicts one sample with a rule set and its relevance result.
pub fn ruleset_predict(rs: &RuleSet, rd: &RelevanceResult, ds: &Dataset, sample: &[Value]) -> Result<String> {
    Ok(RuleSetPredictor::new(rs, rd, ds)?.predict(sample).to_string())
}

/// Mean accuracy drop over `repeats` shuffles of each feature column.
pub fn permutation_importance(
    predictor: &dyn Predictor,
    ds: &Dataset,
    repeats: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    if repeats == 0 {
        return Err(Error::InvalidSpec("permutation importance needs repeats >= 1".into()));
    }
    let base = predictor.accuracy(ds);
    let d = ds.n_samples();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<Value>> = ds.rows().to_vec();
    let mut scores = Vec::with_capacity(ds.n_features());
    for f in 0..ds.n_features() {
        let original: Vec<Value> = ds.rows().iter().map(|r| r[f].clone()).collect();
        let mut drop = 0.0;
        for _ in 0..repeats {
            let mut perm: Vec<usize> = (0..d).collect();
            perm.shuffle(&mut rng);
            for (s, &src) in perm.iter().enumerate() {
                rows[s][f] = original[src].clone();
            }
            let hits = (0..d)
                .filter(|&s| predictor.predict(&rows[s]) == ds.targets()[s])
                .count();
            drop += base - hits as f64 / d as f64;
        }
        for (s, v) in original.into_iter().enumerate() {
            rows[s][f] = v;
        }
        scores.push(drop / repeats as f64);
    }
    Ok(ImportanceReport::new(ImportanceMethod::Permutation, ds.feature_names().to_vec(), scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::tree::{fit_tree, TreeParams};
    use crate::relevance::relevance_matrix;
    use crate::rules::parse_rules;

    fn separable() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, ((i * 7) % 11) as f64]).collect();
        let ys: Vec<&str> = (0..40).map(|i| if i < 10 { "1" } else { "0" }).collect();
        Dataset::from_numeric(&["x", "noise"], rows, &ys).unwrap()
    }

    #[test]
    fn gini_single_leaf_and_single_split() {
        let ds = Dataset::from_numeric(&["x", "y"], vec![vec![0.0, 1.0], vec![1.0, 0.0]], &["a", "a"]).unwrap();
        let t = fit_tree(&ds, TreeParams::default()).unwrap();
        assert_eq!(gini_importance(&t).scores, vec![0.0, 0.0]);
        let t = fit_tree(&separable(), TreeParams::default()).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(gini_importance(&t).scores, vec![1.0, 0.0]);
    }

    #[test]
    fn permutation_zero_for_unused_feature() {
        let ds = separable();
        let t = fit_tree(&ds, TreeParams::default()).unwrap();
        let rep = permutation_importance(&t, &ds, 5, 3).unwrap();
        assert_eq!(rep.scores[1], 0.0);
        assert!(rep.scores[0] > 0.0);
        assert_eq!(rep, permutation_importance(&t, &ds, 5, 3).unwrap());
        assert!(permutation_importance(&t, &ds, 0, 3).is_err());
    }

    #[test]
    fn predict_single_firing_rule() {
        let ds = separable();
        let rs = parse_rules("x <= 9.5 => 1\nx > 9.5 => 0\n").unwrap();
        let rd = relevance_matrix(&ds, &rs, MetricTags::default()).unwrap();
        assert_eq!(ruleset_predict(&rs, &rd, &ds, &[Value::Num(3.0), Value::Num(0.0)]).unwrap(), "1");
    }

    #[test]
    fn predict_falls_back_to_majority() {
        let ds = separable();
        let rs = parse_rules("x > 100 => 1\n").unwrap();
        let rd = relevance_matrix(&ds, &rs, MetricTags::default()).unwrap();
        assert_eq!(ruleset_predict(&rs, &rd, &ds, &[Value::Num(3.0), Value::Num(0.0)]).unwrap(), "0");
    }

    #[test]
    fn predict_prefers_higher_q() {
        let ds = separable();
        let rs = parse_rules("x <= 100 => 1\nx >= 0 => 0\n").unwrap();
        let mut rd = relevance_matrix(&ds, &rs, MetricTags::default()).unwrap();
        rd.q = ndarray::array![0.4, 0.9];
        assert_eq!(ruleset_predict(&rs, &rd, &ds, &[Value::Num(3.0), Value::Num(0.0)]).unwrap(), "0");
        rd.q = ndarray::array![0.9, 0.4];
        assert_eq!(ruleset_predict(&rs, &rd, &ds, &[Value::Num(3.0), Value::Num(0.0)]).unwrap(), "1");
    }

    #[test]
    fn report_csv() {
        let rep = ImportanceReport::new(ImportanceMethod::Gini, vec!["a".into(), "b".into()], vec![0.25, 0.75]);
        assert_eq!(rep.to_csv().unwrap(), "feature,score,rank\nb,0.75,1\na,0.25,2\n");
        assert_eq!(rep.ranks(), vec![2, 1]);
    }
}
