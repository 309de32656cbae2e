//! Covering, error, rule relevance and feature relevance of rules over a
//! dataset, assembled into the feature-relevance matrix P and the
//! rule-relevance vector q.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learner::tree::gini;
use crate::rules::{CompiledRule, Rule, RuleSet};

/// How a feature's contribution to one rule is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMetric {
    /// Error increase when the feature's conditions are dropped, times covering.
    #[default]
    ErrorIncrease,
    /// Gini impurity gain contributed by the feature's conditions.
    ImpurityGain,
}

/// How a rule's quality is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleMetric {
    /// covering · (1 − error)
    #[default]
    CoveringError,
    Support,
    Confidence,
}

impl fmt::Display for FeatureMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMetric::ErrorIncrease => "error-increase",
            FeatureMetric::ImpurityGain => "impurity-gain",
        })
    }
}

impl fmt::Display for RuleMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleMetric::CoveringError => "covering-error",
            RuleMetric::Support => "support",
            RuleMetric::Confidence => "confidence",
        })
    }
}

impl FromStr for FeatureMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error-increase" => Ok(FeatureMetric::ErrorIncrease),
            "impurity-gain" => Ok(FeatureMetric::ImpurityGain),
            _ => Err(Error::InvalidSpec(format!("unknown feature metric '{s}'"))),
        }
    }
}

impl FromStr for RuleMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "covering-error" => Ok(RuleMetric::CoveringError),
            "support" => Ok(RuleMetric::Support),
            "confidence" => Ok(RuleMetric::Confidence),
            _ => Err(Error::InvalidSpec(format!("unknown rule metric '{s}'"))),
        }
    }
}

/// The metric pair a relevance result (and any graph built from it) used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MetricTags {
    pub feature: FeatureMetric,
    pub rule: RuleMetric,
}

impl fmt::Display for MetricTags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.feature, self.rule)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Exact per-class counts for one rule and for each of its reduced rules.
#[derive(Debug, Clone)]
pub struct RuleCounts {
    /// Class index of the consequent.
    pub class: usize,
    pub n_samples: usize,
    /// Size of each class in the dataset.
    pub class_sizes: Vec<usize>,
    /// Per-class counts of samples satisfying the rule.
    pub covered: Vec<usize>,
    /// For each distinct feature of the rule: (name, per-class counts of
    /// samples satisfying the rule with that feature's conditions removed).
    pub reduced: Vec<(String, Vec<usize>)>,
}

impl RuleCounts {
    /// Counts in a single pass: a sample satisfies `R` minus feature `h`
    /// exactly when every condition it fails is a condition on `h`.
    pub fn compute(ds: &Dataset, rule: &Rule) -> Result<Self> {
        let compiled = CompiledRule::new(rule, ds)?;
        let class = compiled.consequent.ok_or_else(|| Error::UnknownClass {
            label: rule.consequent.clone(),
            valid: ds.class_labels().join(", "),
        })?;
        let features: Vec<&str> = rule.features();
        let local: Vec<usize> = rule
            .conditions
            .iter()
            .map(|c| features.iter().position(|f| *f == c.feature).expect("feature listed"))
            .collect();
        let r = ds.n_classes();
        let mut covered = vec![0usize; r];
        let mut reduced = vec![vec![0usize; r]; features.len()];
        let classes = ds.class_indices();
        for s in 0..ds.n_samples() {
            let row = ds.row(s);
            let mut failing: Option<usize> = None;
            let mut several = false;
            for (cond, &f) in compiled.conditions.iter().zip(&local) {
                if !cond.holds(row) {
                    match failing {
                        None => failing = Some(f),
                        Some(g) if g != f => {
                            several = true;
                            break;
                        }
                        Some(_) => {}
                    }
                }
            }
            let c = classes[s];
            match (failing, several) {
                (None, _) => {
                    covered[c] += 1;
                    for red in reduced.iter_mut() {
                        red[c] += 1;
                    }
                }
                (Some(f), false) => reduced[f][c] += 1,
                (Some(_), true) => {}
            }
        }
        Ok(RuleCounts {
            class,
            n_samples: ds.n_samples(),
            class_sizes: ds.class_counts(),
            covered,
            reduced: features.into_iter().map(String::from).zip(reduced).collect(),
        })
    }

    fn in_class(&self, counts: &[usize]) -> usize {
        counts[self.class]
    }

    fn off_class(&self, counts: &[usize]) -> usize {
        counts.iter().sum::<usize>() - counts[self.class]
    }

    fn off_size(&self) -> usize {
        self.n_samples - self.class_sizes[self.class]
    }

    fn covering_of(&self, counts: &[usize]) -> f64 {
        if self.class_sizes[self.class] == 0 {
            log::debug!("covering: consequent class has no samples, using 0");
        }
        ratio(self.in_class(counts), self.class_sizes[self.class])
    }

    fn error_of(&self, counts: &[usize]) -> f64 {
        if self.off_size() == 0 {
            log::debug!("error: no samples outside the consequent class, using 0");
        }
        ratio(self.off_class(counts), self.off_size())
    }

    pub fn covering(&self) -> f64 {
        self.covering_of(&self.covered)
    }

    pub fn error(&self) -> f64 {
        self.error_of(&self.covered)
    }

    pub fn rule_relevance(&self) -> f64 {
        self.covering() * (1.0 - self.error())
    }

    fn reduced_counts(&self, feature: &str) -> Option<&[usize]> {
        self.reduced
            .iter()
            .find(|(f, _)| f == feature)
            .map(|(_, c)| c.as_slice())
    }

    pub fn feature_relevance(&self, feature: &str) -> f64 {
        match self.reduced_counts(feature) {
            None => 0.0,
            Some(red) => (self.error_of(red) - self.error()) * self.covering(),
        }
    }

    pub fn impurity_gain(&self, feature: &str) -> f64 {
        let covered_total: usize = self.covered.iter().sum();
        match self.reduced_counts(feature) {
            None => 0.0,
            Some(_) if covered_total == 0 => 0.0,
            Some(red) => {
                let gain = (gini(red) - gini(&self.covered)).max(0.0);
                gain * ratio(covered_total, self.n_samples)
            }
        }
    }

    pub fn alt_metrics(&self) -> AltRuleMetrics {
        let hit = self.in_class(&self.covered);
        let covered_total: usize = self.covered.iter().sum();
        let class_size = self.class_sizes[self.class];
        let support = ratio(hit, self.n_samples);
        let confidence = ratio(hit, covered_total);
        let base = ratio(class_size, self.n_samples);
        let lift = if class_size == 0 { 0.0 } else { confidence / base };
        AltRuleMetrics { support, confidence, lift }
    }

    fn rule_score(&self, metric: RuleMetric) -> f64 {
        match metric {
            RuleMetric::CoveringError => self.rule_relevance(),
            RuleMetric::Support => self.alt_metrics().support,
            RuleMetric::Confidence => self.alt_metrics().confidence,
        }
    }

    fn feature_score(&self, metric: FeatureMetric, feature: &str) -> f64 {
        match metric {
            FeatureMetric::ErrorIncrease => self.feature_relevance(feature),
            FeatureMetric::ImpurityGain => self.impurity_gain(feature),
        }
    }
}

/// Association-rule style scores of one rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltRuleMetrics {
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
}

/// Fraction of the consequent class satisfying the rule.
pub fn covering(ds: &Dataset, rule: &Rule) -> Result<f64> {
    Ok(RuleCounts::compute(ds, rule)?.covering())
}

/// Fraction of the other classes satisfying the rule.
pub fn error(ds: &Dataset, rule: &Rule) -> Result<f64> {
    Ok(RuleCounts::compute(ds, rule)?.error())
}

pub fn rule_relevance(ds: &Dataset, rule: &Rule) -> Result<f64> {
    Ok(RuleCounts::compute(ds, rule)?.rule_relevance())
}

/// `(error(R without feature) − error(R)) · covering(R)`; zero when the
/// rule does not test `feature`.
pub fn feature_relevance(ds: &Dataset, feature: &str, rule: &Rule) -> Result<f64> {
    Ok(RuleCounts::compute(ds, rule)?.feature_relevance(feature))
}

pub fn alt_rule_metrics(ds: &Dataset, rule: &Rule) -> Result<AltRuleMetrics> {
    Ok(RuleCounts::compute(ds, rule)?.alt_metrics())
}

/// Gini impurity of the cover of `R` minus `feature`, less that of the
/// cover of `R` (floored at 0), weighted by the covered fraction.
pub fn impurity_gain_relevance(ds: &Dataset, feature: &str, rule: &Rule) -> Result<f64> {
    Ok(RuleCounts::compute(ds, rule)?.impurity_gain(feature))
}

/// P (rules × features) and q (per rule) for a rule set over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceResult {
    pub p: Array2<f64>,
    pub q: Array1<f64>,
    pub rule_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub consequents: Vec<String>,
    pub metrics: MetricTags,
    /// Majority class of the dataset the result was computed on.
    pub majority_class: String,
}

pub fn relevance_matrix(ds: &Dataset, rs: &RuleSet, metrics: MetricTags) -> Result<RelevanceResult> {
    let missing = rs.unknown_features(ds);
    if !missing.is_empty() {
        return Err(Error::UnknownFeature(missing.join(", ")));
    }
    let n = rs.len();
    let m = ds.n_features();
    let mut p = Array2::<f64>::zeros((n, m));
    let mut q = Array1::<f64>::zeros(n);
    for (j, rule) in rs.rules.iter().enumerate() {
        let counts = RuleCounts::compute(ds, rule)?;
        q[j] = counts.rule_score(metrics.rule);
        for f in rule.features() {
            let i = ds.feature_index(f).expect("checked above");
            p[[j, i]] = counts.feature_score(metrics.feature, f);
        }
    }
    Ok(RelevanceResult {
        p,
        q,
        rule_ids: (1..=n).map(|k| format!("R{k}")).collect(),
        feature_names: ds.feature_names().to_vec(),
        consequents: rs.rules.iter().map(|r| r.consequent.clone()).collect(),
        metrics,
        majority_class: ds.majority_class().to_string(),
    })
}

impl RelevanceResult {
    /// P as CSV: a `rule` column followed by one column per feature.
    pub fn p_to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["rule".to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header)?;
        for (j, id) in self.rule_ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.p.row(j).iter().map(|x| format!("{x}")));
            w.write_record(&rec)?;
        }
        finish_csv(w)
    }

    pub fn q_to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rule", "q"])?;
        for (id, q) in self.rule_ids.iter().zip(self.q.iter()) {
            w.write_record([id.clone(), format!("{q}")])?;
        }
        finish_csv(w)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("relevance serialization cannot fail")
    }
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{parse_rules, Condition};

    fn four_rows() -> Dataset {
        Dataset::from_numeric(
            &["f", "g"],
            vec![vec![0.2, 1.0], vec![0.9, 1.0], vec![0.5, 1.0], vec![0.7, 1.0]],
            &["1", "0", "1", "0"],
        )
        .unwrap()
    }

    fn rule(text: &str) -> Rule {
        parse_rules(text).unwrap().rules.remove(0)
    }

    #[test]
    fn covering_and_error_examples() {
        let ds = four_rows();
        let r = rule("f <= 0.6 => 1");
        assert_eq!(covering(&ds, &r).unwrap(), 1.0);
        assert_eq!(error(&ds, &r).unwrap(), 0.0);
        let empty = Rule::new(vec![], "1");
        assert_eq!(covering(&ds, &empty).unwrap(), 1.0);
        assert_eq!(error(&ds, &empty).unwrap(), 1.0);
        let none = rule("f > 5 => 1");
        assert_eq!(covering(&ds, &none).unwrap(), 0.0);
        let loose = rule("f <= 0.75 => 1");
        assert_eq!(error(&ds, &loose).unwrap(), 0.5);
        assert_eq!(rule_relevance(&ds, &loose).unwrap(), 0.5);
        assert_eq!(rule_relevance(&ds, &r).unwrap(), 1.0);
        assert_eq!(rule_relevance(&ds, &none).unwrap(), 0.0);
    }

    #[test]
    fn feature_relevance_examples() {
        let ds = four_rows();
        let r = rule("f <= 0.6 AND g > 0 => 1");
        assert_eq!(feature_relevance(&ds, "g", &r).unwrap(), 0.0);
        assert_eq!(feature_relevance(&ds, "f", &r).unwrap(), 1.0);
        let only_f = rule("f <= 0.75 => 1");
        assert_eq!(feature_relevance(&ds, "g", &only_f).unwrap(), 0.0);
        assert_eq!(
            feature_relevance(&ds, "f", &only_f).unwrap(),
            rule_relevance(&ds, &only_f).unwrap()
        );
    }

    #[test]
    fn degenerate_denominators() {
        let ds = Dataset::from_numeric(&["f"], vec![vec![1.0], vec![2.0]], &["a", "a"]).unwrap();
        let r = rule("f > 1.5 => a");
        assert_eq!(covering(&ds, &r).unwrap(), 0.5);
        assert_eq!(error(&ds, &r).unwrap(), 0.0);
    }

    #[test]
    fn unknown_consequent_is_error() {
        let ds = four_rows();
        assert!(matches!(covering(&ds, &rule("f > 0 => 7")), Err(Error::UnknownClass { .. })));
    }

    #[test]
    fn alt_metrics_examples() {
        let ds = four_rows();
        let exact = rule("f <= 0.6 => 1");
        let m = alt_rule_metrics(&ds, &exact).unwrap();
        assert_eq!((m.support, m.confidence, m.lift), (0.5, 1.0, 2.0));
        let none = alt_rule_metrics(&ds, &rule("f > 5 => 1")).unwrap();
        assert_eq!((none.support, none.confidence, none.lift), (0.0, 0.0, 0.0));
        let all = alt_rule_metrics(&ds, &Rule::new(vec![], "1")).unwrap();
        assert_eq!((all.confidence, all.lift), (0.5, 1.0));
    }

    #[test]
    fn impurity_gain_examples() {
        // g splits the f-cover from 50/50 into a pure class-1 cover.
        let ds = Dataset::from_numeric(
            &["f", "g"],
            vec![vec![0.1, 1.0], vec![0.2, 0.0], vec![0.3, 1.0], vec![0.4, 0.0], vec![0.9, 0.0], vec![0.9, 0.0]],
            &["1", "0", "1", "0", "0", "0"],
        )
        .unwrap();
        let r = rule("f <= 0.5 AND g > 0.5 => 1");
        // before: cover of f<=0.5 is {1,0,1,0} (gini 0.5); after: {1,1} (gini 0)
        let expected = 0.5 * (2.0 / 6.0);
        assert!((impurity_gain_relevance(&ds, "g", &r).unwrap() - expected).abs() < 1e-15);
        assert_eq!(impurity_gain_relevance(&ds, "absent", &r).unwrap(), 0.0);
        let empty_cover = rule("f > 5 AND g > 0.5 => 1");
        assert_eq!(impurity_gain_relevance(&ds, "g", &empty_cover).unwrap(), 0.0);
    }

    #[test]
    fn matrix_shape_and_zero_columns() {
        let ds = four_rows();
        let rs = RuleSet::new(vec![Rule::new(vec![Condition::le("f", 0.6)], "1")], "t");
        let res = relevance_matrix(&ds, &rs, MetricTags::default()).unwrap();
        assert_eq!(res.p.dim(), (1, 2));
        assert!(res.p[[0, 0]] >= 0.0);
        assert_eq!(res.p[[0, 1]], 0.0);
        assert_eq!(res.q.len(), 1);
        assert_eq!(res.majority_class, "1");

        let rs3 = parse_rules("f <= 0.6 => 1\nf > 0.6 => 0\ng > 0 => 1\n").unwrap();
        let res = relevance_matrix(&ds, &rs3, MetricTags::default()).unwrap();
        assert_eq!(res.p.dim(), (3, 2));
        assert_eq!(res.q.len(), 3);
    }

    #[test]
    fn unknown_features_listed() {
        let ds = four_rows();
        let rs = parse_rules("zz > 1 AND yy > 2 => 1").unwrap();
        let err = relevance_matrix(&ds, &rs, MetricTags::default()).unwrap_err();
        assert_eq!(err.to_string(), "unknown feature(s): zz, yy");
    }

    #[test]
    fn csv_and_json_exports() {
        let ds = four_rows();
        let rs = parse_rules("f <= 0.6 => 1\nf > 0.6 => 0\n").unwrap();
        let res = relevance_matrix(&ds, &rs, MetricTags::default()).unwrap();
        assert_eq!(res.p_to_csv().unwrap(), "rule,f,g\nR1,1,0\nR2,1,0\n");
        assert_eq!(res.q_to_csv().unwrap(), "rule,q\nR1,1\nR2,1\n");
        let back: RelevanceResult = serde_json::from_str(&res.to_json()).unwrap();
        assert_eq!(back, res);
    }

    #[test]
    fn metric_names_parse() {
        assert_eq!("impurity-gain".parse::<FeatureMetric>().unwrap(), FeatureMetric::ImpurityGain);
        assert_eq!("support".parse::<RuleMetric>().unwrap(), RuleMetric::Support);
        assert!("lift".parse::<RuleMetric>().is_err());
    }
}
