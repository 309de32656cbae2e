//! Rank stability of importance methods across models.

use serde::Serialize;

use super::cv::{cross_validate, derive_seed, CvConfig};
use super::importance::{gini_importance, graph_importance, permutation_importance, ImportanceMethod, ImportanceReport};
use super::stats::mean_pairwise_spearman;
use super::tree::{fit_tree, DecisionTree, TreeParams};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::build_graph;
use crate::relevance::MetricTags;
use crate::rules::tree_to_rules;

pub const DEFAULT_PERMUTATION_REPEATS: usize = 10;

/// Which family of models the rankings are compared across.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StabilityDesign {
    /// One tree per maximum depth, each fit on the full dataset.
    Depths(Vec<usize>),
    /// One tree per outer cross-validation fold, fit on that fold's training split.
    Folds(usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityRow {
    pub method: ImportanceMethod,
    pub mean_spearman: f64,
    pub n_models: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    /// Per model, the reports of every requested method.
    #[serde(skip)]
    pub reports: Vec<Vec<ImportanceReport>>,
}

impl StabilityReport {
    pub fn row(&self, method: ImportanceMethod) -> Option<&StabilityRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{:<14}{:>14}{:>8}\n", "method", "mean_spearman", "models");
        for r in &self.rows {
            s.push_str(&format!("{:<14}{:>14.4}{:>8}\n", r.method.to_string(), r.mean_spearman, r.n_models));
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("method,mean_spearman,models\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{}\n", r.method, r.mean_spearman, r.n_models));
        }
        s
    }
}

/// Importance report of one fitted tree under one method, evaluated on `ds`.
pub fn tree_importance(
    tree: &DecisionTree,
    ds: &Dataset,
    method: ImportanceMethod,
    seed: u64,
) -> Result<ImportanceReport> {
    match method {
        ImportanceMethod::GraphCentrality => {
            let rules = tree_to_rules(tree);
            Ok(graph_importance(&build_graph(ds, &rules, None, MetricTags::default())?))
        }
        ImportanceMethod::Gini => Ok(gini_importance(tree)),
        ImportanceMethod::Permutation => permutation_importance(tree, ds, DEFAULT_PERMUTATION_REPEATS, seed),
    }
}

pub fn stability_report(
    ds: &Dataset,
    design: &StabilityDesign,
    methods: &[ImportanceMethod],
    seed: u64,
) -> Result<StabilityReport> {
    let models: Vec<(DecisionTree, Dataset)> = match design {
        StabilityDesign::Depths(depths) => depths
            .iter()
            .map(|&d| Ok((fit_tree(ds, TreeParams::with_depth(d))?, ds.clone())))
            .collect::<Result<_>>()?,
        StabilityDesign::Folds(k) => {
            let cv = cross_validate(ds, &CvConfig { outer_folds: *k, seed, ..Default::default() })?;
            cv.folds
                .into_iter()
                .map(|f| {
                    let train = f.train_set(ds)?;
                    Ok((f.tree, train))
                })
                .collect::<Result<_>>()?
        }
    };
    if models.len() < 2 {
        return Err(Error::Insufficient(format!(
            "need at least two models for rank stability, got {}",
            models.len()
        )));
    }
    let mut reports = Vec::with_capacity(models.len());
    for (i, (tree, data)) in models.iter().enumerate() {
        let per_model = methods
            .iter()
            .map(|&m| tree_importance(tree, data, m, derive_seed(seed, i as u64)))
            .collect::<Result<Vec<_>>>()?;
        reports.push(per_model);
    }
    let rows = methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let scores: Vec<Vec<f64>> = reports.iter().map(|r| r[k].scores.clone()).collect();
            Ok(StabilityRow { method, mean_spearman: mean_pairwise_spearman(&scores)?, n_models: scores.len() })
        })
        .collect::<Result<_>>()?;
    Ok(StabilityReport { rows, reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i % 10) as f64, ((i * 7) % 13) as f64, (i / 6) as f64]).collect();
        let ys: Vec<&str> = (0..60).map(|i| if (i % 10) + (i * 7) % 13 > 10 { "1" } else { "0" }).collect();
        Dataset::from_numeric(&["a", "b", "c"], rows, &ys).unwrap()
    }

    #[test]
    fn repeated_model_is_perfectly_stable() {
        let rep = stability_report(&data(), &StabilityDesign::Depths(vec![3, 3]), &ImportanceMethod::ALL, 1).unwrap();
        for r in &rep.rows {
            assert_eq!(r.mean_spearman, 1.0, "{:?}", r.method);
            assert_eq!(r.n_models, 2);
        }
    }

    #[test]
    fn one_model_is_error() {
        assert!(stability_report(&data(), &StabilityDesign::Depths(vec![3]), &ImportanceMethod::ALL, 1).is_err());
    }

    #[test]
    fn single_method_table() {
        let rep = stability_report(&data(), &StabilityDesign::Depths(vec![2, 3, 4]), &[ImportanceMethod::GraphCentrality], 1).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.to_csv().lines().count(), 2);
    }
}
