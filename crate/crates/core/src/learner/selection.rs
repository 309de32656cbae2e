//! Top-k feature selection loop: rank features on each training split,
//! keep the k best, refit and score on the held-out fold.

use serde::Serialize;

use super::cv::{cross_validate, derive_seed, CvConfig};
use super::importance::ImportanceMethod;
use super::stability::tree_importance;
use super::tree::fit_tree;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct TopKRow {
    pub method: ImportanceMethod,
    /// Requested k.
    pub k: usize,
    /// k actually used (clamped to the feature count).
    pub k_used: usize,
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Selected feature names per fold.
    pub selected: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TopKReport {
    pub rows: Vec<TopKRow>,
    pub full_feature_accuracy: f64,
    pub warnings: Vec<String>,
}

impl TopKReport {
    pub fn to_text(&self) -> String {
        let mut s = format!("{:<14}{:>4}{:>8}{:>10}\n", "method", "k", "k_used", "accuracy");
        for r in &self.rows {
            s.push_str(&format!("{:<14}{:>4}{:>8}{:>10.4}\n", r.method.to_string(), r.k, r.k_used, r.mean_accuracy));
        }
        s.push_str(&format!("{:<14}{:>4}{:>8}{:>10.4}\n", "all-features", "-", "-", self.full_feature_accuracy));
        s
    }
}

pub fn topk_evaluation(ds: &Dataset, methods: &[ImportanceMethod], ks: &[usize], cfg: &CvConfig) -> Result<TopKReport> {
    if ks.contains(&0) {
        return Err(Error::InvalidSpec("k must be at least 1".into()));
    }
    let m = ds.n_features();
    let mut warnings = Vec::new();
    for &k in ks {
        if k > m {
            let w = format!("top-{k} requested but the dataset has {m} features; using {m}");
            log::warn!("{w}");
            warnings.push(w);
        }
    }
    let cv = cross_validate(ds, cfg)?;
    let mut rows = Vec::new();
    for &method in methods {
        for &k in ks {
            let k_used = k.min(m);
            let mut fold_accuracy = Vec::new();
            let mut selected = Vec::new();
            for fold in &cv.folds {
                let train = fold.train_set(ds)?;
                let test = ds.select_rows(&fold.test)?;
                let report = tree_importance(&fold.tree, &train, method, derive_seed(cfg.seed, 1000 + fold.fold as u64))?;
                let mut keep = report.top_k(k_used);
                keep.sort_unstable();
                let tree = fit_tree(&train.select_features(&keep)?, fold.params)?;
                fold_accuracy.push(tree.accuracy(&test.select_features(&keep)?));
                selected.push(keep.iter().map(|&f| ds.feature_names()[f].clone()).collect());
            }
            let mean_accuracy = fold_accuracy.iter().sum::<f64>() / fold_accuracy.len() as f64;
            rows.push(TopKRow { method, k, k_used, fold_accuracy, mean_accuracy, selected });
        }
    }
    Ok(TopKReport { rows, full_feature_accuracy: cv.mean_accuracy(), warnings })
}
