//! Stratified nested cross-validation for tree induction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::tree::{fit_tree, DecisionTree, TreeParams};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rules::{tree_to_rules, RuleSet};

/// max_depth ∈ {3, 4, 5, 6, 8, unlimited} × min_samples_leaf ∈ {1, 5, 10}.
pub fn default_grid() -> Vec<TreeParams> {
    let mut grid = Vec::new();
    for depth in [Some(3), Some(4), Some(5), Some(6), Some(8), None] {
        for leaf in [1, 5, 10] {
            grid.push(TreeParams { max_depth: depth, min_samples_leaf: leaf, min_impurity_decrease: 0.0 });
        }
    }
    grid
}

/// SplitMix64 step; used to derive independent sub-seeds from one seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stratified k-fold assignment: each class is shuffled and dealt
/// round-robin, continuing the deal across classes. Folds are sorted.
pub fn stratified_folds(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidSpec(format!("need at least 2 folds, got {k}")));
    }
    let counts = ds.class_counts();
    for (label, &n) in ds.class_labels().iter().zip(&counts) {
        if n < k {
            return Err(Error::Insufficient(format!(
                "class '{label}' has {n} sample(s), fewer than {k} folds; reduce the fold count or merge rare classes"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for c in 0..ds.n_classes() {
        let mut members: Vec<usize> = (0..ds.n_samples()).filter(|&s| ds.class_indices()[s] == c).collect();
        members.shuffle(&mut rng);
        for s in members {
            folds[next % k].push(s);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

fn complement(d: usize, fold: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; d];
    for &i in fold {
        mask[i] = false;
    }
    (0..d).filter(|&i| mask[i]).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub params: TreeParams,
    pub inner_accuracy: f64,
    pub accuracy: f64,
    #[serde(skip)]
    pub tree: DecisionTree,
    #[serde(skip)]
    pub rules: RuleSet,
}

impl FoldResult {
    /// The training split the fold's tree and rules were derived from.
    pub fn train_set(&self, ds: &Dataset) -> Result<Dataset> {
        ds.select_rows(&self.train)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CvResult {
    pub folds: Vec<FoldResult>,
}

impl CvResult {
    pub fn mean_accuracy(&self) -> f64 {
        self.folds.iter().map(|f| f.accuracy).sum::<f64>() / self.folds.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct CvConfig {
    pub grid: Vec<TreeParams>,
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { grid: default_grid(), outer_folds: 5, inner_folds: 3, seed: 0 }
    }
}

/// Picks the grid entry with the best mean inner-fold accuracy; ties go to
/// the earlier entry.
fn select_params(train: &Dataset, grid: &[TreeParams], k: usize, seed: u64) -> Result<(TreeParams, f64)> {
    if grid.len() == 1 {
        return Ok((grid[0], f64::NAN));
    }
    let folds = stratified_folds(train, k, seed)?;
    let splits: Vec<(Dataset, Dataset)> = folds
        .iter()
        .map(|test| {
            let tr = complement(train.n_samples(), test);
            Ok((train.select_rows(&tr)?, train.select_rows(test)?))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(TreeParams, f64)> = None;
    for &params in grid {
        let mut acc = 0.0;
        for (tr, te) in &splits {
            acc += fit_tree(tr, params)?.accuracy(te);
        }
        acc /= splits.len() as f64;
        if best.is_none_or(|(_, b)| acc > b) {
            best = Some((params, acc));
        }
    }
    best.ok_or_else(|| Error::InvalidSpec("empty hyperparameter grid".into()))
}

fn run_fold(ds: &Dataset, cfg: &CvConfig, fold: usize, test: &[usize]) -> Result<FoldResult> {
    let train_idx = complement(ds.n_samples(), test);
    let train = ds.select_rows(&train_idx)?;
    let testset = ds.select_rows(test)?;
    let (params, inner_accuracy) = select_params(&train, &cfg.grid, cfg.inner_folds, derive_seed(cfg.seed, fold as u64 + 1))
        .map_err(|e| Error::Insufficient(format!("fold {fold}: {e}")))?;
    let tree = fit_tree(&train, params)?;
    let accuracy = tree.accuracy(&testset);
    let rules = tree_to_rules(&tree);
    Ok(FoldResult { fold, train: train_idx, test: test.to_vec(), params, inner_accuracy, accuracy, tree, rules })
}

/// Outer stratified folds; inside each training split a grid search on
/// accuracy picks the tree parameters, the tree is refit on the whole
/// training split, scored on the held-out fold and converted to rules.
pub fn cross_validate(ds: &Dataset, cfg: &CvConfig) -> Result<CvResult> {
    let folds = stratified_folds(ds, cfg.outer_folds, cfg.seed)?;
    #[cfg(feature = "parallel")]
    let results: Vec<Result<FoldResult>> = {
        use rayon::prelude::*;
        folds.par_iter().enumerate().map(|(i, test)| run_fold(ds, cfg, i, test)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<FoldResult>> =
        folds.iter().enumerate().map(|(i, test)| run_fold(ds, cfg, i, test)).collect();
    Ok(CvResult { folds: results.into_iter().collect::<Result<_>>()? })
}
