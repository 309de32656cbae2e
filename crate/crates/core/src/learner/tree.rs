//! CART-style binary classification trees with the Gini split criterion.

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, Dataset, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_impurity_decrease: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: None, min_samples_leaf: 1, min_impurity_decrease: 0.0 }
    }
}

impl TreeParams {
    pub fn with_depth(max_depth: usize) -> Self {
        TreeParams { max_depth: Some(max_depth), ..Default::default() }
    }
}

/// Edge test of an internal node. Samples passing the test go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTest {
    /// `value <= threshold`
    Threshold(f64),
    /// `value == category`
    Equals(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        test: SplitTest,
        left: usize,
        right: usize,
        class_counts: Vec<usize>,
        impurity: f64,
    },
    Leaf {
        class_counts: Vec<usize>,
        impurity: f64,
        prediction: usize,
    },
}

impl Node {
    pub fn class_counts(&self) -> &[usize] {
        match self {
            Node::Split { class_counts, .. } | Node::Leaf { class_counts, .. } => class_counts,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.class_counts().iter().sum()
    }

    pub fn impurity(&self) -> f64 {
        match self {
            Node::Split { impurity, .. } | Node::Leaf { impurity, .. } => *impurity,
        }
    }
}

/// Fitted tree. Nodes live in an arena with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub feature_names: Vec<String>,
    pub column_kinds: Vec<ColumnKind>,
    pub classes: Vec<String>,
    pub nodes: Vec<Node>,
    pub params: TreeParams,
}

pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct Candidate {
    feature: usize,
    test: SplitTest,
    decrease: f64,
}

// Gains closer than this are treated as ties so that the lowest feature
// (then lowest threshold) wins regardless of summation rounding.
const TIE_EPS: f64 = 1e-12;

struct Builder<'a> {
    ds: &'a Dataset,
    params: TreeParams,
    n_total: f64,
    n_classes: usize,
    nodes: Vec<Node>,
    categories: Vec<Vec<String>>,
}

impl<'a> Builder<'a> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let classes = self.ds.class_indices();
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[classes[i]] += 1;
        }
        c
    }

    fn weighted_decrease(&self, parent: &[usize], left: &[usize], right: &[usize]) -> f64 {
        let n: f64 = parent.iter().sum::<usize>() as f64;
        let nl: f64 = left.iter().sum::<usize>() as f64;
        let nr: f64 = right.iter().sum::<usize>() as f64;
        (n / self.n_total) * (gini(parent) - (nl / n) * gini(left) - (nr / n) * gini(right))
    }

    fn best_numeric(&self, feature: usize, idx: &[usize], parent: &[usize], best: &mut Option<Candidate>) {
        let classes = self.ds.class_indices();
        let mut sorted: Vec<(f64, usize)> = idx
            .iter()
            .map(|&i| (self.ds.row(i)[feature].as_num().unwrap_or(f64::NAN), classes[i]))
            .collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let min_leaf = self.params.min_samples_leaf.max(1);
        let mut left = vec![0usize; self.n_classes];
        let mut right = parent.to_vec();
        for k in 0..sorted.len() - 1 {
            left[sorted[k].1] += 1;
            right[sorted[k].1] -= 1;
            let (a, b) = (sorted[k].0, sorted[k + 1].0);
            if a == b || k + 1 < min_leaf || sorted.len() - (k + 1) < min_leaf {
                continue;
            }
            let decrease = self.weighted_decrease(parent, &left, &right);
            if best.as_ref().is_none_or(|c| decrease > c.decrease + TIE_EPS) {
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                *best = Some(Candidate { feature, test: SplitTest::Threshold(threshold), decrease });
            }
        }
    }

    fn best_categorical(&self, feature: usize, idx: &[usize], parent: &[usize], best: &mut Option<Candidate>) {
        let classes = self.ds.class_indices();
        let min_leaf = self.params.min_samples_leaf.max(1);
        for cat in &self.categories[feature] {
            let mut left = vec![0usize; self.n_classes];
            for &i in idx {
                if matches!(&self.ds.row(i)[feature], Value::Cat(v) if v == cat) {
                    left[classes[i]] += 1;
                }
            }
            let nl: usize = left.iter().sum();
            let n: usize = parent.iter().sum();
            if nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let right: Vec<usize> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
            let decrease = self.weighted_decrease(parent, &left, &right);
            if best.as_ref().is_none_or(|c| decrease > c.decrease + TIE_EPS) {
                *best = Some(Candidate { feature, test: SplitTest::Equals(cat.clone()), decrease });
            }
        }
    }

    fn goes_left(&self, row: usize, feature: usize, test: &SplitTest) -> bool {
        goes_left(&self.ds.row(row)[feature], test)
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let impurity = gini(&counts);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { class_counts: counts.clone(), impurity, prediction: majority(&counts) });

        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        let min_leaf = self.params.min_samples_leaf.max(1);
        if !depth_ok || impurity <= 0.0 || idx.len() < 2 * min_leaf {
            return slot;
        }
        let mut best = None;
        for f in 0..self.ds.n_features() {
            match self.ds.column_kinds()[f] {
                ColumnKind::Numeric => self.best_numeric(f, &idx, &counts, &mut best),
                ColumnKind::Categorical => self.best_categorical(f, &idx, &counts, &mut best),
            }
        }
        let Some(best) = best else { return slot };
        if best.decrease < self.params.min_impurity_decrease {
            return slot;
        }
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.goes_left(i, best.feature, &best.test));
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature: best.feature,
            test: best.test,
            left,
            right,
            class_counts: counts,
            impurity,
        };
        slot
    }
}

fn goes_left(v: &Value, test: &SplitTest) -> bool {
    match (v, test) {
        (Value::Num(x), SplitTest::Threshold(t)) => x <= t,
        (Value::Cat(c), SplitTest::Equals(e)) => c == e,
        _ => false,
    }
}

/// Greedy CART induction. Deterministic: among equally good splits the
/// lowest feature index wins, then the lowest threshold.
pub fn fit_tree(ds: &Dataset, params: TreeParams) -> Result<DecisionTree> {
    if ds.n_samples() == 0 {
        return Err(Error::Empty("cannot fit a tree on an empty dataset".into()));
    }
    let categories = (0..ds.n_features())
        .map(|f| {
            let mut seen: Vec<String> = Vec::new();
            if ds.column_kinds()[f] == ColumnKind::Categorical {
                for row in ds.rows() {
                    if let Value::Cat(c) = &row[f] {
                        if !seen.contains(c) {
                            seen.push(c.clone());
                        }
                    }
                }
            }
            seen
        })
        .collect();
    let mut b = Builder {
        ds,
        params,
        n_total: ds.n_samples() as f64,
        n_classes: ds.n_classes(),
        nodes: Vec::new(),
        categories,
    };
    b.grow((0..ds.n_samples()).collect(), 0);
    Ok(DecisionTree {
        feature_names: ds.feature_names().to_vec(),
        column_kinds: ds.column_kinds().to_vec(),
        classes: ds.class_labels().to_vec(),
        nodes: b.nodes,
        params,
    })
}

impl DecisionTree {
    fn leaf_for(&self, sample: &[Value]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { .. } => return at,
                Node::Split { feature, test, left, right, .. } => {
                    at = if goes_left(&sample[*feature], test) { *left } else { *right };
                }
            }
        }
    }

    /// Predicted class label for a sample laid out like the training data.
    pub fn predict(&self, sample: &[Value]) -> &str {
        match &self.nodes[self.leaf_for(sample)] {
            Node::Leaf { prediction, .. } => &self.classes[*prediction],
            Node::Split { .. } => unreachable!("leaf_for returns leaves"),
        }
    }

    pub fn accuracy(&self, ds: &Dataset) -> f64 {
        let hits = (0..ds.n_samples())
            .filter(|&s| self.predict(ds.row(s)) == ds.targets()[s])
            .count();
        hits as f64 / ds.n_samples() as f64
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &DecisionTree, at: usize) -> usize {
            match &t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Features used by at least one split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
