use super::{Condition, Rule, RuleSet};
use crate::learner::tree::{DecisionTree, Node, SplitTest};

#[derive(Default)]
struct Bounds {
    lower: Option<f64>,
    upper: Option<f64>,
    equals: Option<String>,
    not_equals: Vec<String>,
}

/// One rule per leaf, conditions taken from the root-to-leaf path. Bounds on
/// the same feature are merged into the tightest lower and upper bound.
pub fn tree_to_rules(tree: &DecisionTree) -> RuleSet {
    let mut rules = Vec::new();
    let mut path: Vec<(usize, bool, SplitTest)> = Vec::new();
    walk(tree, 0, &mut path, &mut rules);
    RuleSet::new(rules, "tree")
}

fn walk(tree: &DecisionTree, at: usize, path: &mut Vec<(usize, bool, SplitTest)>, out: &mut Vec<Rule>) {
    match &tree.nodes[at] {
        Node::Leaf { prediction, .. } => out.push(path_rule(tree, path, &tree.classes[*prediction])),
        Node::Split { feature, test, left, right, .. } => {
            path.push((*feature, true, test.clone()));
            walk(tree, *left, path, out);
            path.pop();
            path.push((*feature, false, test.clone()));
            walk(tree, *right, path, out);
            path.pop();
        }
    }
}

fn path_rule(tree: &DecisionTree, path: &[(usize, bool, SplitTest)], label: &str) -> Rule {
    let mut order: Vec<usize> = Vec::new();
    let mut bounds: Vec<Bounds> = (0..tree.feature_names.len()).map(|_| Bounds::default()).collect();
    for (feature, left, test) in path {
        if !order.contains(feature) {
            order.push(*feature);
        }
        let b = &mut bounds[*feature];
        match (test, left) {
            (SplitTest::Threshold(t), true) => b.upper = Some(b.upper.map_or(*t, |u| u.min(*t))),
            (SplitTest::Threshold(t), false) => b.lower = Some(b.lower.map_or(*t, |l| l.max(*t))),
            (SplitTest::Equals(v), true) => b.equals = Some(v.clone()),
            (SplitTest::Equals(v), false) => {
                if !b.not_equals.contains(v) {
                    b.not_equals.push(v.clone());
                }
            }
        }
    }
    let mut conditions = Vec::new();
    for f in order {
        let name = &tree.feature_names[f];
        let b = &bounds[f];
        if let Some(lo) = b.lower {
            conditions.push(Condition::gt(name, lo));
        }
        if let Some(hi) = b.upper {
            conditions.push(Condition::le(name, hi));
        }
        match &b.equals {
            Some(v) => conditions.push(Condition::eq(name, v)),
            None => conditions.extend(b.not_equals.iter().map(|v| Condition::ne(name, v))),
        }
    }
    Rule::new(conditions, label)
}
