use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rulegraph::learner::tree::{fit_tree, TreeParams};
use rulegraph::relevance::{covering, error, feature_relevance};
use rulegraph::{
    build_graph, graph_distance, parse_rules, relevance_matrix, rules_from_json, rules_to_json, tree_to_rules,
    ColumnKind, Condition, Dataset, Literal, MetricTags, Predicate, Rule, RuleSet, Value,
};

const CATS: [&str; 4] = ["red", "green", "dark blue", "n/a"];

fn dataset(rng: &mut ChaCha8Rng, d: usize, m: usize) -> Dataset {
    let kinds: Vec<ColumnKind> =
        (0..m).map(|j| if j == 0 && m > 1 { ColumnKind::Categorical } else { ColumnKind::Numeric }).collect();
    let rows = (0..d)
        .map(|_| {
            kinds
                .iter()
                .map(|k| match k {
                    ColumnKind::Numeric => Value::Num(rng.gen_range(0..8) as f64 / 2.0),
                    ColumnKind::Categorical => Value::Cat(CATS[rng.gen_range(0..CATS.len())].into()),
                })
                .collect()
        })
        .collect();
    let targets = (0..d).map(|s| if s < 2 { ["no", "yes"][s] } else { ["no", "yes"][rng.gen_range(0..2)] }.into()).collect();
    Dataset::new((0..m).map(|j| format!("f{j}")).collect(), kinds, rows, targets).unwrap()
}

fn condition(rng: &mut ChaCha8Rng, ds: &Dataset, f: usize) -> Condition {
    let name = ds.feature_names()[f].clone();
    let t = rng.gen_range(0..8) as f64 / 2.0 + 0.25;
    let pred = match ds.column_kinds()[f] {
        ColumnKind::Numeric => match rng.gen_range(0..6) {
            0 => Predicate::Le(t),
            1 => Predicate::Lt(t),
            2 => Predicate::Ge(t),
            3 => Predicate::Gt(t),
            4 => Predicate::Ne(Literal::number(t - 0.25)),
            _ => Predicate::InInterval { lo: t - 1.0, hi: t + 0.5, lo_closed: rng.gen_bool(0.5), hi_closed: rng.gen_bool(0.5) },
        },
        ColumnKind::Categorical => match rng.gen_range(0..3) {
            0 => Predicate::Eq(Literal::new(CATS[rng.gen_range(0..CATS.len())])),
            1 => Predicate::Ne(Literal::new(CATS[rng.gen_range(0..CATS.len())])),
            _ => Predicate::InSet(vec![Literal::new(CATS[0]), Literal::new(CATS[rng.gen_range(1..CATS.len())])]),
        },
    };
    Condition::new(name, pred).unwrap()
}

fn rule_set(rng: &mut ChaCha8Rng, ds: &Dataset, n: usize) -> RuleSet {
    let rules = (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=4);
            let conds = (0..k)
                .map(|_| {
                    let f = rng.gen_range(0..ds.n_features());
                    condition(rng, ds, f)
                })
                .collect();
            Rule::new(conds, ["no", "yes"][rng.gen_range(0..2)])
        })
        .collect();
    RuleSet::new(rules, "random")
}

fn instance(seed: u64) -> (Dataset, RuleSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.gen_range(4..=40);
    let m = rng.gen_range(1..=5);
    let ds = dataset(&mut rng, d, m);
    let n = rng.gen_range(1..=6);
    let rs = rule_set(&mut rng, &ds, n);
    (ds, rs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn removing_a_feature_never_shrinks_coverage(seed in any::<u64>()) {
        let (ds, rs) = instance(seed);
        for rule in &rs.rules {
            for h in rule.features() {
                let reduced = rule.remove_feature(h);
                prop_assert!(rule.covered_set(&ds).unwrap().is_subset(&reduced.covered_set(&ds).unwrap()));
                prop_assert!(covering(&ds, &reduced).unwrap() >= covering(&ds, rule).unwrap());
                prop_assert!(error(&ds, &reduced).unwrap() >= error(&ds, rule).unwrap());
                prop_assert!(feature_relevance(&ds, h, rule).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn relevance_values_are_bounded(seed in any::<u64>()) {
        let (ds, rs) = instance(seed);
        let res = relevance_matrix(&ds, &rs, MetricTags::default()).unwrap();
        prop_assert!(res.p.iter().chain(res.q.iter()).all(|v| (0.0..=1.0).contains(v)));
        for (k, rule) in rs.rules.iter().enumerate() {
            for (j, name) in ds.feature_names().iter().enumerate() {
                if !rule.uses_feature(name) {
                    prop_assert_eq!(res.p[[k, j]], 0.0);
                }
            }
        }
    }

    #[test]
    fn tree_rules_partition_the_samples(seed in any::<u64>(), depth in 1usize..6) {
        let (ds, _) = instance(seed);
        let tree = fit_tree(&ds, TreeParams::with_depth(depth)).unwrap();
        let rules = tree_to_rules(&tree);
        prop_assert_eq!(rules.len(), tree.n_leaves());
        for s in 0..ds.n_samples() {
            let firing: Vec<&Rule> = rules.rules.iter().filter(|r| r.satisfies(&ds, ds.row(s)).unwrap()).collect();
            prop_assert_eq!(firing.len(), 1);
            prop_assert_eq!(firing[0].consequent.as_str(), tree.predict(ds.row(s)));
        }
    }

    #[test]
    fn graph_ignores_rule_order(seed in any::<u64>()) {
        let (ds, rs) = instance(seed);
        let mut reversed = rs.clone();
        reversed.rules.reverse();
        let g1 = build_graph(&ds, &rs, None, MetricTags::default()).unwrap();
        let g2 = build_graph(&ds, &reversed, None, MetricTags::default()).unwrap();
        prop_assert_eq!(g1.zero, g2.zero);
        for (a, b) in g1.adjacency.iter().zip(g2.adjacency.iter()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        prop_assert!(graph_distance(&g1, &g2).unwrap() < 1e-9);
    }

    #[test]
    fn dsl_and_json_round_trip(seed in any::<u64>()) {
        let (_, rs) = instance(seed);
        let text = rs.to_dsl();
        let parsed = parse_rules(&text).unwrap();
        prop_assert_eq!(&parsed.rules, &rs.rules);
        prop_assert_eq!(parsed.to_dsl(), text);
        let json = rules_from_json(&rules_to_json(&rs)).unwrap();
        prop_assert_eq!(&json.rules, &rs.rules);
    }

    #[test]
    fn distances_between_real_graphs_are_metric(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (ds, _) = instance(a);
        let mut rng = ChaCha8Rng::seed_from_u64(b ^ c);
        let graphs: Vec<_> = (0..3)
            .map(|_| {
                let rs = rule_set(&mut rng, &ds, 4);
                build_graph(&ds, &rs, None, MetricTags::default()).unwrap()
            })
            .collect();
        let d = |i: usize, j: usize| graph_distance(&graphs[i], &graphs[j]).unwrap();
        prop_assert_eq!(d(0, 0), 0.0);
        prop_assert_eq!(d(0, 1), d(1, 0));
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-9);
    }
}
