//! Conjunctive classification rules, rule sets and their evaluation.

mod dsl;
mod json;
mod tree;

use std::fmt;

use crate::dataset::{ColumnKind, Dataset, SampleIndexSet, Value};
use crate::error::{Error, Result};

pub use dsl::parse_rules;
pub use json::{rules_from_json, rules_to_json};
pub use tree::tree_to_rules;

/// A literal operand as written in the rule. It is interpreted as a number
/// when compared against a numeric column and as text otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal(pub String);

impl Literal {
    pub fn new(text: impl Into<String>) -> Self {
        Literal(text.into().trim().to_string())
    }

    pub fn number(x: f64) -> Self {
        Literal(format!("{x}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_number(&self) -> Option<f64> {
        self.0.parse::<f64>().ok().filter(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Le(f64),
    Lt(f64),
    Ge(f64),
    Gt(f64),
    Eq(Literal),
    Ne(Literal),
    InSet(Vec<Literal>),
    InInterval {
        lo: f64,
        hi: f64,
        lo_closed: bool,
        hi_closed: bool,
    },
}

impl Predicate {
    fn is_order(&self) -> bool {
        matches!(
            self,
            Predicate::Le(_) | Predicate::Lt(_) | Predicate::Ge(_) | Predicate::Gt(_) | Predicate::InInterval { .. }
        )
    }
}

/// One test on one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub feature: String,
    pub predicate: Predicate,
}

impl Condition {
    pub fn new(feature: impl Into<String>, predicate: Predicate) -> Result<Self> {
        let feature = feature.into();
        match &predicate {
            Predicate::InInterval { lo, hi, .. } if !(lo <= hi) => {
                return Err(Error::InvalidSpec(format!(
                    "interval on '{feature}' has lo {lo} > hi {hi}"
                )))
            }
            Predicate::InSet(values) if values.is_empty() => {
                return Err(Error::InvalidSpec(format!("empty value set on '{feature}'")))
            }
            _ => {}
        }
        Ok(Condition { feature, predicate })
    }

    pub fn le(feature: &str, x: f64) -> Self {
        Condition { feature: feature.into(), predicate: Predicate::Le(x) }
    }

    pub fn gt(feature: &str, x: f64) -> Self {
        Condition { feature: feature.into(), predicate: Predicate::Gt(x) }
    }

    pub fn eq(feature: &str, value: &str) -> Self {
        Condition { feature: feature.into(), predicate: Predicate::Eq(Literal::new(value)) }
    }

    pub fn ne(feature: &str, value: &str) -> Self {
        Condition { feature: feature.into(), predicate: Predicate::Ne(Literal::new(value)) }
    }

    /// Closed interval `[lo, hi]`.
    pub fn between(feature: &str, lo: f64, hi: f64) -> Result<Self> {
        Condition::new(
            feature,
            Predicate::InInterval { lo, hi, lo_closed: true, hi_closed: true },
        )
    }
}

/// `conditions => consequent`. An empty condition list is satisfied by
/// every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub conditions: Vec<Condition>,
    pub consequent: String,
}

impl Rule {
    pub fn new(conditions: Vec<Condition>, consequent: impl Into<String>) -> Self {
        Rule { conditions, consequent: consequent.into() }
    }

    /// Distinct features tested by the rule, in order of first occurrence.
    pub fn features(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.conditions {
            if !out.contains(&c.feature.as_str()) {
                out.push(&c.feature);
            }
        }
        out
    }

    pub fn uses_feature(&self, feature: &str) -> bool {
        self.conditions.iter().any(|c| c.feature == feature)
    }

    /// The rule with every condition on `feature` removed.
    pub fn remove_feature(&self, feature: &str) -> Rule {
        Rule {
            conditions: self
                .conditions
                .iter()
                .filter(|c| c.feature != feature)
                .cloned()
                .collect(),
            consequent: self.consequent.clone(),
        }
    }

    pub fn compile(&self, ds: &Dataset) -> Result<CompiledRule> {
        CompiledRule::new(self, ds)
    }

    /// Whether `sample` (a row laid out like `ds`) satisfies every condition.
    pub fn satisfies(&self, ds: &Dataset, sample: &[Value]) -> Result<bool> {
        Ok(self.compile(ds)?.satisfies(sample))
    }

    /// Indices of the rows of `ds` that satisfy the rule.
    pub fn covered_set(&self, ds: &Dataset) -> Result<SampleIndexSet> {
        let compiled = self.compile(ds)?;
        let idx = (0..ds.n_samples())
            .filter(|&s| compiled.satisfies(ds.row(s)))
            .collect();
        SampleIndexSet::from_sorted(idx, ds.n_samples())
    }
}

/// Ordered rule collection; rule position is the row index of P and q.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub source: String,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>, source: impl Into<String>) -> Self {
        RuleSet { rules, source: source.into() }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Rules whose consequent is `label`, original order kept.
    pub fn for_class(&self, label: &str) -> RuleSet {
        RuleSet {
            rules: self.rules.iter().filter(|r| r.consequent == label).cloned().collect(),
            source: self.source.clone(),
        }
    }

    /// Features referenced by any rule that `ds` does not have.
    pub fn unknown_features(&self, ds: &Dataset) -> Vec<String> {
        let mut missing: Vec<String> = Vec::new();
        for r in &self.rules {
            for f in r.features() {
                if ds.feature_index(f).is_none() && !missing.iter().any(|m| m == f) {
                    missing.push(f.to_string());
                }
            }
        }
        missing
    }

    /// Canonical DSL text, one rule per line.
    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
enum Test {
    Le(f64),
    Lt(f64),
    Ge(f64),
    Gt(f64),
    NumEq(f64),
    NumNe(f64),
    NumIn(Vec<f64>),
    CatEq(String),
    CatNe(String),
    CatIn(Vec<String>),
    Interval { lo: f64, hi: f64, lo_closed: bool, hi_closed: bool },
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledCondition {
    pub(crate) column: usize,
    test: Test,
}

impl CompiledCondition {
    fn new(c: &Condition, ds: &Dataset) -> Result<Self> {
        let column = ds
            .feature_index(&c.feature)
            .ok_or_else(|| Error::UnknownFeature(c.feature.clone()))?;
        let kind = ds.column_kinds()[column];
        let mismatch = |msg: String| Error::KindMismatch { feature: c.feature.clone(), msg };
        if kind == ColumnKind::Categorical && c.predicate.is_order() {
            return Err(mismatch("order comparison on a categorical feature".into()));
        }
        let num = |l: &Literal| {
            l.as_number()
                .ok_or_else(|| mismatch(format!("'{}' is not a number", l.as_str())))
        };
        let test = match (&c.predicate, kind) {
            (Predicate::Le(x), _) => Test::Le(*x),
            (Predicate::Lt(x), _) => Test::Lt(*x),
            (Predicate::Ge(x), _) => Test::Ge(*x),
            (Predicate::Gt(x), _) => Test::Gt(*x),
            (&Predicate::InInterval { lo, hi, lo_closed, hi_closed }, _) => {
                Test::Interval { lo, hi, lo_closed, hi_closed }
            }
            (Predicate::Eq(l), ColumnKind::Numeric) => Test::NumEq(num(l)?),
            (Predicate::Ne(l), ColumnKind::Numeric) => Test::NumNe(num(l)?),
            (Predicate::InSet(ls), ColumnKind::Numeric) => {
                Test::NumIn(ls.iter().map(num).collect::<Result<_>>()?)
            }
            (Predicate::Eq(l), ColumnKind::Categorical) => Test::CatEq(l.0.clone()),
            (Predicate::Ne(l), ColumnKind::Categorical) => Test::CatNe(l.0.clone()),
            (Predicate::InSet(ls), ColumnKind::Categorical) => {
                Test::CatIn(ls.iter().map(|l| l.0.clone()).collect())
            }
        };
        Ok(CompiledCondition { column, test })
    }

    #[inline]
    pub(crate) fn holds(&self, sample: &[Value]) -> bool {
        match (&self.test, &sample[self.column]) {
            (Test::Le(t), Value::Num(x)) => x <= t,
            (Test::Lt(t), Value::Num(x)) => x < t,
            (Test::Ge(t), Value::Num(x)) => x >= t,
            (Test::Gt(t), Value::Num(x)) => x > t,
            (Test::NumEq(t), Value::Num(x)) => x == t,
            (Test::NumNe(t), Value::Num(x)) => x != t,
            (Test::NumIn(ts), Value::Num(x)) => ts.contains(x),
            (Test::CatEq(t), Value::Cat(x)) => x == t,
            (Test::CatNe(t), Value::Cat(x)) => x != t,
            (Test::CatIn(ts), Value::Cat(x)) => ts.iter().any(|t| t == x),
            (&Test::Interval { lo, hi, lo_closed, hi_closed }, &Value::Num(x)) => {
                (if lo_closed { x >= lo } else { x > lo }) && (if hi_closed { x <= hi } else { x < hi })
            }
            // Compilation checks kinds against the schema, so this is a
            // sample that does not follow the dataset layout.
            _ => false,
        }
    }
}

/// A rule resolved against a dataset schema: column indices looked up,
/// literals converted to the column's kind.
#[derive(Debug, Clone)]
pub struct CompiledRule {
    pub(crate) conditions: Vec<CompiledCondition>,
    /// Class index of the consequent, `None` when the dataset lacks it.
    pub consequent: Option<usize>,
}

impl CompiledRule {
    pub fn new(rule: &Rule, ds: &Dataset) -> Result<Self> {
        let conditions = rule
            .conditions
            .iter()
            .map(|c| CompiledCondition::new(c, ds))
            .collect::<Result<_>>()?;
        let consequent = ds.class_labels().iter().position(|l| *l == rule.consequent);
        Ok(CompiledRule { conditions, consequent })
    }

    #[inline]
    pub fn satisfies(&self, sample: &[Value]) -> bool {
        self.conditions.iter().all(|c| c.holds(sample))
    }
}

fn is_bare(s: &str) -> bool {
    !s.is_empty()
        && !matches!(s, "AND" | "and" | "in")
        && s.chars().all(|ch| !ch.is_whitespace() && !dsl::is_delimiter(ch))
}

pub(crate) fn quote_if_needed(s: &str) -> String {
    if is_bare(s) {
        s.to_string()
    } else {
        let mut out = String::with_capacity(s.len() + 2);
        out.push('"');
        for ch in s.chars() {
            if ch == '"' || ch == '\\' {
                out.push('\\');
            }
            out.push(ch);
        }
        out.push('"');
        out
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = quote_if_needed(&self.feature);
        match &self.predicate {
            Predicate::Le(x) => write!(f, "{name} <= {x}"),
            Predicate::Lt(x) => write!(f, "{name} < {x}"),
            Predicate::Ge(x) => write!(f, "{name} >= {x}"),
            Predicate::Gt(x) => write!(f, "{name} > {x}"),
            Predicate::Eq(l) => write!(f, "{name} == {}", quote_if_needed(l.as_str())),
            Predicate::Ne(l) => write!(f, "{name} != {}", quote_if_needed(l.as_str())),
            Predicate::InSet(ls) => {
                let vals: Vec<String> = ls.iter().map(|l| quote_if_needed(l.as_str())).collect();
                write!(f, "{name} in {{{}}}", vals.join(", "))
            }
            Predicate::InInterval { lo, hi, lo_closed, hi_closed } => write!(
                f,
                "{name} in {}{lo}, {hi}{}",
                if *lo_closed { '[' } else { '(' },
                if *hi_closed { ']' } else { ')' }
            ),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let conds: Vec<String> = self.conditions.iter().map(|c| c.to_string()).collect();
        if conds.is_empty() {
            write!(f, "=> {}", quote_if_needed(&self.consequent))
        } else {
            write!(f, "{} => {}", conds.join(" AND "), quote_if_needed(&self.consequent))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds_fg() -> Dataset {
        Dataset::from_numeric(
            &["f", "g"],
            vec![vec![0.2, 1.0], vec![0.9, 1.0], vec![0.5, 1.0], vec![0.7, 1.0]],
            &["1", "0", "1", "0"],
        )
        .unwrap()
    }

    #[test]
    fn satisfies_single_comparison() {
        let ds = ds_fg();
        let r = Rule::new(vec![Condition::le("f", 0.6)], "1");
        assert!(r.satisfies(&ds, &[Value::Num(0.2), Value::Num(0.0)]).unwrap());
    }

    #[test]
    fn empty_antecedent_always_satisfied() {
        let ds = ds_fg();
        let r = Rule::new(vec![], "1");
        assert!(r.satisfies(&ds, &[Value::Num(-1e9), Value::Num(3.0)]).unwrap());
        assert_eq!(r.covered_set(&ds).unwrap(), SampleIndexSet::full(4));
    }

    #[test]
    fn conjunction_fails_on_one_condition() {
        let ds = ds_fg();
        let r = Rule::new(vec![Condition::le("f", 0.6), Condition::gt("g", 2.0)], "1");
        assert!(!r.satisfies(&ds, &[Value::Num(0.2), Value::Num(1.0)]).unwrap());
    }

    #[test]
    fn covered_set_enumeration() {
        let ds = ds_fg();
        let r = Rule::new(vec![Condition::le("f", 0.6)], "1");
        assert_eq!(r.covered_set(&ds).unwrap().as_slice(), &[0, 2]);
        // boundary is inclusive for <=
        let r = Rule::new(vec![Condition::le("f", 0.5)], "1");
        assert_eq!(r.covered_set(&ds).unwrap().as_slice(), &[0, 2]);
        let r = Rule::new(vec![Condition::between("f", 0.3, 0.3).unwrap()], "1");
        assert!(r.covered_set(&ds).unwrap().is_empty());
    }

    #[test]
    fn order_operator_on_categorical_errors() {
        let ds = Dataset::new(
            vec!["c".into()],
            vec![ColumnKind::Categorical],
            vec![vec![Value::Cat("red".into())]],
            vec!["a".into()],
        )
        .unwrap();
        let r = Rule::new(vec![Condition::le("c", 1.0)], "a");
        assert!(matches!(r.compile(&ds), Err(Error::KindMismatch { .. })));
        let ok = Rule::new(vec![Condition::eq("c", " red ")], "a");
        assert!(ok.satisfies(&ds, ds.row(0)).unwrap());
    }

    #[test]
    fn unknown_feature_errors() {
        let ds = ds_fg();
        let r = Rule::new(vec![Condition::le("zz", 1.0)], "1");
        assert!(matches!(r.compile(&ds), Err(Error::UnknownFeature(_))));
    }

    #[test]
    fn interval_bounds_validated() {
        assert!(Condition::between("f", 2.0, 1.0).is_err());
        assert!(Condition::new("f", Predicate::InSet(vec![])).is_err());
    }

    #[test]
    fn remove_feature_cases() {
        let r = Rule::new(
            vec![Condition::le("f", 0.6), Condition::gt("g", 0.0), Condition::gt("f", 0.1)],
            "1",
        );
        let no_g = r.remove_feature("g");
        assert_eq!(no_g.conditions, vec![Condition::le("f", 0.6), Condition::gt("f", 0.1)]);
        assert_eq!(no_g.consequent, "1");
        let only_f = Rule::new(vec![Condition::le("f", 0.6), Condition::gt("f", 0.1)], "1");
        assert!(only_f.remove_feature("f").conditions.is_empty());
        assert_eq!(r.remove_feature("absent"), r);
    }

    #[test]
    fn categorical_in_set() {
        let ds = Dataset::new(
            vec!["color".into()],
            vec![ColumnKind::Categorical],
            vec![
                vec![Value::Cat("red".into())],
                vec![Value::Cat("green".into())],
                vec![Value::Cat("blue".into())],
            ],
            vec!["A".into(), "B".into(), "A".into()],
        )
        .unwrap();
        let rs = parse_rules("color in {red, blue} => A").unwrap();
        assert_eq!(rs.rules[0].covered_set(&ds).unwrap().as_slice(), &[0, 2]);
    }

    #[test]
    fn display_quotes_when_needed() {
        let r = Rule::new(
            vec![Condition::le("MAX IP", 1.5), Condition::eq("kind", "in")],
            "AND",
        );
        assert_eq!(r.to_string(), "\"MAX IP\" <= 1.5 AND kind == \"in\" => \"AND\"");
    }
}
