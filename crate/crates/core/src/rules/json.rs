//! JSON mirror of the rule language:
//! `[{"conditions": [{"feature", "op", "value" | "values" | "lo","hi"}], "consequent"}]`.

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::{Condition, Literal, Predicate, Rule, RuleSet};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct RuleRepr {
    conditions: Vec<ConditionRepr>,
    consequent: Json,
}

#[derive(Serialize, Deserialize)]
struct ConditionRepr {
    feature: String,
    op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<Json>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lo_closed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hi_closed: Option<bool>,
}

fn literal_to_json(l: &Literal) -> Json {
    match l.as_number() {
        Some(x) if format!("{x}") == l.as_str() => {
            serde_json::Number::from_f64(x).map(Json::Number).unwrap_or_else(|| Json::String(l.0.clone()))
        }
        _ => Json::String(l.0.clone()),
    }
}

fn json_to_text(v: &Json) -> Result<String> {
    match v {
        Json::String(s) => Ok(s.clone()),
        Json::Number(n) => Ok(match n.as_f64() {
            Some(x) => format!("{x}"),
            None => n.to_string(),
        }),
        Json::Bool(b) => Ok(b.to_string()),
        other => Err(Error::InvalidSpec(format!("unsupported literal {other}"))),
    }
}

fn json_to_number(v: &Option<Json>, feature: &str) -> Result<f64> {
    v.as_ref()
        .and_then(|j| j.as_f64())
        .ok_or_else(|| Error::InvalidSpec(format!("condition on '{feature}' needs a numeric 'value'")))
}

impl From<&Condition> for ConditionRepr {
    fn from(c: &Condition) -> Self {
        let mut r = ConditionRepr {
            feature: c.feature.clone(),
            op: String::new(),
            value: None,
            values: None,
            lo: None,
            hi: None,
            lo_closed: None,
            hi_closed: None,
        };
        let num = |x: f64| serde_json::Number::from_f64(x).map(Json::Number);
        match &c.predicate {
            Predicate::Le(x) => (r.op, r.value) = ("<=".into(), num(*x)),
            Predicate::Lt(x) => (r.op, r.value) = ("<".into(), num(*x)),
            Predicate::Ge(x) => (r.op, r.value) = (">=".into(), num(*x)),
            Predicate::Gt(x) => (r.op, r.value) = (">".into(), num(*x)),
            Predicate::Eq(l) => (r.op, r.value) = ("==".into(), Some(literal_to_json(l))),
            Predicate::Ne(l) => (r.op, r.value) = ("!=".into(), Some(literal_to_json(l))),
            Predicate::InSet(ls) => {
                r.op = "in".into();
                r.values = Some(ls.iter().map(literal_to_json).collect());
            }
            Predicate::InInterval { lo, hi, lo_closed, hi_closed } => {
                r.op = "in_interval".into();
                r.lo = Some(*lo);
                r.hi = Some(*hi);
                r.lo_closed = (!lo_closed).then_some(false);
                r.hi_closed = (!hi_closed).then_some(false);
            }
        }
        r
    }
}

impl TryFrom<ConditionRepr> for Condition {
    type Error = Error;

    fn try_from(r: ConditionRepr) -> Result<Self> {
        let f = r.feature.as_str();
        let literal = |v: &Option<Json>| -> Result<Literal> {
            v.as_ref()
                .ok_or_else(|| Error::InvalidSpec(format!("condition on '{f}' needs a 'value'")))
                .and_then(json_to_text)
                .map(Literal::new)
        };
        let predicate = match r.op.as_str() {
            "<=" => Predicate::Le(json_to_number(&r.value, f)?),
            "<" => Predicate::Lt(json_to_number(&r.value, f)?),
            ">=" => Predicate::Ge(json_to_number(&r.value, f)?),
            ">" => Predicate::Gt(json_to_number(&r.value, f)?),
            "==" => Predicate::Eq(literal(&r.value)?),
            "!=" => Predicate::Ne(literal(&r.value)?),
            "in" => Predicate::InSet(
                r.values
                    .as_ref()
                    .ok_or_else(|| Error::InvalidSpec(format!("'in' on '{f}' needs 'values'")))?
                    .iter()
                    .map(|v| json_to_text(v).map(Literal::new))
                    .collect::<Result<_>>()?,
            ),
            "in_interval" => Predicate::InInterval {
                lo: r.lo.ok_or_else(|| Error::InvalidSpec(format!("interval on '{f}' needs 'lo'")))?,
                hi: r.hi.ok_or_else(|| Error::InvalidSpec(format!("interval on '{f}' needs 'hi'")))?,
                lo_closed: r.lo_closed.unwrap_or(true),
                hi_closed: r.hi_closed.unwrap_or(true),
            },
            other => return Err(Error::InvalidSpec(format!("unknown operator '{other}'"))),
        };
        Condition::new(r.feature, predicate)
    }
}

pub fn rules_to_json(rs: &RuleSet) -> String {
    let reprs: Vec<RuleRepr> = rs
        .rules
        .iter()
        .map(|r| RuleRepr {
            conditions: r.conditions.iter().map(ConditionRepr::from).collect(),
            consequent: Json::String(r.consequent.clone()),
        })
        .collect();
    serde_json::to_string_pretty(&reprs).expect("rule JSON serialization cannot fail")
}

pub fn rules_from_json(text: &str) -> Result<RuleSet> {
    let reprs: Vec<RuleRepr> = serde_json::from_str(text)?;
    let mut rules = Vec::with_capacity(reprs.len());
    for r in reprs {
        let consequent = json_to_text(&r.consequent)?;
        let conditions = r
            .conditions
            .into_iter()
            .map(Condition::try_from)
            .collect::<Result<Vec<_>>>()?;
        rules.push(Rule { conditions, consequent });
    }
    if rules.is_empty() {
        return Err(Error::Empty("rule document contains no rules".into()));
    }
    Ok(RuleSet::new(rules, "json"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::parse_rules;

    #[test]
    fn json_mirror_round_trip() {
        let rs = parse_rules(
            "a <= 1.5 AND b in {x, 2, \"2.0\"} => 1\nc in (0, 1] AND d == red AND e != 3 => \"no\"\n",
        )
        .unwrap();
        let json = rules_to_json(&rs);
        let back = rules_from_json(&json).unwrap();
        assert_eq!(back.rules, rs.rules);
    }

    #[test]
    fn reads_hand_written_json() {
        let text = r#"[{"conditions": [{"feature": "f", "op": "<=", "value": 0.6},
                                       {"feature": "g", "op": "in_interval", "lo": 1, "hi": 2}],
                        "consequent": 1}]"#;
        let rs = rules_from_json(text).unwrap();
        assert_eq!(rs.rules[0].consequent, "1");
        assert_eq!(rs.rules[0].to_string(), "f <= 0.6 AND g in [1, 2] => 1");
    }

    #[test]
    fn rejects_bad_json() {
        assert!(rules_from_json("[]").is_err());
        assert!(rules_from_json(r#"[{"conditions":[{"feature":"f","op":"~","value":1}],"consequent":"a"}]"#).is_err());
        assert!(rules_from_json(r#"[{"conditions":[{"feature":"f","op":"<=","value":"x"}],"consequent":"a"}]"#).is_err());
        assert!(rules_from_json(r#"[{"conditions":[{"feature":"f","op":"in_interval","lo":3,"hi":1}],"consequent":"a"}]"#).is_err());
    }
}
