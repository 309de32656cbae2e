//! Line-oriented rule language.
//!
//! ```text
//! # comment
//! G120 > 154.5 AND BMI > 29.9 => 1
//! color in {red, blue} AND "MAX IP" in [0.5, 2) => A
//! ```

use super::{Condition, Literal, Predicate, Rule, RuleSet};
use crate::error::{Error, Result};

pub(crate) fn is_delimiter(ch: char) -> bool {
    matches!(ch, '{' | '}' | '[' | ']' | '(' | ')' | ',' | '<' | '>' | '=' | '!' | '#' | '"')
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    Op(&'static str),
    Arrow,
    Punct(char),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Quoted(q) => format!("\"{q}\""),
            Tok::Op(o) => format!("'{o}'"),
            Tok::Arrow => "'=>'".into(),
            Tok::Punct(c) => format!("'{c}'"),
        }
    }

    fn is_and(&self) -> bool {
        matches!(self, Tok::Word(w) if w == "AND" || w == "and")
    }
}

struct Lexed {
    toks: Vec<(Tok, usize)>,
    end_col: usize,
}

fn lex(line: &str, lineno: usize) -> Result<Lexed> {
    let err = |col: usize, msg: String| Error::Parse { line: lineno, column: col, msg };
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let col = i + 1;
        if ch.is_whitespace() {
            i += 1;
            continue;
        }
        if ch == '#' {
            break;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        match two.as_str() {
            "=>" => {
                toks.push((Tok::Arrow, col));
                i += 2;
                continue;
            }
            "<=" | ">=" | "==" | "!=" => {
                let op = match two.as_str() {
                    "<=" => "<=",
                    ">=" => ">=",
                    "==" => "==",
                    _ => "!=",
                };
                toks.push((Tok::Op(op), col));
                i += 2;
                continue;
            }
            _ => {}
        }
        match ch {
            '<' => {
                toks.push((Tok::Op("<"), col));
                i += 1;
            }
            '>' => {
                toks.push((Tok::Op(">"), col));
                i += 1;
            }
            '{' | '}' | '[' | ']' | '(' | ')' | ',' => {
                toks.push((Tok::Punct(ch), col));
                i += 1;
            }
            '=' | '!' => return Err(err(col, format!("unexpected '{ch}'"))),
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(col, "unterminated quoted string".into())),
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some(&c) => s.push(c),
                                None => return Err(err(col, "unterminated quoted string".into())),
                            }
                            i += 2;
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some(&c) => {
                            s.push(c);
                            i += 1;
                        }
                    }
                }
                toks.push((Tok::Quoted(s), col));
            }
            _ => {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() && !is_delimiter(chars[i]) {
                    i += 1;
                }
                toks.push((Tok::Word(chars[start..i].iter().collect()), col));
            }
        }
    }
    Ok(Lexed { toks, end_col: chars.len() + 1 })
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
}

impl Parser {
    fn err(&self, col: usize, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, column: col, msg: msg.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|(_, c)| *c).unwrap_or(self.end_col)
    }

    fn next(&mut self, what: &str) -> Result<(Tok, usize)> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(self.err(self.end_col, format!("expected {what}, found end of line"))),
        }
    }

    /// A name or value: bare word (not the keyword AND) or quoted string.
    fn atom(&mut self, what: &str) -> Result<String> {
        let (tok, col) = self.next(what)?;
        match tok {
            Tok::Word(w) if !tok.is_and() => Ok(w),
            Tok::Quoted(q) => Ok(q),
            other => Err(self.err(col, format!("expected {what}, found {}", other.describe()))),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let col = self.col();
        let text = self.atom("number")?;
        Literal::new(&text)
            .as_number()
            .ok_or_else(|| self.err(col, format!("expected number, found '{text}'")))
    }

    fn expect_punct(&mut self, p: char) -> Result<()> {
        let (tok, col) = self.next(&format!("'{p}'"))?;
        if tok == Tok::Punct(p) {
            Ok(())
        } else {
            Err(self.err(col, format!("expected '{p}', found {}", tok.describe())))
        }
    }

    fn condition(&mut self) -> Result<Condition> {
        let name_col = self.col();
        let feature = self.atom("feature name")?;
        let (tok, col) = self.next("operator")?;
        let predicate = match tok {
            Tok::Op(op) => match op {
                "<=" => Predicate::Le(self.number()?),
                "<" => Predicate::Lt(self.number()?),
                ">=" => Predicate::Ge(self.number()?),
                ">" => Predicate::Gt(self.number()?),
                "==" => Predicate::Eq(Literal::new(self.atom("value")?)),
                _ => Predicate::Ne(Literal::new(self.atom("value")?)),
            },
            Tok::Word(w) if w == "in" => self.membership()?,
            other => {
                return Err(self.err(col, format!("expected operator, found {}", other.describe())))
            }
        };
        Condition::new(feature, predicate).map_err(|e| self.err(name_col, e.to_string()))
    }

    fn membership(&mut self) -> Result<Predicate> {
        let (tok, col) = self.next("'{', '[' or '('")?;
        match tok {
            Tok::Punct('{') => {
                let mut values = vec![Literal::new(self.atom("value")?)];
                loop {
                    let (t, c) = self.next("',' or '}'")?;
                    match t {
                        Tok::Punct(',') => values.push(Literal::new(self.atom("value")?)),
                        Tok::Punct('}') => break,
                        other => {
                            return Err(self.err(c, format!("expected ',' or '}}', found {}", other.describe())))
                        }
                    }
                }
                Ok(Predicate::InSet(values))
            }
            Tok::Punct(open @ ('[' | '(')) => {
                let lo = self.number()?;
                self.expect_punct(',')?;
                let hi = self.number()?;
                let (t, c) = self.next("']' or ')'")?;
                let hi_closed = match t {
                    Tok::Punct(']') => true,
                    Tok::Punct(')') => false,
                    other => {
                        return Err(self.err(c, format!("expected ']' or ')', found {}", other.describe())))
                    }
                };
                Ok(Predicate::InInterval { lo, hi, lo_closed: open == '[', hi_closed })
            }
            other => Err(self.err(col, format!("expected '{{', '[' or '(', found {}", other.describe()))),
        }
    }

    fn rule(&mut self) -> Result<Rule> {
        let arrows: Vec<usize> = self
            .toks
            .iter()
            .filter(|(t, _)| *t == Tok::Arrow)
            .map(|(_, c)| *c)
            .collect();
        match arrows.as_slice() {
            [] => return Err(self.err(self.end_col, "missing '=>'")),
            [_] => {}
            [_, second, ..] => return Err(self.err(*second, "duplicate '=>'")),
        }
        if self.peek() == Some(&Tok::Arrow) {
            return Err(self.err(self.col(), "empty antecedent"));
        }
        let mut conditions = vec![self.condition()?];
        loop {
            let (tok, col) = self.next("'AND' or '=>'")?;
            if tok.is_and() {
                conditions.push(self.condition()?);
            } else if tok == Tok::Arrow {
                break;
            } else {
                return Err(self.err(col, format!("expected 'AND' or '=>', found {}", tok.describe())));
            }
        }
        let consequent = self.atom("class label")?;
        if let Some((tok, col)) = self.toks.get(self.pos) {
            return Err(self.err(*col, format!("unexpected {} after class label", tok.describe())));
        }
        Ok(Rule { conditions, consequent })
    }
}

/// Parses a rule document, one rule per non-blank, non-comment line.
pub fn parse_rules(text: &str) -> Result<RuleSet> {
    let mut rules = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lexed = lex(line, i + 1)?;
        if lexed.toks.is_empty() {
            continue;
        }
        let mut p = Parser { toks: lexed.toks, pos: 0, line: i + 1, end_col: lexed.end_col };
        rules.push(p.rule()?);
    }
    if rules.is_empty() {
        return Err(Error::Empty("rule document contains no rules".into()));
    }
    Ok(RuleSet::new(rules, "parsed"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_err(text: &str) -> (usize, usize, String) {
        match parse_rules(text) {
            Err(Error::Parse { line, column, msg }) => (line, column, msg),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn two_condition_rule() {
        let rs = parse_rules("G120 > 154.5 AND BMI > 29.9 => 1").unwrap();
        assert_eq!(rs.len(), 1);
        let r = &rs.rules[0];
        assert_eq!(r.conditions, vec![Condition::gt("G120", 154.5), Condition::gt("BMI", 29.9)]);
        assert_eq!(r.consequent, "1");
        assert_eq!(rs.source, "parsed");
    }

    #[test]
    fn in_set_condition() {
        let rs = parse_rules("color in {red, blue} => A").unwrap();
        assert_eq!(
            rs.rules[0].conditions[0].predicate,
            Predicate::InSet(vec![Literal::new("red"), Literal::new("blue")])
        );
    }

    #[test]
    fn intervals_and_quoting() {
        let rs = parse_rules("\"MAX IP\" in [0.5, 2) and x in (1, 3] => \"class a\"").unwrap();
        let r = &rs.rules[0];
        assert_eq!(r.conditions[0].feature, "MAX IP");
        assert_eq!(
            r.conditions[0].predicate,
            Predicate::InInterval { lo: 0.5, hi: 2.0, lo_closed: true, hi_closed: false }
        );
        assert_eq!(
            r.conditions[1].predicate,
            Predicate::InInterval { lo: 1.0, hi: 3.0, lo_closed: false, hi_closed: true }
        );
        assert_eq!(r.consequent, "class a");
    }

    #[test]
    fn comments_and_blank_lines() {
        let rs = parse_rules("# header\n\n x <= 1 => a  # trailing\n y != \"#\" => b\n").unwrap();
        assert_eq!(rs.len(), 2);
        assert_eq!(rs.rules[1].conditions[0].predicate, Predicate::Ne(Literal::new("#")));
    }

    #[test]
    fn dangling_operator() {
        let (line, col, msg) = parse_err("x1 > AND => 1");
        assert_eq!((line, col), (1, 6));
        assert!(msg.contains("expected number"), "{msg}");
    }

    #[test]
    fn duplicate_arrow() {
        let (_, col, msg) = parse_err("x > 1 => a => b");
        assert_eq!(col, 12);
        assert_eq!(msg, "duplicate '=>'");
    }

    #[test]
    fn empty_antecedent_rejected() {
        let (_, _, msg) = parse_err("=> 1");
        assert_eq!(msg, "empty antecedent");
    }

    #[test]
    fn error_reports_line() {
        let (line, _, _) = parse_err("x > 1 => a\nx >> 2 => b\n");
        assert_eq!(line, 2);
    }

    #[test]
    fn misc_errors() {
        assert!(parse_rules("").is_err());
        assert!(parse_rules("x > 1").is_err());
        assert!(parse_rules("x > 1 => a b").is_err());
        assert!(parse_rules("x in [2, 1] => a").is_err());
        assert!(parse_rules("x in {} => a").is_err());
        assert!(parse_rules("x = 1 => a").is_err());
        assert!(parse_rules("x == \"open => a").is_err());
        assert!(parse_rules("x > abc => a").is_err());
    }

    #[test]
    fn canonical_round_trip() {
        let text = "G120 > 154.5 AND BMI <= 29.9 => 1\n\"a b\" in {x, \"y z\"} AND c != 0 => \"AND\"\nx in (0, 1] AND x < -2.5 AND y >= 1e-7 => 0\n";
        let rs = parse_rules(text).unwrap();
        let again = parse_rules(&rs.to_dsl()).unwrap();
        assert_eq!(rs, again);
        assert_eq!(again.to_dsl(), rs.to_dsl());
    }
}
