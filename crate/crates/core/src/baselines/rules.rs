//! Non-match rules: boolean expressions over field disagreements. A pair of
//! records is eliminated when the rule evaluates true and survives otherwise.
//!
//! Expression grammar (whitespace is ignored):
//!
//! ```text
//! expr   := term ('|' term)*
//! term   := factor ('&' factor)*
//! factor := '(' expr ')' | atom
//! atom   := 'dis(' field ')'
//!         | 'dis_count(' m ')'
//!         | 'lev(' field ')' '>=' d
//!         | 'initial(' field ')'
//!         | 'prefix(' field ',' n ')'
//! field  := [A-Za-z0-9_]+
//! ```
//!
//! `dis(f)` holds when the values differ, `dis_count(m)` when at least `m`
//! fields differ, `lev(f)>=d` when the Levenshtein distance is at least `d`,
//! `initial(f)` when the first characters differ, and `prefix(f,n)` when the
//! first `n` characters differ.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;

use super::levenshtein::levenshtein_at_least;
use crate::corpus::{Dataset, FieldSchema, Pair, Record};
use crate::error::{Error, Result};
use crate::eval::CandidatePairSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Disagree(String),
    DisagreeCount(usize),
    LevenshteinAtLeast(String, usize),
    InitialDisagree(String),
    PrefixDisagree(String, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NonMatchRule {
    Atom(Atom),
    And(Vec<NonMatchRule>),
    Or(Vec<NonMatchRule>),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Disagree(x) => write!(f, "dis({x})"),
            Atom::DisagreeCount(m) => write!(f, "dis_count({m})"),
            Atom::LevenshteinAtLeast(x, d) => write!(f, "lev({x})>={d}"),
            Atom::InitialDisagree(x) => write!(f, "initial({x})"),
            Atom::PrefixDisagree(x, n) => write!(f, "prefix({x},{n})"),
        }
    }
}

impl fmt::Display for NonMatchRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NonMatchRule::Atom(a) => write!(f, "{a}"),
            NonMatchRule::Or(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            NonMatchRule::And(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    match p {
                        NonMatchRule::Or(_) => write!(f, "({p})")?,
                        _ => write!(f, "{p}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

impl NonMatchRule {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser { src, pos: 0 };
        let rule = p.expr()?;
        p.skip_ws();
        if p.pos < src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(rule)
    }

    /// Disjunction of `self` and `other`, flattened.
    pub fn or(self, other: NonMatchRule) -> Self {
        let mut parts = match self {
            NonMatchRule::Or(p) => p,
            r => vec![r],
        };
        match other {
            NonMatchRule::Or(p) => parts.extend(p),
            r => parts.push(r),
        }
        NonMatchRule::Or(parts)
    }

    /// Conjunction of `self` and `other`, flattened.
    pub fn and(self, other: NonMatchRule) -> Self {
        let mut parts = match self {
            NonMatchRule::And(p) => p,
            r => vec![r],
        };
        match other {
            NonMatchRule::And(p) => parts.extend(p),
            r => parts.push(r),
        }
        NonMatchRule::And(parts)
    }

    /// Resolves field names against `schema`.
    pub fn compile(&self, schema: &FieldSchema) -> Result<CompiledRule> {
        self.node(schema).map(CompiledRule)
    }

    fn node(&self, schema: &FieldSchema) -> Result<Node> {
        let field = |name: &str| {
            schema
                .index_of(name)
                .ok_or_else(|| Error::Param(format!("rule refers to unknown field `{name}`")))
        };
        Ok(match self {
            NonMatchRule::Atom(a) => Node::Atom(match a {
                Atom::Disagree(f) => Test::Prefix(field(f)?, usize::MAX),
                Atom::DisagreeCount(m) => Test::Count(*m),
                Atom::LevenshteinAtLeast(f, d) => Test::Lev(field(f)?, *d),
                Atom::InitialDisagree(f) => Test::Prefix(field(f)?, 1),
                Atom::PrefixDisagree(f, n) => Test::Prefix(field(f)?, *n),
            }),
            NonMatchRule::And(parts) => {
                Node::And(parts.iter().map(|p| p.node(schema)).collect::<Result<_>>()?)
            }
            NonMatchRule::Or(parts) => {
                Node::Or(parts.iter().map(|p| p.node(schema)).collect::<Result<_>>()?)
            }
        })
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Rule {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{token}`")))
        }
    }

    fn word(&mut self) -> Result<&str> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.error("expected a name"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn number(&mut self) -> Result<usize> {
        let start = self.pos;
        let w = self.word()?;
        w.parse().map_err(|_| Error::Rule {
            pos: start,
            message: format!("expected a number, found `{w}`"),
        })
    }

    fn expr(&mut self) -> Result<NonMatchRule> {
        let mut rule = self.term()?;
        while self.eat("|") {
            rule = rule.or(self.term()?);
        }
        Ok(rule)
    }

    fn term(&mut self) -> Result<NonMatchRule> {
        let mut rule = self.factor()?;
        while self.eat("&") {
            rule = rule.and(self.factor()?);
        }
        Ok(rule)
    }

    fn factor(&mut self) -> Result<NonMatchRule> {
        if self.eat("(") {
            let inner = self.expr()?;
            self.expect(")")?;
            return Ok(inner);
        }
        self.skip_ws();
        let start = self.pos;
        let name = self.word()?.to_string();
        self.expect("(")?;
        let atom = match name.as_str() {
            "dis" => Atom::Disagree(self.word()?.to_string()),
            "dis_count" => Atom::DisagreeCount(self.number()?),
            "initial" => Atom::InitialDisagree(self.word()?.to_string()),
            "lev" => {
                let field = self.word()?.to_string();
                self.expect(")")?;
                self.expect(">=")?;
                return Ok(NonMatchRule::Atom(Atom::LevenshteinAtLeast(field, self.number()?)));
            }
            "prefix" => {
                let field = self.word()?.to_string();
                self.expect(",")?;
                Atom::PrefixDisagree(field, self.number()?)
            }
            _ => {
                return Err(Error::Rule {
                    pos: start,
                    message: format!("unknown atom `{name}`"),
                })
            }
        };
        self.expect(")")?;
        Ok(NonMatchRule::Atom(atom))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Test {
    /// Field index, number of leading characters (`usize::MAX` = whole value).
    Prefix(usize, usize),
    Count(usize),
    Lev(usize, usize),
}

/// A rule bound to field indices of one schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledRule(Node);

#[derive(Debug, Clone, PartialEq, Eq)]
enum Node {
    Atom(Test),
    And(Vec<Node>),
    Or(Vec<Node>),
}

fn prefix(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

impl Test {
    fn eval(self, a: &[String], b: &[String]) -> bool {
        match self {
            Test::Prefix(f, n) => prefix(&a[f], n) != prefix(&b[f], n),
            Test::Count(m) => a.iter().zip(b).filter(|(x, y)| x != y).count() >= m,
            Test::Lev(f, d) => levenshtein_at_least(&a[f], &b[f], d),
        }
    }
}

impl Node {
    fn eval(&self, a: &[String], b: &[String]) -> bool {
        match self {
            Node::Atom(t) => t.eval(a, b),
            Node::And(parts) => parts.iter().all(|p| p.eval(a, b)),
            Node::Or(parts) => parts.iter().any(|p| p.eval(a, b)),
        }
    }
}

/// True when the rule declares the pair a non-match.
pub fn evaluate_rule(rule: &CompiledRule, a: &Record, b: &Record) -> bool {
    rule.0.eval(&a.values, &b.values)
}

/// Pairs the rule does not eliminate.
///
/// Top-level `dis`, `initial` and `prefix` disjuncts are handled by grouping
/// records on the corresponding keys, since surviving pairs must agree on all
/// of them. Any remaining disjuncts are evaluated on every pair within a
/// group.
pub fn rule_block(ds: &Dataset, rule: &CompiledRule) -> CandidatePairSet {
    let disjuncts: Vec<&Node> = match &rule.0 {
        Node::Or(parts) => parts.iter().collect(),
        r => vec![r],
    };
    let mut keys = Vec::new();
    let mut rest = Vec::new();
    for d in disjuncts {
        match d {
            Node::Atom(Test::Prefix(f, n)) => keys.push((*f, *n)),
            other => rest.push(other.clone()),
        }
    }
    let rest = Node::Or(rest);

    let records = ds.records();
    let mut groups: HashMap<Vec<&str>, Vec<u32>> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        let key = keys.iter().map(|&(f, n)| prefix(&r.values[f], n)).collect();
        groups.entry(key).or_default().push(i as u32);
    }
    let groups: Vec<Vec<u32>> = groups.into_values().collect();

    let pairs: Vec<Pair> = groups
        .par_iter()
        .flat_map(|g| {
            let rest = &rest;
            (0..g.len()).into_par_iter().flat_map_iter(move |x| {
                let a = &records[g[x] as usize].values;
                g[x + 1..].iter().filter_map(move |&j| {
                    let b = &records[j as usize].values;
                    (!rest.eval(a, b)).then_some((g[x], j))
                })
            })
        })
        .collect();
    CandidatePairSet::new(ds.n(), pairs).expect("pairs of distinct records")
}

/// A named preset: (name, description, expression).
pub type RulePreset = (&'static str, &'static str, &'static str);

/// Criteria for the seven-field RLdata-style schema.
pub const TABLE1_PRESETS: [RulePreset; 12] = [
    ("t1c1", "First OR last name", "dis(fname_c1) | dis(lname_c1)"),
    ("t1c2", "Day OR month OR year of birth", "dis(bd) | dis(bm) | dis(by)"),
    ("t1c3", "Year of birth", "dis(by)"),
    ("t1c4", "Day of birth", "dis(bd)"),
    ("t1c5", "Month of birth", "dis(bm)"),
    ("t1c6", "Decade of birth", "prefix(by,3)"),
    ("t1c7", "First AND last name", "dis(fname_c1) & dis(lname_c1)"),
    (
        "t1c8",
        "{First AND last name} OR {day AND month AND year of birth}",
        "(dis(fname_c1) & dis(lname_c1)) | (dis(bd) & dis(bm) & dis(by))",
    ),
    ("t1c9", "Day AND month AND year of birth", "dis(bd) & dis(bm) & dis(by)"),
    ("t1c10", "More than three fields", "dis_count(4)"),
    ("t1c11", "Initial of first OR last name", "initial(fname_c1) | initial(lname_c1)"),
    (
        "t1c12",
        "{More than three fields} OR {LD >= 4 in first OR last name}",
        "dis_count(4) | lev(fname_c1)>=4 | lev(lname_c1)>=4",
    ),
];

/// Criteria for the eight-field noisy-style schema.
pub const TABLE2_PRESETS: [RulePreset; 8] = [
    ("t2c1", "Gender", "dis(gender)"),
    ("t2c2", "City", "dis(city)"),
    ("t2c3", "Postal code", "dis(postcode)"),
    ("t2c4", "First OR last name", "dis(fname) | dis(lname)"),
    ("t2c5", "Initial of first OR last name", "initial(fname) | initial(lname)"),
    ("t2c6", "First AND last name", "dis(fname) & dis(lname)"),
    ("t2c7", "All fields", "dis_count(8)"),
    (
        "t2c8",
        "{All fields} OR {LD >= 4 in first OR last name}",
        "dis_count(8) | lev(fname)>=4 | lev(lname)>=4",
    ),
];

pub fn rule_preset(name: &str) -> Option<RulePreset> {
    TABLE1_PRESETS
        .iter()
        .chain(&TABLE2_PRESETS)
        .find(|p| p.0 == name)
        .copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::FieldSchema;

    fn rec(values: &[&str]) -> Record {
        Record {
            record_id: 0,
            entity_id: 0,
            values: values.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn compile(expr: &str) -> CompiledRule {
        NonMatchRule::parse(expr).unwrap().compile(&FieldSchema::rldata()).unwrap()
    }

    #[test]
    fn parse_and_display() {
        let r = NonMatchRule::parse(" dis(a)|dis(b) & ( lev(c) >= 4 | initial(d) ) ").unwrap();
        assert_eq!(r.to_string(), "dis(a) | dis(b) & (lev(c)>=4 | initial(d))");
        assert_eq!(NonMatchRule::parse(&r.to_string()).unwrap(), r);
        let nested = NonMatchRule::parse("(dis(a) | dis(b)) | dis(c)").unwrap();
        assert!(matches!(nested, NonMatchRule::Or(ref p) if p.len() == 3));
    }

    #[test]
    fn parse_errors_carry_position() {
        for (src, pos) in [("dis(a) |", 8), ("dis(a) dis(b)", 7), ("foo(a)", 0), ("lev(a) > 3", 7)] {
            match NonMatchRule::parse(src) {
                Err(Error::Rule { pos: p, .. }) => assert_eq!(p, pos, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
        let r = NonMatchRule::parse("dis(nope)").unwrap();
        assert!(r.compile(&FieldSchema::rldata()).is_err());
    }

    #[test]
    fn table_examples() {
        let base = rec(&["ANNA", "", "MEIER", "", "1950", "01", "02"]);
        let other_last = rec(&["ANNA", "", "MAIER", "", "1950", "01", "02"]);
        assert!(evaluate_rule(&compile("dis(fname_c1) | dis(lname_c1)"), &base, &other_last));
        for (_, _, expr) in TABLE1_PRESETS {
            assert!(!evaluate_rule(&compile(expr), &base, &base), "{expr}");
        }
        let three = rec(&["ANNE", "", "MAIER", "", "1951", "01", "02"]);
        assert!(!evaluate_rule(&compile("dis_count(4)"), &base, &three));
        let four = rec(&["ANNE", "", "MAIER", "", "1951", "02", "02"]);
        assert!(evaluate_rule(&compile("dis_count(4)"), &base, &four));
    }

    #[test]
    fn prefix_atoms() {
        let a = rec(&["ANNA", "", "MEIER", "", "1950", "01", "02"]);
        let b = rec(&["ALMA", "", "MEIER", "", "1958", "01", "02"]);
        assert!(!evaluate_rule(&compile("initial(fname_c1)"), &a, &b));
        assert!(!evaluate_rule(&compile("prefix(by,3)"), &a, &b));
        assert!(evaluate_rule(&compile("prefix(by,4)"), &a, &b));
        let empty = rec(&["", "", "MEIER", "", "1950", "01", "02"]);
        assert!(evaluate_rule(&compile("initial(fname_c1)"), &a, &empty));
    }

    #[test]
    fn presets_parse_against_their_schemas() {
        for (name, _, expr) in TABLE1_PRESETS {
            let r = NonMatchRule::parse(expr).unwrap();
            assert!(r.compile(&FieldSchema::rldata()).is_ok(), "{name}");
        }
        for (name, _, expr) in TABLE2_PRESETS {
            let r = NonMatchRule::parse(expr).unwrap();
            assert!(r.compile(&FieldSchema::noisy()).is_ok(), "{name}");
        }
        assert_eq!(rule_preset("t1c10").unwrap().2, "dis_count(4)");
        assert!(rule_preset("t3c1").is_none());
    }
}
