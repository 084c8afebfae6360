//! Crisp decision rules generated from object-relative reducts.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, Cell, DecisionTable, Role};
use crate::discretize::{CutSet, DiscreteInterval};
use crate::error::{Error, Result};
use crate::rough::{object_relative_reducts, EXHAUSTIVE_BOUND};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Test {
    Equals(String),
    Interval(DiscreteInterval),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub attribute: String,
    pub test: Test,
}

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.test {
            Test::Equals(label) => write!(f, "{}({})", self.attribute, label),
            Test::Interval(iv) => write!(f, "{}({})", self.attribute, iv),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub id: usize,
    /// Conjunction, one descriptor per attribute, in schema order.
    pub antecedent: Vec<Descriptor>,
    pub decision: String,
    /// Label of the decision value this rule concludes.
    pub consequent: String,
    pub support: usize,
    /// Training objects whose reducts produced this rule.
    pub origin: Vec<usize>,
}

impl Rule {
    fn same_body(&self, other: &Rule) -> bool {
        self.antecedent == other.antecedent && self.consequent == other.consequent
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.antecedent.iter().map(Descriptor::to_string).collect();
        write!(f, "{} => {}({})", parts.join(" AND "), self.decision, self.consequent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    /// Fingerprint of the training table.
    pub provenance: String,
    pub cuts: CutSet,
}

impl RuleSet {
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.rules.iter().map(|r| r.id).collect()
    }

    pub fn with_rules(&self, rules: Vec<Rule>) -> RuleSet {
        RuleSet {
            rules,
            provenance: self.provenance.clone(),
            cuts: self.cuts.clone(),
        }
    }
}

/// A rule resolved against one table's schema for fast matching.
#[derive(Debug, Clone)]
pub(crate) struct CompiledRule {
    tests: Vec<(usize, Matcher)>,
    decision: usize,
    consequent: Option<u32>,
}

#[derive(Debug, Clone)]
enum Matcher {
    Code(Option<u32>),
    Within(DiscreteInterval),
}

impl CompiledRule {
    pub(crate) fn new(rule: &Rule, table: &DecisionTable) -> Result<Self> {
        let schema = table.schema();
        let mut tests = Vec::with_capacity(rule.antecedent.len());
        for d in &rule.antecedent {
            let a = schema.require(&d.attribute)?;
            let kind = &schema.attribute(a).kind;
            let matcher = match (&d.test, kind) {
                (Test::Equals(label), _) => Matcher::Code(
                    kind.labels()
                        .and_then(|ls| ls.iter().position(|l| l == label))
                        .map(|c| c as u32),
                ),
                (Test::Interval(iv), _) => Matcher::Within(*iv),
            };
            tests.push((a, matcher));
        }
        let decision = schema.require(&rule.decision)?;
        let consequent = schema
            .attribute(decision)
            .kind
            .labels()
            .and_then(|ls| ls.iter().position(|l| *l == rule.consequent))
            .map(|c| c as u32);
        Ok(CompiledRule {
            tests,
            decision,
            consequent,
        })
    }

    pub(crate) fn antecedent_matches(&self, table: &DecisionTable, id: usize) -> bool {
        let schema = table.schema();
        self.tests.iter().all(|(a, m)| match (m, table.cell(id, *a)) {
            (_, Cell::Missing) => false,
            (Matcher::Code(Some(c)), Cell::Code(v)) => *c == v,
            (Matcher::Code(_), _) => false,
            (Matcher::Within(iv), Cell::Number(v)) => iv.contains(v),
            (Matcher::Within(iv), Cell::Code(code)) => match &schema.attribute(*a).kind {
                AttributeKind::Interval { cuts } => DiscreteInterval::of_code(cuts, code).is_subset(iv),
                _ => false,
            },
        })
    }

    pub(crate) fn consequent_matches(&self, table: &DecisionTable, id: usize) -> bool {
        self.consequent.is_some() && table.cell(id, self.decision).code() == self.consequent
    }

    pub(crate) fn applies(&self, table: &DecisionTable, id: usize) -> bool {
        self.consequent_matches(table, id) && self.antecedent_matches(table, id)
    }
}

/// Number of objects satisfying the antecedent and the consequent.
pub fn support(rule: &Rule, table: &DecisionTable) -> Result<usize> {
    let compiled = CompiledRule::new(rule, table)?;
    Ok((0..table.len()).filter(|&i| compiled.applies(table, i)).count())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub rules: RuleSet,
    /// Rules emitted before duplicates were merged.
    pub raw_count: usize,
}

/// One rule per (object, object-relative reduct); duplicates merged in
/// order of first appearance and empty antecedents dropped.
pub fn generate_rules(table: &DecisionTable) -> Result<Generated> {
    generate_rules_with_bound(table, EXHAUSTIVE_BOUND)
}

pub fn generate_rules_with_bound(table: &DecisionTable, bound: usize) -> Result<Generated> {
    let schema = table.schema();
    for a in schema.conditions() {
        if schema.attribute(a).kind.is_numeric() {
            return Err(Error::NotDiscrete(schema.attribute(a).name.clone()));
        }
    }
    let decision = schema.decision();
    let per_object: Vec<Vec<Rule>> = (0..table.len())
        .into_par_iter()
        .map(|x| -> Result<Vec<Rule>> {
            let Some(d) = table.decision(x) else {
                return Ok(Vec::new());
            };
            let reducts = object_relative_reducts(table, x, bound)?;
            let mut out = Vec::new();
            'reduct: for reduct in reducts.iter().filter(|r| !r.is_empty()) {
                let mut antecedent = Vec::with_capacity(reduct.len());
                for &a in &reduct.attributes {
                    let attr = schema.attribute(a);
                    let Cell::Code(code) = table.cell(x, a) else {
                        continue 'reduct;
                    };
                    let test = match &attr.kind {
                        AttributeKind::Interval { cuts } => Test::Interval(DiscreteInterval::of_code(cuts, code)),
                        kind => Test::Equals(kind.label(code)),
                    };
                    antecedent.push(Descriptor {
                        attribute: attr.name.clone(),
                        test,
                    });
                }
                out.push(Rule {
                    id: 0,
                    antecedent,
                    decision: decision.name.clone(),
                    consequent: decision.kind.label(d),
                    support: 0,
                    origin: vec![x],
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let raw_count = per_object.iter().map(Vec::len).sum();
    let mut rules: Vec<Rule> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for rule in per_object.into_iter().flatten() {
        let key = rule.to_string();
        match index.get(&key) {
            Some(&i) => {
                debug_assert!(rules[i].same_body(&rule));
                rules[i].origin.extend(rule.origin);
            }
            None => {
                index.insert(key, rules.len());
                rules.push(rule);
            }
        }
    }
    for (id, rule) in rules.iter_mut().enumerate() {
        rule.id = id;
        rule.origin.sort_unstable();
        rule.origin.dedup();
    }
    let supports: Vec<usize> = rules
        .par_iter()
        .map(|r| support(r, table))
        .collect::<Result<_>>()?;
    for (rule, s) in rules.iter_mut().zip(supports) {
        rule.support = s;
    }
    Ok(Generated {
        rules: RuleSet {
            rules,
            provenance: table.fingerprint(),
            cuts: CutSet::from_table(table),
        },
        raw_count,
    })
}

/// Keep rules with support at least `min_support`, preserving order and ids.
pub fn filter_by_support(rules: &RuleSet, min_support: usize) -> RuleSet {
    rules.with_rules(
        rules
            .rules
            .iter()
            .filter(|r| r.support >= min_support)
            .cloned()
            .collect(),
    )
}

/// Ensure every descriptor names a condition attribute of the table.
pub fn check_against(rules: &RuleSet, table: &DecisionTable) -> Result<()> {
    let schema = table.schema();
    for rule in &rules.rules {
        for d in &rule.antecedent {
            let a = schema.require(&d.attribute)?;
            if schema.attribute(a).role != Role::Condition {
                return Err(Error::Rule {
                    rule: rule.id,
                    message: format!("`{}` is not a condition attribute", d.attribute),
                });
            }
        }
    }
    Ok(())
}
