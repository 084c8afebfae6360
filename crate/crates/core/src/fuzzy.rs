//! Membership functions built from discretization cuts, and the mapping of
//! crisp rules to support-weighted fuzzy rules.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, DecisionTable, Role};
use crate::discretize::CutSet;
use crate::error::{Error, Result};
use crate::rules::{RuleSet, Test};

/// Serde adapter writing infinite breakpoints as the strings `"-inf"`/`"inf"`.
mod extended {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Finite(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Finite(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) => Err(de::Error::custom(format!("bad breakpoint `{t}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Shape {
    Trapezoid {
        #[serde(with = "extended")]
        a: f64,
        #[serde(with = "extended")]
        b: f64,
        #[serde(with = "extended")]
        c: f64,
        #[serde(with = "extended")]
        d: f64,
    },
    Triangle { a: f64, b: f64, c: f64 },
    /// Indicator of a set of nominal labels.
    Crisp { labels: Vec<String> },
}

impl Shape {
    pub fn trapezoid(a: f64, b: f64, c: f64, d: f64) -> Self {
        Shape::Trapezoid { a, b, c, d }
    }

    /// Membership of a numeric value; crisp shapes never match numbers.
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Shape::Trapezoid { a, b, c, d } => {
                if x < a || x > d {
                    0.0
                } else if x >= b && x <= c {
                    1.0
                } else if x < b {
                    (x - a) / (b - a)
                } else {
                    (d - x) / (d - c)
                }
            }
            Shape::Triangle { a, b, c } => {
                if x < a || x > c {
                    0.0
                } else if x == b {
                    1.0
                } else if x < b {
                    (x - a) / (b - a)
                } else {
                    (c - x) / (c - b)
                }
            }
            Shape::Crisp { .. } => 0.0,
        }
    }

    pub fn eval_label(&self, label: &str) -> f64 {
        match self {
            Shape::Crisp { labels } => labels.iter().any(|l| l == label) as u8 as f64,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipFunction {
    pub label: String,
    #[serde(flatten)]
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum VariableKind {
    Numeric {
        cuts: Vec<f64>,
        spread: f64,
        /// Observed training range widened by the spread.
        universe: [f64; 2],
    },
    Nominal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyVariable {
    pub attribute: String,
    #[serde(flatten)]
    pub kind: VariableKind,
    pub functions: Vec<MembershipFunction>,
}

impl FuzzyVariable {
    pub fn labels(&self) -> Vec<&str> {
        self.functions.iter().map(|f| f.label.as_str()).collect()
    }

    pub fn function(&self, label: &str) -> Option<&MembershipFunction> {
        self.functions.iter().find(|f| f.label == label)
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, VariableKind::Numeric { .. })
    }

    /// Crisp nominal variable with one indicator per label.
    pub fn nominal(attribute: &str, labels: &[String]) -> Self {
        FuzzyVariable {
            attribute: attribute.to_string(),
            kind: VariableKind::Nominal,
            functions: labels
                .iter()
                .map(|l| MembershipFunction {
                    label: l.clone(),
                    shape: Shape::Crisp {
                        labels: vec![l.clone()],
                    },
                })
                .collect(),
        }
    }
}

/// Fuzzy-set labels for `count` elementary intervals.
pub fn interval_labels(count: usize) -> Vec<String> {
    match count {
        0 | 1 => vec!["ANY".into()],
        2 => vec!["LOW".into(), "HIGH".into()],
        3 => vec!["LOW".into(), "MEDIUM".into(), "HIGH".into()],
        n => std::iter::once("LOW".to_string())
            .chain((1..n - 1).map(|i| format!("MEDIUM_{i}")))
            .chain(std::iter::once("HIGH".to_string()))
            .collect(),
    }
}

/// Membership functions for a numeric attribute from its sorted cuts.
///
/// The outer sets are shoulders crossing 0.5 at the first and last cut with
/// ramps of half-width `spread`; inner intervals get triangles peaked at
/// their midpoints with feet `spread` outside the neighbouring cuts.
pub fn build_memberships(attribute: &str, cuts: &[f64], spread: f64, universe: [f64; 2]) -> Result<FuzzyVariable> {
    let inf = f64::INFINITY;
    let labels = interval_labels(cuts.len() + 1);
    let shapes: Vec<Shape> = if cuts.is_empty() {
        vec![Shape::trapezoid(-inf, -inf, inf, inf)]
    } else {
        if !(spread > 0.0 && spread.is_finite()) {
            return Err(Error::Spread {
                attribute: attribute.to_string(),
                spread,
            });
        }
        let c = spread;
        let k = cuts.len();
        let mut shapes = vec![Shape::trapezoid(-inf, -inf, cuts[0] - c, cuts[0] + c)];
        for w in cuts.windows(2) {
            shapes.push(Shape::Triangle {
                a: w[0] - c,
                b: (w[0] + w[1]) / 2.0,
                c: w[1] + c,
            });
        }
        shapes.push(Shape::trapezoid(cuts[k - 1] - c, cuts[k - 1] + c, inf, inf));
        shapes
    };
    Ok(FuzzyVariable {
        attribute: attribute.to_string(),
        kind: VariableKind::Numeric {
            cuts: cuts.to_vec(),
            spread: if cuts.is_empty() { 0.0 } else { spread },
            universe,
        },
        functions: labels
            .into_iter()
            .zip(shapes)
            .map(|(label, shape)| MembershipFunction { label, shape })
            .collect(),
    })
}

/// How the ramp half-width `c` is chosen per attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadPolicy {
    /// Fraction of the smallest adjacent-cut gap (or of the IQR for one cut).
    pub factor: f64,
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
}

impl Default for SpreadPolicy {
    fn default() -> Self {
        SpreadPolicy {
            factor: 0.25,
            overrides: BTreeMap::new(),
        }
    }
}

/// Linear-interpolation quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl SpreadPolicy {
    pub fn spread(&self, attribute: &str, cuts: &[f64], values: &[f64]) -> f64 {
        if let Some(&c) = self.overrides.get(attribute) {
            return c;
        }
        match cuts.len() {
            0 => 0.0,
            1 => {
                if values.is_empty() {
                    return 0.0;
                }
                let mut sorted = values.to_vec();
                sorted.sort_by(f64::total_cmp);
                self.factor * (quantile(&sorted, 0.75) - quantile(&sorted, 0.25))
            }
            _ => {
                let gap = cuts
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(f64::INFINITY, f64::min);
                self.factor * gap
            }
        }
    }
}

/// One variable per condition attribute of the training table.
pub fn build_variables(train: &DecisionTable, cuts: &CutSet, policy: &SpreadPolicy) -> Result<Vec<FuzzyVariable>> {
    let schema = train.schema();
    let mut out = Vec::new();
    for a in schema.conditions() {
        let attr = schema.attribute(a);
        match &attr.kind {
            AttributeKind::Numeric => {
                let thresholds = cuts.get(&attr.name).unwrap_or(&[]);
                let values: Vec<f64> = train.rows().iter().filter_map(|r| r[a].number()).collect();
                let c = policy.spread(&attr.name, thresholds, &values);
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let universe = if values.is_empty() {
                    [0.0, 0.0]
                } else {
                    [lo - c, hi + c]
                };
                out.push(build_memberships(&attr.name, thresholds, c, universe)?);
            }
            kind => {
                let labels = kind
                    .labels()
                    .ok_or_else(|| Error::NotNumericAttribute(attr.name.clone()))?;
                out.push(FuzzyVariable::nominal(&attr.name, &labels));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OutputLabel {
    #[serde(rename = "CAD-NO")]
    No,
    #[serde(rename = "CAD-YES")]
    Yes,
}

impl OutputLabel {
    pub fn from_decision(label: &str) -> Option<Self> {
        match label {
            "0" => Some(OutputLabel::No),
            "1" => Some(OutputLabel::Yes),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            OutputLabel::No => "CAD-NO",
            OutputLabel::Yes => "CAD-YES",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub attribute: String,
    /// Union of fuzzy-set labels, evaluated by max.
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRule {
    pub terms: Vec<Term>,
    pub consequent: OutputLabel,
    pub weight: f64,
    pub source_rule: usize,
    pub source_support: usize,
}

/// Output sets over percent narrowing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputVariable {
    pub universe: [f64; 2],
    pub no: Shape,
    pub yes: Shape,
}

impl Default for OutputVariable {
    fn default() -> Self {
        OutputVariable {
            universe: [0.0, 100.0],
            no: Shape::trapezoid(0.0, 0.0, 30.0, 70.0),
            yes: Shape::trapezoid(30.0, 70.0, 100.0, 100.0),
        }
    }
}

impl OutputVariable {
    pub fn set(&self, label: OutputLabel) -> &Shape {
        match label {
            OutputLabel::No => &self.no,
            OutputLabel::Yes => &self.yes,
        }
    }
}

pub const DEFAULT_THRESHOLD: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRuleBase {
    pub variables: Vec<FuzzyVariable>,
    pub rules: Vec<FuzzyRule>,
    pub output: OutputVariable,
    /// Percentage above which the label is CAD-YES.
    pub threshold: f64,
    /// Majority training label, used by the majority fallback policy.
    pub majority: OutputLabel,
}

impl FuzzyRuleBase {
    pub fn variable(&self, attribute: &str) -> Option<&FuzzyVariable> {
        self.variables.iter().find(|v| v.attribute == attribute)
    }
}

/// Rule weight `w(n) = sp(n) / max sp`.
pub fn rule_weights(supports: &[usize]) -> Result<Vec<f64>> {
    if supports.is_empty() {
        return Err(Error::NoRules);
    }
    if let Some(i) = supports.iter().position(|&s| s == 0) {
        return Err(Error::ZeroSupport(i));
    }
    let max = *supports.iter().max().expect("non-empty") as f64;
    Ok(supports.iter().map(|&s| s as f64 / max).collect())
}

/// Labels of `variable` whose elementary intervals lie inside `[lo, hi)`.
fn covered_labels(variable: &FuzzyVariable, lower: Option<f64>, upper: Option<f64>) -> Option<Vec<String>> {
    let VariableKind::Numeric { cuts, .. } = &variable.kind else {
        return None;
    };
    let start = match lower {
        None => 0,
        Some(lo) => cuts.iter().position(|&t| t == lo)? + 1,
    };
    let end = match upper {
        None => cuts.len() + 1,
        Some(hi) => cuts.iter().position(|&t| t == hi)? + 1,
    };
    if start >= end {
        return None;
    }
    Some(variable.functions[start..end].iter().map(|f| f.label.clone()).collect())
}

/// Map crisp rules to weighted fuzzy rules over `variables`.
pub fn fuzzify_ruleset(
    rules: &RuleSet,
    variables: Vec<FuzzyVariable>,
    majority: OutputLabel,
) -> Result<FuzzyRuleBase> {
    let supports: Vec<usize> = rules.rules.iter().map(|r| r.support).collect();
    let weights = rule_weights(&supports)?;
    let mut fuzzy = Vec::with_capacity(rules.len());
    for (rule, weight) in rules.rules.iter().zip(weights) {
        let fail = |message: String| Error::Rule {
            rule: rule.id,
            message,
        };
        let mut terms = Vec::new();
        for d in &rule.antecedent {
            let var = variables
                .iter()
                .find(|v| v.attribute == d.attribute)
                .ok_or_else(|| fail(format!("no variable for `{}`", d.attribute)))?;
            let labels = match &d.test {
                Test::Interval(iv) => covered_labels(var, iv.lower, iv.upper)
                    .ok_or_else(|| fail(format!("interval {iv} of `{}` is not on a cut", d.attribute)))?,
                Test::Equals(label) => {
                    if var.is_numeric() || var.function(label).is_none() {
                        return Err(fail(format!("`{label}` is not a label of `{}`", d.attribute)));
                    }
                    vec![label.clone()]
                }
            };
            terms.push(Term {
                attribute: d.attribute.clone(),
                labels,
            });
        }
        let consequent = OutputLabel::from_decision(&rule.consequent)
            .ok_or_else(|| fail(format!("decision `{}` is not binary", rule.consequent)))?;
        fuzzy.push(FuzzyRule {
            terms,
            consequent,
            weight,
            source_rule: rule.id,
            source_support: rule.support,
        });
    }
    Ok(FuzzyRuleBase {
        variables,
        rules: fuzzy,
        output: OutputVariable::default(),
        threshold: DEFAULT_THRESHOLD,
        majority,
    })
}

/// Most frequent decision label of a table; ties go to CAD-YES.
pub fn majority_label(table: &DecisionTable) -> OutputLabel {
    let d = table.schema().decision_index();
    let kind = &table.schema().attribute(d).kind;
    let mut counts: BTreeMap<OutputLabel, usize> = BTreeMap::new();
    for i in 0..table.len() {
        if let Some(label) = table.decision(i).and_then(|c| OutputLabel::from_decision(&kind.label(c))) {
            *counts.entry(label).or_default() += 1;
        }
    }
    let no = counts.get(&OutputLabel::No).copied().unwrap_or(0);
    let yes = counts.get(&OutputLabel::Yes).copied().unwrap_or(0);
    if no > yes {
        OutputLabel::No
    } else {
        OutputLabel::Yes
    }
}

/// Observed `[min, max]` of numeric condition attributes, used to clamp
/// unbounded intervals.
pub fn observed_ranges(table: &DecisionTable) -> BTreeMap<String, [f64; 2]> {
    let schema = table.schema();
    let mut out = BTreeMap::new();
    for a in schema.conditions() {
        let attr = schema.attribute(a);
        if attr.role != Role::Condition || !attr.kind.is_numeric() {
            continue;
        }
        let mut values: Vec<f64> = table.rows().iter().filter_map(|r| r[a].number()).collect();
        if values.is_empty() {
            continue;
        }
        values.sort_by(f64::total_cmp);
        out.insert(attr.name.clone(), [values[0], values[values.len() - 1]]);
    }
    out
}

/// Attributes referenced by at least one rule term.
pub fn referenced_attributes(base: &FuzzyRuleBase) -> BTreeSet<String> {
    base.rules
        .iter()
        .flat_map(|r| r.terms.iter().map(|t| t.attribute.clone()))
        .collect()
}
