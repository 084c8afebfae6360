//! Weighted Mamdani inference: min conjunction, weight-scaled firing
//! strength, min implication, max aggregation and a sampled centroid.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{Cell, DecisionTable};
use crate::error::{Error, Result};
use crate::fuzzy::{FuzzyRuleBase, FuzzyVariable, OutputLabel, VariableKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputValue {
    Number(f64),
    Label(String),
}

/// Attribute values of one patient; absent attributes are missing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PatientInput {
    values: BTreeMap<String, Option<InputValue>>,
}

impl PatientInput {
    pub fn new() -> Self {
        PatientInput::default()
    }

    pub fn set(&mut self, attribute: &str, value: InputValue) -> &mut Self {
        self.values.insert(attribute.to_string(), Some(value));
        self
    }

    pub fn set_missing(&mut self, attribute: &str) -> &mut Self {
        self.values.insert(attribute.to_string(), None);
        self
    }

    pub fn with(mut self, attribute: &str, value: InputValue) -> Self {
        self.set(attribute, value);
        self
    }

    pub fn get(&self, attribute: &str) -> Option<&InputValue> {
        self.values.get(attribute).and_then(Option::as_ref)
    }

    pub fn attributes(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    /// Condition cells of one table row.
    pub fn from_row(table: &DecisionTable, id: usize) -> Self {
        let schema = table.schema();
        let mut input = PatientInput::new();
        for a in schema.conditions() {
            let name = &schema.attribute(a).name;
            match table.cell(id, a) {
                Cell::Missing => input.set_missing(name),
                Cell::Number(v) => input.set(name, InputValue::Number(v)),
                Cell::Code(_) => input.set(name, InputValue::Label(table.cell_text(id, a))),
            };
        }
        input
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    /// A term over a missing attribute blocks its rule.
    #[default]
    Conservative,
    /// Terms over missing attributes are ignored; a rule with no evaluable
    /// term still does not fire.
    DropTerm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceOptions {
    /// Points of the uniform output grid, endpoints included.
    pub samples: usize,
    pub missing: MissingPolicy,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions {
            samples: 1001,
            missing: MissingPolicy::Conservative,
        }
    }
}

/// Resolved per-variable input: numeric value, label, or missing.
#[derive(Debug, Clone, Copy)]
enum Resolved<'a> {
    Number(f64),
    Label(&'a str),
    Missing,
}

fn label_of_number(var: &FuzzyVariable, v: f64) -> Option<&str> {
    var.functions
        .iter()
        .map(|f| f.label.as_str())
        .find(|l| l.parse::<f64>().ok() == Some(v))
}

fn resolve<'a>(base: &'a FuzzyRuleBase, input: &'a PatientInput) -> Result<Vec<Resolved<'a>>> {
    for name in input.attributes() {
        if base.variable(name).is_none() {
            return Err(Error::UnknownAttribute(name.to_string()));
        }
    }
    base.variables
        .iter()
        .map(|var| {
            let bad = |message: String| Error::Input {
                attribute: var.attribute.clone(),
                message,
            };
            Ok(match (input.get(&var.attribute), &var.kind) {
                (None, _) => Resolved::Missing,
                (Some(InputValue::Number(v)), VariableKind::Numeric { .. }) => {
                    if !v.is_finite() {
                        return Err(bad(format!("{v} is not finite")));
                    }
                    Resolved::Number(*v)
                }
                (Some(InputValue::Label(text)), VariableKind::Numeric { .. }) => {
                    Resolved::Number(text.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(
                        || bad(format!("`{text}` is not a number")),
                    )?)
                }
                (Some(InputValue::Label(text)), VariableKind::Nominal) => {
                    match var.function(text.trim()) {
                        Some(f) => Resolved::Label(f.label.as_str()),
                        None => match text.trim().parse::<f64>().ok().and_then(|v| label_of_number(var, v)) {
                            Some(l) => Resolved::Label(l),
                            None => return Err(bad(format!("`{text}` is not one of {:?}", var.labels()))),
                        },
                    }
                }
                (Some(InputValue::Number(v)), VariableKind::Nominal) => match label_of_number(var, *v) {
                    Some(l) => Resolved::Label(l),
                    None => return Err(bad(format!("{v} is not one of {:?}", var.labels()))),
                },
            })
        })
        .collect()
}

/// Degree of a term: max membership over its label union.
fn term_degree(var: &FuzzyVariable, labels: &[String], value: Resolved<'_>) -> Option<f64> {
    match value {
        Resolved::Missing => None,
        Resolved::Number(x) => Some(
            labels
                .iter()
                .filter_map(|l| var.function(l))
                .map(|f| f.shape.eval(x))
                .fold(0.0, f64::max),
        ),
        Resolved::Label(label) => Some(labels.iter().any(|l| l == label) as u8 as f64),
    }
}

/// Per-rule activation `weight * min(term degrees)`.
pub fn fire(base: &FuzzyRuleBase, input: &PatientInput, missing: MissingPolicy) -> Result<Vec<f64>> {
    let resolved = resolve(base, input)?;
    let index: BTreeMap<&str, usize> = base
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.attribute.as_str(), i))
        .collect();
    base.rules
        .iter()
        .map(|rule| {
            let mut strength = 1.0f64;
            let mut evaluated = 0;
            for term in &rule.terms {
                let &i = index.get(term.attribute.as_str()).ok_or_else(|| Error::Rule {
                    rule: rule.source_rule,
                    message: format!("no variable for `{}`", term.attribute),
                })?;
                match term_degree(&base.variables[i], &term.labels, resolved[i]) {
                    Some(d) => {
                        strength = strength.min(d);
                        evaluated += 1;
                    }
                    None if missing == MissingPolicy::Conservative => return Ok(0.0),
                    None => {}
                }
            }
            if evaluated == 0 {
                return Ok(0.0);
            }
            Ok(rule.weight * strength)
        })
        .collect()
}

/// Uniform grid over the output universe.
pub fn grid(base: &FuzzyRuleBase, samples: usize) -> Vec<f64> {
    let [lo, hi] = base.output.universe;
    let n = samples.max(2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Clip each rule's output set at its activation, combine by max, sample.
pub fn aggregate(base: &FuzzyRuleBase, activations: &[f64], samples: usize) -> Vec<f64> {
    // max of min(a_r, S(x)) over rules sharing S equals min(max a_r, S(x))
    let mut level: BTreeMap<OutputLabel, f64> = BTreeMap::new();
    for (rule, &a) in base.rules.iter().zip(activations) {
        let e = level.entry(rule.consequent).or_insert(0.0);
        *e = e.max(a);
    }
    grid(base, samples)
        .into_iter()
        .map(|x| {
            level
                .iter()
                .map(|(label, &a)| a.min(base.output.set(*label).eval(x)))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Centroid of a sampled curve; `None` when the curve is identically zero.
pub fn centroid(xs: &[f64], mu: &[f64]) -> Option<f64> {
    let area: f64 = mu.iter().sum();
    if area <= 0.0 {
        return None;
    }
    Some(xs.iter().zip(mu).map(|(x, m)| x * m).sum::<f64>() / area)
}

/// Defuzzified percentage, or `None` when no rule fired.
pub fn aggregate_and_defuzzify(base: &FuzzyRuleBase, activations: &[f64], samples: usize) -> Option<f64> {
    if activations.iter().all(|&a| a <= 0.0) {
        return None;
    }
    centroid(&grid(base, samples), &aggregate(base, activations, samples))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Diagnosis {
    #[serde(rename = "CAD-NO")]
    No,
    #[serde(rename = "CAD-YES")]
    Yes,
    #[serde(rename = "UNDETERMINED")]
    Undetermined,
}

impl Diagnosis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Diagnosis::No => "CAD-NO",
            Diagnosis::Yes => "CAD-YES",
            Diagnosis::Undetermined => "UNDETERMINED",
        }
    }
}

impl From<OutputLabel> for Diagnosis {
    fn from(label: OutputLabel) -> Self {
        match label {
            OutputLabel::No => Diagnosis::No,
            OutputLabel::Yes => Diagnosis::Yes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FallbackPolicy {
    #[default]
    Passthrough,
    /// Emit the training majority label when nothing fired.
    #[serde(alias = "majority")]
    MajorityClass,
}

impl std::str::FromStr for FallbackPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "passthrough" => Ok(FallbackPolicy::Passthrough),
            "majority" | "majority-class" => Ok(FallbackPolicy::MajorityClass),
            other => Err(format!("unknown fallback policy `{other}`")),
        }
    }
}

/// YES strictly above the threshold.
pub fn classify(percentage: Option<f64>, threshold: f64, fallback: FallbackPolicy, majority: OutputLabel) -> Diagnosis {
    match (percentage, fallback) {
        (Some(p), _) if p > threshold => Diagnosis::Yes,
        (Some(_), _) => Diagnosis::No,
        (None, FallbackPolicy::Passthrough) => Diagnosis::Undetermined,
        (None, FallbackPolicy::MajorityClass) => majority.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleActivation {
    pub rule_id: usize,
    pub activation: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    /// One entry per rule, in rule-base order.
    pub activations: Vec<RuleActivation>,
    pub aggregate: Vec<f64>,
    pub percentage: Option<f64>,
    pub label: Diagnosis,
    /// Source ids of rules with positive activation, strongest first.
    pub fired: Vec<usize>,
}

impl InferenceResult {
    pub fn uncovered(&self) -> bool {
        self.percentage.is_none()
    }
}

pub fn infer(base: &FuzzyRuleBase, input: &PatientInput, options: InferenceOptions) -> Result<InferenceResult> {
    infer_with(base, input, options, base.threshold, FallbackPolicy::Passthrough)
}

pub fn infer_with(
    base: &FuzzyRuleBase,
    input: &PatientInput,
    options: InferenceOptions,
    threshold: f64,
    fallback: FallbackPolicy,
) -> Result<InferenceResult> {
    let activations = fire(base, input, options.missing)?;
    let curve = aggregate(base, &activations, options.samples);
    let percentage = if activations.iter().all(|&a| a <= 0.0) {
        None
    } else {
        centroid(&grid(base, options.samples), &curve)
    };
    let label = classify(percentage, threshold, fallback, base.majority);
    let mut fired: Vec<(usize, f64)> = base
        .rules
        .iter()
        .zip(&activations)
        .filter(|(_, &a)| a > 0.0)
        .map(|(r, &a)| (r.source_rule, a))
        .collect();
    fired.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    Ok(InferenceResult {
        activations: base
            .rules
            .iter()
            .zip(&activations)
            .map(|(r, &a)| RuleActivation {
                rule_id: r.source_rule,
                activation: a,
                weight: r.weight,
            })
            .collect(),
        aggregate: curve,
        percentage,
        label,
        fired: fired.into_iter().map(|(id, _)| id).collect(),
    })
}
