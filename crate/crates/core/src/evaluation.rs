//! Batch scoring: confusion matrices and accuracy, sensitivity,
//! specificity and coverage for the fuzzy engine and crisp rule sets.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DecisionTable;
use crate::error::{Error, Result};
use crate::fuzzy::{FuzzyRuleBase, OutputLabel};
use crate::inference::{infer_with, Diagnosis, FallbackPolicy, InferenceOptions, PatientInput};
use crate::rules::{CompiledRule, RuleSet};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Objects no rule covered.
    pub uncovered: usize,
}

impl ConfusionMatrix {
    pub fn decided(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    fn record(&mut self, actual: OutputLabel, predicted: Diagnosis) {
        match (actual, predicted) {
            (OutputLabel::Yes, Diagnosis::Yes) => self.tp += 1,
            (OutputLabel::No, Diagnosis::No) => self.tn += 1,
            (OutputLabel::No, Diagnosis::Yes) => self.fp += 1,
            (OutputLabel::Yes, Diagnosis::No) => self.fn_ += 1,
            (_, Diagnosis::Undetermined) => {}
        }
    }
}

/// Metric values; `None` marks an undefined ratio (zero denominator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub coverage: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Metrics {
    /// `total` is the number of evaluated objects; covered = total - uncovered.
    pub fn from_confusion(m: &ConfusionMatrix, total: usize) -> Self {
        Metrics {
            accuracy: ratio(m.tp + m.tn, m.decided()),
            sensitivity: ratio(m.tp, m.tp + m.fn_),
            specificity: ratio(m.tn, m.tn + m.fp),
            coverage: ratio(total - m.uncovered, total),
        }
    }
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "undef".to_string(), |x| format!("{x:.3}"))
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "accuracy {}  sensitivity {}  specificity {}  coverage {}",
            show(self.accuracy),
            show(self.sensitivity),
            show(self.specificity),
            show(self.coverage)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub objects: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

fn actual_labels(table: &DecisionTable) -> Result<Vec<OutputLabel>> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let kind = &table.schema().decision().kind;
    (0..table.len())
        .map(|i| {
            let code = table.decision(i).ok_or(Error::MissingDecision(i))?;
            let label = kind.label(code);
            OutputLabel::from_decision(&label).ok_or_else(|| Error::Input {
                attribute: table.schema().decision().name.clone(),
                message: format!("decision `{label}` is not binary"),
            })
        })
        .collect()
}

/// Check that every rule-base variable exists in the table as a condition.
pub fn check_compatible(base: &FuzzyRuleBase, table: &DecisionTable) -> Result<()> {
    let schema = table.schema();
    let missing: Vec<&str> = base
        .variables
        .iter()
        .map(|v| v.attribute.as_str())
        .filter(|name| schema.index_of(name).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Schema(format!(
            "table lacks rule-base attributes: {}",
            missing.join(", ")
        )));
    }
    Ok(())
}

/// Score the fuzzy engine on every object. Under the passthrough policy
/// undetermined objects leave the accuracy denominator and count as
/// uncovered; under the majority policy they receive the majority label
/// but still count as uncovered.
pub fn evaluate(
    base: &FuzzyRuleBase,
    table: &DecisionTable,
    threshold: f64,
    fallback: FallbackPolicy,
    options: InferenceOptions,
) -> Result<Evaluation> {
    let actual = actual_labels(table)?;
    check_compatible(base, table)?;
    let predictions: Vec<(Diagnosis, bool)> = (0..table.len())
        .into_par_iter()
        .map(|i| {
            let input = PatientInput::from_row(table, i);
            let r = infer_with(base, &input, options, threshold, fallback)?;
            Ok((r.label, r.uncovered()))
        })
        .collect::<Result<_>>()?;
    let mut confusion = ConfusionMatrix::default();
    for (&a, &(p, uncovered)) in actual.iter().zip(&predictions) {
        if uncovered {
            confusion.uncovered += 1;
        }
        confusion.record(a, p);
    }
    Ok(Evaluation {
        objects: table.len(),
        metrics: Metrics::from_confusion(&confusion, table.len()),
        confusion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VotePolicy {
    /// Equal support totals resolve to CAD-YES.
    #[default]
    TieYes,
    TieNo,
}

/// Support-weighted vote of the rules whose antecedent matches.
pub(crate) fn crisp_predict(compiled: &[(CompiledRule, OutputLabel, usize)], table: &DecisionTable, id: usize, vote: VotePolicy) -> Diagnosis {
    let (mut yes, mut no, mut any) = (0usize, 0usize, false);
    for (rule, label, support) in compiled {
        if rule.antecedent_matches(table, id) {
            any = true;
            match label {
                OutputLabel::Yes => yes += support,
                OutputLabel::No => no += support,
            }
        }
    }
    if !any {
        return Diagnosis::Undetermined;
    }
    match yes.cmp(&no) {
        std::cmp::Ordering::Greater => Diagnosis::Yes,
        std::cmp::Ordering::Less => Diagnosis::No,
        std::cmp::Ordering::Equal => match vote {
            VotePolicy::TieYes => Diagnosis::Yes,
            VotePolicy::TieNo => Diagnosis::No,
        },
    }
}

pub(crate) fn compile_rules(rules: &RuleSet, table: &DecisionTable) -> Result<Vec<(CompiledRule, OutputLabel, usize)>> {
    rules
        .rules
        .iter()
        .map(|r| {
            let label = OutputLabel::from_decision(&r.consequent).ok_or_else(|| Error::Rule {
                rule: r.id,
                message: format!("decision `{}` is not binary", r.consequent),
            })?;
            Ok((CompiledRule::new(r, table)?, label, r.support))
        })
        .collect()
}

/// Crisp rule-set scoring; uncovered objects are excluded from accuracy.
pub fn crisp_evaluate(rules: &RuleSet, table: &DecisionTable, vote: VotePolicy) -> Result<Evaluation> {
    let actual = actual_labels(table)?;
    let compiled = compile_rules(rules, table)?;
    let mut confusion = ConfusionMatrix::default();
    for (i, &a) in actual.iter().enumerate() {
        let p = crisp_predict(&compiled, table, i, vote);
        if p == Diagnosis::Undetermined {
            confusion.uncovered += 1;
        }
        confusion.record(a, p);
    }
    Ok(Evaluation {
        objects: table.len(),
        metrics: Metrics::from_confusion(&confusion, table.len()),
        confusion,
    })
}
