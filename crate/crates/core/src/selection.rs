//! Rule selection by reducing a rule-applicability decision table.
//!
//! Each candidate rule becomes a binary condition column over the
//! evaluation objects (1 when both antecedent and consequent hold), the
//! original decision is kept, and the rules whose columns appear in the
//! table's decision-relative reducts are selected.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, AttributeSchema, Cell, DecisionTable, Schema};
use crate::error::{Error, Result};
use crate::rough::{
    discernibility_matrix, reduct_greedy_with_order, reducts_exhaustive, MatrixMode, Reduct,
    EXHAUSTIVE_BOUND,
};
use crate::rules::{CompiledRule, Rule, RuleSet};

/// Whether `rule` holds on object `id`: antecedent and consequent both true.
/// Descriptors over a missing cell never hold.
pub fn rule_applies(rule: &Rule, table: &DecisionTable, id: usize) -> Result<bool> {
    if id >= table.len() {
        return Err(Error::ForeignObject(id));
    }
    Ok(CompiledRule::new(rule, table)?.applies(table, id))
}

/// Column name of a rule in the applicability table.
pub fn rule_column(rule: &Rule) -> String {
    format!("rule_{}", rule.id)
}

/// Objects x (rules + decision) table of 0/1 applicability cells.
pub fn build_rule_table(rules: &RuleSet, eval: &DecisionTable) -> Result<DecisionTable> {
    if rules.is_empty() {
        return Err(Error::NoRules);
    }
    if eval.is_empty() {
        return Err(Error::EmptyTable);
    }
    let compiled: Vec<CompiledRule> = rules
        .rules
        .iter()
        .map(|r| CompiledRule::new(r, eval))
        .collect::<Result<_>>()?;
    let mut attrs: Vec<AttributeSchema> = rules
        .rules
        .iter()
        .map(|r| AttributeSchema::condition(&rule_column(r), AttributeKind::Binary, &r.to_string()))
        .collect();
    attrs.push(eval.schema().decision().clone());
    let schema = Schema::new(attrs)?;
    let decision = eval.schema().decision_index();
    let rows: Vec<Vec<Cell>> = (0..eval.len())
        .into_par_iter()
        .map(|b| {
            let mut row: Vec<Cell> = compiled
                .iter()
                .map(|c| Cell::Code(c.applies(eval, b) as u32))
                .collect();
            row.push(eval.cell(b, decision));
            row
        })
        .collect();
    DecisionTable::new(schema, rows)
}

/// How the applicability table is reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionStrategy {
    /// One reduct search over every rule column against the original decision.
    Joint,
    /// One search per decision class, over that class's rule columns against
    /// a "belongs to the class" indicator decision.
    #[default]
    PerClass,
}

impl std::str::FromStr for SelectionStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "joint" => Ok(SelectionStrategy::Joint),
            "per-class" => Ok(SelectionStrategy::PerClass),
            other => Err(format!("unknown selection strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionOptions {
    pub strategy: SelectionStrategy,
    /// Largest rule count reduced exhaustively.
    pub exhaustive_bound: usize,
    /// Greedy runs with distinct tie orders when above the bound.
    pub permutations: usize,
    pub seed: u64,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        SelectionOptions {
            strategy: SelectionStrategy::default(),
            exhaustive_bound: EXHAUSTIVE_BOUND,
            permutations: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub rules: RuleSet,
    /// Reducts of the applicability table, as positions into the candidate list.
    pub reducts: Vec<Vec<usize>>,
    /// False when any search fell back to greedy.
    pub exhaustive: bool,
}

/// Decision-relative reducts of `table`, exhaustive under the bound and
/// otherwise greedy over several seeded tie orders.
fn table_reducts(table: &DecisionTable, options: SelectionOptions) -> Result<(Vec<Reduct>, bool)> {
    let matrix = discernibility_matrix(table, MatrixMode::DecisionRelative)?;
    match reducts_exhaustive(&matrix, options.exhaustive_bound) {
        Ok(r) => Ok((r, true)),
        Err(Error::ExhaustiveBound { .. }) => {
            let width = matrix.attributes().len();
            let mut orders: Vec<Vec<usize>> = vec![(0..width).collect()];
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            for _ in 1..options.permutations.max(1) {
                let mut order: Vec<usize> = (0..width).collect();
                order.shuffle(&mut rng);
                orders.push(order);
            }
            let mut found: Vec<Reduct> = orders
                .iter()
                .map(|o| reduct_greedy_with_order(&matrix, o))
                .collect();
            found.sort();
            found.dedup();
            Ok((found, false))
        }
        Err(e) => Err(e),
    }
}

/// Rules whose applicability columns appear in the union of the reducts.
///
/// Rules with identical columns are interchangeable; only the first (lowest
/// position) takes part in the reduct search.
pub fn select_important_rules(rules: &RuleSet, eval: &DecisionTable, options: SelectionOptions) -> Result<Selection> {
    let table = build_rule_table(rules, eval)?;
    let classes = table.decision_values();
    if classes.len() < 2 {
        return Err(Error::ConstantDecision);
    }
    let n_rules = rules.len();

    // collapse identical columns onto their first occurrence
    let mut first_of: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut representatives: Vec<usize> = Vec::new();
    for a in 0..n_rules {
        let column: Vec<u32> = (0..table.len()).map(|b| table.cell(b, a).code().unwrap_or(0)).collect();
        if let std::collections::hash_map::Entry::Vacant(v) = first_of.entry(column) {
            v.insert(a);
            representatives.push(a);
        }
    }

    let decision_kind = &eval.schema().decision().kind;
    let groups: Vec<(Vec<usize>, Option<u32>)> = match options.strategy {
        SelectionStrategy::Joint => vec![(representatives, None)],
        SelectionStrategy::PerClass => classes
            .iter()
            .map(|&k| {
                let label = decision_kind.label(k);
                let cols = representatives
                    .iter()
                    .copied()
                    .filter(|&p| rules.rules[p].consequent == label)
                    .collect();
                (cols, Some(k))
            })
            .filter(|(cols, _): &(Vec<usize>, _)| !cols.is_empty())
            .collect(),
    };

    let mut reducts: Vec<Vec<usize>> = Vec::new();
    let mut exhaustive = true;
    for (cols, class) in groups {
        let reduced = project_columns(&table, &cols, class)?;
        let (found, complete) = table_reducts(&reduced, options)?;
        exhaustive &= complete;
        // reduced-table column k corresponds to candidate position cols[k]
        reducts.extend(found.iter().map(|r| r.attributes.iter().map(|&a| cols[a]).collect::<Vec<_>>()));
    }
    let chosen: BTreeSet<usize> = reducts.iter().flatten().copied().collect();
    let selected = rules.with_rules(
        chosen
            .iter()
            .map(|&p| rules.rules[p].clone())
            .collect(),
    );
    Ok(Selection {
        rules: selected,
        reducts,
        exhaustive,
    })
}

/// Keep the condition columns `keep` plus the decision. With `class` set,
/// the decision becomes a 0/1 indicator of that class.
fn project_columns(table: &DecisionTable, keep: &[usize], class: Option<u32>) -> Result<DecisionTable> {
    let d = table.schema().decision_index();
    let mut attrs: Vec<AttributeSchema> = keep.iter().map(|&a| table.schema().attribute(a).clone()).collect();
    let mut decision = table.schema().decision().clone();
    if class.is_some() {
        decision.kind = AttributeKind::Binary;
    }
    attrs.push(decision);
    let rows = table
        .rows()
        .iter()
        .map(|row| {
            let mut out: Vec<Cell> = keep.iter().map(|&a| row[a]).collect();
            out.push(match class {
                Some(k) => Cell::Code((row[d].code() == Some(k)) as u32),
                None => row[d],
            });
            out
        })
        .collect();
    DecisionTable::new(Schema::new(attrs)?, rows)
}
