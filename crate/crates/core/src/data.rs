//! Decision tables: schema, ingestion, imputation and splitting.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::discretize::DiscreteInterval;
use crate::error::{Error, Result};

/// Token for a missing cell in delimited text.
pub const MISSING: &str = "?";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum AttributeKind {
    Numeric,
    Nominal { labels: Vec<String> },
    Binary,
    /// A numeric attribute replaced by the intervals between `cuts`.
    Interval { cuts: Vec<f64> },
}

impl AttributeKind {
    pub fn is_numeric(&self) -> bool {
        matches!(self, AttributeKind::Numeric)
    }

    /// Number of distinct codes for discrete kinds, `None` for numeric.
    pub fn arity(&self) -> Option<usize> {
        match self {
            AttributeKind::Numeric => None,
            AttributeKind::Nominal { labels } => Some(labels.len()),
            AttributeKind::Binary => Some(2),
            AttributeKind::Interval { cuts } => Some(cuts.len() + 1),
        }
    }

    /// Printable label of a discrete code.
    pub fn label(&self, code: u32) -> String {
        match self {
            AttributeKind::Numeric => code.to_string(),
            AttributeKind::Nominal { labels } => labels[code as usize].clone(),
            AttributeKind::Binary => code.to_string(),
            AttributeKind::Interval { cuts } => DiscreteInterval::of_code(cuts, code).to_string(),
        }
    }

    /// Legal labels of a nominal or binary attribute.
    pub fn labels(&self) -> Option<Vec<String>> {
        match self {
            AttributeKind::Nominal { labels } => Some(labels.clone()),
            AttributeKind::Binary => Some(vec!["0".into(), "1".into()]),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Condition,
    Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    pub role: Role,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

impl AttributeSchema {
    pub fn condition(name: &str, kind: AttributeKind, description: &str) -> Self {
        AttributeSchema {
            name: name.into(),
            kind,
            role: Role::Condition,
            description: description.into(),
        }
    }

    pub fn decision(name: &str, kind: AttributeKind, description: &str) -> Self {
        AttributeSchema {
            name: name.into(),
            kind,
            role: Role::Decision,
            description: description.into(),
        }
    }
}

/// Validated attribute list with exactly one decision attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<AttributeSchema>", into = "Vec<AttributeSchema>")]
pub struct Schema {
    attributes: Vec<AttributeSchema>,
    decision: usize,
}

impl TryFrom<Vec<AttributeSchema>> for Schema {
    type Error = Error;

    fn try_from(attributes: Vec<AttributeSchema>) -> Result<Self> {
        Schema::new(attributes)
    }
}

impl From<Schema> for Vec<AttributeSchema> {
    fn from(schema: Schema) -> Self {
        schema.attributes
    }
}

impl Schema {
    pub fn new(attributes: Vec<AttributeSchema>) -> Result<Self> {
        let decisions: Vec<usize> = attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role == Role::Decision)
            .map(|(i, _)| i)
            .collect();
        if decisions.len() != 1 {
            return Err(Error::Schema(format!(
                "expected exactly one decision attribute, found {}",
                decisions.len()
            )));
        }
        let mut names = BTreeSet::new();
        for attr in &attributes {
            if !names.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute `{}`", attr.name)));
            }
            match &attr.kind {
                AttributeKind::Nominal { labels } => {
                    if labels.is_empty() {
                        return Err(Error::Schema(format!("`{}` declares no labels", attr.name)));
                    }
                    let distinct: BTreeSet<_> = labels.iter().collect();
                    if distinct.len() != labels.len() {
                        return Err(Error::Schema(format!("`{}` repeats a label", attr.name)));
                    }
                }
                AttributeKind::Interval { cuts } => {
                    if cuts.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(Error::Schema(format!(
                            "`{}` cuts are not strictly increasing",
                            attr.name
                        )));
                    }
                }
                _ => {}
            }
        }
        if attributes[decisions[0]].kind.is_numeric() {
            return Err(Error::Schema("the decision attribute must be discrete".into()));
        }
        Ok(Schema {
            decision: decisions[0],
            attributes,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Resolve a built-in preset by name.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "uci-heart-14" => Some(uci_heart_14()),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attributes(&self) -> &[AttributeSchema] {
        &self.attributes
    }

    pub fn attribute(&self, index: usize) -> &AttributeSchema {
        &self.attributes[index]
    }

    pub fn decision_index(&self) -> usize {
        self.decision
    }

    pub fn decision(&self) -> &AttributeSchema {
        &self.attributes[self.decision]
    }

    /// Indices of condition attributes in schema order.
    pub fn conditions(&self) -> Vec<usize> {
        (0..self.attributes.len())
            .filter(|&i| i != self.decision)
            .collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    pub(crate) fn with_kind(&self, index: usize, kind: AttributeKind) -> Schema {
        let mut out = self.clone();
        out.attributes[index].kind = kind;
        out
    }
}

fn nominal(labels: &[&str]) -> AttributeKind {
    AttributeKind::Nominal {
        labels: labels.iter().map(|s| s.to_string()).collect(),
    }
}

/// The 14-attribute UCI heart disease layout (13 conditions plus `num`).
pub fn uci_heart_14() -> Schema {
    use AttributeKind::{Binary, Numeric};
    let attrs = vec![
        AttributeSchema::condition("age", Numeric, "age in years"),
        AttributeSchema::condition("sex", Binary, "1 = male, 0 = female"),
        AttributeSchema::condition(
            "cp",
            nominal(&["1", "2", "3", "4"]),
            "chest pain type: 1 typical angina, 2 atypical angina, 3 non-anginal pain, 4 asymptomatic",
        ),
        AttributeSchema::condition("trestbps", Numeric, "resting systolic blood pressure (mmHg)"),
        AttributeSchema::condition("chol", Numeric, "serum cholesterol (mg/dl)"),
        AttributeSchema::condition("fbs", Binary, "fasting blood sugar > 120 mg/dl: 1 yes, 0 no"),
        AttributeSchema::condition(
            "restecg",
            nominal(&["0", "1", "2"]),
            "resting ECG: 0 normal, 1 ST-T wave abnormality, 2 LV hypertrophy",
        ),
        AttributeSchema::condition("thalach", Numeric, "maximum heart rate achieved (bpm)"),
        AttributeSchema::condition("exang", Binary, "exercise induced angina: 1 yes, 0 no"),
        AttributeSchema::condition(
            "oldpeak",
            Numeric,
            "ST depression induced by exercise relative to rest (mm)",
        ),
        AttributeSchema::condition(
            "slope",
            nominal(&["1", "2", "3"]),
            "slope of peak exercise ST segment: 1 upsloping, 2 flat, 3 downsloping",
        ),
        AttributeSchema::condition("ca", Numeric, "major vessels colored by fluoroscopy (0-3)"),
        AttributeSchema::condition(
            "thal",
            nominal(&["3", "6", "7"]),
            "thallium scintigraphy: 3 normal, 6 fixed defect, 7 reversible defect",
        ),
        AttributeSchema::decision(
            "num",
            Binary,
            "angiographic disease status: 1 if more than 50% narrowing in any major vessel",
        ),
    ];
    Schema::new(attrs).expect("preset schema is valid")
}

/// One table cell. Discrete kinds store a code into the attribute's labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Missing,
    Number(f64),
    Code(u32),
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn number(&self) -> Option<f64> {
        match self {
            Cell::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn code(&self) -> Option<u32> {
        match self {
            Cell::Code(c) => Some(*c),
            _ => None,
        }
    }
}

/// Set of object ids belonging to one table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObjectSet(BTreeSet<usize>);

impl ObjectSet {
    pub fn new() -> Self {
        ObjectSet::default()
    }

    pub fn for_table(table: &DecisionTable, ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for id in ids {
            if id >= table.len() {
                return Err(Error::ForeignObject(id));
            }
            set.insert(id);
        }
        Ok(ObjectSet(set))
    }

    pub fn all(table: &DecisionTable) -> Self {
        ObjectSet((0..table.len()).collect())
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.contains(&id)
    }

    pub fn insert(&mut self, id: usize) {
        self.0.insert(id);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &ObjectSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn difference(&self, other: &ObjectSet) -> ObjectSet {
        ObjectSet(self.0.difference(&other.0).copied().collect())
    }

    pub fn union(&self, other: &ObjectSet) -> ObjectSet {
        ObjectSet(self.0.union(&other.0).copied().collect())
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.0.iter().copied().collect()
    }
}

impl FromIterator<usize> for ObjectSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        ObjectSet(iter.into_iter().collect())
    }
}

/// Objects x attributes with one decision column. Object ids are row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTable {
    schema: Schema,
    rows: Vec<Vec<Cell>>,
}

impl DecisionTable {
    pub fn new(schema: Schema, rows: Vec<Vec<Cell>>) -> Result<Self> {
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::RowWidth {
                    row: r,
                    expected: schema.len(),
                    found: row.len(),
                });
            }
            for (a, cell) in row.iter().enumerate() {
                let attr = schema.attribute(a);
                let ok = match (cell, attr.kind.arity()) {
                    (Cell::Missing, _) => true,
                    (Cell::Number(v), None) => v.is_finite(),
                    (Cell::Code(c), Some(n)) => (*c as usize) < n,
                    _ => false,
                };
                if !ok {
                    return Err(Error::UnknownLabel {
                        row: r,
                        attribute: attr.name.clone(),
                        label: format!("{cell:?}"),
                    });
                }
            }
        }
        Ok(DecisionTable { schema, rows })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn row(&self, id: usize) -> &[Cell] {
        &self.rows[id]
    }

    pub fn cell(&self, id: usize, attr: usize) -> Cell {
        self.rows[id][attr]
    }

    /// Decision code of an object; `None` when missing.
    pub fn decision(&self, id: usize) -> Option<u32> {
        self.rows[id][self.schema.decision_index()].code()
    }

    /// Distinct decision codes present, ascending.
    pub fn decision_values(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = (0..self.len()).filter_map(|i| self.decision(i)).collect();
        set.into_iter().collect()
    }

    /// No decision cell is missing.
    pub fn is_training_ready(&self) -> bool {
        (0..self.len()).all(|i| self.decision(i).is_some())
    }

    pub fn has_missing(&self) -> bool {
        self.rows.iter().flatten().any(Cell::is_missing)
    }

    /// Textual form of a cell, `?` when missing.
    pub fn cell_text(&self, id: usize, attr: usize) -> String {
        match self.rows[id][attr] {
            Cell::Missing => MISSING.to_string(),
            Cell::Number(v) => v.to_string(),
            Cell::Code(c) => self.schema.attribute(attr).kind.label(c),
        }
    }

    /// Rows restricted to `ids`, in the given order.
    pub fn subset(&self, ids: &[usize]) -> DecisionTable {
        DecisionTable {
            schema: self.schema.clone(),
            rows: ids.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Rows with no missing cell at all.
    pub fn complete_cases(&self) -> DecisionTable {
        let ids: Vec<usize> = (0..self.len())
            .filter(|&i| !self.rows[i].iter().any(Cell::is_missing))
            .collect();
        self.subset(&ids)
    }

    pub(crate) fn with_parts(schema: Schema, rows: Vec<Vec<Cell>>) -> Self {
        DecisionTable { schema, rows }
    }

    /// Serialize back to comma-delimited text without a header.
    pub fn to_delimited(&self) -> String {
        let mut out = String::new();
        for id in 0..self.len() {
            let line: Vec<String> = (0..self.schema.len())
                .map(|a| self.cell_text(id, a))
                .collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    /// SHA-256 of the delimited form; identifies the training data in artifacts.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_delimited().as_bytes());
        hex::encode(digest)
    }
}

fn parse_number(text: &str) -> Option<f64> {
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parse one textual cell under an attribute's kind.
pub fn parse_cell(attr: &AttributeSchema, text: &str) -> std::result::Result<Cell, ParseCellError> {
    let text = text.trim();
    if text == MISSING {
        return Ok(Cell::Missing);
    }
    match &attr.kind {
        AttributeKind::Numeric => parse_number(text)
            .map(Cell::Number)
            .ok_or(ParseCellError::NotNumeric),
        AttributeKind::Binary => {
            let v = parse_number(text).ok_or(ParseCellError::UnknownLabel)?;
            match v {
                // Decision severities 1-4 collapse to "present".
                v if attr.role == Role::Decision && v >= 1.0 && v.fract() == 0.0 => Ok(Cell::Code(1)),
                v if v == 0.0 => Ok(Cell::Code(0)),
                v if v == 1.0 => Ok(Cell::Code(1)),
                _ => Err(ParseCellError::UnknownLabel),
            }
        }
        AttributeKind::Nominal { labels } => {
            if let Some(i) = labels.iter().position(|l| l == text) {
                return Ok(Cell::Code(i as u32));
            }
            // Accept "2.0" for label "2".
            let v = parse_number(text).ok_or(ParseCellError::UnknownLabel)?;
            labels
                .iter()
                .position(|l| parse_number(l) == Some(v))
                .map(|i| Cell::Code(i as u32))
                .ok_or(ParseCellError::UnknownLabel)
        }
        AttributeKind::Interval { cuts } => {
            if let Some(code) = (0..=cuts.len() as u32)
                .find(|&c| DiscreteInterval::of_code(cuts, c).to_string() == text)
            {
                return Ok(Cell::Code(code));
            }
            Err(ParseCellError::UnknownLabel)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseCellError {
    NotNumeric,
    UnknownLabel,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Skip the first line as a header.
    pub header: bool,
}

/// Read a comma-delimited table. `?` marks a missing cell.
pub fn load_table<R: BufRead>(source: R, schema: &Schema, options: LoadOptions) -> Result<DecisionTable> {
    let mut rows = Vec::new();
    let mut lines = source.lines();
    if options.header {
        lines.next().transpose()?;
    }
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row_index = rows.len();
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != schema.len() {
            return Err(Error::RowWidth {
                row: row_index,
                expected: schema.len(),
                found: fields.len(),
            });
        }
        let mut row = Vec::with_capacity(fields.len());
        for (attr, text) in schema.attributes().iter().zip(&fields) {
            let cell = parse_cell(attr, text).map_err(|e| match e {
                ParseCellError::NotNumeric => Error::NotNumeric {
                    row: row_index,
                    attribute: attr.name.clone(),
                    text: text.trim().to_string(),
                },
                ParseCellError::UnknownLabel => Error::UnknownLabel {
                    row: row_index,
                    attribute: attr.name.clone(),
                    label: text.trim().to_string(),
                },
            })?;
            row.push(cell);
        }
        rows.push(row);
    }
    Ok(DecisionTable::with_parts(schema.clone(), rows))
}

pub fn load_table_str(text: &str, schema: &Schema) -> Result<DecisionTable> {
    load_table(text.as_bytes(), schema, LoadOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImputePolicy {
    /// Remove rows with a missing condition cell.
    #[serde(alias = "drop")]
    DropIncomplete,
    /// Fill numeric cells with the median, discrete cells with the mode.
    #[default]
    ModeMedian,
}

impl std::str::FromStr for ImputePolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "drop" | "drop-incomplete" => Ok(ImputePolicy::DropIncomplete),
            "mode-median" => Ok(ImputePolicy::ModeMedian),
            other => Err(format!("unknown imputation policy `{other}`")),
        }
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

pub fn impute(table: &DecisionTable, policy: ImputePolicy) -> Result<DecisionTable> {
    if let Some(row) = (0..table.len()).find(|&i| table.decision(i).is_none()) {
        return Err(Error::MissingDecision(row));
    }
    let schema = table.schema();
    match policy {
        ImputePolicy::DropIncomplete => {
            let ids: Vec<usize> = (0..table.len())
                .filter(|&i| !table.row(i).iter().any(Cell::is_missing))
                .collect();
            Ok(table.subset(&ids))
        }
        ImputePolicy::ModeMedian => {
            let mut rows = table.rows().to_vec();
            for a in schema.conditions() {
                if !table.rows().iter().any(|r| r[a].is_missing()) {
                    continue;
                }
                let attr = schema.attribute(a);
                let fill = match attr.kind.arity() {
                    None => {
                        let mut values: Vec<f64> =
                            table.rows().iter().filter_map(|r| r[a].number()).collect();
                        median(&mut values).map(Cell::Number)
                    }
                    Some(n) => {
                        let mut counts = vec![0usize; n];
                        for r in table.rows() {
                            if let Some(c) = r[a].code() {
                                counts[c as usize] += 1;
                            }
                        }
                        // First maximal label in declaration order.
                        let best = counts
                            .iter()
                            .enumerate()
                            .fold(None, |best: Option<(usize, usize)>, (i, &c)| match best {
                                Some((_, bc)) if bc >= c => best,
                                _ if c > 0 => Some((i, c)),
                                _ => best,
                            });
                        best.map(|(i, _)| Cell::Code(i as u32))
                    }
                };
                let fill = fill.ok_or_else(|| Error::AllMissing(attr.name.clone()))?;
                for row in rows.iter_mut() {
                    if row[a].is_missing() {
                        row[a] = fill;
                    }
                }
            }
            Ok(DecisionTable::with_parts(schema.clone(), rows))
        }
    }
}

/// Deterministic shuffled partition of object ids; the first part has
/// `round(fraction * n)` ids. Both parts keep ascending id order.
pub fn split_ids(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::BadFraction(fraction));
    }
    if n == 0 {
        return Err(Error::EmptyTable);
    }
    let mut ids: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let k = (fraction * n as f64).round() as usize;
    let mut first = ids[..k].to_vec();
    let mut second = ids[k..].to_vec();
    first.sort_unstable();
    second.sort_unstable();
    Ok((first, second))
}

pub fn split(table: &DecisionTable, fraction: f64, seed: u64) -> Result<(DecisionTable, DecisionTable)> {
    let (a, b) = split_ids(table.len(), fraction, seed)?;
    Ok((table.subset(&a), table.subset(&b)))
}
