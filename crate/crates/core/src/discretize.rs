//! Supervised discretization of numeric attributes by Boolean reasoning.
//!
//! Candidate cuts sit at midpoints between adjacent distinct values whose
//! decision sets are not the same single class. The greedy selector then
//! repeatedly takes the candidate that discerns the most still-undiscerned
//! object pairs with different decisions, until no candidate helps.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::data::{AttributeKind, Cell, DecisionTable, Role};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cut<'a> {
    pub attribute: &'a str,
    pub threshold: f64,
}

/// Strictly increasing thresholds per numeric attribute.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CutSet(BTreeMap<String, Vec<f64>>);

impl CutSet {
    pub fn new() -> Self {
        CutSet::default()
    }

    /// Insert thresholds for an attribute, sorting and dropping duplicates.
    pub fn insert(&mut self, attribute: &str, mut thresholds: Vec<f64>) {
        thresholds.sort_by(f64::total_cmp);
        thresholds.dedup();
        self.0.insert(attribute.to_string(), thresholds);
    }

    pub fn get(&self, attribute: &str) -> Option<&[f64]> {
        self.0.get(attribute).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn cuts(&self) -> impl Iterator<Item = Cut<'_>> {
        self.0.iter().flat_map(|(k, v)| {
            v.iter().map(move |&t| Cut {
                attribute: k,
                threshold: t,
            })
        })
    }

    pub fn total(&self) -> usize {
        self.0.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Cuts recovered from the interval kinds of an already discretized table.
    pub fn from_table(table: &DecisionTable) -> CutSet {
        let mut set = CutSet::new();
        for attr in table.schema().attributes() {
            if let AttributeKind::Interval { cuts } = &attr.kind {
                set.insert(&attr.name, cuts.clone());
            }
        }
        set
    }
}

/// Half-open interval `[lower, upper)`; `None` stands for an infinite bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteInterval {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl DiscreteInterval {
    pub const UNBOUNDED: DiscreteInterval = DiscreteInterval {
        lower: None,
        upper: None,
    };

    /// The `code`-th interval delimited by sorted `cuts`.
    pub fn of_code(cuts: &[f64], code: u32) -> Self {
        let code = code as usize;
        DiscreteInterval {
            lower: code.checked_sub(1).map(|i| cuts[i]),
            upper: cuts.get(code).copied(),
        }
    }

    /// Index of the interval containing `value`.
    pub fn code_of(cuts: &[f64], value: f64) -> u32 {
        cuts.partition_point(|&t| t <= value) as u32
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower.is_none_or(|lo| value >= lo) && self.upper.is_none_or(|hi| value < hi)
    }

    pub fn is_subset(&self, other: &DiscreteInterval) -> bool {
        let lower_ok = match (other.lower, self.lower) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(o), Some(s)) => s >= o,
        };
        let upper_ok = match (other.upper, self.upper) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(o), Some(s)) => s <= o,
        };
        lower_ok && upper_ok
    }
}

impl fmt::Display for DiscreteInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bound = |b: Option<f64>| b.map_or_else(|| "*".to_string(), |v| v.to_string());
        write!(f, "[{},{})", bound(self.lower), bound(self.upper))
    }
}

fn numeric_attribute(table: &DecisionTable, attr: usize) -> Result<()> {
    let schema = table.schema();
    let a = schema.attribute(attr);
    if !a.kind.is_numeric() || a.role != Role::Condition {
        return Err(Error::NotNumericAttribute(a.name.clone()));
    }
    Ok(())
}

/// Candidate thresholds for one numeric attribute, ascending.
///
/// Missing cells and objects without a decision are ignored.
pub fn candidate_cuts(table: &DecisionTable, attr: usize) -> Result<Vec<f64>> {
    numeric_attribute(table, attr)?;
    let mut groups: BTreeMap<OrdF64, BTreeSet<u32>> = BTreeMap::new();
    for id in 0..table.len() {
        if let (Cell::Number(v), Some(d)) = (table.cell(id, attr), table.decision(id)) {
            groups.entry(OrdF64(v)).or_default().insert(d);
        }
    }
    let groups: Vec<(f64, BTreeSet<u32>)> = groups.into_iter().map(|(k, v)| (k.0, v)).collect();
    Ok(groups
        .windows(2)
        .filter(|w| !(w[0].1.len() == 1 && w[0].1 == w[1].1))
        .map(|w| (w[0].0 + w[1].0) / 2.0)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Greedy Boolean-reasoning cut selection over all numeric condition attributes.
///
/// Every numeric condition attribute gets an entry, possibly empty.
pub fn select_cuts(table: &DecisionTable) -> CutSet {
    let schema = table.schema();
    let numeric: Vec<usize> = schema
        .conditions()
        .into_iter()
        .filter(|&a| schema.attribute(a).kind.is_numeric())
        .collect();
    let mut out = CutSet::new();
    for &a in &numeric {
        out.insert(&schema.attribute(a).name, Vec::new());
    }

    // Candidates in schema order, then ascending threshold.
    let candidates: Vec<(usize, f64)> = numeric
        .iter()
        .flat_map(|&a| {
            candidate_cuts(table, a)
                .expect("numeric condition attribute")
                .into_iter()
                .map(move |t| (a, t))
        })
        .collect();
    if candidates.is_empty() {
        return out;
    }

    let value = |id: usize, a: usize| table.cell(id, a).number();
    let n = table.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .filter(|&(i, j)| match (table.decision(i), table.decision(j)) {
            (Some(di), Some(dj)) if di != dj => numeric.iter().any(|&a| {
                matches!((value(i, a), value(j, a)), (Some(x), Some(y)) if x != y)
            }),
            _ => false,
        })
        .collect();
    if pairs.is_empty() {
        return out;
    }

    let discerned: Vec<BitSet> = candidates
        .par_iter()
        .map(|&(a, t)| {
            let mut set = BitSet::new(pairs.len());
            for (p, &(i, j)) in pairs.iter().enumerate() {
                if let (Some(x), Some(y)) = (value(i, a), value(j, a)) {
                    if (x < t) != (y < t) {
                        set.insert(p);
                    }
                }
            }
            set
        })
        .collect();

    let mut open = BitSet::new(pairs.len());
    for set in &discerned {
        open.union_with(set);
    }
    let mut chosen = vec![false; candidates.len()];
    loop {
        let gains: Vec<usize> = discerned
            .par_iter()
            .map(|set| set.intersection_count(&open))
            .collect();
        let best = gains
            .iter()
            .enumerate()
            .filter(|&(c, &g)| g > 0 && !chosen[c])
            .fold(None, |best: Option<(usize, usize)>, (c, &g)| match best {
                Some((_, bg)) if bg >= g => best,
                _ => Some((c, g)),
            });
        let Some((c, _)) = best else { break };
        chosen[c] = true;
        open.difference_with(&discerned[c]);
    }

    for &a in &numeric {
        let thresholds: Vec<f64> = candidates
            .iter()
            .zip(&chosen)
            .filter(|((ca, _), &ch)| ch && *ca == a)
            .map(|((_, t), _)| *t)
            .collect();
        out.insert(&schema.attribute(a).name, thresholds);
    }
    out
}

/// Replace each numeric cell by the code of the interval containing it.
///
/// Numeric attributes without an entry in `cuts` become the single interval
/// `[*,*)`. A cut keyed to a non-numeric attribute is rejected, so running
/// this on an already discretized table fails.
pub fn discretize(table: &DecisionTable, cuts: &CutSet) -> Result<DecisionTable> {
    let mut schema = table.schema().clone();
    for (name, _) in cuts.iter() {
        let idx = schema.require(name)?;
        if !schema.attribute(idx).kind.is_numeric() {
            return Err(Error::NotNumericAttribute(name.to_string()));
        }
    }
    let mut rows = table.rows().to_vec();
    for a in 0..schema.len() {
        if !schema.attribute(a).kind.is_numeric() {
            continue;
        }
        let thresholds = cuts
            .get(&schema.attribute(a).name)
            .map(<[f64]>::to_vec)
            .unwrap_or_default();
        for row in rows.iter_mut() {
            if let Cell::Number(v) = row[a] {
                row[a] = Cell::Code(DiscreteInterval::code_of(&thresholds, v));
            }
        }
        schema = schema.with_kind(a, AttributeKind::Interval { cuts: thresholds });
    }
    Ok(DecisionTable::with_parts(schema, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_table_str, AttributeSchema, Schema};

    fn one_numeric(values: &[f64], decisions: &[u32]) -> DecisionTable {
        let schema = Schema::new(vec![
            AttributeSchema::condition("x", AttributeKind::Numeric, ""),
            AttributeSchema::decision("d", AttributeKind::Binary, ""),
        ])
        .unwrap();
        let text: String = values
            .iter()
            .zip(decisions)
            .map(|(v, d)| format!("{v},{d}\n"))
            .collect();
        load_table_str(&text, &schema).unwrap()
    }

    #[test]
    fn candidates_skip_pure_same_pairs() {
        let t = one_numeric(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        assert_eq!(candidate_cuts(&t, 0).unwrap(), vec![2.5]);
        let t = one_numeric(&[5.0, 5.0, 5.0], &[0, 1, 0]);
        assert!(candidate_cuts(&t, 0).unwrap().is_empty());
        let t = one_numeric(&[1.0, 2.0], &[0, 1]);
        assert_eq!(candidate_cuts(&t, 0).unwrap(), vec![1.5]);
        // mixed group keeps both neighbouring midpoints
        let t = one_numeric(&[1.0, 2.0, 2.0, 3.0], &[0, 0, 1, 1]);
        assert_eq!(candidate_cuts(&t, 0).unwrap(), vec![1.5, 2.5]);
    }

    #[test]
    fn candidates_reject_nominal() {
        let t = one_numeric(&[1.0], &[0]);
        assert_eq!(
            candidate_cuts(&t, 1).unwrap_err(),
            Error::NotNumericAttribute("d".into())
        );
    }

    #[test]
    fn select_single_attribute() {
        let t = one_numeric(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        assert_eq!(select_cuts(&t).get("x").unwrap(), &[2.5]);
        let t = one_numeric(&[1.0, 2.0, 3.0], &[1, 1, 1]);
        assert!(select_cuts(&t).is_empty());
    }

    #[test]
    fn interval_display_and_containment() {
        let cuts = [53.0];
        let iv = DiscreteInterval::of_code(&cuts, DiscreteInterval::code_of(&cuts, 54.0));
        assert_eq!(iv.to_string(), "[53,*)");
        assert!(iv.contains(53.0));
        assert!(!DiscreteInterval::of_code(&cuts, 0).contains(53.0));
        let cuts = [0.3];
        let iv = DiscreteInterval::of_code(&cuts, DiscreteInterval::code_of(&cuts, 2.0));
        assert_eq!(iv.to_string(), "[0.3,*)");
        assert_eq!(DiscreteInterval::of_code(&[], 0).to_string(), "[*,*)");
    }

    #[test]
    fn discretize_replaces_numeric_cells() {
        let t = one_numeric(&[54.0, 20.0], &[1, 0]);
        let mut cuts = CutSet::new();
        cuts.insert("x", vec![53.0]);
        let d = discretize(&t, &cuts).unwrap();
        assert_eq!(d.cell_text(0, 0), "[53,*)");
        assert_eq!(d.cell_text(1, 0), "[*,53)");
        // already discretized: rejected
        assert_eq!(
            discretize(&d, &cuts).unwrap_err(),
            Error::NotNumericAttribute("x".into())
        );
        let e = discretize(&t, &CutSet::new()).unwrap();
        assert_eq!(e.cell_text(0, 0), "[*,*)");
        assert_eq!(e.cell_text(1, 0), "[*,*)");
    }
}
