//! Rough-set primitives: indiscernibility partitions, approximations,
//! regions, discernibility matrices and reduct search.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::bitset::BitSet;
use crate::data::{Cell, DecisionTable, ObjectSet, Role};
use crate::error::{Error, Result};

/// Default largest attribute count handled by exhaustive reduct search.
pub const EXHAUSTIVE_BOUND: usize = 16;

/// Equivalence classes of the indiscernibility relation, ordered by their
/// smallest object id.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    blocks: Vec<ObjectSet>,
}

impl Partition {
    pub fn blocks(&self) -> &[ObjectSet] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block containing `id`.
    pub fn block_of(&self, id: usize) -> Option<&ObjectSet> {
        self.blocks.iter().find(|b| b.contains(id))
    }
}

fn check_discrete_conditions(table: &DecisionTable, attrs: &[usize]) -> Result<()> {
    let schema = table.schema();
    for &a in attrs {
        if a >= schema.len() {
            return Err(Error::UnknownAttribute(format!("#{a}")));
        }
        let attr = schema.attribute(a);
        if attr.role != Role::Condition {
            return Err(Error::Schema(format!("`{}` is not a condition", attr.name)));
        }
        if attr.kind.is_numeric() {
            return Err(Error::NotDiscrete(attr.name.clone()));
        }
    }
    Ok(())
}

fn check_objects(table: &DecisionTable, set: &ObjectSet) -> Result<()> {
    match set.iter().find(|&id| id >= table.len()) {
        Some(id) => Err(Error::ForeignObject(id)),
        None => Ok(()),
    }
}

fn key(row: &[Cell], attrs: &[usize]) -> Vec<Option<u32>> {
    attrs.iter().map(|&a| row[a].code()).collect()
}

/// Partition of the universe induced by `attrs`. An empty attribute set
/// yields a single block.
pub fn partition(table: &DecisionTable, attrs: &[usize]) -> Result<Partition> {
    check_discrete_conditions(table, attrs)?;
    let mut index: HashMap<Vec<Option<u32>>, usize> = HashMap::new();
    let mut blocks: Vec<ObjectSet> = Vec::new();
    for id in 0..table.len() {
        let k = key(table.row(id), attrs);
        let b = *index.entry(k).or_insert_with(|| {
            blocks.push(ObjectSet::new());
            blocks.len() - 1
        });
        blocks[b].insert(id);
    }
    Ok(Partition { blocks })
}

pub fn lower_approximation(table: &DecisionTable, attrs: &[usize], x: &ObjectSet) -> Result<ObjectSet> {
    check_objects(table, x)?;
    let p = partition(table, attrs)?;
    let mut out = ObjectSet::new();
    for block in p.blocks().iter().filter(|b| b.is_subset(x)) {
        out = out.union(block);
    }
    Ok(out)
}

pub fn upper_approximation(table: &DecisionTable, attrs: &[usize], x: &ObjectSet) -> Result<ObjectSet> {
    check_objects(table, x)?;
    let p = partition(table, attrs)?;
    let mut out = ObjectSet::new();
    for block in p.blocks().iter().filter(|b| b.iter().any(|id| x.contains(id))) {
        out = out.union(block);
    }
    Ok(out)
}

pub fn boundary_region(table: &DecisionTable, attrs: &[usize], x: &ObjectSet) -> Result<ObjectSet> {
    let upper = upper_approximation(table, attrs, x)?;
    let lower = lower_approximation(table, attrs, x)?;
    Ok(upper.difference(&lower))
}

/// Objects whose decision class is determined by `attrs`: the union of
/// lower approximations of all decision classes.
pub fn positive_region(table: &DecisionTable, attrs: &[usize]) -> Result<ObjectSet> {
    let mut out = ObjectSet::new();
    for d in table.decision_values() {
        let class: ObjectSet = (0..table.len()).filter(|&i| table.decision(i) == Some(d)).collect();
        out = out.union(&lower_approximation(table, attrs, &class)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixMode {
    /// Every pair of objects.
    Full,
    /// Pairs with different decisions where at least one object lies in the
    /// positive region of all conditions.
    DecisionRelative,
    /// Pairs containing the given object with a different decision.
    ObjectRelative(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEntry {
    pub i: usize,
    pub j: usize,
    /// Bit `k` set when the pair differs on `attributes[k]`.
    pub attrs: BitSet,
}

/// Per-pair sets of discerning condition attributes. Only pairs kept by the
/// mode are stored, with `i < j`; the diagonal is never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscernibilityMatrix {
    mode: MatrixMode,
    attributes: Vec<usize>,
    objects: usize,
    entries: Vec<MatrixEntry>,
}

impl DiscernibilityMatrix {
    /// Build a matrix from explicit entries; bits index into `attributes`.
    pub fn from_entries(mode: MatrixMode, attributes: Vec<usize>, objects: usize, entries: Vec<MatrixEntry>) -> Self {
        DiscernibilityMatrix {
            mode,
            attributes,
            objects,
            entries,
        }
    }

    pub fn mode(&self) -> MatrixMode {
        self.mode
    }

    /// Schema indices of the condition attributes, in schema order.
    pub fn attributes(&self) -> &[usize] {
        &self.attributes
    }

    pub fn objects(&self) -> usize {
        self.objects
    }

    pub fn entries(&self) -> &[MatrixEntry] {
        &self.entries
    }

    /// Entry for an unordered pair, if the mode keeps it.
    pub fn entry(&self, a: usize, b: usize) -> Option<&BitSet> {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.entries
            .iter()
            .find(|e| e.i == i && e.j == j)
            .map(|e| &e.attrs)
    }

    /// Non-empty entry sets; empty ones come from inconsistent pairs.
    pub fn non_empty(&self) -> impl Iterator<Item = &BitSet> {
        self.entries.iter().map(|e| &e.attrs).filter(|s| !s.is_empty())
    }

    fn reduct_kind(&self) -> ReductKind {
        match self.mode {
            MatrixMode::Full => ReductKind::Full,
            MatrixMode::DecisionRelative => ReductKind::DecisionRelative,
            MatrixMode::ObjectRelative(x) => ReductKind::ObjectRelative(x),
        }
    }

    fn to_reduct(&self, bits: impl IntoIterator<Item = usize>) -> Reduct {
        let mut attributes: Vec<usize> = bits.into_iter().map(|k| self.attributes[k]).collect();
        attributes.sort_unstable();
        Reduct {
            attributes,
            kind: self.reduct_kind(),
        }
    }
}

pub fn discernibility_matrix(table: &DecisionTable, mode: MatrixMode) -> Result<DiscernibilityMatrix> {
    let attributes = table.schema().conditions();
    check_discrete_conditions(table, &attributes)?;
    let n = table.len();
    let codes: Vec<Vec<Option<u32>>> = (0..n).map(|i| key(table.row(i), &attributes)).collect();
    let differ = |i: usize, j: usize| {
        let mut set = BitSet::new(attributes.len());
        for (k, (a, b)) in codes[i].iter().zip(&codes[j]).enumerate() {
            if a != b {
                set.insert(k);
            }
        }
        set
    };
    let pair = |i: usize, j: usize| MatrixEntry {
        i: i.min(j),
        j: i.max(j),
        attrs: differ(i, j),
    };
    let entries = match mode {
        MatrixMode::Full => (0..n)
            .into_par_iter()
            .flat_map_iter(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| pair(i, j))
            .collect(),
        MatrixMode::DecisionRelative => {
            let pos = positive_region(table, &attributes)?;
            (0..n)
                .into_par_iter()
                .flat_map_iter(|i| ((i + 1)..n).map(move |j| (i, j)))
                .filter(|&(i, j)| {
                    table.decision(i) != table.decision(j) && (pos.contains(i) || pos.contains(j))
                })
                .map(|(i, j)| pair(i, j))
                .collect()
        }
        MatrixMode::ObjectRelative(x) => {
            if x >= n {
                return Err(Error::ForeignObject(x));
            }
            (0..n)
                .filter(|&y| y != x && table.decision(y) != table.decision(x))
                .map(|y| pair(x, y))
                .collect()
        }
    };
    Ok(DiscernibilityMatrix {
        mode,
        attributes,
        objects: n,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReductKind {
    Full,
    DecisionRelative,
    ObjectRelative(usize),
}

/// Minimal set of condition attributes hitting every non-empty matrix entry.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Reduct {
    /// Schema indices, ascending.
    pub attributes: Vec<usize>,
    pub kind: ReductKind,
}

impl Reduct {
    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }
}

/// Entries as bit masks, keeping only inclusion-minimal ones.
fn absorbed_masks(matrix: &DiscernibilityMatrix) -> Vec<u64> {
    let mut masks: Vec<u64> = matrix
        .non_empty()
        .map(|s| s.iter().fold(0u64, |m, k| m | (1 << k)))
        .collect();
    masks.sort_unstable_by_key(|m| (m.count_ones(), *m));
    masks.dedup();
    let mut kept: Vec<u64> = Vec::new();
    for m in masks {
        if !kept.iter().any(|&k| k & m == k) {
            kept.push(m);
        }
    }
    kept
}

fn minimize(mut sets: Vec<u64>) -> Vec<u64> {
    sets.sort_unstable_by_key(|m| (m.count_ones(), *m));
    sets.dedup();
    let mut kept: Vec<u64> = Vec::new();
    for m in sets {
        if !kept.iter().any(|&k| k & m == k) {
            kept.push(m);
        }
    }
    kept
}

/// All reducts: the minimal hitting sets of the non-empty entries, found by
/// incremental transversal (Berge) over the absorbed entry family.
pub fn reducts_exhaustive(matrix: &DiscernibilityMatrix, bound: usize) -> Result<Vec<Reduct>> {
    let n = matrix.attributes.len();
    if n > bound.min(64) {
        return Err(Error::ExhaustiveBound { attributes: n, bound });
    }
    let mut transversals: Vec<u64> = vec![0];
    for entry in absorbed_masks(matrix) {
        let mut next = Vec::with_capacity(transversals.len());
        for &t in &transversals {
            if t & entry != 0 {
                next.push(t);
            } else {
                let mut bits = entry;
                while bits != 0 {
                    let b = bits & bits.wrapping_neg();
                    next.push(t | b);
                    bits &= bits - 1;
                }
            }
        }
        transversals = minimize(next);
    }
    let mut out: Vec<Reduct> = transversals
        .into_iter()
        .map(|m| matrix.to_reduct((0..n).filter(move |k| m & (1 << k) != 0)))
        .collect();
    out.sort();
    Ok(out)
}

/// Johnson-style greedy reduct with ties broken by schema order.
pub fn reduct_greedy(matrix: &DiscernibilityMatrix) -> Reduct {
    let order: Vec<usize> = (0..matrix.attributes.len()).collect();
    reduct_greedy_with_order(matrix, &order)
}

/// Greedy reduct where ties go to the attribute appearing first in
/// `order` (positions into `matrix.attributes()`).
pub fn reduct_greedy_with_order(matrix: &DiscernibilityMatrix, order: &[usize]) -> Reduct {
    let n = matrix.attributes.len();
    let entries: Vec<&BitSet> = matrix.non_empty().collect();
    let m = entries.len();
    // attribute -> entries containing it
    let mut columns: Vec<BitSet> = vec![BitSet::new(m); n];
    for (e, set) in entries.iter().enumerate() {
        for k in set.iter() {
            columns[k].insert(e);
        }
    }
    let mut uncovered = BitSet::full(m);
    let mut picked: Vec<usize> = Vec::new();
    while !uncovered.is_empty() {
        let gains: Vec<usize> = order
            .par_iter()
            .map(|&k| columns[k].intersection_count(&uncovered))
            .collect();
        let (pos, gain) = gains
            .iter()
            .enumerate()
            .fold((0, 0), |(bp, bg), (p, &g)| if g > bg { (p, g) } else { (bp, bg) });
        debug_assert!(gain > 0, "non-empty entries always have a hitting attribute");
        let k = order[pos];
        picked.push(k);
        uncovered.difference_with(&columns[k]);
    }
    // prune in reverse insertion order
    let mut cover = vec![0usize; m];
    for &k in &picked {
        for e in columns[k].iter() {
            cover[e] += 1;
        }
    }
    let mut keep = vec![true; picked.len()];
    for idx in (0..picked.len()).rev() {
        let k = picked[idx];
        if columns[k].iter().all(|e| cover[e] >= 2) {
            keep[idx] = false;
            for e in columns[k].iter() {
                cover[e] -= 1;
            }
        }
    }
    matrix.to_reduct(picked.into_iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| p))
}

/// True when `attrs` (schema indices) hit every non-empty entry.
pub fn is_hitting_set(matrix: &DiscernibilityMatrix, attrs: &[usize]) -> bool {
    let bits = BitSet::from_indices(
        matrix.attributes.len(),
        attrs
            .iter()
            .filter_map(|a| matrix.attributes.iter().position(|x| x == a)),
    );
    matrix.non_empty().all(|e| e.intersects(&bits))
}

/// Hitting set from which no single attribute can be removed.
pub fn is_minimal_hitting_set(matrix: &DiscernibilityMatrix, attrs: &[usize]) -> bool {
    is_hitting_set(matrix, attrs)
        && (0..attrs.len()).all(|skip| {
            let rest: Vec<usize> = attrs
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, &a)| a)
                .collect();
            !is_hitting_set(matrix, &rest)
        })
}

/// Reducts discerning object `x` from every object with another decision.
/// Falls back to a single greedy reduct above `bound` attributes.
pub fn object_relative_reducts(table: &DecisionTable, x: usize, bound: usize) -> Result<Vec<Reduct>> {
    if x >= table.len() {
        return Err(Error::ForeignObject(x));
    }
    let matrix = discernibility_matrix(table, MatrixMode::ObjectRelative(x))?;
    match reducts_exhaustive(&matrix, bound) {
        Ok(r) => Ok(r),
        Err(Error::ExhaustiveBound { .. }) => Ok(vec![reduct_greedy(&matrix)]),
        Err(e) => Err(e),
    }
}
