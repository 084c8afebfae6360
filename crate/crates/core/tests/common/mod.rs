//! Independent reference implementations used as test oracles, plus the
//! table generators shared by the property and acceptance suites.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use fdss::data::{AttributeKind, AttributeSchema, Cell, DecisionTable, Schema};
use fdss::discretize::{candidate_cuts, discretize, select_cuts, DiscreteInterval};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn cleveland_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/processed.cleveland.data")
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|v| v.to_string()).collect()
}

/// Nominal conditions `c0..` and a nominal decision `d`, from value codes.
pub fn discrete_table(arities: &[usize], decision_arity: usize, rows: &[Vec<u32>]) -> DecisionTable {
    let mut attrs: Vec<AttributeSchema> = arities
        .iter()
        .enumerate()
        .map(|(i, &n)| AttributeSchema::condition(&format!("c{i}"), AttributeKind::Nominal { labels: labels(n) }, ""))
        .collect();
    attrs.push(AttributeSchema::decision(
        "d",
        AttributeKind::Nominal {
            labels: labels(decision_arity),
        },
        "",
    ));
    let rows = rows.iter().map(|r| r.iter().map(|&v| Cell::Code(v)).collect()).collect();
    DecisionTable::new(Schema::new(attrs).unwrap(), rows).unwrap()
}

/// Random table with at most `max_objects` objects and `max_attrs` conditions,
/// every attribute (decision included) taking at most `max_values` values.
pub fn random_discrete(rng: &mut ChaCha8Rng, max_objects: usize, max_attrs: usize, max_values: usize) -> DecisionTable {
    let n = rng.gen_range(1..=max_objects);
    let m = rng.gen_range(1..=max_attrs);
    let arities: Vec<usize> = (0..m).map(|_| rng.gen_range(1..=max_values)).collect();
    let d_arity = rng.gen_range(1..=max_values);
    let rows: Vec<Vec<u32>> = (0..n)
        .map(|_| {
            let mut r: Vec<u32> = arities.iter().map(|&a| rng.gen_range(0..a as u32)).collect();
            r.push(rng.gen_range(0..d_arity as u32));
            r
        })
        .collect();
    discrete_table(&arities, d_arity, &rows)
}

/// Raw value codes: conditions first, decision last.
pub fn codes(t: &DecisionTable) -> Vec<Vec<u32>> {
    t.rows().iter().map(|r| r.iter().map(|c| c.code().unwrap()).collect()).collect()
}

fn key(row: &[u32], attrs: &[usize]) -> Vec<u32> {
    attrs.iter().map(|&a| row[a]).collect()
}

/// Objects indiscernible from `x` over `attrs`, by pairwise comparison.
pub fn class_of(rows: &[Vec<u32>], attrs: &[usize], x: usize) -> BTreeSet<usize> {
    (0..rows.len()).filter(|&y| key(&rows[y], attrs) == key(&rows[x], attrs)).collect()
}

pub fn lower(rows: &[Vec<u32>], attrs: &[usize], x: &BTreeSet<usize>) -> BTreeSet<usize> {
    (0..rows.len()).filter(|&o| class_of(rows, attrs, o).is_subset(x)).collect()
}

pub fn upper(rows: &[Vec<u32>], attrs: &[usize], x: &BTreeSet<usize>) -> BTreeSet<usize> {
    (0..rows.len()).filter(|&o| !class_of(rows, attrs, o).is_disjoint(x)).collect()
}

/// Objects whose whole indiscernibility class shares their decision.
pub fn pos(rows: &[Vec<u32>], attrs: &[usize]) -> BTreeSet<usize> {
    let d = rows.first().map_or(0, |r| r.len() - 1);
    (0..rows.len())
        .filter(|&o| class_of(rows, attrs, o).iter().all(|&y| rows[y][d] == rows[o][d]))
        .collect()
}

/// Every subset of `0..m` preserving the positive region, minimal under
/// single-attribute removal, in lexicographic order of sorted index lists.
pub fn brute_force_reducts(rows: &[Vec<u32>], m: usize) -> Vec<Vec<usize>> {
    let all: Vec<usize> = (0..m).collect();
    let target = pos(rows, &all);
    let preserves = |s: &[usize]| pos(rows, s) == target;
    let mut out: Vec<Vec<usize>> = Vec::new();
    for mask in 0u32..(1 << m) {
        let subset: Vec<usize> = (0..m).filter(|&a| mask & (1 << a) != 0).collect();
        if !preserves(&subset) {
            continue;
        }
        let minimal = subset.iter().all(|&drop| {
            let smaller: Vec<usize> = subset.iter().copied().filter(|&a| a != drop).collect();
            !preserves(&smaller)
        });
        if minimal {
            out.push(subset);
        }
    }
    out.sort();
    out
}

/// Candidate thresholds by definition: midpoints between adjacent distinct
/// values, skipping boundaries where both sides carry one identical decision.
pub fn reference_candidates(values: &[(f64, u32)]) -> Vec<f64> {
    let mut distinct: Vec<f64> = values.iter().map(|v| v.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let decisions = |x: f64| -> BTreeSet<u32> { values.iter().filter(|v| v.0 == x).map(|v| v.1).collect() };
    distinct
        .windows(2)
        .filter(|w| {
            let (l, r) = (decisions(w[0]), decisions(w[1]));
            !(l.len() == 1 && l == r)
        })
        .map(|w| (w[0] + w[1]) / 2.0)
        .collect()
}

/// Trapezoid membership written out directly; infinite feet are shoulders.
pub fn trapezoid(x: f64, a: f64, b: f64, c: f64, d: f64) -> f64 {
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

pub fn out_no(x: f64) -> f64 {
    trapezoid(x, 0.0, 0.0, 30.0, 70.0).max(if x <= 0.0 { 1.0 } else { 0.0 })
}

pub fn out_yes(x: f64) -> f64 {
    trapezoid(x, 30.0, 70.0, 100.0, 100.0).max(if x >= 100.0 { 1.0 } else { 0.0 })
}

/// Exact centroid of `max(min(h_no, NO), min(h_yes, YES))` over [0, 100].
///
/// The aggregate is piecewise linear; it is linear between consecutive
/// points of the set below, so integrating each piece in closed form is exact.
pub fn exact_centroid(h_no: f64, h_yes: f64) -> Option<f64> {
    if h_no <= 0.0 && h_yes <= 0.0 {
        return None;
    }
    let mut xs: Vec<f64> = vec![0.0, 30.0, 50.0, 70.0, 100.0];
    for h in [h_no, h_yes] {
        if h > 0.0 && h < 1.0 {
            // NO falls on [30, 70]; YES rises on [30, 70]
            xs.push(70.0 - 40.0 * h);
            xs.push(30.0 + 40.0 * h);
        }
    }
    xs.retain(|x| (0.0..=100.0).contains(x));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mu = |x: f64| h_no.min(out_no(x)).max(h_yes.min(out_yes(x)));
    let (mut area, mut moment) = (0.0, 0.0);
    for w in xs.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ma, mb) = (mu(a), mu(b));
        area += (b - a) * (ma + mb) / 2.0;
        moment += (b - a) / 6.0 * (a * (2.0 * ma + mb) + b * (ma + 2.0 * mb));
    }
    (area > 0.0).then(|| moment / area)
}

/// Numeric conditions `n0..` on a half-unit grid and a three-valued decision.
pub fn random_numeric(rng: &mut ChaCha8Rng, max_objects: usize, max_attrs: usize) -> DecisionTable {
    let n = rng.gen_range(1..=max_objects);
    let m = rng.gen_range(1..=max_attrs);
    let mut attrs: Vec<AttributeSchema> = (0..m)
        .map(|i| AttributeSchema::condition(&format!("n{i}"), AttributeKind::Numeric, ""))
        .collect();
    attrs.push(AttributeSchema::decision("d", AttributeKind::Nominal { labels: labels(3) }, ""));
    let rows = (0..n)
        .map(|_| {
            let mut r: Vec<Cell> = (0..m).map(|_| Cell::Number(rng.gen_range(0..12) as f64 / 2.0)).collect();
            r.push(Cell::Code(rng.gen_range(0..3)));
            r
        })
        .collect();
    DecisionTable::new(Schema::new(attrs).unwrap(), rows).unwrap()
}

/// Checks that `select_cuts` keeps apart every decision-distinct pair that
/// some candidate cut separates, that selected cuts are candidates, and that
/// candidates match their definition. Returns the first violation.
pub fn cut_preservation_violation(t: &DecisionTable) -> Option<String> {
    let cuts = select_cuts(t);
    let schema = t.schema();
    let d = schema.decision_index();
    let candidates: Vec<Vec<f64>> = (0..schema.len())
        .map(|a| if a == d { vec![] } else { candidate_cuts(t, a).unwrap() })
        .collect();
    let chosen: Vec<Vec<f64>> = (0..schema.len())
        .map(|a| cuts.get(&schema.attribute(a).name).unwrap_or(&[]).to_vec())
        .collect();
    for a in schema.conditions() {
        let values: Vec<(f64, u32)> = (0..t.len())
            .map(|i| (t.cell(i, a).number().unwrap(), t.cell(i, d).code().unwrap()))
            .collect();
        if candidates[a] != reference_candidates(&values) {
            return Some(format!("attribute {a}: candidates {:?}", candidates[a]));
        }
        if let Some(c) = chosen[a].iter().find(|c| !candidates[a].contains(c)) {
            return Some(format!("attribute {a}: {c} is not a candidate"));
        }
    }
    let separates = |lists: &[Vec<f64>], i: usize, j: usize| {
        schema.conditions().into_iter().any(|a| {
            let (x, y) = (t.cell(i, a).number().unwrap(), t.cell(j, a).number().unwrap());
            lists[a].iter().any(|&c| (x < c) != (y < c))
        })
    };
    let disc = discretize(t, &cuts).unwrap();
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            if t.decision(i) == t.decision(j) || !separates(&candidates, i, j) {
                continue;
            }
            if !separates(&chosen, i, j) {
                return Some(format!("objects {i} and {j} merged by the selected cuts"));
            }
            if schema.conditions().into_iter().all(|a| disc.cell(i, a) == disc.cell(j, a)) {
                return Some(format!("objects {i} and {j} coincide after discretization"));
            }
        }
    }
    for a in schema.conditions() {
        for i in 0..t.len() {
            let v = t.cell(i, a).number().unwrap();
            let code = disc.cell(i, a).code().unwrap();
            if !DiscreteInterval::of_code(&chosen[a], code).contains(v) {
                return Some(format!("object {i}: code {code} does not contain {v}"));
            }
        }
    }
    None
}
