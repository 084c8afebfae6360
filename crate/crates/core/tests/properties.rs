mod common;

use std::collections::BTreeSet;

use fdss::data::{
    impute, load_table_str, split_ids, uci_heart_14, AttributeKind, AttributeSchema, Cell, DecisionTable, ImputePolicy,
    ObjectSet, Schema,
};
use fdss::evaluation::{crisp_evaluate, evaluate, VotePolicy};
use fdss::fuzzy::{
    build_memberships, rule_weights, FuzzyRule, FuzzyRuleBase, OutputLabel, OutputVariable, Term, DEFAULT_THRESHOLD,
};
use fdss::inference::{fire, infer, FallbackPolicy, InferenceOptions, InputValue, MissingPolicy, PatientInput};
use fdss::rough::{
    boundary_region, discernibility_matrix, lower_approximation, positive_region, reduct_greedy_with_order,
    reducts_exhaustive, upper_approximation, MatrixMode,
};
use fdss::rules::generate_rules;
use fdss::selection::rule_applies;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn set(o: &ObjectSet) -> BTreeSet<usize> {
    o.iter().collect()
}

fn random_target(rng: &mut ChaCha8Rng, n: usize) -> BTreeSet<usize> {
    (0..n).filter(|_| rng.gen_bool(0.5)).collect()
}

fn random_attrs(rng: &mut ChaCha8Rng, m: usize) -> Vec<usize> {
    (0..m).filter(|_| rng.gen_bool(0.5)).collect()
}

proptest! {
    #[test]
    fn approximations_bracket_the_target(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_discrete(&mut rng, 9, 4, 3);
        let rows = codes(&t);
        let m = t.schema().len() - 1;
        let attrs = random_attrs(&mut rng, m);
        let x = random_target(&mut rng, t.len());
        let xs = ObjectSet::for_table(&t, x.iter().copied()).unwrap();
        let lo = set(&lower_approximation(&t, &attrs, &xs).unwrap());
        let up = set(&upper_approximation(&t, &attrs, &xs).unwrap());
        let bd = set(&boundary_region(&t, &attrs, &xs).unwrap());
        prop_assert!(lo.is_subset(&x));
        prop_assert!(x.is_subset(&up));
        prop_assert_eq!(&bd, &up.difference(&lo).copied().collect());
        prop_assert_eq!(bd.is_empty(), lo == up);
        prop_assert_eq!(lo, lower(&rows, &attrs, &x));
        prop_assert_eq!(up, upper(&rows, &attrs, &x));
        prop_assert_eq!(set(&positive_region(&t, &attrs).unwrap()), pos(&rows, &attrs));
    }

    #[test]
    fn lower_approximation_grows_with_attributes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_discrete(&mut rng, 9, 5, 3);
        let m = t.schema().len() - 1;
        let small = random_attrs(&mut rng, m);
        let mut large: Vec<usize> = small.iter().copied().chain(random_attrs(&mut rng, m)).collect();
        large.sort();
        large.dedup();
        let x = ObjectSet::for_table(&t, random_target(&mut rng, t.len())).unwrap();
        let lo_small = lower_approximation(&t, &small, &x).unwrap();
        let lo_large = lower_approximation(&t, &large, &x).unwrap();
        prop_assert!(lo_small.is_subset(&lo_large));
        let up_small = upper_approximation(&t, &small, &x).unwrap();
        let up_large = upper_approximation(&t, &large, &x).unwrap();
        prop_assert!(up_large.is_subset(&up_small));
    }

    #[test]
    fn reducts_preserve_positive_region_and_are_minimal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_discrete(&mut rng, 8, 5, 3);
        let rows = codes(&t);
        let m = t.schema().len() - 1;
        let all: Vec<usize> = (0..m).collect();
        let target = pos(&rows, &all);
        let matrix = discernibility_matrix(&t, MatrixMode::DecisionRelative).unwrap();
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng);
        let mut found = reducts_exhaustive(&matrix, 16).unwrap();
        found.push(reduct_greedy_with_order(&matrix, &order));
        for r in found {
            prop_assert_eq!(pos(&rows, &r.attributes), target.clone());
            for drop in &r.attributes {
                let smaller: Vec<usize> = r.attributes.iter().copied().filter(|a| a != drop).collect();
                prop_assert_ne!(pos(&rows, &smaller), target.clone());
            }
        }
    }

    #[test]
    fn exhaustive_reducts_match_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_discrete(&mut rng, 7, 5, 3);
        let m = t.schema().len() - 1;
        let matrix = discernibility_matrix(&t, MatrixMode::DecisionRelative).unwrap();
        let got: Vec<Vec<usize>> = reducts_exhaustive(&matrix, 16).unwrap().into_iter().map(|r| r.attributes).collect();
        prop_assert_eq!(got, brute_force_reducts(&codes(&t), m));
    }

    #[test]
    fn split_parts_reunite(n in 1usize..400, fraction in 0.01f64..0.99, seed in any::<u64>()) {
        let (a, b) = split_ids(n, fraction, seed).unwrap();
        prop_assert_eq!(a.len(), (fraction * n as f64).round() as usize);
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(a.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(b.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn load_round_trips_and_imputation_keeps_known_cells(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..30);
        let mut text = String::new();
        for _ in 0..n {
            let mut cells: Vec<String> = (0..13)
                .map(|a| {
                    if rng.gen_bool(0.1) {
                        return "?".to_string();
                    }
                    match a {
                        1 | 5 | 8 => rng.gen_range(0..2).to_string(),
                        2 => rng.gen_range(1..5).to_string(),
                        6 => rng.gen_range(0..3).to_string(),
                        10 => rng.gen_range(1..4).to_string(),
                        12 => ["3", "6", "7"][rng.gen_range(0..3)].to_string(),
                        9 => format!("{}.{}", rng.gen_range(0..6), rng.gen_range(1..10)),
                        _ => rng.gen_range(0..300).to_string(),
                    }
                })
                .collect();
            cells.push(rng.gen_range(0..2).to_string());
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        let schema = uci_heart_14();
        let t = load_table_str(&text, &schema).unwrap();
        prop_assert_eq!(t.to_delimited(), text.clone());
        prop_assert_eq!(load_table_str(&t.to_delimited(), &schema).unwrap(), t.clone());

        let filled = match impute(&t, ImputePolicy::ModeMedian) {
            Ok(f) => f,
            Err(fdss::Error::AllMissing(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert_eq!(filled.len(), t.len());
        for i in 0..t.len() {
            for a in 0..schema.len() {
                if !t.cell(i, a).is_missing() {
                    prop_assert_eq!(filled.cell(i, a), t.cell(i, a));
                } else {
                    prop_assert!(!filled.cell(i, a).is_missing());
                }
            }
        }
    }

    #[test]
    fn selected_cuts_preserve_discernibility(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_numeric(&mut rng, 30, 3);
        let violation = cut_preservation_violation(&t);
        prop_assert!(violation.is_none(), "{:?}", violation);
    }

    #[test]
    fn memberships_stay_in_unit_interval(
        raw in prop::collection::btree_set(-500i32..500, 1..5),
        xs in prop::collection::vec(-1000.0f64..1000.0, 1..40),
        sixty_fourths in 4u32..32,
    ) {
        // dyadic spreads keep the breakpoints exact, so crossovers are exactly 0.5
        let factor = sixty_fourths as f64 / 64.0;
        let cuts: Vec<f64> = raw.iter().map(|&v| v as f64).collect();
        let gap = cuts.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let spread = if cuts.len() == 1 { 3.0 } else { factor * gap };
        let var = build_memberships("x", &cuts, spread, [-1000.0, 1000.0]).unwrap();
        for &x in &xs {
            for f in &var.functions {
                let mu = f.shape.eval(x);
                prop_assert!((0.0..=1.0).contains(&mu), "{} at {x} = {mu}", f.label);
            }
        }
        let k = cuts.len();
        prop_assert_eq!(var.functions[0].shape.eval(cuts[0]), 0.5);
        prop_assert_eq!(var.functions[k].shape.eval(cuts[k - 1]), 0.5);
        for (i, w) in cuts.windows(2).enumerate() {
            prop_assert_eq!(var.functions[i + 1].shape.eval((w[0] + w[1]) / 2.0), 1.0);
        }
        // each interval's midpoint (clamped for the open ends) has its own set as unique argmax
        let (lo, hi) = (cuts[0] - 10.0, cuts[k - 1] + 10.0);
        for j in 0..=k {
            let left = if j == 0 { lo } else { cuts[j - 1] };
            let right = if j == k { hi } else { cuts[j] };
            let mid = (left + right) / 2.0;
            let mus: Vec<f64> = var.functions.iter().map(|f| f.shape.eval(mid)).collect();
            for (i, &mu) in mus.iter().enumerate() {
                if i != j {
                    prop_assert!(mus[j] > mu, "interval {j} at {mid}: {mus:?}");
                }
            }
        }
    }

    #[test]
    fn weights_are_scale_free(supports in prop::collection::vec(1usize..10_000, 1..50), scale in 1usize..1000) {
        let w = rule_weights(&supports).unwrap();
        prop_assert_eq!(w.iter().copied().fold(0.0, f64::max), 1.0);
        prop_assert!(w.iter().all(|&x| x > 0.0 && x <= 1.0));
        let scaled: Vec<usize> = supports.iter().map(|s| s * scale).collect();
        prop_assert_eq!(rule_weights(&scaled).unwrap(), w);
    }

    #[test]
    fn one_sided_evidence_lands_on_its_side(
        acts in prop::collection::vec(0.01f64..1.0, 1..4),
        yes in any::<bool>(),
        depth in 0.0f64..45.0,
    ) {
        // inside the tested set's support: HIGH starts at 40, LOW ends at 60
        let x = if yes { 100.0 - depth } else { depth };
        let label = if yes { OutputLabel::Yes } else { OutputLabel::No };
        let rules: Vec<(OutputLabel, f64)> = acts.iter().map(|&w| (label, w)).collect();
        let base = single_variable_base(&rules);
        let r = infer(&base, &PatientInput::new().with("x", InputValue::Number(x)), InferenceOptions::default()).unwrap();
        let p = r.percentage.unwrap();
        prop_assert!(if yes { p > 50.0 } else { p < 50.0 }, "{p}");
    }

    #[test]
    fn sweeping_an_unused_attribute_is_flat(
        weights in prop::collection::vec((any::<bool>(), 0.01f64..1.0), 1..4),
        x in 0.0f64..100.0,
        zs in prop::collection::vec(-1e3f64..1e3, 1..8),
    ) {
        let rules: Vec<(OutputLabel, f64)> = weights
            .iter()
            .map(|&(yes, w)| (if yes { OutputLabel::Yes } else { OutputLabel::No }, w))
            .collect();
        let mut base = single_variable_base(&rules);
        base.variables.push(build_memberships("z", &[0.0], 5.0, [-1e3, 1e3]).unwrap());
        let at = |z: Option<f64>| {
            let mut input = PatientInput::new().with("x", InputValue::Number(x));
            if let Some(z) = z {
                input.set("z", InputValue::Number(z));
            }
            infer(&base, &input, InferenceOptions::default()).unwrap().percentage
        };
        let reference = at(None);
        for z in zs {
            prop_assert_eq!(at(Some(z)), reference);
        }
    }

    #[test]
    fn activation_monotone_in_degree_and_weight(
        x1 in 0.0f64..100.0,
        dx in 0.0f64..50.0,
        w1 in 0.01f64..1.0,
        dw in 0.0f64..1.0,
    ) {
        // the HIGH set of a one-cut variable is non-decreasing in x
        let low = |w: f64| single_variable_base(&[(OutputLabel::Yes, w)]);
        let fire_at = |base: &FuzzyRuleBase, x: f64| {
            fire(base, &PatientInput::new().with("x", InputValue::Number(x)), MissingPolicy::Conservative).unwrap()[0]
        };
        let w2 = (w1 + dw).min(1.0);
        prop_assert!(fire_at(&low(w1), x1) <= fire_at(&low(w1), x1 + dx));
        prop_assert!(fire_at(&low(w1), x1) <= fire_at(&low(w2), x1));
    }

    #[test]
    fn generated_rules_hold_on_their_origins(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_discrete(&mut rng, 10, 4, 3);
        let g = generate_rules(&t).unwrap();
        for rule in &g.rules.rules {
            prop_assert!(rule.support >= 1);
            for &o in &rule.origin {
                prop_assert!(rule_applies(rule, &t, o).unwrap());
            }
        }
        prop_assert_eq!(generate_rules(&t).unwrap(), g);
    }

    #[test]
    fn coverage_never_drops_as_rules_are_added(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_binary_decision(&mut rng);
        let rules = generate_rules(&t).unwrap().rules;
        prop_assume!(!rules.is_empty());
        let mut last = 0.0;
        for k in 1..=rules.len() {
            let part = rules.with_rules(rules.rules[..k].to_vec());
            let c = crisp_evaluate(&part, &t, VotePolicy::TieYes).unwrap().metrics.coverage.unwrap();
            prop_assert!(c >= last);
            last = c;
        }
    }

    #[test]
    fn evaluation_ignores_object_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_numeric(&mut rng, 20, 2);
        let t = binary_decision(&t);
        let base = single_variable_base(&[(OutputLabel::Yes, 0.7), (OutputLabel::No, 0.9)]);
        let renamed = rename_first(&t, "x");
        let mut order: Vec<usize> = (0..t.len()).collect();
        order.shuffle(&mut rng);
        let shuffled = renamed.subset(&order);
        for policy in [FallbackPolicy::Passthrough, FallbackPolicy::MajorityClass] {
            let a = evaluate(&base, &drop_to_first(&renamed), DEFAULT_THRESHOLD, policy, InferenceOptions::default()).unwrap();
            let b = evaluate(&base, &drop_to_first(&shuffled), DEFAULT_THRESHOLD, policy, InferenceOptions::default()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

/// A base over one numeric variable `x` (cut at 50): YES rules test HIGH,
/// NO rules test LOW; `rules` gives consequents and weights.
fn single_variable_base(rules: &[(OutputLabel, f64)]) -> FuzzyRuleBase {
    let var = build_memberships("x", &[50.0], 10.0, [0.0, 100.0]).unwrap();
    FuzzyRuleBase {
        variables: vec![var],
        rules: rules
            .iter()
            .enumerate()
            .map(|(i, &(label, weight))| FuzzyRule {
                terms: vec![Term {
                    attribute: "x".into(),
                    labels: vec![if label == OutputLabel::Yes { "HIGH" } else { "LOW" }.into()],
                }],
                consequent: label,
                weight,
                source_rule: i,
                source_support: 1,
            })
            .collect(),
        output: OutputVariable::default(),
        threshold: DEFAULT_THRESHOLD,
        majority: OutputLabel::No,
    }
}

fn binary_decision(t: &DecisionTable) -> DecisionTable {
    let mut attrs: Vec<AttributeSchema> = t.schema().attributes().to_vec();
    let d = t.schema().decision_index();
    attrs[d].kind = AttributeKind::Binary;
    let rows = t
        .rows()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r[d] = Cell::Code(r[d].code().unwrap().min(1));
            r
        })
        .collect();
    DecisionTable::new(Schema::new(attrs).unwrap(), rows).unwrap()
}

fn random_binary_decision(rng: &mut ChaCha8Rng) -> DecisionTable {
    let t = random_discrete(rng, 10, 4, 3);
    let mut attrs: Vec<AttributeSchema> = t.schema().attributes().to_vec();
    let d = t.schema().decision_index();
    attrs[d].kind = AttributeKind::Binary;
    let rows = t
        .rows()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r[d] = Cell::Code(r[d].code().unwrap().min(1));
            r
        })
        .collect();
    DecisionTable::new(Schema::new(attrs).unwrap(), rows).unwrap()
}

fn rename_first(t: &DecisionTable, name: &str) -> DecisionTable {
    let mut attrs: Vec<AttributeSchema> = t.schema().attributes().to_vec();
    attrs[0].name = name.into();
    DecisionTable::new(Schema::new(attrs).unwrap(), t.rows().to_vec()).unwrap()
}

/// Keep only the first condition and the decision.
fn drop_to_first(t: &DecisionTable) -> DecisionTable {
    let d = t.schema().decision_index();
    let attrs = vec![t.schema().attribute(0).clone(), t.schema().attribute(d).clone()];
    let rows = t.rows().iter().map(|r| vec![r[0], r[d]]).collect();
    DecisionTable::new(Schema::new(attrs).unwrap(), rows).unwrap()
}
