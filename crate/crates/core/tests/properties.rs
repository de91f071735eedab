use std::collections::BTreeMap;

use proptest::prelude::*;
use rfsearch_core::actions::{schedule_expansion, ActionCounts, KRange};
use rfsearch_core::designer::parse_self_verify;
use rfsearch_core::dsl::{parse, pretty_print, BinaryOp, CmpOp, Component, Expr, RewardExpr, UnaryOp};
use rfsearch_core::eval::{format_feedback, SeriesSummary, TrainingFeedback};
use rfsearch_core::rng::SearchRng;

const VARS: [&str; 5] = ["dist", "vel_x", "prev_dist", "target_x", "action_mag"];

fn var() -> impl Strategy<Value = String> {
    prop::sample::select(&VARS[..]).prop_map(String::from)
}

fn constant() -> impl Strategy<Value = f64> {
    prop_oneof![
        (-1.0e6..1.0e6f64),
        (-10.0..10.0f64),
        (-1000i32..1000).prop_map(f64::from),
        Just(0.0),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        constant().prop_map(Expr::Const),
        var().prop_map(Expr::Var),
        prop::collection::vec(var(), 1..4).prop_map(Expr::Norm),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            (
                prop::sample::select(vec![UnaryOp::Neg, UnaryOp::Abs, UnaryOp::Exp, UnaryOp::Tanh]),
                inner.clone()
            )
                .prop_map(|(op, e)| Expr::unary(op, e)),
            (
                prop::sample::select(vec![
                    BinaryOp::Add,
                    BinaryOp::Sub,
                    BinaryOp::Mul,
                    BinaryOp::Div,
                    BinaryOp::Min,
                    BinaryOp::Max
                ]),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            (prop::sample::select(vec![CmpOp::Lt, CmpOp::Gt]), inner.clone(), inner)
                .prop_map(|(op, l, r)| Expr::gate(op, l, r)),
        ]
    })
}

fn program() -> impl Strategy<Value = RewardExpr> {
    prop::collection::vec(expr(), 1..4).prop_map(|exprs| RewardExpr {
        components: exprs
            .into_iter()
            .enumerate()
            .map(|(i, expr)| Component { name: format!("c{i}"), expr })
            .collect(),
    })
}

fn any_binding() -> impl Strategy<Value = f64> {
    prop_oneof![
        4 => -1e3..1e3f64,
        1 => any::<f64>(),
        1 => Just(0.0),
        1 => prop::sample::select(vec![f64::NAN, f64::INFINITY, f64::NEG_INFINITY, f64::MAX, f64::MIN_POSITIVE]),
    ]
}

fn bindings() -> impl Strategy<Value = BTreeMap<String, f64>> {
    prop::collection::vec(any_binding(), VARS.len())
        .prop_map(|vals| VARS.iter().map(|v| v.to_string()).zip(vals).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn pretty_print_round_trips(p in program()) {
        let text = pretty_print(&p);
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, p, "{}", text);
    }

    #[test]
    fn total_is_sum_of_components(p in program(), b in bindings()) {
        let ev = p.evaluate(&b).unwrap();
        let sum = ev.components.iter().fold(0.0, |acc, (_, v)| acc + v);
        prop_assert_eq!(ev.total, sum);
    }

    #[test]
    fn evaluation_stays_finite(p in program(), b in bindings()) {
        let ev = p.evaluate(&b).unwrap();
        prop_assert!(ev.total.is_finite());
        for (_, v) in &ev.components {
            prop_assert!(v.is_finite() && v.abs() <= 1e6);
        }
    }

    #[test]
    fn bound_evaluation_agrees(p in program(), b in bindings()) {
        let bound = p.bind(&VARS).unwrap();
        let values: Vec<f64> = VARS.iter().map(|v| b[*v]).collect();
        let mut out = vec![0.0; p.components.len()];
        let total = bound.eval_into(&values, &mut out);
        let named = p.evaluate(&b).unwrap();
        prop_assert_eq!(total.to_bits(), named.total.to_bits());
    }

    #[test]
    fn schedule_length_is_count_sum(counts in prop::array::uniform5(0u32..6), lo in 1u32..4, span in 0u32..3, seed in any::<u64>()) {
        let counts: ActionCounts = counts;
        let mut rng = SearchRng::new(seed);
        match schedule_expansion(&counts, KRange { min: lo, max: lo + span }, &mut rng) {
            Ok(specs) => prop_assert_eq!(specs.len() as u32, counts.iter().sum::<u32>()),
            Err(_) => prop_assert!(counts.iter().all(|&c| c == 0)),
        }
    }

    #[test]
    fn self_verify_is_bounded(s in ".{0,80}", inner in "-?[0-9]{1,3}(\\.[0-9]{1,4})?", tail in "[^\\[]{0,20}") {
        if let Ok(v) = parse_self_verify(&s) {
            prop_assert!((-1.0..=1.0).contains(&v));
        }
        let text = format!("{s}[{inner}]{tail}");
        let v = parse_self_verify(&text).unwrap();
        prop_assert!((-1.0..=1.0).contains(&v));
    }

    #[test]
    fn feedback_round_trips_at_two_decimals(values in prop::collection::vec(-1e4..1e4f64, 10)) {
        let fb = TrainingFeedback {
            components: vec![("x".into(), SeriesSummary::from_values(values.clone()))],
            task_score: SeriesSummary::constant(0.0),
            episode_lengths: SeriesSummary::constant(1.0),
            epoch_freq: 10,
            final_score: 0.0,
        };
        let text = format_feedback(&fb);
        let line = text.lines().next().unwrap();
        let list = &line[line.find('[').unwrap() + 1..line.find(']').unwrap()];
        let parsed: Vec<f64> = list.split(", ").map(|t| t.trim_matches('\'').parse().unwrap()).collect();
        for (a, b) in parsed.iter().zip(&values) {
            prop_assert!((a - b).abs() <= 0.005 + 1e-9);
        }
    }
}
