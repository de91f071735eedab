use rfsearch_core::actions::{ActionKind, ActionSpec};
use rfsearch_core::designer::CandidateProgram;
use rfsearch_core::eval::{format_feedback, SeriesSummary, TrainingFeedback};
use rfsearch_core::prompts::{assemble_prompt, unresolved_placeholders, TaskText};
use rfsearch_core::tree::{NodeId, NodeOutcome, SearchTree};
use serde_json::Value;

const INPUTS: &str = include_str!("fixtures/prompts/inputs.json");

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn build_tree(nodes: &[Value]) -> SearchTree {
    let mut tree = SearchTree::new();
    for n in nodes {
        let components = n["components"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| (c[0].as_str().unwrap().to_string(), SeriesSummary::from_values(floats(&c[1]))))
            .collect();
        let task = floats(&n["task_score"]);
        let final_score = task.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let feedback = TrainingFeedback {
            components,
            task_score: SeriesSummary::from_values(task),
            episode_lengths: SeriesSummary::from_values(floats(&n["episode_lengths"])),
            epoch_freq: 20,
            final_score,
        };
        let candidate = CandidateProgram::new(
            n["source"].as_str().unwrap(),
            n["thought"].as_str().unwrap(),
            ActionKind::Init,
            None,
        );
        tree.attach(None, candidate, ActionKind::Init, NodeOutcome::Evaluated { feedback, self_verify: 0.0 });
    }
    tree
}

#[test]
fn prompts_match_fixtures() {
    let inputs: Value = serde_json::from_str(INPUTS).unwrap();
    let task = TaskText {
        description: inputs["task"]["description"].as_str().unwrap().into(),
        environment: inputs["task"]["environment"].as_str().unwrap().into(),
    };
    let epoch_freq = inputs["epoch_freq"].as_u64().unwrap() as u32;
    let tree = build_tree(inputs["nodes"].as_array().unwrap());
    let system = include_str!("fixtures/prompts/system.txt");
    for case in inputs["cases"].as_array().unwrap() {
        let kind = ActionKind::from_code(case["kind"].as_str().unwrap()).unwrap();
        let ids: Vec<NodeId> = case["context"].as_array().unwrap().iter().map(|i| NodeId(i.as_u64().unwrap() as u32)).collect();
        let mut spec = ActionSpec::new(kind);
        if kind.uses_k() {
            spec.k = Some(ids.len() as u32);
        }
        spec.context_nodes = ids.clone();
        let ctx: Vec<_> = ids.iter().map(|&id| tree.node(id)).collect();
        let bundle = assemble_prompt(&spec, &ctx, &task, epoch_freq).unwrap();
        let path = format!("{}/tests/fixtures/prompts/{}", env!("CARGO_MANIFEST_DIR"), case["file"].as_str().unwrap());
        let expected = std::fs::read_to_string(&path).unwrap();
        assert_eq!(bundle.user_text, expected, "{kind} prompt differs from {path}");
        assert_eq!(bundle.system_text, system);
        assert!(unresolved_placeholders(&bundle.user_text).is_empty(), "{kind}");
    }
}

#[test]
fn ant_feedback_block() {
    let s = |values: &[f64], max, mean, min| SeriesSummary { values: values.to_vec(), max, mean, min };
    let fb = TrainingFeedback {
        components: vec![
            (
                "reward_forward_velocity".into(),
                s(&[-0.02, 1.07, 1.47, 1.90, 2.29, 2.62, 3.00, 3.48, 3.54, 3.67], 3.73, 2.48, -0.02),
            ),
            ("reward_to_target".into(), s(&[0.0; 10], 0.0, 0.0, 0.0)),
        ],
        task_score: s(&[-0.02, 1.08, 1.48, 1.90, 2.29, 2.60, 2.97, 3.45, 3.49, 3.62], 3.67, 2.46, -0.02),
        episode_lengths: s(
            &[59.19, 180.39, 285.69, 425.37, 519.28, 578.28, 634.42, 644.16, 633.70, 649.94],
            717.00,
            494.84,
            59.19,
        ),
        epoch_freq: 10,
        final_score: 3.67,
    };
    fb.validate().unwrap();
    assert_eq!(format_feedback(&fb), include_str!("fixtures/ant_feedback.txt"));
}
