use rfsearch_core::actions::{ActionKind, ActionMode};
use rfsearch_core::designer::{CandidateProgram, MockDesigner, MockMode, ScriptEntry};
use rfsearch_core::eval::{LandscapeConfig, SeriesSummary, SyntheticEvaluator, TrainingFeedback};
use rfsearch_core::search::*;
use rfsearch_core::tree::{NodeId, NodeOutcome, SearchTree};

fn genome_designer() -> MockDesigner {
    MockDesigner::new(MockMode::genome(8))
}

fn cfg(budget: u32, seed: u64) -> SearchConfig {
    SearchConfig { budget, seed, ..SearchConfig::default() }
}

fn run(cfg: SearchConfig, d: &MockDesigner) -> SearchState {
    Runner::sequential(d, &SyntheticEvaluator::default()).run(cfg).unwrap()
}

#[test]
fn lambda_schedule_examples() {
    assert_eq!(lambda_schedule(0.4, 0, 80), 0.4);
    assert_eq!(lambda_schedule(0.4, 80, 80), 0.0);
    assert_eq!(lambda_schedule(0.4, 40, 80), 0.2);
}

#[test]
fn config_validation() {
    assert!(SearchConfig::default().validate().is_ok());
    let bad = [
        SearchConfig { init_count: 0, ..SearchConfig::default() },
        SearchConfig { budget: 4, ..SearchConfig::default() },
        SearchConfig { eta: 0.0, ..SearchConfig::default() },
        SearchConfig { eta: 1.5, ..SearchConfig::default() },
        SearchConfig { lambda0: -0.1, ..SearchConfig::default() },
        SearchConfig { parallelism: 0, ..SearchConfig::default() },
        SearchConfig { action_counts: [0; 5], ..SearchConfig::default() },
    ];
    for c in bad {
        assert!(c.validate().is_err(), "{c:?}");
    }
}

#[test]
fn initialize_links_init_nodes_to_root() {
    let d = genome_designer();
    let state = Runner::sequential(&d, &SyntheticEvaluator::default()).initialize(cfg(80, 1)).unwrap();
    assert_eq!(state.t, 8);
    assert_eq!(state.tree.root_children().len(), 8);
    assert!(state.tree.nodes().iter().all(|n| n.is_evaluated() && n.parent.is_none()));
    assert!(state.tree.nodes().iter().all(|n| n.self_verify.is_some()));
}

#[test]
fn scripted_parse_failure_is_repaired() {
    let script = vec![
        ScriptEntry { kind: ActionKind::Init, target: Some(NodeId(3)), revision: None, response: "{idea} but no code".into() },
        ScriptEntry {
            kind: ActionKind::Repair,
            target: Some(NodeId(3)),
            revision: Some(0),
            response: "{fixed}\n```\n0.0 0.0 0.0 0.0 0.0 0.0 0.0 0.0\n```".into(),
        },
    ];
    let d = genome_designer().with_script(script);
    let state = Runner::sequential(&d, &SyntheticEvaluator::default()).initialize(cfg(80, 1)).unwrap();
    assert_eq!(state.tree.root_children().len(), 8);
    let revised: Vec<_> = state.tree.nodes().iter().filter(|n| n.candidate.revision > 0).collect();
    assert_eq!(revised.len(), 1);
    assert_eq!(revised[0].id, NodeId(3));
    assert_eq!(revised[0].candidate.revision, 1);
    assert!(revised[0].is_evaluated());
}

#[test]
fn all_failed_initialization() {
    let script = vec![
        ScriptEntry { kind: ActionKind::Init, target: None, revision: None, response: "nothing".into() },
        ScriptEntry { kind: ActionKind::Repair, target: None, revision: None, response: "```\nnot genes\n```".into() },
    ];
    let d = genome_designer().with_script(script);
    let err = Runner::sequential(&d, &SyntheticEvaluator::default()).initialize(cfg(80, 1)).unwrap_err();
    assert_eq!(err, SearchError::AllInitFailed);
}

#[test]
fn partial_final_expansion() {
    let state = run(cfg(12, 3), &genome_designer());
    assert_eq!(state.t, 12);
    assert_eq!(state.tree.len(), 12);
    let kinds: Vec<&str> = state.trace.entries[8..].iter().map(|e| e.kind.code()).collect();
    assert_eq!(kinds, ["m1", "m1", "m2", "m2"]);
    assert_eq!(state.stopped, Some(StopReason::Budget));
}

#[test]
fn budget_trace_lambda_and_sum_rule() {
    let d = genome_designer();
    let ev = SyntheticEvaluator::default();
    let runner = Runner::sequential(&d, &ev);
    let mut state = runner.initialize(cfg(64, 7)).unwrap();
    while runner.step(&mut state).unwrap() {
        assert!(state.tree.check_sum_rule().is_ok());
        assert!(state.t <= 64);
    }
    assert_eq!(state.trace.len(), 64);
    assert_eq!(state.tree.len(), 64);
    let best: Vec<f64> = state.trace.best_so_far().map(Option::unwrap).collect();
    assert!(best.windows(2).all(|w| w[1] >= w[0]));
    for e in &state.trace.entries {
        assert_eq!(e.lambda, lambda_schedule(0.4, e.step, 64));
    }
    let best_id = state.best_node().unwrap();
    assert_eq!(state.tree.node(best_id).score, state.trace.best());
}

#[test]
fn runs_are_reproducible() {
    let d = genome_designer().with_fail_rate(0.2);
    let a = run(cfg(64, 11), &d);
    let b = run(cfg(64, 11), &d);
    assert_eq!(a.trace.digest(), b.trace.digest());
    assert_eq!(a.tree, b.tree);
    assert_eq!(a.best_node(), b.best_node());
    let c = run(cfg(64, 12), &d);
    assert_ne!(a.trace.digest(), c.trace.digest());
}

#[test]
fn resume_from_serialized_state_matches_straight_run() {
    let d = genome_designer().with_fail_rate(0.1);
    let ev = SyntheticEvaluator::default();
    let runner = Runner::sequential(&d, &ev);
    let straight = runner.run(cfg(64, 5)).unwrap();
    let mut half = runner.initialize(cfg(64, 5)).unwrap();
    runner.run_until(&mut half, 32).unwrap();
    assert_eq!(half.t, 32);
    let json = serde_json::to_string(&half).unwrap();
    let mut restored: SearchState = serde_json::from_str(&json).unwrap();
    runner.resume(&mut restored).unwrap();
    assert_eq!(restored.trace.digest(), straight.trace.digest());
    assert_eq!(restored.tree, straight.tree);
    assert_eq!(restored.rng.state(), straight.rng.state());
}

#[test]
fn greedy_policy_expands_best_node() {
    let d = genome_designer();
    let ev = SyntheticEvaluator::default();
    let runner = Runner::sequential(&d, &ev);
    let mut state = runner
        .initialize(SearchConfig { selection_policy: SelectionPolicy::Greedy, ..cfg(48, 2) })
        .unwrap();
    loop {
        let best = state.best_node().unwrap();
        let before = state.tree.len();
        if !runner.step(&mut state).unwrap() {
            break;
        }
        assert_eq!(state.tree.node(NodeId(before as u32)).parent, Some(best));
    }
}

#[test]
fn target_score_stops_early() {
    let optimum = LandscapeConfig::default().optimum();
    let script = vec![ScriptEntry {
        kind: ActionKind::MutateStructure,
        target: Some(NodeId(9)),
        revision: None,
        response: "{jump to the peak}\n```\n1.0 1.0 1.0 1.0 1.0 1.0 1.0 1.0\n```".into(),
    }];
    let d = genome_designer().with_script(script);
    let mut c = cfg(80, 4);
    c.early_stop.target_score = Some(optimum - 1e-6);
    let state = run(c, &d);
    assert_eq!(state.stopped, Some(StopReason::TargetScore));
    let first = state.trace.entries.iter().find(|e| e.score.is_some_and(|s| s >= optimum - 1e-6)).unwrap();
    assert_eq!(first.node, NodeId(9));
    assert_eq!(state.t, 16);
}

#[test]
fn patience_stops_stalled_runs() {
    let mut c = cfg(400, 4);
    c.early_stop.patience = Some(2);
    let state = run(c, &genome_designer());
    assert_eq!(state.stopped, Some(StopReason::Patience));
    assert!(state.t < 400);
}

#[test]
fn ablations_run() {
    let d = genome_designer();
    for policy in [SelectionPolicy::Uct, SelectionPolicy::Dfs, SelectionPolicy::Bfs, SelectionPolicy::Greedy] {
        for mode in [ActionMode::Full, ActionMode::BasicOnly] {
            let mut c = cfg(32, 1);
            c.selection_policy = policy;
            c.ablations.action_mode = mode.clone();
            c.ablations.self_verify = false;
            c.ablations.thought_align = false;
            let s = run(c, &d);
            assert_eq!(s.t, 32);
            if mode == ActionMode::BasicOnly {
                assert!(s.trace.entries[8..].iter().all(|e| e.kind == ActionKind::Basic));
            }
            assert!(s.tree.nodes().iter().all(|n| n.self_verify.is_none_or(|v| v == 0.0)));
        }
    }
}

fn flat_tree() -> SearchTree {
    // 0 ─┬─ 2 ── 4
    //    └─ 3
    // 1 ── 5
    let fb = |s: f64| TrainingFeedback {
        components: Vec::new(),
        task_score: SeriesSummary::constant(s),
        episode_lengths: SeriesSummary::constant(1.0),
        epoch_freq: 10,
        final_score: s,
    };
    let mut t = SearchTree::new();
    for (parent, score) in [(None, 0.1), (None, 0.9), (Some(0), 0.2), (Some(0), 0.3), (Some(2), 0.4), (Some(1), 0.5)] {
        let parent = parent.map(NodeId);
        let c = CandidateProgram::new("0", "", ActionKind::Init, parent);
        let id = t.attach(parent, c, ActionKind::Init, NodeOutcome::Evaluated { feedback: fb(score), self_verify: 0.0 });
        t.backup(id, 0.7);
    }
    t
}

#[test]
fn selection_policies_on_a_fixed_tree() {
    let t = flat_tree();
    assert_eq!(select_node(&t, SelectionPolicy::Dfs, 0.4).unwrap(), NodeId(4));
    assert_eq!(select_node(&t, SelectionPolicy::Bfs, 0.4).unwrap(), NodeId(3));
    assert_eq!(select_node(&t, SelectionPolicy::Greedy, 0.4).unwrap(), NodeId(1));
    assert_eq!(select_node(&t, SelectionPolicy::Uct, 0.0).unwrap(), NodeId(5));
    for p in [SelectionPolicy::Uct, SelectionPolicy::Dfs, SelectionPolicy::Bfs, SelectionPolicy::Greedy] {
        assert_eq!(select_node(&t, p, 0.3), select_node(&t.clone(), p, 0.3));
    }
}

#[test]
fn uct_choice_is_shift_invariant() {
    let t = flat_tree();
    let mut shifted = t.clone();
    for i in 0..shifted.len() {
        let n = shifted.node_mut(NodeId(i as u32));
        n.q_value = n.q_value.map(|q| q + 5.0);
    }
    for lambda in [0.0, 0.1, 0.4, 2.0] {
        assert_eq!(t.select_leaf(lambda), shifted.select_leaf(lambda));
    }
}

#[test]
fn greedy_comparator_batches() {
    let d = genome_designer();
    let ev = SyntheticEvaluator::default();
    let r = run_comparator(ComparatorKind::Greedy, &cfg(64, 3), &d, &ev, &Sequential).unwrap();
    assert_eq!(r.trace.len(), 64);
    let steps: std::collections::BTreeSet<u32> = r.trace.entries.iter().map(|e| e.step).collect();
    assert_eq!(steps.len(), 4);
    let best: Vec<f64> = r.trace.best_so_far().map(Option::unwrap).collect();
    assert!(best.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn evolution_keeps_population_size() {
    let d = genome_designer();
    let ev = SyntheticEvaluator::default();
    let r = run_comparator(ComparatorKind::Evolution, &cfg(80, 3), &d, &ev, &Sequential).unwrap();
    assert_eq!(r.trace.len(), 80);
    assert_eq!(r.population.len(), COMPARATOR_BATCH as usize);
    let scores: Vec<f64> = r.population.iter().map(|&id| r.tree.node(id).score.unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(scores[0], r.trace.best().unwrap());
}
