use rfsearch_core::actions::ActionKind;
use rfsearch_core::designer::CandidateProgram;
use rfsearch_core::dsl::parse;
use rfsearch_core::eval::*;
use rfsearch_core::tree::NodeId;

fn ctx(seed: u64) -> EvalContext {
    EvalContext { node: NodeId(0), seed }
}

fn scores(src: &str, task: &ReachTask) -> Vec<f64> {
    let e = parse(src).unwrap();
    (0..10).map(|s| toy_rl_train(&e, task, s).unwrap().final_score).collect()
}

#[test]
fn dense_reward_beats_sparse() {
    let task = ReachTask::default();
    let sparse = scores(SPARSE_REWARD, &task);
    let dense = scores(DENSE_REFERENCE_REWARD, &task);
    let wins = dense.iter().zip(&sparse).filter(|(d, s)| d > s).count();
    assert!(wins >= 8, "dense {dense:?} sparse {sparse:?}");
}

#[test]
fn distance_shaping_solves_reach() {
    let near = scores("component near = -1.0 * dist;", &ReachTask::default());
    assert!(near.iter().filter(|&&s| s > 0.5).count() >= 8, "{near:?}");
}

#[test]
fn constant_reward_no_better_than_sparse() {
    let task = ReachTask::default();
    let mut flat = scores("component z = 0.0;", &task);
    let mut sparse = scores(SPARSE_REWARD, &task);
    flat.sort_by(f64::total_cmp);
    sparse.sort_by(f64::total_cmp);
    assert!(flat[5] <= sparse[5], "{flat:?} vs {sparse:?}");
}

#[test]
fn snapshot_rule_holds_for_any_budget() {
    let e = parse("component near = -1.0 * dist;").unwrap();
    for steps in [10, 37, 200] {
        let task = ReachTask { train_steps: steps, ..ReachTask::default() };
        let fb = toy_rl_train(&e, &task, 3).unwrap();
        fb.validate().unwrap();
        assert_eq!(fb.task_score.values.len(), SNAPSHOT_COUNT);
        assert_eq!(fb.epoch_freq, steps / 10);
        let max = fb.task_score.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(fb.final_score, max);
    }
}

#[test]
fn score_ignores_the_reward() {
    // The task score is a function of the controller only: the same
    // controller scores the same whatever reward it was trained with.
    let task = ReachTask::default();
    let p = ReachPolicy { gain: 3.0, damping: 2.0, bias: 0.0 };
    let a = policy_success(&task, &p, 4);
    assert_eq!(a, policy_success(&task, &p, 4));
    let zero = toy_rl_train(&parse("component z = 0.0;").unwrap(), &task, 4).unwrap();
    let dense = toy_rl_train(&parse(DENSE_REFERENCE_REWARD).unwrap(), &task, 4).unwrap();
    assert_ne!(zero.task_score.values, dense.task_score.values);
}

#[test]
fn toy_evaluator_reports_syntax_errors() {
    let ev = ToyEvaluator::default();
    let c = CandidateProgram::new("component a = (dist + ;", "", ActionKind::Init, None);
    let out = ev.evaluate(&c, &ctx(1));
    assert_eq!(out.status, EvalStatus::ExecError);
    let tb = out.traceback.unwrap();
    assert!(tb.contains("line 1, column"), "{tb}");
    let c = CandidateProgram::new("component a = speed;", "", ActionKind::Init, None);
    assert!(ev.evaluate(&c, &ctx(1)).traceback.unwrap().contains("speed"));
}

#[test]
fn backends_are_deterministic() {
    let toy = ToyEvaluator::default();
    let c = CandidateProgram::new(DENSE_REFERENCE_REWARD, "", ActionKind::Init, None);
    assert_eq!(toy.evaluate(&c, &ctx(8)), toy.evaluate(&c, &ctx(8)));
    let syn = SyntheticEvaluator::default();
    let g = CandidateProgram::new("0.9 -1.1 0.2 1.0 1.0 -0.4 0.0 2.0", "", ActionKind::Init, None);
    assert_eq!(syn.evaluate(&g, &ctx(8)), syn.evaluate(&g, &ctx(8)));
    let noisy = SyntheticEvaluator { landscape: LandscapeConfig { noise: 0.1, ..LandscapeConfig::default() } };
    assert_eq!(noisy.evaluate(&g, &ctx(8)), noisy.evaluate(&g, &ctx(8)));
    assert_ne!(noisy.evaluate(&g, &ctx(8)), noisy.evaluate(&g, &ctx(9)));
}

#[test]
fn synthetic_closed_form_values() {
    let cfg = LandscapeConfig::default();
    let plus = synthetic_score(&[1.0; 8], &cfg).unwrap().final_score;
    let zero = synthetic_score(&[0.0; 8], &cfg).unwrap().final_score;
    assert!((plus - 8.009_278_208_334_734).abs() < 1e-12);
    assert!((zero - 0.598_445_302_852_416).abs() < 1e-12);
    assert!((bump(-1.0, &cfg) - 0.3).abs() < 1e-15);
    assert!((bump(1.0, &cfg) - 1.001_159_776_041_841_8).abs() < 1e-12);
    let g = [0.3, -1.2, 1.0, 0.0, 2.0, -2.0, 0.7, -0.5];
    let mut r = g;
    r.reverse();
    // Separable sum: equal up to summation order.
    let a = synthetic_score(&g, &cfg).unwrap().final_score;
    let b = synthetic_score(&r, &cfg).unwrap().final_score;
    assert!((a - b).abs() < 1e-12);
}
