//! Built-in toy trainer: a 1-D point mass that must reach and stop at a
//! target, trained with the cross-entropy method under a DSL reward.
//!
//! Task: the mass starts at rest at 0; the target sits at `±[0.3, 1.0]`.
//! Each step the policy picks one of five accelerations
//! `{−1, −½, 0, ½, 1}·ACCEL`. An episode succeeds, and ends, once the mass
//! is within `SUCCESS_RADIUS` of the target moving slower than
//! `SUCCESS_SPEED`; otherwise it runs for `HORIZON` steps.
//!
//! The policy is a clipped linear controller
//! `u = gain·(target − x) − damping·v + bias`, snapped to the nearest action
//! level. Training samples controller parameters from a diagonal Gaussian,
//! rolls each out on a mirrored pair of targets, and refits the Gaussian to
//! the top returns. The task score is the success rate of the mean
//! controller on a fixed evaluation set and never looks at the reward.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{EvalContext, EvalOutcome, Evaluator, SeriesSummary, TrainingFeedback, SNAPSHOT_COUNT};
use crate::designer::CandidateProgram;
use crate::dsl::{self, BoundExpr, RewardExpr};
use crate::math;
use crate::rng::{derive_seed, stream};

/// Observation variables a reward program may reference, in slot order.
pub const TOY_VOCABULARY: [&str; 5] = ["dist", "vel_x", "prev_dist", "target_x", "action_mag"];

/// Sparse reward: pay only on reaching the target.
pub const SPARSE_REWARD: &str = "component success = indicator(dist < 0.05);";

/// Hand-written dense shaping used as a reference.
pub const DENSE_REFERENCE_REWARD: &str =
    "component near = -1.0 * dist;\ncomponent calm = -0.2 * abs(vel_x) * indicator(dist < 0.2);";

const SLOT_DIST: usize = 0;
const SLOT_VEL: usize = 1;
const SLOT_PREV: usize = 2;
const SLOT_TARGET: usize = 3;
const SLOT_ACTION: usize = 4;

const ACTION_LEVELS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReachTask {
    pub horizon: u32,
    pub dt: f64,
    pub accel: f64,
    pub max_speed: f64,
    pub success_radius: f64,
    pub success_speed: f64,
    pub target_min: f64,
    pub target_max: f64,
    /// Controller samples per refit.
    pub population: usize,
    pub elite: usize,
    /// Evaluation episodes per snapshot.
    pub eval_episodes: usize,
    /// Training budget in episodes.
    pub train_steps: u32,
}

impl Default for ReachTask {
    fn default() -> Self {
        Self {
            horizon: 50,
            dt: 0.1,
            accel: 2.0,
            max_speed: 1.0,
            success_radius: 0.05,
            success_speed: 0.2,
            target_min: 0.3,
            target_max: 1.0,
            population: 10,
            elite: 3,
            eval_episodes: 10,
            train_steps: 200,
        }
    }
}

/// Linear controller parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReachPolicy {
    pub gain: f64,
    pub damping: f64,
    pub bias: f64,
}

impl ReachPolicy {
    fn from_params(p: &[f64; 3]) -> Self {
        Self {
            gain: p[0],
            damping: p[1],
            bias: p[2],
        }
    }

    fn act(&self, target: f64, x: f64, v: f64) -> f64 {
        let u = (self.gain * (target - x) - self.damping * v + self.bias).clamp(-1.0, 1.0);
        let mut best = ACTION_LEVELS[0];
        for &level in &ACTION_LEVELS[1..] {
            if (level - u).abs() < (best - u).abs() {
                best = level;
            }
        }
        best
    }
}

struct Rollout {
    ret: f64,
    steps: u32,
    success: bool,
    /// Sum of each component over the episode.
    component_sums: Vec<f64>,
}

impl ReachTask {
    fn sample_target(&self, rng: &mut ChaCha8Rng, positive: bool) -> f64 {
        let m = rng.random_range(self.target_min..=self.target_max);
        if positive {
            m
        } else {
            -m
        }
    }

    fn rollout(&self, policy: &ReachPolicy, target: f64, reward: Option<&BoundExpr>) -> Rollout {
        let n = reward.map_or(0, |r| r.component_count());
        let mut component_sums = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        let (mut x, mut v) = (0.0f64, 0.0f64);
        let mut ret = 0.0;
        let mut steps = 0;
        let mut success = false;
        for _ in 0..self.horizon {
            let prev_dist = math::abs(target - x);
            let a = policy.act(target, x, v);
            v = (v + a * self.accel * self.dt).clamp(-self.max_speed, self.max_speed);
            x += v * self.dt;
            steps += 1;
            let dist = math::abs(target - x);
            if let Some(r) = reward {
                let mut obs = [0.0; 5];
                obs[SLOT_DIST] = dist;
                obs[SLOT_VEL] = v;
                obs[SLOT_PREV] = prev_dist;
                obs[SLOT_TARGET] = target;
                obs[SLOT_ACTION] = math::abs(a);
                ret += r.eval_into(&obs, &mut scratch);
                for (s, c) in component_sums.iter_mut().zip(&scratch) {
                    *s += c;
                }
            }
            if dist < self.success_radius && math::abs(v) < self.success_speed {
                success = true;
                break;
            }
        }
        Rollout {
            ret,
            steps,
            success,
            component_sums,
        }
    }

    /// Fixed evaluation targets for a seed, alternating sides.
    fn eval_targets(&self, seed: u64) -> Vec<f64> {
        let mut rng = stream(derive_seed(seed, &[0x6576_616c]));
        (0..self.eval_episodes).map(|i| self.sample_target(&mut rng, i % 2 == 0)).collect()
    }
}

/// Success rate of `policy` on the evaluation targets for `seed`. This is
/// the task score; it depends on the controller only.
pub fn policy_success(task: &ReachTask, policy: &ReachPolicy, seed: u64) -> f64 {
    let targets = task.eval_targets(seed);
    let hits = targets
        .iter()
        .filter(|&&t| task.rollout(policy, t, None).success)
        .count();
    hits as f64 / targets.len() as f64
}

struct Snapshot {
    success: f64,
    length: f64,
    components: Vec<f64>,
}

fn snapshot(task: &ReachTask, policy: &ReachPolicy, reward: &BoundExpr, seed: u64) -> Snapshot {
    let success = policy_success(task, policy, seed);
    let mut comp = vec![0.0; reward.component_count()];
    let mut steps = 0u32;
    for t in task.eval_targets(seed) {
        let r = task.rollout(policy, t, Some(reward));
        steps += r.steps;
        for (c, s) in comp.iter_mut().zip(&r.component_sums) {
            *c += s;
        }
    }
    let steps_f = f64::from(steps.max(1));
    Snapshot {
        success,
        length: f64::from(steps) / task.eval_episodes as f64,
        components: comp.into_iter().map(|c| c / steps_f).collect(),
    }
}

/// Train under `expr` for `task.train_steps` episodes and report feedback.
/// Snapshots are taken at ten evenly spaced fractions of the budget;
/// `final_score` is the best snapshot success rate.
pub fn toy_rl_train(expr: &RewardExpr, task: &ReachTask, seed: u64) -> Result<TrainingFeedback, dsl::EvalError> {
    let reward = expr.bind(&TOY_VOCABULARY)?;
    let budget = task.train_steps.max(SNAPSHOT_COUNT as u32);
    let mut rng = stream(derive_seed(seed, &[0x0074_7261_696e]));
    let mut mean = [0.0f64; 3];
    let mut std = [2.0f64, 2.0, 0.5];
    let mut batch: Vec<([f64; 3], f64)> = Vec::with_capacity(task.population);
    let mut theta = [0.0; 3];
    let mut pair_return = 0.0;
    let mut snaps = Vec::with_capacity(SNAPSHOT_COUNT);
    let mut next_snap = 0usize;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    for ep in 0..budget {
        if ep % 2 == 0 {
            for i in 0..3 {
                theta[i] = mean[i] + std[i] * unit.sample(&mut rng);
            }
            pair_return = 0.0;
        }
        let target = task.sample_target(&mut rng, ep % 2 == 0);
        let policy = ReachPolicy::from_params(&theta);
        pair_return += task.rollout(&policy, target, Some(&reward)).ret;
        if ep % 2 == 1 || ep + 1 == budget {
            batch.push((theta, pair_return));
        }
        if batch.len() == task.population {
            // Stable sort: equal returns keep sampling order.
            batch.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal));
            let k = task.elite.clamp(1, batch.len());
            for i in 0..3 {
                let m = batch[..k].iter().map(|(p, _)| p[i]).sum::<f64>() / k as f64;
                let var = batch[..k].iter().map(|(p, _)| (p[i] - m) * (p[i] - m)).sum::<f64>() / k as f64;
                mean[i] = m;
                std[i] = math::sqrt(var) + 0.05;
            }
            batch.clear();
        }
        while next_snap < SNAPSHOT_COUNT && u64::from(ep + 1) * SNAPSHOT_COUNT as u64 >= (next_snap as u64 + 1) * u64::from(budget) {
            snaps.push(snapshot(task, &ReachPolicy::from_params(&mean), &reward, seed));
            next_snap += 1;
        }
    }

    let names: Vec<String> = reward.component_names().map(String::from).collect();
    let components = names
        .into_iter()
        .enumerate()
        .map(|(i, name)| (name, SeriesSummary::from_values(snaps.iter().map(|s| s.components[i]).collect())))
        .collect();
    let task_series: Vec<f64> = snaps.iter().map(|s| s.success).collect();
    let final_score = task_series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(TrainingFeedback {
        components,
        task_score: SeriesSummary::from_values(task_series),
        episode_lengths: SeriesSummary::from_values(snaps.iter().map(|s| s.length).collect()),
        epoch_freq: budget / SNAPSHOT_COUNT as u32,
        final_score,
    })
}

/// Evaluator backed by [`toy_rl_train`]; candidates are DSL source.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ToyEvaluator {
    pub task: ReachTask,
}

impl Evaluator for ToyEvaluator {
    fn evaluate(&self, candidate: &CandidateProgram, ctx: &EvalContext) -> EvalOutcome {
        let expr = match dsl::parse_with_vocabulary(&candidate.source_text, &TOY_VOCABULARY) {
            Ok(e) => e,
            Err(e) => return EvalOutcome::exec_error(format!("Traceback (reward program):\n{e}")),
        };
        match toy_rl_train(&expr, &self.task, ctx.seed) {
            Ok(fb) => EvalOutcome::ok(fb),
            Err(e) => EvalOutcome::exec_error(format!("Traceback (reward evaluation):\n{e}")),
        }
    }
}
