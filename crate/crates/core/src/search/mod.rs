//! The search loop: initialize, then select → expand → simulate → backup
//! until the budget runs out or an early-stop rule fires.

mod comparators;
mod config;
mod executor;
mod simulate;
mod trace;

pub use comparators::{run_comparator, ComparatorKind, ComparatorRun, COMPARATOR_BATCH};
pub use config::{Ablations, ConfigError, EarlyStop, SearchConfig, SelectionPolicy};
pub use executor::{Clock, Executor, NoClock, Sequential};
pub use simulate::node_seed;
pub use trace::{PhaseTimes, RunTrace, TraceEntry};

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::{ablation_filter, schedule_expansion, select_context_nodes, ActionError, ActionKind, ActionSpec};
use crate::designer::Designer;
use crate::elite::EliteSet;
use crate::eval::Evaluator;
use crate::rng::SearchRng;
use crate::tree::{NodeId, SearchTree, TreeError};

use simulate::{simulate, Job, Simulated};

/// `λ0·(N−t)/N`.
pub fn lambda_schedule(lambda0: f64, t: u32, budget: u32) -> f64 {
    if budget == 0 {
        return 0.0;
    }
    lambda0 * f64::from(budget.saturating_sub(t)) / f64::from(budget)
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("every initial candidate failed")]
    AllInitFailed,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Action(#[from] ActionError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    TargetScore,
    Patience,
}

/// Everything needed to continue a run exactly where it left off.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchState {
    pub config: SearchConfig,
    pub tree: SearchTree,
    pub elite: EliteSet,
    pub rng: SearchRng,
    /// Candidates sampled so far.
    pub t: u32,
    pub trace: RunTrace,
    /// Consecutive expansions without a new best score.
    pub stale: u32,
    pub stopped: Option<StopReason>,
}

impl SearchState {
    pub fn best_node(&self) -> Option<NodeId> {
        self.tree.best_node()
    }

    pub fn is_finished(&self) -> bool {
        self.stopped.is_some() || self.t >= self.config.budget
    }
}

/// Pick the node to expand under `policy`. Leaves are evaluated nodes with
/// no evaluated children.
pub fn select_node(tree: &SearchTree, policy: SelectionPolicy, lambda: f64) -> Result<NodeId, TreeError> {
    let leaves = || {
        tree.evaluated()
            .filter(|n| !n.children.iter().any(|&c| tree.node(c).is_evaluated()))
    };
    match policy {
        SelectionPolicy::Uct => tree.select_leaf(lambda),
        SelectionPolicy::Greedy => tree.best_node().ok_or(TreeError::EmptyTree),
        // `max_by_key` keeps the last maximum: the newest among the deepest.
        SelectionPolicy::Dfs => leaves().max_by_key(|n| n.depth).map(|n| n.id).ok_or(TreeError::EmptyTree),
        // `min_by_key` keeps the first minimum: the oldest among the shallowest.
        SelectionPolicy::Bfs => leaves().min_by_key(|n| n.depth).map(|n| n.id).ok_or(TreeError::EmptyTree),
    }
}

/// Drives a run with fixed backends.
pub struct Runner<'a, D: ?Sized, E: ?Sized, X> {
    pub designer: &'a D,
    pub evaluator: &'a E,
    pub executor: X,
    pub clock: &'a dyn Clock,
}

impl<'a, D, E> Runner<'a, D, E, Sequential>
where
    D: Designer + ?Sized,
    E: Evaluator + ?Sized,
{
    /// Single-threaded runner without timings.
    pub fn sequential(designer: &'a D, evaluator: &'a E) -> Self {
        Self {
            designer,
            evaluator,
            executor: Sequential,
            clock: &NoClock,
        }
    }
}

impl<D, E, X> Runner<'_, D, E, X>
where
    D: Designer + ?Sized,
    E: Evaluator + ?Sized,
    X: Executor,
{
    fn fan_out(&self, tree: &SearchTree, cfg: &SearchConfig, jobs: &[Job]) -> Vec<Simulated> {
        self.executor.map(jobs.len(), cfg.parallelism as usize, |i| {
            simulate(tree, &jobs[i], cfg, self.designer, self.evaluator)
        })
    }

    /// Generate and evaluate the initial candidates as children of the
    /// root; the budget cursor ends at `init_count`.
    pub fn initialize(&self, config: SearchConfig) -> Result<SearchState, SearchError> {
        config.validate()?;
        let mut state = SearchState {
            tree: SearchTree::new(),
            elite: EliteSet::new(config.elite_capacity),
            rng: SearchRng::new(config.seed),
            t: 0,
            trace: RunTrace::default(),
            stale: 0,
            stopped: None,
            config,
        };
        let jobs: Vec<Job> = (0..state.config.init_count)
            .map(|i| Job {
                spec: ActionSpec::new(ActionKind::Init),
                parent: None,
                target: NodeId(i),
                seed: node_seed(state.config.seed, NodeId(i)),
            })
            .collect();
        let t0 = self.clock.now_nanos();
        let results = self.fan_out(&state.tree, &state.config, &jobs);
        let t1 = self.clock.now_nanos();
        state.trace.phases.simulate += t1.saturating_sub(t0);
        let lambda = lambda_schedule(state.config.lambda0, 0, state.config.budget);
        self.merge(&mut state, &jobs, results, 0, lambda);
        state.trace.phases.backup += self.clock.now_nanos().saturating_sub(t1);
        if state.tree.evaluated().next().is_none() {
            return Err(SearchError::AllInitFailed);
        }
        self.check_stop(&mut state, None);
        Ok(state)
    }

    /// Attach results in job order, update the elite set, back up, log.
    fn merge(&self, state: &mut SearchState, jobs: &[Job], results: Vec<Simulated>, step: u32, lambda: f64) {
        for (job, sim) in jobs.iter().zip(results) {
            let kind = job.spec.kind;
            let id = state.tree.attach(job.parent, sim.candidate, kind, sim.outcome);
            debug_assert_eq!(id, job.target);
            let score = state.tree.node(id).score;
            if let Some(f) = score {
                state.elite.update(id, f);
            }
            state.tree.backup(id, state.config.eta);
            state.t += 1;
            state.trace.push(step, id, kind, score, lambda);
        }
    }

    fn check_stop(&self, state: &mut SearchState, previous_best: Option<f64>) {
        let best = state.trace.best();
        if let (Some(target), Some(b)) = (state.config.early_stop.target_score, best) {
            if b >= target {
                state.stopped = Some(StopReason::TargetScore);
                return;
            }
        }
        if let Some(patience) = state.config.early_stop.patience {
            let improved = match (previous_best, best) {
                (Some(p), Some(b)) => b > p,
                (None, Some(_)) => true,
                _ => false,
            };
            state.stale = if improved { 0 } else { state.stale + 1 };
            if state.stale >= patience {
                state.stopped = Some(StopReason::Patience);
                return;
            }
        }
        if state.t >= state.config.budget {
            state.stopped = Some(StopReason::Budget);
        }
    }

    /// One expansion. Returns `false` without doing anything once the run
    /// is finished.
    pub fn step(&self, state: &mut SearchState) -> Result<bool, SearchError> {
        if state.is_finished() {
            if state.stopped.is_none() {
                state.stopped = Some(StopReason::Budget);
            }
            return Ok(false);
        }
        let cfg = &state.config;
        let t_start = state.t;
        let lambda = lambda_schedule(cfg.lambda0, t_start, cfg.budget);

        let c0 = self.clock.now_nanos();
        let leaf = select_node(&state.tree, cfg.selection_policy, lambda)?;
        let c1 = self.clock.now_nanos();

        let specs = schedule_expansion(&cfg.action_counts, cfg.k_range, &mut state.rng)?;
        let mut specs = ablation_filter(specs, &cfg.ablations.action_mode, cfg.k_range, &mut state.rng);
        specs.truncate((cfg.budget - t_start) as usize);
        let first_id = state.tree.next_id().0;
        let mut jobs = Vec::with_capacity(specs.len());
        for (i, mut spec) in specs.into_iter().enumerate() {
            spec.context_nodes = match select_context_nodes(&spec, leaf, &state.tree, &state.elite, &mut state.rng) {
                Ok(ctx) => ctx,
                Err(TreeError::EliteEmpty) if spec.kind == ActionKind::Crossover => {
                    spec = ActionSpec::new(ActionKind::MutateStructure);
                    alloc::vec![leaf]
                }
                Err(e) => return Err(e.into()),
            };
            let target = NodeId(first_id + i as u32);
            jobs.push(Job {
                spec,
                parent: Some(leaf),
                target,
                seed: node_seed(cfg.seed, target),
            });
        }
        let c2 = self.clock.now_nanos();
        let results = self.fan_out(&state.tree, &state.config, &jobs);
        let c3 = self.clock.now_nanos();

        let previous_best = state.trace.best();
        self.merge(state, &jobs, results, t_start, lambda);
        self.check_stop(state, previous_best);
        let c4 = self.clock.now_nanos();

        let phases = &mut state.trace.phases;
        phases.select += c1.saturating_sub(c0);
        phases.expand += c2.saturating_sub(c1);
        phases.simulate += c3.saturating_sub(c2);
        phases.backup += c4.saturating_sub(c3);
        Ok(true)
    }

    /// Step until the run finishes or the cursor reaches `t_limit`.
    pub fn run_until(&self, state: &mut SearchState, t_limit: u32) -> Result<(), SearchError> {
        while state.t < t_limit && self.step(state)? {}
        Ok(())
    }

    /// Step to completion.
    pub fn resume(&self, state: &mut SearchState) -> Result<(), SearchError> {
        while self.step(state)? {}
        Ok(())
    }

    /// Initialize and run to completion. Returns the final state; the best
    /// node is [`SearchState::best_node`].
    pub fn run(&self, config: SearchConfig) -> Result<SearchState, SearchError> {
        let mut state = self.initialize(config)?;
        self.resume(&mut state)?;
        Ok(state)
    }
}
