//! Baselines that share the designer and evaluator with the tree search:
//! greedy refinement of the incumbent, and a (μ+λ) evolutionary loop.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::actions::{ActionKind, ActionSpec};
use crate::designer::Designer;
use crate::eval::Evaluator;
use crate::rng::SearchRng;
use crate::tree::{NodeId, SearchTree};

use super::simulate::{parent_spec, simulate, Job};
use super::{node_seed, Executor, RunTrace, SearchConfig, SearchError};

/// Batch size for greedy and population size for evolution.
pub const COMPARATOR_BATCH: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparatorKind {
    Greedy,
    Evolution,
}

#[derive(Clone, Debug)]
pub struct ComparatorRun {
    /// Flat record of every candidate; parents mark what each was bred from.
    pub tree: SearchTree,
    pub trace: RunTrace,
    /// Final population (evolution) or the incumbent (greedy).
    pub population: Vec<NodeId>,
}

struct Pool<'c, D: ?Sized, E: ?Sized, X> {
    cfg: &'c SearchConfig,
    designer: &'c D,
    evaluator: &'c E,
    executor: &'c X,
    tree: SearchTree,
    trace: RunTrace,
}

impl<D, E, X> Pool<'_, D, E, X>
where
    D: Designer + ?Sized,
    E: Evaluator + ?Sized,
    X: Executor,
{
    fn remaining(&self) -> usize {
        (self.cfg.budget as usize).saturating_sub(self.tree.len())
    }

    /// Simulate `specs` (each with its parent) and record them.
    fn batch(&mut self, specs: Vec<(ActionSpec, Option<NodeId>)>) -> Vec<NodeId> {
        let step = self.tree.len() as u32;
        let first = self.tree.next_id().0;
        let jobs: Vec<Job> = specs
            .into_iter()
            .take(self.remaining())
            .enumerate()
            .map(|(i, (spec, parent))| {
                let target = NodeId(first + i as u32);
                Job {
                    spec,
                    parent,
                    target,
                    seed: node_seed(self.cfg.seed, target),
                }
            })
            .collect();
        let tree = &self.tree;
        let results = self.executor.map(jobs.len(), self.cfg.parallelism as usize, |i| {
            simulate(tree, &jobs[i], self.cfg, self.designer, self.evaluator)
        });
        let mut ids = Vec::with_capacity(jobs.len());
        for (job, sim) in jobs.iter().zip(results) {
            let id = self.tree.attach(job.parent, sim.candidate, job.spec.kind, sim.outcome);
            self.trace.push(step, id, job.spec.kind, self.tree.node(id).score, 0.0);
            ids.push(id);
        }
        ids
    }

    fn init(&mut self, n: u32) -> Vec<NodeId> {
        let specs = (0..n).map(|_| (ActionSpec::new(ActionKind::Init), None)).collect();
        self.batch(specs)
    }

    fn score(&self, id: NodeId) -> Option<f64> {
        self.tree.node(id).score
    }
}

/// Run a baseline with the same budget accounting as the tree search.
///
/// * greedy: an initial batch of 16, then batches of 16 alternating m1/m2
///   edits of the best candidate found so far.
/// * evolution: a population of 16; each generation breeds 16 offspring by
///   binary tournament (half crossover of two parents, the rest m1/m2
///   mutation) and keeps the best 16 of parents and offspring.
pub fn run_comparator<D, E, X>(
    kind: ComparatorKind,
    cfg: &SearchConfig,
    designer: &D,
    evaluator: &E,
    executor: &X,
) -> Result<ComparatorRun, SearchError>
where
    D: Designer + ?Sized,
    E: Evaluator + ?Sized,
    X: Executor,
{
    cfg.validate()?;
    let mut rng = SearchRng::new(cfg.seed);
    let mut pool = Pool {
        cfg,
        designer,
        evaluator,
        executor,
        tree: SearchTree::new(),
        trace: RunTrace::default(),
    };
    let first = pool.init(COMPARATOR_BATCH);
    if first.iter().all(|&id| pool.score(id).is_none()) {
        return Err(SearchError::AllInitFailed);
    }

    let population = match kind {
        ComparatorKind::Greedy => {
            while pool.remaining() > 0 {
                let best = pool.tree.best_node().ok_or(SearchError::AllInitFailed)?;
                let specs = (0..COMPARATOR_BATCH)
                    .map(|i| {
                        let kind = if i % 2 == 0 { ActionKind::MutateStructure } else { ActionKind::MutateParams };
                        (parent_spec(kind, best), Some(best))
                    })
                    .collect();
                pool.batch(specs);
            }
            pool.tree.best_node().into_iter().collect()
        }
        ComparatorKind::Evolution => {
            let mut population: Vec<NodeId> = first.into_iter().filter(|&id| pool.score(id).is_some()).collect();
            rank(&pool.tree, &mut population);
            while pool.remaining() > 0 {
                let mut specs = Vec::with_capacity(COMPARATOR_BATCH as usize);
                for i in 0..COMPARATOR_BATCH {
                    let a = tournament(&pool.tree, &population, &mut rng);
                    let spec = if i % 2 == 0 && population.len() > 1 {
                        let mut b = tournament(&pool.tree, &population, &mut rng);
                        while b == a {
                            b = population[rng.random_range(0..population.len())];
                        }
                        let mut s = ActionSpec::new(ActionKind::Crossover);
                        s.k = Some(2);
                        s.context_nodes = alloc::vec![a, b];
                        s
                    } else if i % 4 == 1 {
                        parent_spec(ActionKind::MutateStructure, a)
                    } else {
                        parent_spec(ActionKind::MutateParams, a)
                    };
                    specs.push((spec, Some(a)));
                }
                let offspring = pool.batch(specs);
                population.extend(offspring.into_iter().filter(|&id| pool.score(id).is_some()));
                rank(&pool.tree, &mut population);
                population.truncate(COMPARATOR_BATCH as usize);
            }
            population
        }
    };
    Ok(ComparatorRun {
        tree: pool.tree,
        trace: pool.trace,
        population,
    })
}

/// Sort by score descending; older nodes first among equals.
fn rank(tree: &SearchTree, ids: &mut [NodeId]) {
    ids.sort_by(|a, b| {
        let fa = tree.node(*a).score.unwrap_or(f64::NEG_INFINITY);
        let fb = tree.node(*b).score.unwrap_or(f64::NEG_INFINITY);
        fb.partial_cmp(&fa).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(b))
    });
}

fn tournament<R: Rng + ?Sized>(tree: &SearchTree, population: &[NodeId], rng: &mut R) -> NodeId {
    let a = population[rng.random_range(0..population.len())];
    let b = population[rng.random_range(0..population.len())];
    let fa = tree.node(a).score.unwrap_or(f64::NEG_INFINITY);
    let fb = tree.node(b).score.unwrap_or(f64::NEG_INFINITY);
    if fb > fa {
        b
    } else {
        a
    }
}
