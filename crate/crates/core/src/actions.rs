//! Expansion actions: which kinds run per expansion and which tree nodes
//! each one sees as context.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elite::EliteSet;
use crate::tree::{NodeId, SearchTree, TreeError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    #[serde(rename = "init")]
    Init,
    /// Change the structure: add or remove reward components.
    #[serde(rename = "m1")]
    MutateStructure,
    /// Change parameter values only.
    #[serde(rename = "m2")]
    MutateParams,
    /// Combine the parent with elite nodes.
    #[serde(rename = "c3")]
    Crossover,
    /// Reason over the ancestor chain ending at the parent.
    #[serde(rename = "r4")]
    PathReasoning,
    /// Produce something structurally unlike nodes on other paths.
    #[serde(rename = "d5")]
    DifferentThought,
    /// Parent-only regeneration used when action types are ablated.
    #[serde(rename = "basic")]
    Basic,
    #[serde(rename = "repair")]
    Repair,
    #[serde(rename = "align")]
    Align,
    #[serde(rename = "verify")]
    Verify,
}

impl ActionKind {
    /// The five expansion kinds in their fixed scheduling order.
    pub const EXPANSION: [ActionKind; 5] = [
        ActionKind::MutateStructure,
        ActionKind::MutateParams,
        ActionKind::Crossover,
        ActionKind::PathReasoning,
        ActionKind::DifferentThought,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ActionKind::Init => "init",
            ActionKind::MutateStructure => "m1",
            ActionKind::MutateParams => "m2",
            ActionKind::Crossover => "c3",
            ActionKind::PathReasoning => "r4",
            ActionKind::DifferentThought => "d5",
            ActionKind::Basic => "basic",
            ActionKind::Repair => "repair",
            ActionKind::Align => "align",
            ActionKind::Verify => "verify",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        [
            ActionKind::Init,
            ActionKind::MutateStructure,
            ActionKind::MutateParams,
            ActionKind::Crossover,
            ActionKind::PathReasoning,
            ActionKind::DifferentThought,
            ActionKind::Basic,
            ActionKind::Repair,
            ActionKind::Align,
            ActionKind::Verify,
        ]
        .into_iter()
        .find(|k| k.code() == code)
    }

    /// Kinds whose context size `k` is sampled.
    pub fn uses_k(self) -> bool {
        matches!(
            self,
            ActionKind::Crossover | ActionKind::PathReasoning | ActionKind::DifferentThought
        )
    }

    fn slot(self) -> Option<usize> {
        ActionKind::EXPANSION.iter().position(|&k| k == self)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Per-kind counts in the order m1, m2, c3, r4, d5.
pub type ActionCounts = [u32; 5];

pub const DEFAULT_ACTION_COUNTS: ActionCounts = [2, 2, 2, 1, 1];

/// Inclusive range `k` is drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KRange {
    pub min: u32,
    pub max: u32,
}

impl Default for KRange {
    fn default() -> Self {
        Self { min: 2, max: 4 }
    }
}

/// One expansion slot: what to generate and which nodes it sees.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub kind: ActionKind,
    /// Total context size including the parent; only for c3/r4/d5.
    pub k: Option<u32>,
    pub context_nodes: Vec<NodeId>,
}

impl ActionSpec {
    pub fn new(kind: ActionKind) -> Self {
        Self {
            kind,
            k: None,
            context_nodes: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("every action count is zero")]
    ZeroActions,
    #[error("invalid k range [{0}, {1}]")]
    InvalidKRange(u32, u32),
}

/// Which expansion kinds are enabled.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionMode {
    #[default]
    Full,
    /// Every slot becomes a parent-only basic generation.
    BasicOnly,
    /// Only the listed kinds; removed slots are handed out round-robin to
    /// the kept kinds so the expansion width is unchanged.
    Subset(Vec<ActionKind>),
}

impl ActionMode {
    /// Counts after applying this mode. `BasicOnly` leaves counts as they
    /// are; the kinds are rewritten later by [`ablation_filter`].
    pub fn effective_counts(&self, counts: &ActionCounts) -> ActionCounts {
        match self {
            ActionMode::Full | ActionMode::BasicOnly => *counts,
            ActionMode::Subset(keep) => {
                let kept: Vec<usize> = ActionKind::EXPANSION
                    .iter()
                    .enumerate()
                    .filter(|(_, k)| keep.contains(k))
                    .map(|(i, _)| i)
                    .collect();
                if kept.is_empty() {
                    return *counts;
                }
                let mut out = [0u32; 5];
                let mut removed = 0u32;
                for (i, &c) in counts.iter().enumerate() {
                    if kept.contains(&i) {
                        out[i] = c;
                    } else {
                        removed += c;
                    }
                }
                for j in 0..removed as usize {
                    out[kept[j % kept.len()]] += 1;
                }
                out
            }
        }
    }
}

/// Expand counts into specs in the fixed order m1…d5, drawing `k` per spec.
pub fn schedule_expansion<R: Rng + ?Sized>(
    counts: &ActionCounts,
    k_range: KRange,
    rng: &mut R,
) -> Result<Vec<ActionSpec>, ActionError> {
    if counts.iter().all(|&c| c == 0) {
        return Err(ActionError::ZeroActions);
    }
    if k_range.min > k_range.max || k_range.min < 1 {
        return Err(ActionError::InvalidKRange(k_range.min, k_range.max));
    }
    let mut specs = Vec::with_capacity(counts.iter().sum::<u32>() as usize);
    for (kind, &n) in ActionKind::EXPANSION.iter().zip(counts) {
        for _ in 0..n {
            let mut spec = ActionSpec::new(*kind);
            if kind.uses_k() {
                spec.k = Some(rng.random_range(k_range.min..=k_range.max));
            }
            specs.push(spec);
        }
    }
    Ok(specs)
}

/// Apply an ablation mode to an already scheduled expansion.
pub fn ablation_filter<R: Rng + ?Sized>(
    specs: Vec<ActionSpec>,
    mode: &ActionMode,
    k_range: KRange,
    rng: &mut R,
) -> Vec<ActionSpec> {
    match mode {
        ActionMode::Full => specs,
        ActionMode::BasicOnly => specs.iter().map(|_| ActionSpec::new(ActionKind::Basic)).collect(),
        ActionMode::Subset(_) => {
            let mut counts = [0u32; 5];
            for s in &specs {
                if let Some(i) = s.kind.slot() {
                    counts[i] += 1;
                }
            }
            let counts = mode.effective_counts(&counts);
            schedule_expansion(&counts, k_range, rng).unwrap_or(specs)
        }
    }
}

/// Pick the context nodes for `spec` when expanding `parent`.
///
/// * m1/m2/basic: `[parent]`
/// * c3: `[parent]` plus `k−1` elite draws (parent excluded from the pool)
/// * r4: the ancestor chain `[parent, grandparent, …]`, at most `k` long,
///   never including the root
/// * d5: `[parent]` plus `k−1` uniform draws among evaluated nodes off the
///   parent's root path and outside its subtree; if there are none, any
///   evaluated node other than the parent
pub fn select_context_nodes<R: Rng + ?Sized>(
    spec: &ActionSpec,
    parent: NodeId,
    tree: &SearchTree,
    elite: &EliteSet,
    rng: &mut R,
) -> Result<Vec<NodeId>, TreeError> {
    tree.get(parent)?;
    let k = spec.k.unwrap_or(1).max(1) as usize;
    Ok(match spec.kind {
        ActionKind::Init => Vec::new(),
        ActionKind::Crossover => {
            let mut ctx = alloc::vec![parent];
            ctx.extend(elite.sample(k - 1, Some(parent), rng)?);
            ctx
        }
        ActionKind::PathReasoning => core::iter::once(parent)
            .chain(tree.ancestors(parent))
            .take(k)
            .collect(),
        ActionKind::DifferentThought => {
            let on_path: Vec<NodeId> = tree.ancestors(parent).collect();
            let mut pool: Vec<NodeId> = tree
                .evaluated()
                .map(|n| n.id)
                .filter(|&id| !on_path.contains(&id) && !tree.in_subtree(id, parent))
                .collect();
            if pool.is_empty() {
                pool = tree.evaluated().map(|n| n.id).filter(|&id| id != parent).collect();
            }
            let take = (k - 1).min(pool.len());
            let mut ctx = alloc::vec![parent];
            let mut picks: Vec<usize> = rand::seq::index::sample(rng, pool.len(), take).into_vec();
            picks.sort_unstable();
            ctx.extend(picks.into_iter().map(|i| pool[i]));
            ctx
        }
        ActionKind::MutateStructure
        | ActionKind::MutateParams
        | ActionKind::Basic
        | ActionKind::Repair
        | ActionKind::Align
        | ActionKind::Verify => alloc::vec![parent],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designer::CandidateProgram;
    use crate::eval::{SeriesSummary, TrainingFeedback};
    use crate::rng::SearchRng;
    use crate::tree::NodeOutcome;
    use alloc::vec;

    fn kinds(specs: &[ActionSpec]) -> Vec<&'static str> {
        specs.iter().map(|s| s.kind.code()).collect()
    }

    fn add(tree: &mut SearchTree, parent: Option<NodeId>, score: f64) -> NodeId {
        let fb = TrainingFeedback {
            components: Vec::new(),
            task_score: SeriesSummary::constant(score),
            episode_lengths: SeriesSummary::constant(1.0),
            epoch_freq: 10,
            final_score: score,
        };
        let c = CandidateProgram::new("x", "idea", ActionKind::Init, parent);
        tree.attach(parent, c, ActionKind::Init, NodeOutcome::Evaluated { feedback: fb, self_verify: 0.0 })
    }

    #[test]
    fn default_schedule_order() {
        let mut rng = SearchRng::new(1);
        let specs = schedule_expansion(&DEFAULT_ACTION_COUNTS, KRange::default(), &mut rng).unwrap();
        assert_eq!(kinds(&specs), ["m1", "m1", "m2", "m2", "c3", "c3", "r4", "d5"]);
        for s in &specs {
            assert_eq!(s.k.is_some(), s.kind.uses_k());
            if let Some(k) = s.k {
                assert!((2..=4).contains(&k));
            }
        }
    }

    #[test]
    fn schedule_edge_cases() {
        let mut rng = SearchRng::new(1);
        let one = schedule_expansion(&[1, 0, 0, 0, 0], KRange::default(), &mut rng).unwrap();
        assert_eq!(kinds(&one), ["m1"]);
        let forced = schedule_expansion(&[0, 0, 2, 0, 0], KRange { min: 2, max: 2 }, &mut rng).unwrap();
        assert!(forced.iter().all(|s| s.kind == ActionKind::Crossover && s.k == Some(2)));
        assert_eq!(schedule_expansion(&[0; 5], KRange::default(), &mut rng), Err(ActionError::ZeroActions));
    }

    #[test]
    fn ablation_modes() {
        let mut rng = SearchRng::new(2);
        let specs = schedule_expansion(&DEFAULT_ACTION_COUNTS, KRange::default(), &mut rng).unwrap();
        assert_eq!(ablation_filter(specs.clone(), &ActionMode::Full, KRange::default(), &mut rng), specs);
        let basic = ablation_filter(specs.clone(), &ActionMode::BasicOnly, KRange::default(), &mut rng);
        assert_eq!(basic.len(), 8);
        assert!(basic.iter().all(|s| s.kind == ActionKind::Basic && s.k.is_none()));
        let mode = ActionMode::Subset(vec![ActionKind::MutateStructure, ActionKind::Crossover]);
        let subset = ablation_filter(specs, &mode, KRange::default(), &mut rng);
        assert_eq!(subset.len(), 8);
        assert!(subset
            .iter()
            .all(|s| matches!(s.kind, ActionKind::MutateStructure | ActionKind::Crossover)));
    }

    #[test]
    fn path_reasoning_truncates_ancestor_chain() {
        let mut t = SearchTree::new();
        let a = add(&mut t, None, 0.1);
        let b = add(&mut t, Some(a), 0.2);
        let c = add(&mut t, Some(b), 0.3);
        let d = add(&mut t, Some(c), 0.4);
        let elite = EliteSet::new(8);
        let mut rng = SearchRng::new(0);
        let spec = ActionSpec { kind: ActionKind::PathReasoning, k: Some(3), context_nodes: Vec::new() };
        assert_eq!(select_context_nodes(&spec, d, &t, &elite, &mut rng).unwrap(), vec![d, c, b]);
        assert_eq!(select_context_nodes(&spec, a, &t, &elite, &mut rng).unwrap(), vec![a]);
    }

    #[test]
    fn crossover_draws_by_reciprocal_rank() {
        let mut t = SearchTree::new();
        let p = add(&mut t, None, 0.1);
        let a = add(&mut t, None, 0.9);
        let b = add(&mut t, None, 0.5);
        let mut elite = EliteSet::new(8);
        elite.update(a, 0.9);
        elite.update(b, 0.5);
        let spec = ActionSpec { kind: ActionKind::Crossover, k: Some(2), context_nodes: Vec::new() };
        let mut rng = SearchRng::new(5);
        let n = 30_000;
        let mut hits = 0;
        for _ in 0..n {
            let ctx = select_context_nodes(&spec, p, &t, &elite, &mut rng).unwrap();
            assert_eq!(ctx.len(), 2);
            assert_eq!(ctx[0], p);
            hits += usize::from(ctx[1] == a);
        }
        let freq = hits as f64 / n as f64;
        assert!((freq - 2.0 / 3.0).abs() < 0.01, "{freq}");
    }

    #[test]
    fn crossover_with_only_parent_in_elite_errors() {
        let mut t = SearchTree::new();
        let p = add(&mut t, None, 0.1);
        let mut elite = EliteSet::new(8);
        elite.update(p, 0.1);
        let spec = ActionSpec { kind: ActionKind::Crossover, k: Some(2), context_nodes: Vec::new() };
        let mut rng = SearchRng::new(5);
        assert_eq!(select_context_nodes(&spec, p, &t, &elite, &mut rng), Err(TreeError::EliteEmpty));
    }

    #[test]
    fn different_thought_avoids_own_path() {
        let mut t = SearchTree::new();
        let a = add(&mut t, None, 0.1);
        let b = add(&mut t, Some(a), 0.2);
        let c = add(&mut t, Some(b), 0.3);
        let x = add(&mut t, None, 0.4);
        let y = add(&mut t, Some(x), 0.5);
        let elite = EliteSet::new(8);
        let spec = ActionSpec { kind: ActionKind::DifferentThought, k: Some(3), context_nodes: Vec::new() };
        let mut rng = SearchRng::new(9);
        for _ in 0..50 {
            let ctx = select_context_nodes(&spec, b, &t, &elite, &mut rng).unwrap();
            assert_eq!(ctx[0], b);
            assert_eq!(ctx.len(), 3);
            assert!(ctx[1..].iter().all(|n| *n == x || *n == y), "{ctx:?}");
            assert!(!ctx.contains(&c) && !ctx.contains(&a));
        }
    }

    #[test]
    fn different_thought_falls_back_on_single_path() {
        let mut t = SearchTree::new();
        let a = add(&mut t, None, 0.1);
        let b = add(&mut t, Some(a), 0.2);
        let elite = EliteSet::new(8);
        let spec = ActionSpec { kind: ActionKind::DifferentThought, k: Some(2), context_nodes: Vec::new() };
        let mut rng = SearchRng::new(9);
        assert_eq!(select_context_nodes(&spec, b, &t, &elite, &mut rng).unwrap(), vec![b, a]);
    }
}
