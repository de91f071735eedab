//! The search tree: node storage, UCT selection, smoothed backup, Q bounds.
//!
//! The root is virtual and has no storage of its own; nodes whose `parent`
//! is `None` are the root's children (the initialization nodes).

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::ActionKind;
use crate::designer::CandidateProgram;
use crate::eval::TrainingFeedback;
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Pending,
    Evaluated,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum TreeError {
    #[error("the root has no evaluated children")]
    EmptyTree,
    #[error("the elite set is empty")]
    EliteEmpty,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

/// One node `[z, R, F, feedback]` plus its search statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Root children sit at depth 1.
    pub depth: u32,
    pub candidate: CandidateProgram,
    pub score: Option<f64>,
    pub feedback: Option<TrainingFeedback>,
    /// Last execution error, kept for failed nodes.
    pub traceback: Option<String>,
    /// `None` while pending and for failed nodes, whose Q tracks the global
    /// minimum lazily.
    pub q_value: Option<f64>,
    pub visit_count: u32,
    pub self_verify: Option<f64>,
    pub status: NodeStatus,
    pub action_tag: ActionKind,
}

impl NodeState {
    pub fn is_evaluated(&self) -> bool {
        self.status == NodeStatus::Evaluated
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Result of simulating one candidate, ready to be attached.
#[derive(Clone, Debug, PartialEq)]
pub enum NodeOutcome {
    Evaluated {
        feedback: TrainingFeedback,
        self_verify: f64,
    },
    Failed {
        traceback: String,
    },
}

/// Global Q bounds over evaluated nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QBounds {
    pub min: f64,
    pub max: f64,
}

impl QBounds {
    /// `(q - min) / (max - min)`, or 0.5 for a flat tree.
    pub fn normalize(&self, q: f64) -> f64 {
        if self.max == self.min {
            0.5
        } else {
            (q - self.min) / (self.max - self.min)
        }
    }
}

/// Softmax weight of `values[index]` within `values`.
pub fn softmax_at(values: &[f64], index: usize) -> f64 {
    let peak = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let denom: f64 = values.iter().map(|v| math::exp(v - peak)).sum();
    math::exp(values[index] - peak) / denom
}

/// UCT value of one child:
/// `norm(Q) + λ·(sqrt(2·ln(N_parent + 1) / N_child) + softmax(v_self)[child])`.
///
/// `sibling_verify` holds the self-verify scores of every evaluated child of
/// the parent, and `child_index` locates this child among them.
pub fn uct_score(
    child_q: f64,
    child_visits: u32,
    parent_visits: u32,
    lambda: f64,
    bounds: QBounds,
    sibling_verify: &[f64],
    child_index: usize,
) -> f64 {
    let exploit = bounds.normalize(child_q);
    let explore = math::sqrt(2.0 * math::ln(f64::from(parent_visits) + 1.0) / f64::from(child_visits));
    let prior = softmax_at(sibling_verify, child_index);
    exploit + lambda * (explore + prior)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchTree {
    nodes: Vec<NodeState>,
    root_children: Vec<NodeId>,
}

impl SearchTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Id the next attached node will get.
    pub fn next_id(&self) -> NodeId {
        NodeId(self.nodes.len() as u32)
    }

    pub fn get(&self, id: NodeId) -> Result<&NodeState, TreeError> {
        self.nodes.get(id.index()).ok_or(TreeError::UnknownNode(id))
    }

    pub fn node(&self, id: NodeId) -> &NodeState {
        &self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn root_children(&self) -> &[NodeId] {
        &self.root_children
    }

    /// Children of `parent`, or of the root when `parent` is `None`.
    pub fn children_of(&self, parent: Option<NodeId>) -> &[NodeId] {
        match parent {
            Some(p) => &self.nodes[p.index()].children,
            None => &self.root_children,
        }
    }

    pub fn evaluated(&self) -> impl Iterator<Item = &NodeState> {
        self.nodes.iter().filter(|n| n.is_evaluated())
    }

    /// Attach a simulated candidate under `parent` (the root when `None`).
    /// Leaves start at `Q = F`, `N = 1`.
    pub fn attach(
        &mut self,
        parent: Option<NodeId>,
        candidate: CandidateProgram,
        action_tag: ActionKind,
        outcome: NodeOutcome,
    ) -> NodeId {
        let id = self.next_id();
        let depth = parent.map_or(1, |p| self.nodes[p.index()].depth + 1);
        let node = match outcome {
            NodeOutcome::Evaluated { feedback, self_verify } => NodeState {
                id,
                parent,
                children: Vec::new(),
                depth,
                candidate,
                score: Some(feedback.final_score),
                q_value: Some(feedback.final_score),
                feedback: Some(feedback),
                traceback: None,
                visit_count: 1,
                self_verify: Some(self_verify.clamp(-1.0, 1.0)),
                status: NodeStatus::Evaluated,
                action_tag,
            },
            NodeOutcome::Failed { traceback } => NodeState {
                id,
                parent,
                children: Vec::new(),
                depth,
                candidate,
                score: None,
                feedback: None,
                traceback: Some(traceback),
                q_value: None,
                visit_count: 1,
                self_verify: None,
                status: NodeStatus::Failed,
                action_tag,
            },
        };
        self.nodes.push(node);
        match parent {
            Some(p) => self.nodes[p.index()].children.push(id),
            None => self.root_children.push(id),
        }
        id
    }

    /// Min and max Q over all evaluated nodes.
    pub fn q_bounds(&self) -> Result<QBounds, TreeError> {
        let mut it = self.evaluated().filter_map(|n| n.q_value);
        let first = it.next().ok_or(TreeError::EmptyTree)?;
        let (min, max) = it.fold((first, first), |(lo, hi), q| (lo.min(q), hi.max(q)));
        Ok(QBounds { min, max })
    }

    /// Q of a node, resolving failed nodes to the current global minimum.
    pub fn effective_q(&self, id: NodeId) -> Option<f64> {
        let n = &self.nodes[id.index()];
        match n.status {
            NodeStatus::Evaluated => n.q_value,
            NodeStatus::Failed => self.q_bounds().ok().map(|b| b.min),
            NodeStatus::Pending => None,
        }
    }

    /// Visit count; the root's is the sum over its children.
    pub fn visits(&self, id: Option<NodeId>) -> u32 {
        match id {
            Some(id) => self.nodes[id.index()].visit_count,
            None => self.root_children.iter().map(|c| self.nodes[c.index()].visit_count).sum(),
        }
    }

    /// Descend from the root, at each step moving to the evaluated child
    /// with the highest UCT value (ties: lowest child index), until a node
    /// with no evaluated children.
    pub fn select_leaf(&self, lambda: f64) -> Result<NodeId, TreeError> {
        let bounds = self.q_bounds()?;
        let mut current: Option<NodeId> = None;
        loop {
            match self.best_child(current, lambda, bounds) {
                Some(next) => current = Some(next),
                None => return current.ok_or(TreeError::EmptyTree),
            }
        }
    }

    /// UCT winner among the evaluated children of `parent`.
    pub fn best_child(&self, parent: Option<NodeId>, lambda: f64, bounds: QBounds) -> Option<NodeId> {
        let siblings: Vec<&NodeState> = self
            .children_of(parent)
            .iter()
            .map(|c| &self.nodes[c.index()])
            .filter(|n| n.is_evaluated())
            .collect();
        if siblings.is_empty() {
            return None;
        }
        let verify: Vec<f64> = siblings.iter().map(|n| n.self_verify.unwrap_or(0.0)).collect();
        let parent_visits = self.visits(parent);
        let mut best: Option<(NodeId, f64)> = None;
        for (i, n) in siblings.iter().enumerate() {
            let q = n.q_value.unwrap_or(bounds.min);
            let s = uct_score(q, n.visit_count, parent_visits, lambda, bounds, &verify, i);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((n.id, s));
            }
        }
        best.map(|(id, _)| id)
    }

    /// Propagate from `leaf` up to (excluding) the root:
    /// `Q(s) ← (1−η)·Q(s) + η·max_child Q`, `N(s) ← Σ_child N`.
    pub fn backup(&mut self, leaf: NodeId, eta: f64) {
        let failed_q = self.q_bounds().map(|b| b.min).unwrap_or(0.0);
        let mut cursor = self.nodes[leaf.index()].parent;
        while let Some(id) = cursor {
            let mut max_q = f64::NEG_INFINITY;
            let mut visits = 0u32;
            for &c in &self.nodes[id.index()].children {
                let child = &self.nodes[c.index()];
                let q = match child.status {
                    NodeStatus::Evaluated => child.q_value.unwrap_or(failed_q),
                    NodeStatus::Failed => failed_q,
                    NodeStatus::Pending => continue,
                };
                max_q = max_q.max(q);
                visits += child.visit_count;
            }
            let node = &mut self.nodes[id.index()];
            if visits > 0 {
                let q = node.q_value.unwrap_or(max_q);
                node.q_value = Some((1.0 - eta) * q + eta * max_q);
                node.visit_count = visits;
            }
            cursor = node.parent;
        }
    }

    /// Ancestors of `id`, nearest first, excluding `id` and the root.
    pub fn ancestors(&self, id: NodeId) -> Ancestors<'_> {
        Ancestors {
            tree: self,
            next: self.nodes[id.index()].parent,
        }
    }

    /// Whether `node` lies in the subtree rooted at `ancestor`.
    pub fn in_subtree(&self, node: NodeId, ancestor: NodeId) -> bool {
        node == ancestor || self.ancestors(node).any(|a| a == ancestor)
    }

    /// Evaluated node with the highest F; ties go to the lowest id.
    pub fn best_node(&self) -> Option<NodeId> {
        let mut best: Option<(NodeId, f64)> = None;
        for n in self.evaluated() {
            let f = n.score.unwrap_or(f64::NEG_INFINITY);
            if best.is_none_or(|(_, b)| f > b) {
                best = Some((n.id, f));
            }
        }
        best.map(|(id, _)| id)
    }

    /// Root-to-node path, root child first.
    pub fn path_to(&self, id: NodeId) -> Vec<NodeId> {
        let mut path: Vec<NodeId> = self.ancestors(id).collect();
        path.reverse();
        path.push(id);
        path
    }

    /// Check `N(s) = Σ N(child)` at every internal node. Returns the first
    /// offending node.
    pub fn check_sum_rule(&self) -> Result<(), NodeId> {
        for n in &self.nodes {
            if n.children.is_empty() {
                continue;
            }
            let sum: u32 = n.children.iter().map(|c| self.nodes[c.index()].visit_count).sum();
            if sum != n.visit_count {
                return Err(n.id);
            }
        }
        Ok(())
    }

    #[doc(hidden)]
    pub fn node_mut(&mut self, id: NodeId) -> &mut NodeState {
        &mut self.nodes[id.index()]
    }
}

pub struct Ancestors<'a> {
    tree: &'a SearchTree,
    next: Option<NodeId>,
}

impl Iterator for Ancestors<'_> {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        let id = self.next?;
        self.next = self.tree.nodes[id.index()].parent;
        Some(id)
    }
}
