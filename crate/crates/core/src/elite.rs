//! Capacity-bounded store of the highest-scoring nodes, sampled by
//! reciprocal rank for crossover.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tree::{NodeId, TreeError};

/// Default number of elite entries kept.
pub const DEFAULT_ELITE_CAPACITY: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EliteEntry {
    pub node: NodeId,
    pub score: f64,
}

/// Entries sorted by score, highest first; equal scores keep insertion order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EliteSet {
    capacity: usize,
    entries: Vec<EliteEntry>,
}

impl EliteSet {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "elite capacity must be positive");
        Self {
            capacity,
            entries: Vec::with_capacity(capacity + 1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn entries(&self) -> &[EliteEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.entries.iter().any(|e| e.node == node)
    }

    /// Insert when there is room or `score` beats the current minimum,
    /// evicting the lowest entry. Returns whether the node was kept.
    pub fn update(&mut self, node: NodeId, score: f64) -> bool {
        if self.entries.len() == self.capacity {
            let floor = self.entries[self.entries.len() - 1].score;
            if score.partial_cmp(&floor) != Some(core::cmp::Ordering::Greater) {
                return false;
            }
        }
        // After every existing entry with score >= this one.
        let at = self.entries.partition_point(|e| e.score >= score);
        self.entries.insert(at, EliteEntry { node, score });
        self.entries.truncate(self.capacity);
        true
    }

    /// Draw `k` distinct nodes without replacement. The entry at rank `r`
    /// (1-based) has weight `1/r`, renormalized over what remains after each
    /// draw. `exclude` removes one node from the pool before ranking.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        k: usize,
        exclude: Option<NodeId>,
        rng: &mut R,
    ) -> Result<Vec<NodeId>, TreeError> {
        let mut pool: Vec<(NodeId, f64)> = self
            .entries
            .iter()
            .filter(|e| Some(e.node) != exclude)
            .enumerate()
            .map(|(rank0, e)| (e.node, 1.0 / (rank0 as f64 + 1.0)))
            .collect();
        if pool.is_empty() {
            return Err(TreeError::EliteEmpty);
        }
        let mut out = Vec::with_capacity(k);
        while out.len() < k && !pool.is_empty() {
            let total: f64 = pool.iter().map(|(_, w)| w).sum();
            let mut u = rng.random::<f64>() * total;
            let mut pick = pool.len() - 1;
            for (i, (_, w)) in pool.iter().enumerate() {
                if u < *w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            out.push(pool.remove(pick).0);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SearchRng;

    #[test]
    fn eviction_keeps_top_scores() {
        let mut e = EliteSet::new(2);
        e.update(NodeId(0), 0.1);
        e.update(NodeId(1), 0.5);
        e.update(NodeId(2), 0.3);
        let scores: Vec<f64> = e.entries().iter().map(|x| x.score).collect();
        assert_eq!(scores, [0.5, 0.3]);
        assert!(!e.update(NodeId(3), 0.3));
    }

    #[test]
    fn ties_keep_insertion_order() {
        let mut e = EliteSet::new(4);
        e.update(NodeId(0), 1.0);
        e.update(NodeId(1), 1.0);
        e.update(NodeId(2), 2.0);
        let ids: Vec<u32> = e.entries().iter().map(|x| x.node.0).collect();
        assert_eq!(ids, [2, 0, 1]);
    }

    #[test]
    fn sample_is_distinct_and_bounded() {
        let mut e = EliteSet::new(8);
        for i in 0..5 {
            e.update(NodeId(i), f64::from(i));
        }
        let mut rng = SearchRng::new(3);
        for _ in 0..200 {
            let mut s = e.sample(3, None, &mut rng).unwrap();
            s.sort();
            s.dedup();
            assert_eq!(s.len(), 3);
        }
        assert_eq!(e.sample(10, None, &mut rng).unwrap().len(), 5);
        assert!(!e.sample(4, Some(NodeId(4)), &mut rng).unwrap().contains(&NodeId(4)));
    }

    #[test]
    fn empty_sample_errors() {
        let e = EliteSet::new(2);
        assert_eq!(e.sample(1, None, &mut SearchRng::new(0)), Err(TreeError::EliteEmpty));
    }
}
