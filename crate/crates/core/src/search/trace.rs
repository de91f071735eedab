use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::actions::ActionKind;
use crate::rng::fnv1a;
use crate::tree::NodeId;

/// One sampled candidate, in creation order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Candidates sampled so far, this one included.
    pub t: u32,
    /// Budget cursor when the expansion that produced this node began.
    pub step: u32,
    pub node: NodeId,
    pub kind: ActionKind,
    /// `None` for failed candidates.
    pub score: Option<f64>,
    pub lambda: f64,
    pub best_so_far: Option<f64>,
}

/// Cumulative wall-clock nanoseconds per phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub select: u64,
    pub expand: u64,
    pub simulate: u64,
    pub backup: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub entries: Vec<TraceEntry>,
    pub phases: PhaseTimes,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn best(&self) -> Option<f64> {
        self.entries.last().and_then(|e| e.best_so_far)
    }

    /// Record a candidate; `t` and the running best are filled in here.
    pub fn push(&mut self, step: u32, node: NodeId, kind: ActionKind, score: Option<f64>, lambda: f64) {
        let prev = self.best();
        let best_so_far = match (prev, score) {
            (Some(b), Some(s)) => Some(if s > b { s } else { b }),
            (b, s) => b.or(s),
        };
        self.entries.push(TraceEntry {
            t: self.entries.len() as u32 + 1,
            step,
            node,
            kind,
            score,
            lambda,
            best_so_far,
        });
    }

    pub fn best_so_far(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        self.entries.iter().map(|e| e.best_so_far)
    }

    /// Hash of the decision log (timings excluded), bit-exact on floats.
    pub fn digest(&self) -> u64 {
        let mut bytes = Vec::with_capacity(self.entries.len() * 48);
        for e in &self.entries {
            bytes.extend_from_slice(&e.t.to_le_bytes());
            bytes.extend_from_slice(&e.step.to_le_bytes());
            bytes.extend_from_slice(&e.node.0.to_le_bytes());
            bytes.extend_from_slice(e.kind.code().as_bytes());
            match e.score {
                Some(s) => {
                    bytes.push(1);
                    bytes.extend_from_slice(&s.to_bits().to_le_bytes());
                }
                None => bytes.push(0),
            }
            bytes.extend_from_slice(&e.lambda.to_bits().to_le_bytes());
        }
        fnv1a(&bytes)
    }
}
