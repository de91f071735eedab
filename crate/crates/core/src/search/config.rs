use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::{ActionCounts, ActionMode, KRange, DEFAULT_ACTION_COUNTS};
use crate::elite::DEFAULT_ELITE_CAPACITY;
use crate::prompts::TaskText;

/// How the node to expand is chosen each iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// UCT descent from the root.
    #[default]
    Uct,
    /// Deepest evaluated leaf; ties go to the newest node.
    Dfs,
    /// Shallowest evaluated leaf; ties go to the oldest node.
    Bfs,
    /// The evaluated node with the best score, wherever it is.
    Greedy,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Ablations {
    pub self_verify: bool,
    pub thought_align: bool,
    pub action_mode: ActionMode,
}

impl Default for Ablations {
    fn default() -> Self {
        Self {
            self_verify: true,
            thought_align: true,
            action_mode: ActionMode::Full,
        }
    }
}

/// Optional stopping rules; both off by default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EarlyStop {
    /// Stop once any node's score reaches this value.
    pub target_score: Option<f64>,
    /// Stop after this many consecutive expansions without a new best.
    pub patience: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Total number of candidates sampled, failures included.
    #[serde(alias = "budget_N")]
    pub budget: u32,
    #[serde(alias = "init_count_N_I")]
    pub init_count: u32,
    pub lambda0: f64,
    pub eta: f64,
    pub action_counts: ActionCounts,
    pub k_range: KRange,
    /// Concurrent designer+evaluator workers per expansion.
    pub parallelism: u32,
    pub elite_capacity: usize,
    /// Repairs allowed per candidate.
    pub retry_limit: u32,
    pub seed: u64,
    pub selection_policy: SelectionPolicy,
    pub ablations: Ablations,
    pub early_stop: EarlyStop,
    /// Fallback `{epoch_freq}` when a context node's feedback lacks one.
    pub epoch_freq: u32,
    pub task: TaskText,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            budget: 80,
            init_count: 8,
            lambda0: 0.4,
            eta: 0.7,
            action_counts: DEFAULT_ACTION_COUNTS,
            k_range: KRange::default(),
            parallelism: 8,
            elite_capacity: DEFAULT_ELITE_CAPACITY,
            retry_limit: 3,
            seed: 0,
            selection_policy: SelectionPolicy::Uct,
            ablations: Ablations::default(),
            early_stop: EarlyStop::default(),
            epoch_freq: 10,
            task: TaskText::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ConfigError {
    #[error("init_count must be at least 1")]
    NoInit,
    #[error("budget {budget} is below init_count {init}")]
    BudgetBelowInit { budget: u32, init: u32 },
    #[error("eta must lie in (0, 1], got {0}")]
    Eta(f64),
    #[error("lambda0 must be finite and non-negative, got {0}")]
    Lambda(f64),
    #[error("parallelism must be at least 1")]
    Parallelism,
    #[error("every action count is zero")]
    ZeroActions,
    #[error("invalid k range [{0}, {1}]")]
    KRange(u32, u32),
    #[error("elite capacity must be at least 1")]
    EliteCapacity,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.init_count < 1 {
            return Err(ConfigError::NoInit);
        }
        if self.budget < self.init_count {
            return Err(ConfigError::BudgetBelowInit {
                budget: self.budget,
                init: self.init_count,
            });
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(ConfigError::Eta(self.eta));
        }
        if !(self.lambda0 >= 0.0 && self.lambda0.is_finite()) {
            return Err(ConfigError::Lambda(self.lambda0));
        }
        if self.parallelism < 1 {
            return Err(ConfigError::Parallelism);
        }
        if self.action_counts.iter().all(|&c| c == 0) {
            return Err(ConfigError::ZeroActions);
        }
        if self.k_range.min < 1 || self.k_range.min > self.k_range.max {
            return Err(ConfigError::KRange(self.k_range.min, self.k_range.max));
        }
        if self.elite_capacity < 1 {
            return Err(ConfigError::EliteCapacity);
        }
        Ok(())
    }
}
