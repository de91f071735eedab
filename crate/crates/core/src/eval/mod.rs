//! Evaluators: train under a candidate and report the task score F plus
//! training feedback.

mod feedback;
mod synthetic;
mod toy;

pub use feedback::{format_feedback, FeedbackError, SeriesSummary, TrainingFeedback, SNAPSHOT_COUNT};
pub use synthetic::{bump, synthetic_score, LandscapeConfig, SyntheticError, SyntheticEvaluator};
pub use toy::{
    policy_success, toy_rl_train, ReachPolicy, ReachTask, ToyEvaluator, DENSE_REFERENCE_REWARD,
    SPARSE_REWARD, TOY_VOCABULARY,
};

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::designer::CandidateProgram;
use crate::tree::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalStatus {
    Ok,
    ExecError,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub status: EvalStatus,
    pub feedback: Option<TrainingFeedback>,
    pub traceback: Option<String>,
}

impl EvalOutcome {
    pub fn ok(feedback: TrainingFeedback) -> Self {
        Self {
            status: EvalStatus::Ok,
            feedback: Some(feedback),
            traceback: None,
        }
    }

    pub fn exec_error(traceback: impl Into<String>) -> Self {
        Self {
            status: EvalStatus::ExecError,
            feedback: None,
            traceback: Some(traceback.into()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == EvalStatus::Ok
    }
}

/// Identifies one evaluation attempt.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalContext {
    pub node: NodeId,
    pub seed: u64,
}

/// Trains a policy under a candidate and scores it. Errors of any kind are
/// reported as `exec_error` outcomes carrying a traceback.
pub trait Evaluator: Sync {
    fn evaluate(&self, candidate: &CandidateProgram, ctx: &EvalContext) -> EvalOutcome;
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn evaluate(&self, candidate: &CandidateProgram, ctx: &EvalContext) -> EvalOutcome {
        (**self).evaluate(candidate, ctx)
    }
}
