//! The designer interface: prompt in, design thought and candidate out.

mod mock;
mod response;

pub use mock::{MockDesigner, MockMode, ScriptEntry, TOY_TASK_LIBRARY};
pub use response::{parse_response, parse_self_verify, DesignerResponse};

use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::ActionKind;
use crate::prompts::{assemble_align, assemble_repair, assemble_verify, PromptBundle, TaskText};
use crate::rng::derive_seed;
use crate::tree::NodeId;

/// Where a candidate came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    pub kind: ActionKind,
    pub parent: Option<NodeId>,
}

/// One generated reward program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateProgram {
    pub source_text: String,
    pub design_thought: String,
    pub lineage: Lineage,
    /// Number of repairs applied.
    pub revision: u32,
}

impl CandidateProgram {
    pub fn new(source_text: impl Into<String>, design_thought: impl Into<String>, kind: ActionKind, parent: Option<NodeId>) -> Self {
        Self {
            source_text: source_text.into(),
            design_thought: design_thought.into(),
            lineage: Lineage { kind, parent },
            revision: 0,
        }
    }

    /// Build from a parsed response. A response without a code block keeps
    /// its raw text as source so the failure is visible to repair.
    pub fn from_response(resp: &DesignerResponse, kind: ActionKind, parent: Option<NodeId>) -> Self {
        let source = resp.parsed_code.clone().unwrap_or_else(|| resp.raw_text.clone());
        let thought = resp.parsed_thought.clone().unwrap_or_default();
        Self::new(source, thought, kind, parent)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DesignerError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("response contained no fenced code block")]
    Parse,
    #[error("no bracketed score in self-verify response")]
    NoScore,
    #[error("repair limit of {0} reached")]
    RetryExhausted(u32),
}

/// A backend that answers prompts. Implementations must be usable from
/// several workers at once and, for replayable runs, should be a pure
/// function of `(prompt, seed)`.
pub trait Designer: Sync {
    fn complete(&self, prompt: &PromptBundle, seed: u64) -> Result<String, DesignerError>;
}

impl<D: Designer + ?Sized> Designer for &D {
    fn complete(&self, prompt: &PromptBundle, seed: u64) -> Result<String, DesignerError> {
        (**self).complete(prompt, seed)
    }
}

/// Send a generation prompt and split the reply into thought and code.
pub fn generate<D: Designer + ?Sized>(
    designer: &D,
    prompt: &PromptBundle,
    seed: u64,
) -> Result<DesignerResponse, DesignerError> {
    let raw = designer.complete(prompt, seed)?;
    let resp = parse_response(&raw);
    if resp.parsed_code.is_none() {
        return Err(DesignerError::Parse);
    }
    Ok(resp)
}

/// Ask for a fixed candidate. Allowed while `revision < limit`; the result
/// has `revision + 1`, lineage kind `repair`, and the original thought.
/// `target` is the node the candidate will become, if already known.
pub fn repair<D: Designer + ?Sized>(
    designer: &D,
    candidate: &CandidateProgram,
    target: Option<NodeId>,
    traceback: &str,
    task: &TaskText,
    limit: u32,
    seed: u64,
) -> Result<CandidateProgram, DesignerError> {
    if candidate.revision >= limit {
        return Err(DesignerError::RetryExhausted(limit));
    }
    let mut prompt = assemble_repair(candidate, traceback, task);
    prompt.meta.target = target;
    let raw = designer.complete(&prompt, derive_seed(seed, &[u64::from(candidate.revision)]))?;
    let resp = parse_response(&raw);
    let source = resp.parsed_code.unwrap_or(raw);
    Ok(CandidateProgram {
        source_text: source,
        design_thought: candidate.design_thought.clone(),
        lineage: Lineage {
            kind: ActionKind::Repair,
            parent: candidate.lineage.parent,
        },
        revision: candidate.revision + 1,
    })
}

/// Regenerate the design thought from the executed code. Any backend
/// failure, or an empty answer, keeps the original thought.
pub fn align_thought<D: Designer + ?Sized>(designer: &D, candidate: &CandidateProgram, seed: u64) -> String {
    let prompt = assemble_align(candidate);
    match designer.complete(&prompt, seed) {
        Ok(raw) => {
            let text = raw.trim();
            let text = text
                .strip_prefix('{')
                .and_then(|t| t.strip_suffix('}'))
                .unwrap_or(text)
                .trim();
            if text.is_empty() {
                candidate.design_thought.clone()
            } else {
                text.to_string()
            }
        }
        Err(_) => candidate.design_thought.clone(),
    }
}

/// Self-verify score in `[-1, 1]`; a missing score or failed call gives 0.
pub fn self_verify<D: Designer + ?Sized>(designer: &D, candidate: &CandidateProgram, task: &TaskText, seed: u64) -> f64 {
    let prompt = assemble_verify(candidate, task);
    designer
        .complete(&prompt, seed)
        .ok()
        .and_then(|raw| parse_self_verify(&raw).ok())
        .unwrap_or(0.0)
}
