//! Prompt assembly for every designer exchange.
//!
//! Templates live in `templates/` as plain text with `{name}` placeholders.
//! Substitution is a single pass, so braces inside substituted values
//! (code, feedback) are never re-expanded.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::{ActionKind, ActionSpec};
use crate::designer::CandidateProgram;
use crate::eval::format_feedback;
use crate::tree::{NodeId, NodeState};

pub const SYSTEM_PROMPT: &str = include_str!("../templates/system.txt");
const ENVIRONMENT: &str = include_str!("../templates/environment.txt");
const CODE_TIPS: &str = include_str!("../templates/code_tips.txt");
pub const ANALYSIS_TIPS: &str = include_str!("../templates/analysis_tips.txt");
const INIT: &str = include_str!("../templates/init.txt");
const M1: &str = include_str!("../templates/m1.txt");
const M2: &str = include_str!("../templates/m2.txt");
const C3: &str = include_str!("../templates/c3.txt");
const R4: &str = include_str!("../templates/r4.txt");
const D5: &str = include_str!("../templates/d5.txt");
const BASIC: &str = include_str!("../templates/basic.txt");
const REPAIR: &str = include_str!("../templates/repair.txt");
const ALIGN: &str = include_str!("../templates/align.txt");
const VERIFY: &str = include_str!("../templates/verify.txt");

/// Raw template text for a kind, without trailing newline.
pub fn template(kind: ActionKind) -> &'static str {
    match kind {
        ActionKind::Init => INIT,
        ActionKind::MutateStructure => M1,
        ActionKind::MutateParams => M2,
        ActionKind::Crossover => C3,
        ActionKind::PathReasoning => R4,
        ActionKind::DifferentThought => D5,
        ActionKind::Basic => BASIC,
        ActionKind::Repair => REPAIR,
        ActionKind::Align => ALIGN,
        ActionKind::Verify => VERIFY,
    }
    .trim_end()
}

/// Task information given to the designer.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskText {
    pub description: String,
    /// Observation code (or vocabulary listing) of the environment.
    pub environment: String,
}

/// Structured view of what a prompt was built from. Real designers only
/// read the text; the scripted mock designer works from this.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PromptMeta {
    /// Node the response will become.
    pub target: Option<NodeId>,
    pub revision: u32,
    /// Candidate sources of the context, in context order.
    pub sources: Vec<String>,
    /// Scores of the context nodes, when known.
    pub scores: Vec<Option<f64>>,
    pub traceback: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub kind: ActionKind,
    pub system_text: String,
    pub user_text: String,
    pub placeholders_resolved: BTreeMap<String, String>,
    pub meta: PromptMeta,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("context node {0} has no training feedback")]
    MissingFeedback(NodeId),
    #[error("{kind} expects {expected} context nodes, got {got}")]
    ContextSize {
        kind: ActionKind,
        expected: usize,
        got: usize,
    },
    #[error("placeholder `{{{0}}}` has no value")]
    Unresolved(String),
}

/// Replace `{name}` tokens in one pass. Any `{identifier}` without a value
/// is an error; other braces pass through untouched.
pub fn fill(template: &str, values: &BTreeMap<String, String>) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len() * 2);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match placeholder_name(after) {
            Some(name) => {
                let value = values
                    .get(name)
                    .ok_or_else(|| PromptError::Unresolved(name.to_string()))?;
                out.push_str(value);
                rest = &after[name.len() + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// `name` if `text` starts with `name}` and `name` is an identifier.
fn placeholder_name(text: &str) -> Option<&str> {
    let end = text.find('}')?;
    let name = &text[..end];
    let mut chars = name.chars();
    let first = chars.next()?;
    if (first.is_ascii_alphabetic() || first == '_') && chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        Some(name)
    } else {
        None
    }
}

/// Every `{identifier}` token left in `text`.
pub fn unresolved_placeholders(text: &str) -> Vec<String> {
    let mut found = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        if let Some(name) = placeholder_name(after) {
            found.push(name.to_string());
        }
        rest = after;
    }
    found
}

fn environment_block(task: &TaskText) -> String {
    let mut values = BTreeMap::new();
    values.insert("task_description".to_string(), task.description.clone());
    values.insert("environment".to_string(), task.environment.clone());
    // The template only has the two keys above.
    fill(ENVIRONMENT.trim_end(), &values).expect("environment template")
}

/// `Reward function i:` blocks with design idea and code, in context order.
pub fn reward_func_group(context: &[&NodeState]) -> String {
    context
        .iter()
        .enumerate()
        .map(|(i, n)| {
            format!(
                "Reward function {}:\nDesign Idea: {}\nCode: {}",
                i + 1,
                n.candidate.design_thought,
                n.candidate.source_text
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn trained_results(context: &[&NodeState]) -> Result<String, PromptError> {
    let blocks = context
        .iter()
        .map(|n| {
            n.feedback
                .as_ref()
                .map(format_feedback)
                .ok_or(PromptError::MissingFeedback(n.id))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if blocks.len() == 1 {
        return Ok(blocks.into_iter().next().unwrap_or_default());
    }
    Ok(blocks
        .iter()
        .enumerate()
        .map(|(i, b)| format!("Reward function {}:\n{}", i + 1, b))
        .collect::<Vec<_>>()
        .join("\n\n"))
}

fn generation_tail() -> String {
    format!("{}\n\n{}", INIT.trim_end(), CODE_TIPS.trim_end())
}

fn bundle(
    kind: ActionKind,
    user_text: String,
    values: BTreeMap<String, String>,
    meta: PromptMeta,
) -> PromptBundle {
    PromptBundle {
        kind,
        system_text: SYSTEM_PROMPT.trim_end().to_string(),
        user_text,
        placeholders_resolved: values,
        meta,
    }
}

/// Build the generation prompt for an expansion or initialization spec.
///
/// Generation prompts are laid out as: task/environment block, the action
/// instruction (absent for init), the design-idea/code output format, and
/// the code-writing tips. Context nodes must carry feedback.
pub fn assemble_prompt(
    spec: &ActionSpec,
    context: &[&NodeState],
    task: &TaskText,
    epoch_freq: u32,
) -> Result<PromptBundle, PromptError> {
    let kind = spec.kind;
    let expected = match kind {
        ActionKind::Init => Some(0),
        ActionKind::MutateStructure | ActionKind::MutateParams | ActionKind::Basic => Some(1),
        ActionKind::Align | ActionKind::Verify | ActionKind::Repair => Some(1),
        _ => None,
    };
    if let Some(expected) = expected {
        if context.len() != expected {
            return Err(PromptError::ContextSize {
                kind,
                expected,
                got: context.len(),
            });
        }
    } else if context.is_empty() {
        return Err(PromptError::ContextSize {
            kind,
            expected: spec.k.unwrap_or(1) as usize,
            got: 0,
        });
    }
    let meta = PromptMeta {
        sources: context.iter().map(|n| n.candidate.source_text.clone()).collect(),
        scores: context.iter().map(|n| n.score).collect(),
        ..PromptMeta::default()
    };
    match kind {
        ActionKind::Align => return Ok(assemble_align(&context[0].candidate)),
        ActionKind::Verify => return Ok(assemble_verify(&context[0].candidate, task)),
        ActionKind::Repair => {
            let tb = context[0].traceback.clone().unwrap_or_default();
            return Ok(assemble_repair(&context[0].candidate, &tb, task));
        }
        _ => {}
    }

    let mut values = BTreeMap::new();
    values.insert("task_description".to_string(), task.description.clone());
    values.insert("environment".to_string(), task.environment.clone());
    let env = environment_block(task);
    if kind == ActionKind::Init {
        let user = format!("{env}\n\n{}", generation_tail());
        return Ok(bundle(kind, user, values, meta));
    }

    values.insert("epoch_freq".to_string(), format!("{epoch_freq}"));
    values.insert("trained_results".to_string(), trained_results(context)?);
    values.insert(
        "trained_result_analysis_tip".to_string(),
        ANALYSIS_TIPS.trim_end().to_string(),
    );
    if kind.uses_k() {
        values.insert("nums".to_string(), format!("{}", context.len()));
        values.insert("reward_func_group".to_string(), reward_func_group(context));
    } else {
        values.insert(
            "design_idea".to_string(),
            context[0].candidate.design_thought.clone(),
        );
        values.insert(
            "reward_function".to_string(),
            context[0].candidate.source_text.clone(),
        );
    }
    let action = fill(template(kind), &values)?;
    let user = format!("{env}\n\n{action}\n\n{}", generation_tail());
    Ok(bundle(kind, user, values, meta))
}

fn candidate_values(candidate: &CandidateProgram) -> BTreeMap<String, String> {
    let mut values = BTreeMap::new();
    values.insert("design_idea".to_string(), candidate.design_thought.clone());
    values.insert("reward_function".to_string(), candidate.source_text.clone());
    values
}

fn candidate_meta(candidate: &CandidateProgram) -> PromptMeta {
    PromptMeta {
        revision: candidate.revision,
        sources: alloc::vec![candidate.source_text.clone()],
        scores: alloc::vec![None],
        ..PromptMeta::default()
    }
}

/// Prompt asking for a fixed version of a candidate that failed to run.
/// The traceback is embedded verbatim.
pub fn assemble_repair(candidate: &CandidateProgram, traceback: &str, task: &TaskText) -> PromptBundle {
    let mut values = candidate_values(candidate);
    values.insert("traceback".to_string(), traceback.to_string());
    let body = fill(template(ActionKind::Repair), &values).expect("repair template");
    values.insert("task_description".to_string(), task.description.clone());
    values.insert("environment".to_string(), task.environment.clone());
    let user = format!("{}\n\n{body}\n\n{}", environment_block(task), generation_tail());
    let mut meta = candidate_meta(candidate);
    meta.traceback = Some(traceback.to_string());
    bundle(ActionKind::Repair, user, values, meta)
}

/// Prompt asking to re-describe an executed candidate.
pub fn assemble_align(candidate: &CandidateProgram) -> PromptBundle {
    let values = candidate_values(candidate);
    let user = fill(template(ActionKind::Align), &values).expect("align template");
    bundle(ActionKind::Align, user, values, candidate_meta(candidate))
}

/// Prompt asking for a self-verify score in `[-1, 1]`.
pub fn assemble_verify(candidate: &CandidateProgram, task: &TaskText) -> PromptBundle {
    let mut values = candidate_values(candidate);
    let body = fill(template(ActionKind::Verify), &values).expect("verify template");
    values.insert("task_description".to_string(), task.description.clone());
    values.insert("environment".to_string(), task.environment.clone());
    let user = format!("{}\n\n{body}", environment_block(task));
    bundle(ActionKind::Verify, user, values, candidate_meta(candidate))
}
