//! One expansion slot end to end: prompt, generate, evaluate with repair,
//! then thought alignment and self-verification.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::actions::{ActionKind, ActionSpec};
use crate::designer::{self, parse_response, CandidateProgram, Designer};
use crate::eval::{EvalContext, Evaluator};
use crate::prompts::assemble_prompt;
use crate::rng::derive_seed;
use crate::tree::{NodeId, NodeOutcome, SearchTree};

use super::SearchConfig;

const SALT_GENERATE: u64 = 1;
const SALT_EVALUATE: u64 = 2;
const SALT_REPAIR: u64 = 3;
const SALT_ALIGN: u64 = 4;
const SALT_VERIFY: u64 = 5;

/// Everything a worker needs; built sequentially before fan-out.
#[derive(Clone, Debug)]
pub(crate) struct Job {
    pub spec: ActionSpec,
    pub parent: Option<NodeId>,
    pub target: NodeId,
    pub seed: u64,
}

pub(crate) struct Simulated {
    pub candidate: CandidateProgram,
    pub outcome: NodeOutcome,
}

/// Seed for everything concerning node `id` in a run seeded with `run_seed`.
pub fn node_seed(run_seed: u64, id: NodeId) -> u64 {
    derive_seed(run_seed, &[u64::from(id.0)])
}

fn failed(candidate: CandidateProgram, traceback: String) -> Simulated {
    Simulated {
        candidate,
        outcome: NodeOutcome::Failed { traceback },
    }
}

pub(crate) fn simulate<D, E>(tree: &SearchTree, job: &Job, cfg: &SearchConfig, designer: &D, evaluator: &E) -> Simulated
where
    D: Designer + ?Sized,
    E: Evaluator + ?Sized,
{
    let kind = job.spec.kind;
    let placeholder = CandidateProgram::new("", "", kind, job.parent);
    let context: Vec<_> = job.spec.context_nodes.iter().map(|&id| tree.node(id)).collect();
    let epoch_freq = context
        .first()
        .and_then(|n| n.feedback.as_ref())
        .map_or(cfg.epoch_freq, |f| f.epoch_freq);
    let mut prompt = match assemble_prompt(&job.spec, &context, &cfg.task, epoch_freq) {
        Ok(p) => p,
        Err(e) => return failed(placeholder, format!("prompt assembly failed: {e}")),
    };
    prompt.meta.target = Some(job.target);

    let raw = match designer.complete(&prompt, derive_seed(job.seed, &[SALT_GENERATE])) {
        Ok(raw) => raw,
        Err(e) => return failed(placeholder, format!("designer failed: {e}")),
    };
    let response = parse_response(&raw);
    let mut candidate = CandidateProgram::from_response(&response, kind, job.parent);
    let mut traceback = if response.parsed_code.is_none() {
        Some(String::from("ParseError: the response contained no fenced code block"))
    } else {
        None
    };

    let ctx = EvalContext {
        node: job.target,
        seed: derive_seed(job.seed, &[SALT_EVALUATE]),
    };
    let feedback = loop {
        if let Some(tb) = traceback.take() {
            match designer::repair(
                designer,
                &candidate,
                Some(job.target),
                &tb,
                &cfg.task,
                cfg.retry_limit,
                derive_seed(job.seed, &[SALT_REPAIR]),
            ) {
                Ok(fixed) => candidate = fixed,
                Err(designer::DesignerError::RetryExhausted(_)) => return failed(candidate, tb),
                Err(e) => return failed(candidate, format!("{tb}\n\nrepair failed: {e}")),
            }
        }
        let outcome = evaluator.evaluate(&candidate, &ctx);
        match (outcome.feedback, outcome.traceback) {
            (Some(fb), _) if outcome.status == crate::eval::EvalStatus::Ok => match fb.validate() {
                Ok(()) => break fb,
                Err(e) => traceback = Some(format!("invalid training feedback: {e}")),
            },
            (_, tb) => traceback = Some(tb.unwrap_or_else(|| String::from("evaluation failed without a traceback"))),
        }
    };

    if cfg.ablations.thought_align {
        candidate.design_thought = designer::align_thought(designer, &candidate, derive_seed(job.seed, &[SALT_ALIGN]));
    }
    let self_verify = if cfg.ablations.self_verify {
        designer::self_verify(designer, &candidate, &cfg.task, derive_seed(job.seed, &[SALT_VERIFY]))
    } else {
        0.0
    };
    Simulated {
        candidate,
        outcome: NodeOutcome::Evaluated { feedback, self_verify },
    }
}

/// Context for `kind` in a parent-only expansion (used by comparators).
pub(crate) fn parent_spec(kind: ActionKind, parent: NodeId) -> ActionSpec {
    let mut spec = ActionSpec::new(kind);
    spec.context_nodes.push(parent);
    spec
}

