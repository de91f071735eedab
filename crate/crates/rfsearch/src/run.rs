//! Backend construction, the checkpointing run driver and the run
//! directory layout:
//!
//! ```text
//! <out>/checkpoint.ckpt
//! <out>/trace.csv
//! <out>/report.txt
//! <out>/nodes/<id>/candidate.rfn
//! <out>/nodes/<id>/feedback.txt
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rfsearch_core::designer::{CandidateProgram, Designer, DesignerError, MockDesigner};
use rfsearch_core::eval::{format_feedback, EvalContext, EvalOutcome, Evaluator, SyntheticEvaluator, ToyEvaluator};
use rfsearch_core::prompts::PromptBundle;
use rfsearch_core::search::{Runner, SearchConfig, SearchError, SearchState};
use thiserror::Error;

use crate::checkpoint::{save_checkpoint, Checkpoint, CheckpointError};
use crate::config::{Backends, DesignerBackend, EvaluatorBackend};
use crate::exec::{SystemClock, ThreadExecutor};
use crate::http::HttpDesigner;
use crate::report::{path_report, trace_csv};
use crate::subprocess::SubprocessEvaluator;

pub const CHECKPOINT_FILE: &str = "checkpoint.ckpt";

pub enum AnyDesigner {
    Mock(MockDesigner),
    Http(HttpDesigner),
}

impl Designer for AnyDesigner {
    fn complete(&self, prompt: &PromptBundle, seed: u64) -> Result<String, DesignerError> {
        match self {
            AnyDesigner::Mock(d) => d.complete(prompt, seed),
            AnyDesigner::Http(d) => d.complete(prompt, seed),
        }
    }
}

pub enum AnyEvaluator {
    Synthetic(SyntheticEvaluator),
    Toy(ToyEvaluator),
    Subprocess(SubprocessEvaluator),
}

impl Evaluator for AnyEvaluator {
    fn evaluate(&self, candidate: &CandidateProgram, ctx: &EvalContext) -> EvalOutcome {
        match self {
            AnyEvaluator::Synthetic(e) => e.evaluate(candidate, ctx),
            AnyEvaluator::Toy(e) => e.evaluate(candidate, ctx),
            AnyEvaluator::Subprocess(e) => e.evaluate(candidate, ctx),
        }
    }
}

pub fn build_designer(backend: &DesignerBackend) -> AnyDesigner {
    match backend {
        DesignerBackend::Http(cfg) => AnyDesigner::Http(HttpDesigner::new(cfg.clone())),
        mock => AnyDesigner::Mock(mock.mock_designer().expect("mock backend")),
    }
}

/// `work_dir` hosts per-attempt directories of external trainers.
pub fn build_evaluator(backend: &EvaluatorBackend, work_dir: &Path) -> AnyEvaluator {
    match backend {
        EvaluatorBackend::Synthetic { landscape } => AnyEvaluator::Synthetic(SyntheticEvaluator {
            landscape: landscape.clone(),
        }),
        EvaluatorBackend::Toy { task } => AnyEvaluator::Toy(ToyEvaluator { task: task.clone() }),
        EvaluatorBackend::Subprocess(cfg) => AnyEvaluator::Subprocess(SubprocessEvaluator::new(cfg.clone(), work_dir)),
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

pub type StepHook = Box<dyn FnMut(&SearchState)>;

/// Owns the backends of one run and writes its directory.
pub struct Driver {
    pub backends: Backends,
    pub out: PathBuf,
    designer: AnyDesigner,
    evaluator: AnyEvaluator,
    clock: SystemClock,
    /// Called after each checkpoint with the state just saved.
    pub on_step: Option<StepHook>,
}

impl Driver {
    pub fn new(backends: Backends, out: impl Into<PathBuf>) -> Self {
        let out = out.into();
        Self {
            designer: build_designer(&backends.designer),
            evaluator: build_evaluator(&backends.evaluator, &out),
            backends,
            out,
            clock: SystemClock::default(),
            on_step: None,
        }
    }

    fn runner(&self) -> Runner<'_, AnyDesigner, AnyEvaluator, ThreadExecutor> {
        Runner {
            designer: &self.designer,
            evaluator: &self.evaluator,
            executor: ThreadExecutor,
            clock: &self.clock,
        }
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.out.join(CHECKPOINT_FILE)
    }

    fn save(&mut self, state: &SearchState) -> Result<(), RunError> {
        let body = Checkpoint {
            backends: self.backends.clone(),
            state: state.clone(),
        };
        save_checkpoint(&body, &self.checkpoint_path())?;
        if let Some(f) = self.on_step.as_mut() {
            f(state);
        }
        Ok(())
    }

    /// Initialize, then continue as [`Driver::resume`].
    pub fn start(&mut self, config: SearchConfig, t_limit: Option<u32>) -> Result<SearchState, RunError> {
        let mut state = self.runner().initialize(config)?;
        self.save(&state)?;
        self.resume(&mut state, t_limit)?;
        Ok(state)
    }

    /// Step until finished (or until `t_limit` samples), checkpointing after
    /// every expansion, then write the run directory.
    pub fn resume(&mut self, state: &mut SearchState, t_limit: Option<u32>) -> Result<(), RunError> {
        let limit = t_limit.unwrap_or(u32::MAX);
        while state.t < limit && self.runner().step(state)? {
            self.save(state)?;
        }
        self.save(state)?;
        write_run_dir(&self.out, state)
    }
}

/// Write node files, trace and report for `state` under `out`.
pub fn write_run_dir(out: &Path, state: &SearchState) -> Result<(), RunError> {
    let write = |path: PathBuf, text: &str| -> Result<(), RunError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|source| RunError::Io {
                path: dir.to_owned(),
                source,
            })?;
        }
        fs::write(&path, text).map_err(|source| RunError::Io { path, source })
    };
    for node in state.tree.nodes() {
        let dir = out.join("nodes").join(node.id.0.to_string());
        write(dir.join("candidate.rfn"), &node.candidate.source_text)?;
        let feedback = match (&node.feedback, &node.traceback) {
            (Some(fb), _) => format_feedback(fb),
            (None, Some(tb)) => format!("failed after {} repairs:\n{tb}\n", node.candidate.revision),
            (None, None) => String::new(),
        };
        write(dir.join("feedback.txt"), &feedback)?;
    }
    write(out.join("trace.csv"), &trace_csv(&state.trace))?;
    write(out.join("report.txt"), &path_report(state))
}
