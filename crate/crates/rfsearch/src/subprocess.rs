//! Evaluation by an external trainer process speaking the file protocol:
//! `request.json` in, `response.json` out, one isolated directory per
//! attempt.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use rfsearch_core::designer::CandidateProgram;
use rfsearch_core::eval::{EvalContext, EvalOutcome, Evaluator, SeriesSummary, TrainingFeedback, SNAPSHOT_COUNT};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::config::SubprocessConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdapterRequest {
    pub candidate_path: PathBuf,
    pub seed: u64,
    pub train_steps: u32,
    pub run_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterStatus {
    Ok,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdapterResponse {
    pub status: AdapterStatus,
    #[serde(default)]
    pub final_score: Option<f64>,
    /// Kept as a JSON map so component order follows the file.
    #[serde(default)]
    pub component_series: Map<String, Value>,
    #[serde(default)]
    pub task_score_series: Vec<f64>,
    #[serde(default)]
    pub episode_lengths_series: Vec<f64>,
    #[serde(default)]
    pub traceback: Option<String>,
}

#[derive(Debug, Error)]
pub enum SubprocessError {
    #[error("timeout after {0} s")]
    Timeout(u64),
    #[error("SpawnFailure: {0}")]
    SpawnFailure(String),
    #[error("MalformedResponse: {0}")]
    MalformedResponse(String),
    #[error("{0}")]
    Exit(String),
    #[error("{0}")]
    Reported(String),
}

impl AdapterResponse {
    pub fn into_feedback(self, train_steps: u32) -> Result<TrainingFeedback, SubprocessError> {
        let malformed = |m: String| SubprocessError::MalformedResponse(m);
        if self.status == AdapterStatus::Error {
            return Err(SubprocessError::Reported(self.traceback.unwrap_or_else(|| "trainer reported an error".into())));
        }
        let final_score = self.final_score.ok_or_else(|| malformed("missing final_score".into()))?;
        let mut components = Vec::with_capacity(self.component_series.len());
        for (name, series) in self.component_series {
            let values: Vec<f64> = serde_json::from_value(series).map_err(|e| malformed(format!("component `{name}`: {e}")))?;
            components.push((name, SeriesSummary::from_values(values)));
        }
        let fb = TrainingFeedback {
            components,
            task_score: SeriesSummary::from_values(self.task_score_series),
            episode_lengths: SeriesSummary::from_values(self.episode_lengths_series),
            epoch_freq: (train_steps / SNAPSHOT_COUNT as u32).max(1),
            final_score,
        };
        fb.validate().map_err(|e| malformed(e.to_string()))?;
        Ok(fb)
    }
}

/// Runs `cmd <request_path>` under `root/nodes/<id>/attempt-<revision>/`.
#[derive(Clone, Debug)]
pub struct SubprocessEvaluator {
    pub config: SubprocessConfig,
    pub root: PathBuf,
}

impl SubprocessEvaluator {
    pub fn new(config: SubprocessConfig, root: impl Into<PathBuf>) -> Self {
        Self {
            config,
            root: root.into(),
        }
    }

    pub fn attempt_dir(&self, candidate: &CandidateProgram, ctx: &EvalContext) -> PathBuf {
        self.root
            .join("nodes")
            .join(ctx.node.0.to_string())
            .join(format!("attempt-{}", candidate.revision))
    }

    pub fn run(&self, candidate: &CandidateProgram, ctx: &EvalContext) -> Result<TrainingFeedback, SubprocessError> {
        let dir = self.attempt_dir(candidate, ctx);
        let spawn = |e: std::io::Error| SubprocessError::SpawnFailure(e.to_string());
        fs::create_dir_all(&dir).map_err(spawn)?;
        let candidate_path = dir.join(format!("candidate.{}", self.config.extension));
        fs::write(&candidate_path, &candidate.source_text).map_err(spawn)?;
        let request = AdapterRequest {
            candidate_path,
            seed: ctx.seed,
            train_steps: self.config.train_steps,
            run_dir: dir.clone(),
        };
        let request_path = dir.join("request.json");
        let response_path = dir.join("response.json");
        let _ = fs::remove_file(&response_path);
        fs::write(&request_path, serde_json::to_vec_pretty(&request).expect("request serializes")).map_err(spawn)?;

        let (program, args) = self
            .config
            .cmd
            .split_first()
            .ok_or_else(|| SubprocessError::SpawnFailure("empty trainer command".into()))?;
        let stderr_path = dir.join("stderr.log");
        let mut child = Command::new(program)
            .args(args)
            .arg(&request_path)
            .stdin(Stdio::null())
            .stdout(File::create(dir.join("stdout.log")).map_err(spawn)?)
            .stderr(File::create(&stderr_path).map_err(spawn)?)
            .spawn()
            .map_err(|e| SubprocessError::SpawnFailure(format!("{program}: {e}")))?;
        let status = match child.wait_timeout(Duration::from_secs(self.config.timeout_secs)).map_err(spawn)? {
            Some(status) => status,
            None => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(SubprocessError::Timeout(self.config.timeout_secs));
            }
        };
        if !status.success() {
            let stderr = fs::read_to_string(&stderr_path).unwrap_or_default();
            return Err(SubprocessError::Exit(if stderr.is_empty() {
                format!("trainer exited with {status}")
            } else {
                stderr
            }));
        }
        read_response(&response_path)?.into_feedback(self.config.train_steps)
    }
}

fn read_response(path: &Path) -> Result<AdapterResponse, SubprocessError> {
    let text = fs::read_to_string(path).map_err(|e| SubprocessError::MalformedResponse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| SubprocessError::MalformedResponse(e.to_string()))
}

impl Evaluator for SubprocessEvaluator {
    fn evaluate(&self, candidate: &CandidateProgram, ctx: &EvalContext) -> EvalOutcome {
        match self.run(candidate, ctx) {
            Ok(fb) => EvalOutcome::ok(fb),
            Err(e) => EvalOutcome::exec_error(e.to_string()),
        }
    }
}
