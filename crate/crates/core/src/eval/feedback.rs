use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of evenly spaced snapshots every tracked series carries.
pub const SNAPSHOT_COUNT: usize = 10;

/// One tracked quantity: ten snapshots plus extrema and mean over the whole
/// training history. The history can be longer than the snapshots, so the
/// statistics are stored rather than recomputed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub values: Vec<f64>,
    pub max: f64,
    pub mean: f64,
    pub min: f64,
}

impl SeriesSummary {
    /// Summary whose statistics are taken over `values` alone.
    pub fn from_values(values: Vec<f64>) -> Self {
        let (max, mean, min) = stats(&values);
        Self { values, max, mean, min }
    }

    /// Snapshots of a longer `history`, with statistics over all of it.
    pub fn from_history(values: Vec<f64>, history: &[f64]) -> Self {
        let (max, mean, min) = stats(history);
        Self { values, max, mean, min }
    }

    pub fn constant(value: f64) -> Self {
        Self::from_values(alloc::vec![value; SNAPSHOT_COUNT])
    }
}

fn stats(values: &[f64]) -> (f64, f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    // Rounding in the mean can push it a hair outside [min, max].
    (max, mean.clamp(min, max), min)
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FeedbackError {
    #[error("series `{name}` has {len} entries, expected {SNAPSHOT_COUNT}")]
    SeriesLength { name: String, len: usize },
    #[error("series `{0}` violates max >= mean >= min")]
    Statistics(String),
}

/// Training feedback for one evaluated candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingFeedback {
    /// Per-component series in program order.
    pub components: Vec<(String, SeriesSummary)>,
    pub task_score: SeriesSummary,
    pub episode_lengths: SeriesSummary,
    /// Spacing between snapshots, in training epochs.
    pub epoch_freq: u32,
    /// Best task score at any checkpoint.
    pub final_score: f64,
}

impl TrainingFeedback {
    pub fn validate(&self) -> Result<(), FeedbackError> {
        let all = self
            .components
            .iter()
            .map(|(n, s)| (n.as_str(), s))
            .chain([("task_score", &self.task_score), ("episode_lengths", &self.episode_lengths)]);
        for (name, s) in all {
            if s.values.len() != SNAPSHOT_COUNT {
                return Err(FeedbackError::SeriesLength {
                    name: name.into(),
                    len: s.values.len(),
                });
            }
            if !(s.max >= s.mean && s.mean >= s.min) {
                return Err(FeedbackError::Statistics(name.into()));
            }
        }
        Ok(())
    }
}

fn format_line(out: &mut String, name: &str, s: &SeriesSummary) {
    out.push_str(name);
    out.push_str(": [");
    for (i, v) in s.values.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format!("'{v:.2}'"));
    }
    out.push_str(&format!("], Max: {:.2}, Mean: {:.2}, Min: {:.2}", s.max, s.mean, s.min));
}

/// Render feedback as the text block shown to the designer: one line per
/// component, then `task_score`, then `episode_lengths`.
pub fn format_feedback(fb: &TrainingFeedback) -> String {
    let mut out = String::new();
    for (name, s) in &fb.components {
        format_line(&mut out, name, s);
        out.push('\n');
    }
    format_line(&mut out, "task_score", &fb.task_score);
    out.push('\n');
    format_line(&mut out, "episode_lengths", &fb.episode_lengths);
    out
}
