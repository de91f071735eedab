//! Separable deceptive landscape over real genomes.
//!
//! Each gene scores `b(x) = 0.3·g(x; −1, 0.6) + 1.0·g(x; +1, 0.15)` with
//! `g(x; c, w) = exp(−(x−c)² / 2w²)`: a wide mediocre basin competes with a
//! narrow optimum. The genome score is the sum over genes.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EvalContext, EvalOutcome, Evaluator, SeriesSummary, TrainingFeedback, SNAPSHOT_COUNT};
use crate::designer::CandidateProgram;
use crate::math;
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LandscapeConfig {
    pub dim: usize,
    pub wide_center: f64,
    pub wide_width: f64,
    pub wide_height: f64,
    pub narrow_center: f64,
    pub narrow_width: f64,
    pub narrow_height: f64,
    pub epoch_freq: u32,
    /// Standard deviation of Gaussian noise added to the final score.
    pub noise: f64,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            dim: 8,
            wide_center: -1.0,
            wide_width: 0.6,
            wide_height: 0.3,
            narrow_center: 1.0,
            narrow_width: 0.15,
            narrow_height: 1.0,
            epoch_freq: 10,
            noise: 0.0,
        }
    }
}

impl LandscapeConfig {
    /// Score of a genome with every gene at the narrow optimum.
    pub fn optimum(&self) -> f64 {
        self.dim as f64 * bump(self.narrow_center, self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SyntheticError {
    #[error("DimensionMismatch: genome has {got} genes, landscape expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("ValueError: gene {index} `{token}` is not a finite number")]
    BadGene { index: usize, token: String },
}

fn gaussian(x: f64, center: f64, width: f64) -> f64 {
    let d = x - center;
    math::exp(-(d * d) / (2.0 * width * width))
}

/// Per-gene score.
pub fn bump(x: f64, cfg: &LandscapeConfig) -> f64 {
    cfg.wide_height * gaussian(x, cfg.wide_center, cfg.wide_width)
        + cfg.narrow_height * gaussian(x, cfg.narrow_center, cfg.narrow_width)
}

/// Score a genome and fabricate learning curves: each per-gene series
/// rises linearly from `0.1·b(x)` to `b(x)` across the snapshots.
pub fn synthetic_score(genome: &[f64], cfg: &LandscapeConfig) -> Result<TrainingFeedback, SyntheticError> {
    if genome.len() != cfg.dim {
        return Err(SyntheticError::DimensionMismatch {
            expected: cfg.dim,
            got: genome.len(),
        });
    }
    let ramp = |j: usize| 0.1 + 0.9 * j as f64 / (SNAPSHOT_COUNT - 1) as f64;
    let bumps: Vec<f64> = genome.iter().map(|&x| bump(x, cfg)).collect();
    let components = bumps
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let series = (0..SNAPSHOT_COUNT).map(|j| b * ramp(j)).collect();
            (format!("gene_{i}"), SeriesSummary::from_values(series))
        })
        .collect();
    let total: f64 = bumps.iter().sum();
    let task: Vec<f64> = (0..SNAPSHOT_COUNT).map(|j| total * ramp(j)).collect();
    let final_score = task.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(TrainingFeedback {
        components,
        task_score: SeriesSummary::from_values(task),
        episode_lengths: SeriesSummary::constant(500.0),
        epoch_freq: cfg.epoch_freq,
        final_score,
    })
}

/// Parse whitespace-separated genes.
pub(crate) fn parse_genome(source: &str) -> Result<Vec<f64>, SyntheticError> {
    source
        .split_whitespace()
        .enumerate()
        .map(|(index, token)| match token.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(SyntheticError::BadGene {
                index,
                token: token.to_string(),
            }),
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SyntheticEvaluator {
    pub landscape: LandscapeConfig,
}

impl Evaluator for SyntheticEvaluator {
    fn evaluate(&self, candidate: &CandidateProgram, ctx: &EvalContext) -> EvalOutcome {
        let result = parse_genome(&candidate.source_text).and_then(|g| synthetic_score(&g, &self.landscape));
        match result {
            Ok(mut fb) => {
                if self.landscape.noise > 0.0 {
                    let normal = Normal::new(0.0, self.landscape.noise).expect("finite noise");
                    fb.final_score += normal.sample(&mut stream(ctx.seed));
                }
                EvalOutcome::ok(fb)
            }
            Err(e) => EvalOutcome::exec_error(format!("Traceback (synthetic evaluator):\n{e}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn narrow_optimum_dominates_wide_basin() {
        let cfg = LandscapeConfig::default();
        assert!(bump(1.0, &cfg) > bump(-1.0, &cfg));
        assert!(bump(-1.0, &cfg) > bump(0.0, &cfg));
    }

    #[test]
    fn dimension_checked() {
        let err = synthetic_score(&[0.0; 3], &LandscapeConfig::default()).unwrap_err();
        assert_eq!(err, SyntheticError::DimensionMismatch { expected: 8, got: 3 });
    }

    #[test]
    fn feedback_shape() {
        let fb = synthetic_score(&[0.5; 8], &LandscapeConfig::default()).unwrap();
        fb.validate().unwrap();
        assert_eq!(fb.components.len(), 8);
        assert_eq!(fb.final_score, *fb.task_score.values.last().unwrap());
        assert!(fb.episode_lengths.values.iter().all(|&v| v == 500.0));
    }

    #[test]
    fn bad_gene_reported() {
        let err = parse_genome("0.1 0.2 ?").unwrap_err();
        assert_eq!(err, SyntheticError::BadGene { index: 2, token: "?".into() });
    }
}
