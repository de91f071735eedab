//! Deterministic offline designer.
//!
//! Every answer is a pure function of the prompt text and the call seed.
//! Each action kind has a concrete transformation so tests can observe it:
//!
//! | kind  | DSL programs                          | genomes                           |
//! |-------|---------------------------------------|-----------------------------------|
//! | init  | 1–3 components from a library         | uniform draw in the box           |
//! | m1    | add or remove one component           | Gaussian step on one gene         |
//! | m2    | log-normal jitter of every constant   | Gaussian jitter of every gene     |
//! | c3    | splice components from the context    | uniform crossover of the context  |
//! | r4    | extrapolate the last constant change  | extrapolate the last step         |
//! | d5    | components unused by the context      | draw far from every context gene  |
//! | basic | m1 or m2 at random                    | m2                                |

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Designer, DesignerError};
use crate::actions::ActionKind;
use crate::dsl::{self, pretty_print, Component, RewardExpr};
use crate::math;
use crate::prompts::PromptBundle;
use crate::rng::{derive_seed, fnv1a, stream};
use crate::tree::NodeId;

/// Component library for the built-in reach task.
pub const TOY_TASK_LIBRARY: &[(&str, &str)] = &[
    ("near", "-1.0 * dist"),
    ("progress", "10.0 * (prev_dist - dist)"),
    ("bonus", "5.0 * indicator(dist < 0.05)"),
    ("exp_near", "exp(-5.0 * dist)"),
    ("effort", "-0.1 * action_mag"),
    ("calm", "-0.2 * abs(vel_x)"),
    ("tanh_near", "-tanh(2.0 * dist)"),
    ("alive", "0.1"),
    ("drift", "0.5 * vel_x"),
    ("target_pull", "-0.5 * abs(target_x)"),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MockMode {
    /// Candidates are DSL programs over `vocabulary`, built from `library`.
    Dsl {
        vocabulary: Vec<String>,
        library: Vec<(String, String)>,
    },
    /// Candidates are whitespace-separated real vectors.
    Genome { dim: usize, low: f64, high: f64 },
}

impl MockMode {
    pub fn toy_task() -> Self {
        MockMode::Dsl {
            vocabulary: crate::eval::TOY_VOCABULARY.iter().map(|s| s.to_string()).collect(),
            library: TOY_TASK_LIBRARY
                .iter()
                .map(|(n, e)| (n.to_string(), e.to_string()))
                .collect(),
        }
    }

    pub fn genome(dim: usize) -> Self {
        MockMode::Genome {
            dim,
            low: -2.0,
            high: 2.0,
        }
    }
}

/// A canned reply. `target` and `revision` narrow the match when present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub kind: ActionKind,
    #[serde(default)]
    pub target: Option<NodeId>,
    #[serde(default)]
    pub revision: Option<u32>,
    pub response: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MockDesigner {
    pub mode: MockMode,
    /// Probability that a generated candidate is emitted broken.
    #[serde(default)]
    pub fail_rate: f64,
    #[serde(default)]
    pub script: Vec<ScriptEntry>,
}

impl MockDesigner {
    pub fn new(mode: MockMode) -> Self {
        Self {
            mode,
            fail_rate: 0.0,
            script: Vec::new(),
        }
    }

    pub fn with_script(mut self, script: Vec<ScriptEntry>) -> Self {
        self.script = script;
        self
    }

    pub fn with_fail_rate(mut self, p: f64) -> Self {
        self.fail_rate = p;
        self
    }

    fn scripted(&self, prompt: &PromptBundle) -> Option<&str> {
        self.script
            .iter()
            .find(|e| {
                e.kind == prompt.kind
                    && e.target.is_none_or(|t| prompt.meta.target == Some(t))
                    && e.revision.is_none_or(|r| prompt.meta.revision == r)
            })
            .map(|e| e.response.as_str())
    }

    fn generate(&self, prompt: &PromptBundle, rng: &mut ChaCha8Rng) -> String {
        let (thought, source) = match &self.mode {
            MockMode::Dsl { vocabulary, library } => {
                let lib = DslLibrary { vocabulary, library };
                lib.generate(prompt, rng)
            }
            MockMode::Genome { dim, low, high } => {
                let g = GenomeSpace {
                    dim: *dim,
                    low: *low,
                    high: *high,
                };
                g.generate(prompt, rng)
            }
        };
        let source = if prompt.kind != ActionKind::Repair && self.fail_rate > 0.0 && rng.random::<f64>() < self.fail_rate {
            self.break_source(&source)
        } else {
            source
        };
        format!("{{{thought}}}\n```\n{source}\n```")
    }

    fn break_source(&self, source: &str) -> String {
        match self.mode {
            MockMode::Dsl { .. } => format!("{source}\ncomponent broken = undefined_signal;"),
            MockMode::Genome { .. } => format!("{source} ?"),
        }
    }

    fn align(&self, prompt: &PromptBundle) -> String {
        let source = prompt.meta.sources.first().map(String::as_str).unwrap_or("");
        match &self.mode {
            MockMode::Dsl { .. } => match dsl::parse(source) {
                Ok(expr) => {
                    let names: Vec<&str> = expr.component_names().collect();
                    let vars: Vec<&str> = expr.variables().into_iter().collect();
                    format!(
                        "The reward sums {} component(s) ({}) computed from {}.",
                        names.len(),
                        names.join(", "),
                        if vars.is_empty() { "constants only".to_string() } else { vars.join(", ") }
                    )
                }
                Err(_) => "The reward could not be summarized.".to_string(),
            },
            MockMode::Genome { .. } => {
                let genes = parse_genes(source);
                let high = genes.iter().filter(|&&x| x > 0.0).count();
                format!(
                    "A {}-gene vector with {} positive and {} non-positive genes.",
                    genes.len(),
                    high,
                    genes.len() - high
                )
            }
        }
    }

    fn verify(&self, prompt: &PromptBundle, rng: &mut ChaCha8Rng) -> String {
        let source = prompt.meta.sources.first().map(String::as_str).unwrap_or("");
        let noise: f64 = rng.random_range(-0.2..0.2);
        let score = match &self.mode {
            MockMode::Dsl { .. } => {
                let shaped = dsl::parse(source)
                    .map(|e| e.variables().iter().any(|v| *v == "dist" || *v == "prev_dist"))
                    .unwrap_or(false);
                if shaped {
                    0.5 + noise
                } else {
                    -0.3 + noise
                }
            }
            MockMode::Genome { .. } => 2.5 * noise,
        };
        format!("An expert closes the distance and settles. Similarity: [{score:.2}]")
    }

    fn repair(&self, prompt: &PromptBundle, rng: &mut ChaCha8Rng) -> String {
        let source = prompt.meta.sources.first().map(String::as_str).unwrap_or("");
        let fixed = match &self.mode {
            MockMode::Dsl { vocabulary, library } => {
                let vocab: Vec<&str> = vocabulary.iter().map(String::as_str).collect();
                let kept: Vec<&str> = source
                    .split_inclusive(';')
                    .map(str::trim)
                    .filter(|stmt| dsl::parse_with_vocabulary(stmt, &vocab).is_ok())
                    .collect();
                // Re-parse jointly to drop duplicates of earlier names.
                let mut expr = RewardExpr::default();
                for stmt in kept {
                    if let Ok(e) = dsl::parse(stmt) {
                        for c in e.components {
                            if expr.get(&c.name).is_none() {
                                expr.components.push(c);
                            }
                        }
                    }
                }
                if expr.components.is_empty() {
                    let lib = DslLibrary { vocabulary, library };
                    expr = lib.random_program(rng);
                }
                pretty_print(&expr)
            }
            MockMode::Genome { dim, .. } => {
                let mut genes: Vec<f64> = source
                    .split_whitespace()
                    .filter_map(|t| t.parse::<f64>().ok())
                    .filter(|x| x.is_finite())
                    .take(*dim)
                    .collect();
                genes.resize(*dim, 0.0);
                format_genome(&genes)
            }
        };
        format!("{{fixed the reported error}}\n```\n{fixed}\n```")
    }
}

impl Designer for MockDesigner {
    fn complete(&self, prompt: &PromptBundle, seed: u64) -> Result<String, DesignerError> {
        if let Some(canned) = self.scripted(prompt) {
            return Ok(canned.to_string());
        }
        let mut rng = stream(derive_seed(seed, &[fnv1a(prompt.user_text.as_bytes())]));
        Ok(match prompt.kind {
            ActionKind::Align => self.align(prompt),
            ActionKind::Verify => self.verify(prompt, &mut rng),
            ActionKind::Repair => self.repair(prompt, &mut rng),
            _ => self.generate(prompt, &mut rng),
        })
    }
}

struct DslLibrary<'a> {
    vocabulary: &'a [String],
    library: &'a [(String, String)],
}

impl DslLibrary<'_> {
    fn vocab(&self) -> Vec<&str> {
        self.vocabulary.iter().map(String::as_str).collect()
    }

    fn component(&self, idx: usize) -> Component {
        let (name, body) = &self.library[idx];
        let src = format!("component {name} = {body};");
        dsl::parse(&src)
            .ok()
            .and_then(|mut e| e.components.pop())
            .unwrap_or(Component {
                name: name.clone(),
                expr: dsl::Expr::Const(0.0),
            })
    }

    fn random_program(&self, rng: &mut ChaCha8Rng) -> RewardExpr {
        let n = rng.random_range(1..=3usize).min(self.library.len());
        let picks = rand::seq::index::sample(rng, self.library.len(), n);
        RewardExpr {
            components: picks.iter().map(|i| self.component(i)).collect(),
        }
    }

    fn parsed_context(&self, prompt: &PromptBundle) -> Vec<RewardExpr> {
        let vocab = self.vocab();
        prompt
            .meta
            .sources
            .iter()
            .filter_map(|s| dsl::parse_with_vocabulary(s, &vocab).ok())
            .collect()
    }

    fn generate(&self, prompt: &PromptBundle, rng: &mut ChaCha8Rng) -> (String, String) {
        let context = self.parsed_context(prompt);
        let Some(parent) = context.first().cloned() else {
            let e = self.random_program(rng);
            return (describe("start from", &e), pretty_print(&e));
        };
        let kind = match prompt.kind {
            ActionKind::Basic => {
                if rng.random::<bool>() {
                    ActionKind::MutateStructure
                } else {
                    ActionKind::MutateParams
                }
            }
            k => k,
        };
        let (verb, expr) = match kind {
            ActionKind::MutateStructure => ("restructure into", self.mutate_structure(parent, rng)),
            ActionKind::MutateParams => ("retune", jitter_constants(parent, rng)),
            ActionKind::Crossover => ("combine into", self.crossover(&context, rng)),
            ActionKind::PathReasoning => ("extrapolate to", extrapolate(&context, rng)),
            ActionKind::DifferentThought => ("try a different form:", self.different(&context, rng)),
            _ => ("start from", self.random_program(rng)),
        };
        (describe(verb, &expr), pretty_print(&expr))
    }

    fn mutate_structure(&self, mut e: RewardExpr, rng: &mut ChaCha8Rng) -> RewardExpr {
        let absent: Vec<usize> = (0..self.library.len())
            .filter(|&i| e.get(&self.library[i].0).is_none())
            .collect();
        let remove = e.components.len() > 1 && (absent.is_empty() || rng.random::<bool>());
        if remove {
            let i = rng.random_range(0..e.components.len());
            e.components.remove(i);
        } else if let Some(&i) = absent.choose(rng) {
            e.components.push(self.component(i));
        }
        e
    }

    fn crossover(&self, context: &[RewardExpr], rng: &mut ChaCha8Rng) -> RewardExpr {
        let mut out = context[0].clone();
        let mut added = false;
        let donors: Vec<&Component> = context[1..].iter().flat_map(|e| e.components.iter()).collect();
        for c in &donors {
            if out.get(&c.name).is_none() && rng.random::<bool>() {
                out.components.push((*c).clone());
                added = true;
            }
        }
        if !added {
            if let Some(c) = donors.iter().find(|c| out.get(&c.name).is_none()) {
                out.components.push((*c).clone());
            } else if let Some(c) = donors.choose(rng) {
                // Same names everywhere: take the donor's version of one.
                if let Some(slot) = out.components.iter_mut().find(|x| x.name == c.name) {
                    slot.expr = c.expr.clone();
                }
            }
        }
        out
    }

    fn different(&self, context: &[RewardExpr], rng: &mut ChaCha8Rng) -> RewardExpr {
        let unused: Vec<usize> = (0..self.library.len())
            .filter(|&i| context.iter().all(|e| e.get(&self.library[i].0).is_none()))
            .collect();
        if unused.is_empty() {
            return self.random_program(rng);
        }
        let n = rng.random_range(1..=2usize).min(unused.len());
        let picks = rand::seq::index::sample(rng, unused.len(), n);
        RewardExpr {
            components: picks.iter().map(|i| self.component(unused[i])).collect(),
        }
    }
}

fn describe(verb: &str, e: &RewardExpr) -> String {
    let names: Vec<&str> = e.component_names().collect();
    format!("{verb} a reward made of {}", names.join(" + "))
}

fn jitter_constants(mut e: RewardExpr, rng: &mut ChaCha8Rng) -> RewardExpr {
    let normal = Normal::new(0.0, 0.4).expect("valid normal");
    for c in &mut e.components {
        c.expr.map_constants(&mut |v| round6(v * math::exp(normal.sample(rng))));
    }
    e
}

/// Continue the constant change between the two most recent programs on
/// the path (`context[1]` → `context[0]`) when their shapes agree;
/// otherwise fall back to parameter jitter.
fn extrapolate(context: &[RewardExpr], rng: &mut ChaCha8Rng) -> RewardExpr {
    let parent = &context[0];
    let Some(prev) = context.get(1) else {
        return jitter_constants(parent.clone(), rng);
    };
    let same_shape = parent.components.len() == prev.components.len()
        && parent
            .components
            .iter()
            .zip(&prev.components)
            .all(|(a, b)| a.name == b.name && a.expr.shape() == b.expr.shape());
    if !same_shape {
        return jitter_constants(parent.clone(), rng);
    }
    let mut out = parent.clone();
    let mut changed = false;
    for (c, old) in out.components.iter_mut().zip(&prev.components) {
        let olds = old.expr.constants();
        let mut i = 0;
        c.expr.map_constants(&mut |v| {
            let step = v - olds[i];
            i += 1;
            if step != 0.0 {
                changed = true;
            }
            round6(v + step)
        });
    }
    if changed {
        out
    } else {
        jitter_constants(out, rng)
    }
}

fn round6(x: f64) -> f64 {
    math::round(x * 1e6) / 1e6
}

struct GenomeSpace {
    dim: usize,
    low: f64,
    high: f64,
}

pub(crate) fn parse_genes(source: &str) -> Vec<f64> {
    source
        .split_whitespace()
        .filter_map(|t| t.parse::<f64>().ok())
        .collect()
}

pub(crate) fn format_genome(genes: &[f64]) -> String {
    genes
        .iter()
        .map(|g| format!("{g:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Spread of the single-gene move made by a structural genome edit.
const STRUCTURE_STEP: f64 = 0.5;

impl GenomeSpace {
    fn random(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.dim).map(|_| self.uniform(rng)).collect()
    }

    fn uniform(&self, rng: &mut ChaCha8Rng) -> f64 {
        round6(rng.random_range(self.low..self.high))
    }

    fn clip(&self, x: f64) -> f64 {
        round6(x.clamp(self.low, self.high))
    }

    fn generate(&self, prompt: &PromptBundle, rng: &mut ChaCha8Rng) -> (String, String) {
        let context: Vec<Vec<f64>> = prompt
            .meta
            .sources
            .iter()
            .map(|s| parse_genes(s))
            .filter(|g| g.len() == self.dim)
            .collect();
        let Some(parent) = context.first().cloned() else {
            return ("sample a fresh genome".into(), format_genome(&self.random(rng)));
        };
        let jitter = |g: &[f64], rng: &mut ChaCha8Rng| -> Vec<f64> {
            let normal = Normal::new(0.0, 0.15).expect("valid normal");
            g.iter().map(|x| self.clip(x + normal.sample(rng))).collect()
        };
        let (thought, genes) = match prompt.kind {
            ActionKind::MutateStructure => {
                let mut g = parent;
                let i = rng.random_range(0..self.dim);
                let step = Normal::new(0.0, STRUCTURE_STEP).expect("valid normal");
                g[i] = self.clip(g[i] + step.sample(rng));
                (format!("move gene {i}"), g)
            }
            ActionKind::Crossover => {
                let g = (0..self.dim)
                    .map(|i| context[rng.random_range(0..context.len())][i])
                    .collect();
                (format!("cross {} genomes", context.len()), g)
            }
            ActionKind::PathReasoning if context.len() >= 2 => {
                let g = parent
                    .iter()
                    .zip(&context[1])
                    .map(|(p, q)| self.clip(p + (p - q)))
                    .collect();
                ("continue the last step".into(), g)
            }
            ActionKind::DifferentThought => {
                let mut best: Option<(f64, Vec<f64>)> = None;
                for _ in 0..4 {
                    let g = self.random(rng);
                    let d = context
                        .iter()
                        .map(|c| c.iter().zip(&g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                        .fold(f64::INFINITY, f64::min);
                    if best.as_ref().is_none_or(|(bd, _)| d > *bd) {
                        best = Some((d, g));
                    }
                }
                ("move away from the given genomes".into(), best.map(|(_, g)| g).unwrap_or_default())
            }
            _ => ("jitter every gene".into(), jitter(&parent, rng)),
        };
        (thought, format_genome(&genes))
    }
}
