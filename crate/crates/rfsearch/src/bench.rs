//! Multi-seed comparisons between search methods on shared backends.
//!
//! Method names: `greedy`, `evolution`, and `mcts` optionally followed by
//! `-`-separated modifiers: a selection policy (`uct`, `dfs`, `bfs`,
//! `greedy`), `basic` (parent-only basic generation), `noverify`,
//! `noalign`. For example `mcts-dfs-basic`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rfsearch_core::actions::ActionMode;
use rfsearch_core::search::{run_comparator, ComparatorKind, Runner, SearchConfig, SearchError, SelectionPolicy};

use crate::config::Backends;
use crate::exec::ThreadExecutor;
use crate::run::{build_designer, build_evaluator, RunError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Method {
    Mcts {
        policy: SelectionPolicy,
        basic_only: bool,
        self_verify: bool,
        thought_align: bool,
    },
    Comparator(ComparatorKind),
}

impl Method {
    pub fn mcts() -> Self {
        Method::Mcts {
            policy: SelectionPolicy::Uct,
            basic_only: false,
            self_verify: true,
            thought_align: true,
        }
    }

    /// The search config this method runs with.
    pub fn apply(&self, base: &SearchConfig) -> SearchConfig {
        let mut cfg = base.clone();
        if let Method::Mcts {
            policy,
            basic_only,
            self_verify,
            thought_align,
        } = self
        {
            cfg.selection_policy = *policy;
            if *basic_only {
                cfg.ablations.action_mode = ActionMode::BasicOnly;
            }
            cfg.ablations.self_verify &= *self_verify;
            cfg.ablations.thought_align &= *thought_align;
        }
        cfg
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "greedy" => return Ok(Method::Comparator(ComparatorKind::Greedy)),
            "evolution" => return Ok(Method::Comparator(ComparatorKind::Evolution)),
            _ => {}
        }
        let mut parts = s.split('-');
        if parts.next() != Some("mcts") {
            return Err(format!("unknown method `{s}`"));
        }
        let mut m = Method::mcts();
        if let Method::Mcts {
            policy,
            basic_only,
            self_verify,
            thought_align,
        } = &mut m
        {
            for p in parts {
                match p {
                    "uct" => *policy = SelectionPolicy::Uct,
                    "dfs" => *policy = SelectionPolicy::Dfs,
                    "bfs" => *policy = SelectionPolicy::Bfs,
                    "greedy" => *policy = SelectionPolicy::Greedy,
                    "basic" => *basic_only = true,
                    "noverify" => *self_verify = false,
                    "noalign" => *thought_align = false,
                    _ => return Err(format!("unknown modifier `{p}` in method `{s}`")),
                }
            }
        }
        Ok(m)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Comparator(ComparatorKind::Greedy) => f.write_str("greedy"),
            Method::Comparator(ComparatorKind::Evolution) => f.write_str("evolution"),
            Method::Mcts {
                policy,
                basic_only,
                self_verify,
                thought_align,
            } => {
                f.write_str("mcts")?;
                match policy {
                    SelectionPolicy::Uct => {}
                    SelectionPolicy::Dfs => f.write_str("-dfs")?,
                    SelectionPolicy::Bfs => f.write_str("-bfs")?,
                    SelectionPolicy::Greedy => f.write_str("-greedy")?,
                }
                if *basic_only {
                    f.write_str("-basic")?;
                }
                if !self_verify {
                    f.write_str("-noverify")?;
                }
                if !thought_align {
                    f.write_str("-noalign")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    /// Best-so-far after each sample, padded to the budget with the last
    /// value when a run stops early.
    pub curve: Vec<Option<f64>>,
}

impl SeedRun {
    pub fn best(&self) -> Option<f64> {
        self.curve.last().copied().flatten()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodResult {
    pub method: Method,
    pub runs: Vec<SeedRun>,
}

impl MethodResult {
    /// Median over seeds at each `t`, ignoring seeds with no success yet.
    pub fn median_curve(&self) -> Vec<Option<f64>> {
        let len = self.runs.iter().map(|r| r.curve.len()).max().unwrap_or(0);
        (0..len)
            .map(|t| median(self.runs.iter().filter_map(|r| r.curve.get(t).copied().flatten()).collect()))
            .collect()
    }

    pub fn median_best(&self) -> Option<f64> {
        median(self.runs.iter().filter_map(SeedRun::best).collect())
    }
}

pub fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    Some(if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) })
}

fn pad(curve: impl Iterator<Item = Option<f64>>, budget: u32) -> Vec<Option<f64>> {
    let mut v: Vec<Option<f64>> = curve.take(budget as usize).collect();
    let last = v.last().copied().flatten();
    v.resize(budget as usize, last);
    v
}

/// Run one method for one seed. `work_dir` only matters for external
/// trainers.
pub fn run_once(method: &Method, base: &SearchConfig, backends: &Backends, seed: u64, work_dir: &Path) -> Result<SeedRun, SearchError> {
    let mut cfg = method.apply(base);
    cfg.seed = seed;
    let designer = build_designer(&backends.designer);
    let evaluator = build_evaluator(&backends.evaluator, work_dir);
    let trace = match method {
        Method::Comparator(kind) => run_comparator(*kind, &cfg, &designer, &evaluator, &ThreadExecutor)?.trace,
        Method::Mcts { .. } => {
            let runner = Runner {
                designer: &designer,
                evaluator: &evaluator,
                executor: ThreadExecutor,
                clock: &rfsearch_core::search::NoClock,
            };
            runner.run(cfg.clone())?.trace
        }
    };
    Ok(SeedRun {
        seed,
        curve: pad(trace.best_so_far(), cfg.budget),
    })
}

/// Seeds are `base.seed, base.seed + 1, …`.
pub fn run_bench(methods: &[Method], base: &SearchConfig, backends: &Backends, seeds: u32, work_dir: &Path) -> Result<Vec<MethodResult>, SearchError> {
    methods
        .iter()
        .map(|m| {
            let runs = (0..u64::from(seeds))
                .map(|i| {
                    let seed = base.seed.wrapping_add(i);
                    run_once(m, base, backends, seed, &work_dir.join(m.to_string()).join(format!("seed-{seed}")))
                })
                .collect::<Result<_, _>>()?;
            Ok(MethodResult { method: m.clone(), runs })
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `t,median_best_so_far` for one method.
pub fn method_csv(result: &MethodResult) -> String {
    let mut out = String::from("t,median_best_so_far\n");
    for (i, m) in result.median_curve().into_iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, cell(m)));
    }
    out
}

/// `method,seed,best` for every run.
pub fn summary_csv(results: &[MethodResult]) -> String {
    let mut out = String::from("method,seed,best\n");
    for r in results {
        for s in &r.runs {
            out.push_str(&format!("{},{},{}\n", r.method, s.seed, cell(s.best())));
        }
    }
    out
}

/// Writes `<out>/<method>.csv` per method and `<out>/summary.csv`.
pub fn write_bench(out: &Path, results: &[MethodResult]) -> Result<(), RunError> {
    let io = |path: &Path| {
        let path = path.to_owned();
        move |source| RunError::Io { path, source }
    };
    fs::create_dir_all(out).map_err(io(out))?;
    for r in results {
        let path = out.join(format!("{}.csv", r.method));
        fs::write(&path, method_csv(r)).map_err(io(&path))?;
    }
    let path = out.join("summary.csv");
    fs::write(&path, summary_csv(results)).map_err(io(&path))
}
