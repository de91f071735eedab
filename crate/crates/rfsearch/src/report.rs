use std::fmt::Write;

use rfsearch_core::search::{RunTrace, SearchState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

pub fn report(state: &SearchState, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => path_report(state),
        ReportFormat::Csv => curve_csv(&state.trace),
    }
}

/// Root-to-best path, one block per node: id, action kind, score and the
/// (aligned) design thought.
pub fn path_report(state: &SearchState) -> String {
    let mut out = String::new();
    let Some(best) = state.best_node() else {
        out.push_str("no evaluated nodes\n");
        return out;
    };
    let tree = &state.tree;
    let _ = writeln!(
        out,
        "best node {best}: F = {} after {} of {} samples ({} nodes)",
        fmt_score(tree.node(best).score),
        state.t,
        state.config.budget,
        tree.len()
    );
    for id in tree.path_to(best) {
        let n = tree.node(id);
        let _ = writeln!(
            out,
            "\n[depth {}] node {} · {} · F = {} · Q = {} · N = {}",
            n.depth,
            id,
            n.action_tag,
            fmt_score(n.score),
            fmt_score(n.q_value),
            n.visit_count
        );
        for line in n.candidate.design_thought.lines() {
            let _ = writeln!(out, "  {line}");
        }
    }
    out
}

/// `t,best_so_far` rows; the best is empty until a candidate succeeds.
pub fn curve_csv(trace: &RunTrace) -> String {
    let mut out = String::from("t,best_so_far\n");
    for e in &trace.entries {
        let _ = writeln!(out, "{},{}", e.t, e.best_so_far.map(|b| b.to_string()).unwrap_or_default());
    }
    out
}

/// Full trace as csv, one row per candidate.
pub fn trace_csv(trace: &RunTrace) -> String {
    let mut out = String::from("t,step,node,kind,score,lambda,best_so_far\n");
    for e in &trace.entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            e.t,
            e.step,
            e.node,
            e.kind,
            e.score.map(|s| s.to_string()).unwrap_or_default(),
            e.lambda,
            e.best_so_far.map(|b| b.to_string()).unwrap_or_default()
        );
    }
    out
}

fn fmt_score(v: Option<f64>) -> String {
    v.map(|s| format!("{s:.4}")).unwrap_or_else(|| "-".into())
}
