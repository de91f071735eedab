//! A small arithmetic language for reward programs.
//!
//! A program is a list of named components:
//!
//! ```text
//! component near = exp(-5.0 * dist);
//! component bonus = 2.0 * indicator(dist < 0.05);
//! ```
//!
//! Evaluating a program yields the total reward (the sum of all components)
//! together with the per-component values, the same `(reward, {name: value})`
//! pair a generated Python reward function returns.

mod ast;
mod eval;
mod parser;
mod pretty;

pub use ast::{BinaryOp, CmpOp, Component, Expr, RewardExpr, UnaryOp};
pub use eval::{saturate, BoundExpr, EvalError, Evaluation, SENTINEL};
pub use parser::{parse, parse_with_vocabulary, DslError};
pub use pretty::pretty_print;

/// File extension used for candidate programs on disk.
pub const CANDIDATE_EXTENSION: &str = "rfn";
