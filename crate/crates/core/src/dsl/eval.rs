use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use super::ast::{BinaryOp, CmpOp, Expr, RewardExpr, UnaryOp};
use crate::math;

/// Magnitude every intermediate value saturates at. Division by zero maps
/// to `±SENTINEL` by the sign of the numerator, `0/0` to zero.
pub const SENTINEL: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("MissingBinding: no value bound for variable `{0}`")]
    MissingBinding(String),
}

/// Clamp into `[-SENTINEL, SENTINEL]`, mapping NaN to zero.
#[inline]
pub fn saturate(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-SENTINEL, SENTINEL)
    }
}

fn divide(n: f64, d: f64) -> f64 {
    if d == 0.0 {
        if n == 0.0 {
            0.0
        } else if n > 0.0 {
            SENTINEL
        } else {
            -SENTINEL
        }
    } else {
        n / d
    }
}

fn apply_unary(op: UnaryOp, v: f64) -> f64 {
    saturate(match op {
        UnaryOp::Neg => -v,
        UnaryOp::Abs => math::abs(v),
        UnaryOp::Exp => math::exp(v),
        UnaryOp::Tanh => math::tanh(v),
    })
}

fn apply_binary(op: BinaryOp, a: f64, b: f64) -> f64 {
    saturate(match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => divide(a, b),
        BinaryOp::Min => a.min(b),
        BinaryOp::Max => a.max(b),
    })
}

fn apply_gate(op: CmpOp, a: f64, b: f64) -> f64 {
    let hit = match op {
        CmpOp::Lt => a < b,
        CmpOp::Gt => a > b,
    };
    if hit {
        1.0
    } else {
        0.0
    }
}

/// Total reward plus the value of each component, in program order.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub total: f64,
    pub components: Vec<(String, f64)>,
}

fn eval_expr(e: &Expr, lookup: &impl Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
    Ok(match e {
        Expr::Const(c) => saturate(*c),
        Expr::Var(v) => saturate(lookup(v).ok_or_else(|| EvalError::MissingBinding(v.clone()))?),
        Expr::Unary(op, inner) => apply_unary(*op, eval_expr(inner, lookup)?),
        Expr::Binary(op, l, r) => apply_binary(*op, eval_expr(l, lookup)?, eval_expr(r, lookup)?),
        Expr::Gate(op, l, r) => apply_gate(*op, eval_expr(l, lookup)?, eval_expr(r, lookup)?),
        Expr::Norm(vars) => {
            let mut sq = 0.0;
            for v in vars {
                let x = saturate(lookup(v).ok_or_else(|| EvalError::MissingBinding(v.clone()))?);
                sq += x * x;
            }
            saturate(math::sqrt(sq))
        }
    })
}

impl RewardExpr {
    /// Evaluate against named bindings.
    pub fn evaluate(&self, bindings: &BTreeMap<String, f64>) -> Result<Evaluation, EvalError> {
        let lookup = |name: &str| bindings.get(name).copied();
        let mut components = Vec::with_capacity(self.components.len());
        let mut total = 0.0;
        for c in &self.components {
            let v = eval_expr(&c.expr, &lookup)?;
            total += v;
            components.push((c.name.clone(), v));
        }
        Ok(Evaluation { total, components })
    }

    /// Resolve variable names to slots in `vocabulary` for repeated
    /// evaluation in inner loops.
    pub fn bind(&self, vocabulary: &[&str]) -> Result<BoundExpr, EvalError> {
        let components = self
            .components
            .iter()
            .map(|c| Ok((c.name.clone(), Slotted::from_expr(&c.expr, vocabulary)?)))
            .collect::<Result<Vec<_>, EvalError>>()?;
        Ok(BoundExpr { components })
    }
}

#[derive(Clone, Debug)]
enum Slotted {
    Const(f64),
    Slot(usize),
    Unary(UnaryOp, Box<Slotted>),
    Binary(BinaryOp, Box<Slotted>, Box<Slotted>),
    Gate(CmpOp, Box<Slotted>, Box<Slotted>),
    Norm(Vec<usize>),
}

impl Slotted {
    fn from_expr(e: &Expr, vocabulary: &[&str]) -> Result<Self, EvalError> {
        let slot = |v: &str| {
            vocabulary
                .iter()
                .position(|name| *name == v)
                .ok_or_else(|| EvalError::MissingBinding(v.to_string()))
        };
        Ok(match e {
            Expr::Const(c) => Slotted::Const(saturate(*c)),
            Expr::Var(v) => Slotted::Slot(slot(v)?),
            Expr::Unary(op, inner) => Slotted::Unary(*op, Box::new(Self::from_expr(inner, vocabulary)?)),
            Expr::Binary(op, l, r) => Slotted::Binary(
                *op,
                Box::new(Self::from_expr(l, vocabulary)?),
                Box::new(Self::from_expr(r, vocabulary)?),
            ),
            Expr::Gate(op, l, r) => Slotted::Gate(
                *op,
                Box::new(Self::from_expr(l, vocabulary)?),
                Box::new(Self::from_expr(r, vocabulary)?),
            ),
            Expr::Norm(vars) => Slotted::Norm(vars.iter().map(|v| slot(v)).collect::<Result<_, _>>()?),
        })
    }

    fn eval(&self, values: &[f64]) -> f64 {
        match self {
            Slotted::Const(c) => *c,
            Slotted::Slot(i) => saturate(values[*i]),
            Slotted::Unary(op, e) => apply_unary(*op, e.eval(values)),
            Slotted::Binary(op, l, r) => apply_binary(*op, l.eval(values), r.eval(values)),
            Slotted::Gate(op, l, r) => apply_gate(*op, l.eval(values), r.eval(values)),
            Slotted::Norm(slots) => {
                let sq: f64 = slots
                    .iter()
                    .map(|&i| {
                        let x = saturate(values[i]);
                        x * x
                    })
                    .sum();
                saturate(math::sqrt(sq))
            }
        }
    }
}

/// A [`RewardExpr`] with variables resolved to positions in a fixed
/// vocabulary. Evaluation cannot fail.
#[derive(Clone, Debug)]
pub struct BoundExpr {
    components: Vec<(String, Slotted)>,
}

impl BoundExpr {
    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn component_names(&self) -> impl Iterator<Item = &str> {
        self.components.iter().map(|(n, _)| n.as_str())
    }

    /// Writes each component value into `out` and returns the total.
    pub fn eval_into(&self, values: &[f64], out: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for ((_, e), slot) in self.components.iter().zip(out.iter_mut()) {
            let v = e.eval(values);
            *slot = v;
            total += v;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn bindings(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn scaled_variable() {
        let e = parse("component a = 2.0 * x;").unwrap();
        let r = e.evaluate(&bindings(&[("x", 3.0)])).unwrap();
        assert_eq!(r.total, 6.0);
        assert_eq!(r.components, alloc::vec![("a".to_string(), 6.0)]);
    }

    #[test]
    fn symmetric_components_cancel() {
        let e = parse("component a = x; component b = -x;").unwrap();
        for x in [-3.5, 0.0, 1e-9, 42.0] {
            assert_eq!(e.evaluate(&bindings(&[("x", x)])).unwrap().total, 0.0);
        }
    }

    #[test]
    fn indicator_gate() {
        let e = parse("component g = indicator(dist < 0.1);").unwrap();
        assert_eq!(e.evaluate(&bindings(&[("dist", 0.05)])).unwrap().total, 1.0);
        assert_eq!(e.evaluate(&bindings(&[("dist", 0.2)])).unwrap().total, 0.0);
        let e = parse("component g = indicator(dist > 0.1);").unwrap();
        assert_eq!(e.evaluate(&bindings(&[("dist", 0.2)])).unwrap().total, 1.0);
    }

    #[test]
    fn division_by_zero_sentinels() {
        let e = parse("component a = x / y;").unwrap();
        let at = |x, y| e.evaluate(&bindings(&[("x", x), ("y", y)])).unwrap().total;
        assert_eq!(at(3.0, 0.0), SENTINEL);
        assert_eq!(at(-3.0, 0.0), -SENTINEL);
        assert_eq!(at(0.0, 0.0), 0.0);
    }

    #[test]
    fn overflow_saturates() {
        let e = parse("component a = exp(x) * exp(x); component b = -exp(x);").unwrap();
        let r = e.evaluate(&bindings(&[("x", 1000.0)])).unwrap();
        assert_eq!(r.components[0].1, SENTINEL);
        assert_eq!(r.components[1].1, -SENTINEL);
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn missing_binding_reported() {
        let e = parse("component a = x + y;").unwrap();
        assert_eq!(
            e.evaluate(&bindings(&[("x", 1.0)])).unwrap_err(),
            EvalError::MissingBinding("y".into())
        );
    }

    #[test]
    fn bound_matches_named() {
        let e = parse("component a = norm(x, y) - tanh(y); component b = max(x, 2.0) / min(y, 0.5);").unwrap();
        let vocab = ["x", "y"];
        let bound = e.bind(&vocab).unwrap();
        let mut out = [0.0; 2];
        for (x, y) in [(3.0, 4.0), (-1.0, 0.0), (0.25, -2.0)] {
            let named = e.evaluate(&bindings(&[("x", x), ("y", y)])).unwrap();
            let total = bound.eval_into(&[x, y], &mut out);
            assert_eq!(total, named.total);
            assert_eq!(out[0], named.components[0].1);
            assert_eq!(out[1], named.components[1].1);
        }
    }
}
