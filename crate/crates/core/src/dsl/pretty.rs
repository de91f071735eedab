use alloc::format;
use alloc::string::String;

use super::ast::{BinaryOp, CmpOp, Expr, RewardExpr, UnaryOp};

/// Canonical text form. Re-parsing the output yields a structurally equal
/// program; parentheses appear only where precedence requires them.
pub fn pretty_print(expr: &RewardExpr) -> String {
    let mut out = String::new();
    for (i, c) in expr.components.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str("component ");
        out.push_str(&c.name);
        out.push_str(" = ");
        write_expr(&mut out, &c.expr, Prec::Additive);
        out.push(';');
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Additive,
    Multiplicative,
    Unary,
}

fn binary_prec(op: BinaryOp) -> Option<Prec> {
    match op {
        BinaryOp::Add | BinaryOp::Sub => Some(Prec::Additive),
        BinaryOp::Mul | BinaryOp::Div => Some(Prec::Multiplicative),
        BinaryOp::Min | BinaryOp::Max => None,
    }
}

fn format_const(c: f64) -> String {
    // `{:?}` is the shortest representation that parses back exactly and
    // always carries a `.` or an exponent.
    format!("{c:?}")
}

fn write_expr(out: &mut String, e: &Expr, min_prec: Prec) {
    match e {
        Expr::Const(c) => out.push_str(&format_const(*c)),
        Expr::Var(v) => out.push_str(v),
        Expr::Unary(UnaryOp::Neg, inner) => {
            out.push('-');
            match **inner {
                // `-5.0` would re-parse as a negative literal.
                Expr::Const(_) => {
                    out.push('(');
                    write_expr(out, inner, Prec::Additive);
                    out.push(')');
                }
                _ => write_expr(out, inner, Prec::Unary),
            }
        }
        Expr::Unary(op, inner) => {
            out.push_str(match op {
                UnaryOp::Abs => "abs(",
                UnaryOp::Exp => "exp(",
                UnaryOp::Tanh => "tanh(",
                UnaryOp::Neg => unreachable!(),
            });
            write_expr(out, inner, Prec::Additive);
            out.push(')');
        }
        Expr::Binary(op, l, r) => match binary_prec(*op) {
            Some(p) => {
                let wrap = p < min_prec;
                if wrap {
                    out.push('(');
                }
                write_expr(out, l, p);
                out.push_str(match op {
                    BinaryOp::Add => " + ",
                    BinaryOp::Sub => " - ",
                    BinaryOp::Mul => " * ",
                    _ => " / ",
                });
                // Left-associative: an equal-precedence right operand needs
                // parentheses.
                let right_min = match p {
                    Prec::Additive => Prec::Multiplicative,
                    _ => Prec::Unary,
                };
                write_expr(out, r, right_min);
                if wrap {
                    out.push(')');
                }
            }
            None => {
                out.push_str(if *op == BinaryOp::Min { "min(" } else { "max(" });
                write_expr(out, l, Prec::Additive);
                out.push_str(", ");
                write_expr(out, r, Prec::Additive);
                out.push(')');
            }
        },
        Expr::Gate(op, l, r) => {
            out.push_str("indicator(");
            write_expr(out, l, Prec::Additive);
            out.push_str(if *op == CmpOp::Lt { " < " } else { " > " });
            write_expr(out, r, Prec::Additive);
            out.push(')');
        }
        Expr::Norm(vars) => {
            out.push_str("norm(");
            for (i, v) in vars.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(v);
            }
            out.push(')');
        }
    }
}
