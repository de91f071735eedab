use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use super::ast::{BinaryOp, CmpOp, Component, Expr, RewardExpr, UnaryOp};

/// Parse and validation failures. The `Display` text is what the repair loop
/// sees as the traceback.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("SyntaxError at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("UnknownVariable: `{0}` is not an observation variable of this task")]
    UnknownVariable(String),
    #[error("DuplicateComponent: component `{0}` is defined more than once")]
    DuplicateComponent(String),
    #[error("EmptyProgram: no `component <name> = <expr>;` statements found")]
    EmptyProgram,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    Comma,
    Semi,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Gt,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(n) => format!("number `{n:?}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Assign => "`=`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> DslError {
    DslError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<Spanned>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '=' => Some(Tok::Assign),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '<' => Some(Tok::Lt),
            '>' => Some(Tok::Gt),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned {
                tok,
                line: start_line,
                column: start_col,
            });
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let begin = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[begin..i].iter().collect();
            let value: f64 = text
                .parse()
                .map_err(|_| syntax(start_line, start_col, format!("malformed number `{text}`")))?;
            col += i - begin;
            out.push(Spanned {
                tok: Tok::Number(value),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - begin;
            out.push(Spanned {
                tok: Tok::Ident(chars[begin..i].iter().collect()),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        return Err(syntax(start_line, start_col, format!("unexpected character `{c}`")));
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> DslError {
        let t = &self.toks[self.pos];
        syntax(t.line, t.column, message)
    }

    fn expect(&mut self, want: Tok, context: &str) -> Result<(), DslError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected {} {context}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn ident(&mut self, context: &str) -> Result<String, DslError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.error_here(format!(
                "expected identifier {context}, found {}",
                other.describe()
            ))),
        }
    }

    fn program(&mut self) -> Result<RewardExpr, DslError> {
        let mut components: Vec<Component> = Vec::new();
        while *self.peek() != Tok::Eof {
            match self.peek() {
                Tok::Ident(k) if k == "component" => {
                    self.bump();
                }
                other => {
                    return Err(self.error_here(format!(
                        "expected `component`, found {}",
                        other.describe()
                    )))
                }
            }
            let name = self.ident("after `component`")?;
            self.expect(Tok::Assign, "after component name")?;
            let expr = self.additive()?;
            self.expect(Tok::Semi, "at end of component")?;
            if components.iter().any(|c| c.name == name) {
                return Err(DslError::DuplicateComponent(name));
            }
            components.push(Component { name, expr });
        }
        if components.is_empty() {
            return Err(DslError::EmptyProgram);
        }
        Ok(RewardExpr { components })
    }

    fn additive(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            // A minus directly before a literal is part of the literal.
            if let Tok::Number(n) = *self.peek() {
                self.bump();
                return Ok(Expr::Const(-n));
            }
            let inner = self.unary()?;
            return Ok(Expr::unary(UnaryOp::Neg, inner));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, DslError> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                Ok(Expr::Const(n))
            }
            Tok::LParen => {
                self.bump();
                let e = self.additive()?;
                self.expect(Tok::RParen, "to close parenthesis")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek_at(1) == Tok::LParen {
                    self.call(name)
                } else {
                    self.bump();
                    Ok(Expr::Var(name))
                }
            }
            other => Err(self.error_here(format!("expected expression, found {}", other.describe()))),
        }
    }

    fn call(&mut self, name: String) -> Result<Expr, DslError> {
        let start = self.toks[self.pos].clone();
        self.bump();
        self.bump();
        let expr = match name.as_str() {
            "exp" | "abs" | "tanh" => {
                let op = match name.as_str() {
                    "exp" => UnaryOp::Exp,
                    "abs" => UnaryOp::Abs,
                    _ => UnaryOp::Tanh,
                };
                Expr::unary(op, self.additive()?)
            }
            "min" | "max" => {
                let op = if name == "min" { BinaryOp::Min } else { BinaryOp::Max };
                let a = self.additive()?;
                self.expect(Tok::Comma, &format!("between `{name}` arguments"))?;
                let b = self.additive()?;
                Expr::binary(op, a, b)
            }
            "indicator" => {
                let a = self.additive()?;
                let op = match self.peek() {
                    Tok::Lt => CmpOp::Lt,
                    Tok::Gt => CmpOp::Gt,
                    other => {
                        return Err(self.error_here(format!(
                            "expected `<` or `>` inside indicator, found {}",
                            other.describe()
                        )))
                    }
                };
                self.bump();
                let b = self.additive()?;
                Expr::gate(op, a, b)
            }
            "norm" => {
                let mut vars = alloc::vec![self.ident("in norm(..)")?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    vars.push(self.ident("in norm(..)")?);
                }
                Expr::Norm(vars)
            }
            _ => {
                return Err(syntax(
                    start.line,
                    start.column,
                    format!("unknown function `{name}`"),
                ))
            }
        };
        self.expect(Tok::RParen, &format!("to close `{name}(`"))?;
        Ok(expr)
    }
}

/// Parse a reward program without checking variable names.
pub fn parse(source: &str) -> Result<RewardExpr, DslError> {
    let toks = lex(source)?;
    Parser { toks, pos: 0 }.program()
}

/// Parse and check that every referenced variable is in `vocabulary`.
pub fn parse_with_vocabulary(source: &str, vocabulary: &[&str]) -> Result<RewardExpr, DslError> {
    let expr = parse(source)?;
    expr.validate(vocabulary)?;
    Ok(expr)
}

impl RewardExpr {
    /// Check that every variable is declared; reports the first unknown name
    /// in source order.
    pub fn validate(&self, vocabulary: &[&str]) -> Result<(), DslError> {
        let allowed: BTreeSet<&str> = vocabulary.iter().copied().collect();
        for c in &self.components {
            let mut unknown = None;
            c.expr.for_each_var(&mut |v| {
                if unknown.is_none() && !allowed.contains(v) {
                    unknown = Some(v.to_string());
                }
            });
            if let Some(v) = unknown {
                return Err(DslError::UnknownVariable(v));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn single_variable_component() {
        let e = parse("component fwd = vel_x;").unwrap();
        assert_eq!(e.components.len(), 1);
        assert_eq!(e.components[0].name, "fwd");
        assert_eq!(e.components[0].expr, Expr::Var("vel_x".into()));
    }

    #[test]
    fn exp_over_product() {
        let e = parse("component near = exp(-5.0 * dist);").unwrap();
        let want = Expr::unary(
            UnaryOp::Exp,
            Expr::binary(BinaryOp::Mul, Expr::Const(-5.0), Expr::Var("dist".into())),
        );
        assert_eq!(e.components[0].expr, want);
    }

    #[test]
    fn unknown_variable_is_named() {
        let err = parse_with_vocabulary("component bad = unknown_var;", &["dist", "vel_x"]).unwrap_err();
        assert_eq!(err, DslError::UnknownVariable("unknown_var".into()));
    }

    #[test]
    fn precedence_mul_over_add_and_left_assoc() {
        let e = parse("component a = 1.0 - x * 2.0 - y;").unwrap();
        let want = Expr::binary(
            BinaryOp::Sub,
            Expr::binary(
                BinaryOp::Sub,
                Expr::Const(1.0),
                Expr::binary(BinaryOp::Mul, Expr::Var("x".into()), Expr::Const(2.0)),
            ),
            Expr::Var("y".into()),
        );
        assert_eq!(e.components[0].expr, want);
    }

    #[test]
    fn unary_binds_tighter_than_mul() {
        let e = parse("component a = -x * y;").unwrap();
        let want = Expr::binary(
            BinaryOp::Mul,
            Expr::unary(UnaryOp::Neg, Expr::Var("x".into())),
            Expr::Var("y".into()),
        );
        assert_eq!(e.components[0].expr, want);
    }

    #[test]
    fn gate_min_max_norm() {
        let e = parse("component g = indicator(dist + 1.0 > 2.0 * x) + min(a, b) * max(a, 1e-3) + norm(a, b);").unwrap();
        assert_eq!(e.variables().into_iter().collect::<Vec<_>>(), vec!["a", "b", "dist", "x"]);
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse("component a = 1.0;\ncomponent b = (x + ;").unwrap_err();
        match err {
            DslError::Syntax { line, column, .. } => {
                assert_eq!((line, column), (2, 20));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("line 2, column 20"));
    }

    #[test]
    fn duplicate_and_empty_rejected() {
        assert_eq!(
            parse("component a = 1.0; component a = 2.0;").unwrap_err(),
            DslError::DuplicateComponent("a".into())
        );
        assert_eq!(parse("  # only a comment\n").unwrap_err(), DslError::EmptyProgram);
    }

    #[test]
    fn unknown_function_rejected() {
        let err = parse("component a = sin(x);").unwrap_err();
        assert!(err.to_string().contains("unknown function `sin`"));
    }

    #[test]
    fn comparison_outside_indicator_rejected() {
        assert!(parse("component a = x < 1.0;").is_err());
    }
}
