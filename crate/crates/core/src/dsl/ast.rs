use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Abs,
    Exp,
    Tanh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
}

/// Comparison inside an `indicator(..)` gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Gt,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    /// `indicator(lhs < rhs)`: 1.0 when the comparison holds, else 0.0.
    Gate(CmpOp, Box<Expr>, Box<Expr>),
    /// Euclidean norm of the listed variables.
    Norm(Vec<String>),
}

impl Expr {
    pub fn unary(op: UnaryOp, e: Expr) -> Self {
        Expr::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinaryOp, l: Expr, r: Expr) -> Self {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn gate(op: CmpOp, l: Expr, r: Expr) -> Self {
        Expr::Gate(op, Box::new(l), Box::new(r))
    }

    /// Visit every variable name referenced by this expression.
    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => f(v),
            Expr::Unary(_, e) => e.for_each_var(f),
            Expr::Binary(_, l, r) | Expr::Gate(_, l, r) => {
                l.for_each_var(f);
                r.for_each_var(f);
            }
            Expr::Norm(vars) => vars.iter().for_each(|v| f(v)),
        }
    }

    /// Apply `f` to every constant in place.
    pub fn map_constants(&mut self, f: &mut impl FnMut(f64) -> f64) {
        match self {
            Expr::Const(c) => *c = f(*c),
            Expr::Var(_) | Expr::Norm(_) => {}
            Expr::Unary(_, e) => e.map_constants(f),
            Expr::Binary(_, l, r) | Expr::Gate(_, l, r) => {
                l.map_constants(f);
                r.map_constants(f);
            }
        }
    }

    /// Constants in depth-first order.
    pub fn constants(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut this = self.clone();
        this.map_constants(&mut |c| {
            out.push(c);
            c
        });
        out
    }

    /// Same tree with every constant replaced by zero; two expressions with
    /// equal shapes differ only in their constants.
    pub fn shape(&self) -> Expr {
        let mut s = self.clone();
        s.map_constants(&mut |_| 0.0);
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub name: String,
    pub expr: Expr,
}

/// A parsed reward program: ordered, uniquely named components.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RewardExpr {
    pub components: Vec<Component>,
}

impl RewardExpr {
    pub fn component_names(&self) -> impl Iterator<Item = &str> {
        self.components.iter().map(|c| c.name.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.name == name)
    }

    /// Sorted set of referenced variable names.
    pub fn variables(&self) -> BTreeSet<&str> {
        let mut vars = BTreeSet::new();
        for c in &self.components {
            c.expr.for_each_var(&mut |v| {
                vars.insert(v);
            });
        }
        vars
    }
}
