//! Scalar expression language for metric components, one-forms and scalar
//! functions over chart coordinates.
//!
//! Coordinates are written `x0 … x{n-1}`; a chart may add aliases. The full
//! grammar is in `docs/grammar.md`.

mod eval;
mod parser;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

pub use eval::{eval, eval_const, Scalar};
pub use parser::parse_with;

use crate::error::ParseError;

/// Parameter values available at evaluation time.
pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }

    pub fn function(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp" => UnaryOp::Exp,
            "ln" => UnaryOp::Ln,
            "sqrt" => UnaryOp::Sqrt,
            "abs" => UnaryOp::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    Param(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(v: f64) -> Self {
        Expr::Const(v)
    }

    pub fn coord(i: usize) -> Self {
        Expr::Coord(i)
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Self {
        Expr::Unary(op, Box::new(arg))
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_coord(&self) -> Option<usize> {
        match self {
            Expr::Coord(i) => Some(*i),
            Expr::Const(_) | Expr::Param(_) => None,
            Expr::Unary(_, a) => a.max_coord(),
            Expr::Binary(_, a, b) => a.max_coord().max(b.max_coord()),
        }
    }

    pub fn depends_on_coords(&self) -> bool {
        self.max_coord().is_some()
    }

    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Param(p) => {
                out.insert(p.clone());
            }
            Expr::Unary(_, a) => a.collect_params(out),
            Expr::Binary(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            Expr::Const(_) | Expr::Coord(_) => {}
        }
    }

    /// Replace coordinate `i` by `map[i]`.
    pub fn remap_coords(&self, map: &[usize]) -> Self {
        match self {
            Expr::Coord(i) => Expr::Coord(map[*i]),
            Expr::Const(_) | Expr::Param(_) => self.clone(),
            Expr::Unary(op, a) => Expr::unary(*op, a.remap_coords(map)),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.remap_coords(map), b.remap_coords(map)),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }
}

/// Fully parenthesised rendering; reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Coord(i) => write!(f, "x{i}"),
            Expr::Param(p) => f.write_str(p),
            Expr::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

/// Names visible to the parser.
#[derive(Debug, Clone, Default)]
pub struct Symbols {
    pub dim: usize,
    pub aliases: HashMap<String, usize>,
    pub params: BTreeSet<String>,
}

impl Symbols {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    pub fn with_params<I, S>(mut self, params: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.params.extend(params.into_iter().map(Into::into));
        self
    }

    pub fn with_alias(mut self, name: impl Into<String>, index: usize) -> Self {
        self.aliases.insert(name.into(), index);
        self
    }

    /// Base-coordinate aliases `names[i] -> i`.
    pub fn with_chart_aliases(mut self, names: &[String]) -> Self {
        for (i, n) in names.iter().enumerate() {
            self.aliases.insert(n.clone(), i);
        }
        self
    }
}

/// Parse with coordinates `x0 … x{dim-1}` and the given parameter names.
pub fn parse<I, S>(source: &str, dim: usize, params: I) -> Result<Expr, ParseError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    parse_with(source, &Symbols::new(dim).with_params(params))
}
