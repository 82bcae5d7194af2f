use super::{BinaryOp, Expr, Params, UnaryOp};
use crate::error::{DomainKind, Error, Result};
use crate::jets::Jet;

/// Values the evaluator can compute with: plain floats or jets.
///
/// Everything that can leave its domain is fallible.
pub trait Scalar: Clone {
    /// A constant of the same kind as `self`.
    fn lift(&self, c: f64) -> Self;
    fn value(&self) -> f64;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, rhs: &Self) -> Result<Self>;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Result<Self>;
    fn sqrt(&self) -> Result<Self>;
    fn abs(&self) -> Result<Self>;
    /// Constant exponent; integer-valued exponents accept negative bases.
    fn powf(&self, r: f64) -> Result<Self>;
    /// Variable exponent; the base must be positive.
    fn pow(&self, e: &Self) -> Result<Self>;
}

fn domain(kind: DomainKind) -> Error {
    Error::domain(kind, String::new())
}

impl Scalar for f64 {
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, rhs: &Self) -> Result<Self> {
        if *rhs == 0.0 {
            Err(domain(DomainKind::Division))
        } else {
            Ok(self / rhs)
        }
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Result<Self> {
        if *self > 0.0 {
            Ok(f64::ln(*self))
        } else {
            Err(domain(DomainKind::Log))
        }
    }
    fn sqrt(&self) -> Result<Self> {
        if *self >= 0.0 {
            Ok(f64::sqrt(*self))
        } else {
            Err(domain(DomainKind::Sqrt))
        }
    }
    fn abs(&self) -> Result<Self> {
        Ok(f64::abs(*self))
    }
    fn powf(&self, r: f64) -> Result<Self> {
        if r.fract() == 0.0 {
            if *self == 0.0 && r < 0.0 {
                return Err(domain(DomainKind::Power));
            }
            return Ok(f64::powf(*self, r));
        }
        if *self < 0.0 || (*self == 0.0 && r < 0.0) {
            return Err(domain(DomainKind::Power));
        }
        Ok(f64::powf(*self, r))
    }
    fn pow(&self, e: &Self) -> Result<Self> {
        if *self > 0.0 {
            Ok(f64::powf(*self, *e))
        } else {
            Err(domain(DomainKind::Power))
        }
    }
}

impl Scalar for Jet {
    fn lift(&self, c: f64) -> Self {
        Jet::lift(self, c)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, rhs: &Self) -> Result<Self> {
        self.checked_div(rhs)
    }
    fn sin(&self) -> Self {
        Jet::sin(self)
    }
    fn cos(&self) -> Self {
        Jet::cos(self)
    }
    fn exp(&self) -> Self {
        Jet::exp(self)
    }
    fn ln(&self) -> Result<Self> {
        Jet::ln(self)
    }
    fn sqrt(&self) -> Result<Self> {
        Jet::sqrt(self)
    }
    fn abs(&self) -> Result<Self> {
        Jet::abs(self)
    }
    fn powf(&self, r: f64) -> Result<Self> {
        Jet::powf(self, r)
    }
    fn pow(&self, e: &Self) -> Result<Self> {
        Jet::pow(self, e)
    }
}

/// Evaluate `ast` at the given coordinates.
///
/// Domain errors carry the offending subexpression as their location.
pub fn eval<S>(ast: &Expr, coords: &[S], params: &Params) -> Result<S>
where
    S: Scalar,
{
    let template = coords
        .first()
        .ok_or_else(|| Error::Dimension("expression evaluated with no coordinates".into()))?;
    let out = eval_node(ast, coords, template, params)?;
    if !out.value().is_finite() {
        return Err(Error::domain(DomainKind::NonFinite, ast.to_string()));
    }
    Ok(out)
}

/// Evaluate an expression that references no coordinates.
pub fn eval_const(ast: &Expr, params: &Params) -> Result<f64> {
    if let Some(i) = ast.max_coord() {
        return Err(Error::Dimension(format!(
            "constant expression references coordinate x{i}"
        )));
    }
    eval_node(ast, &[], &0.0, params)
}

fn locate(err: Error, node: &Expr) -> Error {
    match err {
        Error::Domain { kind, .. } => Error::Domain {
            kind,
            location: node.to_string(),
        },
        other => other,
    }
}

fn eval_node<S>(node: &Expr, coords: &[S], template: &S, params: &Params) -> Result<S>
where
    S: Scalar,
{
    let value = match node {
        Expr::Const(c) => template.lift(*c),
        Expr::Coord(i) => coords
            .get(*i)
            .cloned()
            .ok_or_else(|| Error::Dimension(format!("coordinate x{i} not supplied")))?,
        Expr::Param(name) => template.lift(
            *params
                .get(name)
                .ok_or_else(|| Error::UnknownParameter(name.clone()))?,
        ),
        Expr::Unary(op, arg) => {
            let a = eval_node(arg, coords, template, params)?;
            match op {
                UnaryOp::Neg => a.neg(),
                UnaryOp::Sin => a.sin(),
                UnaryOp::Cos => a.cos(),
                UnaryOp::Exp => a.exp(),
                UnaryOp::Ln => a.ln().map_err(|e| locate(e, node))?,
                UnaryOp::Sqrt => a.sqrt().map_err(|e| locate(e, node))?,
                UnaryOp::Abs => a.abs().map_err(|e| locate(e, node))?,
            }
        }
        Expr::Binary(op, lhs, rhs) => {
            let a = eval_node(lhs, coords, template, params)?;
            match op {
                BinaryOp::Pow if !rhs.depends_on_coords() => {
                    let r = eval_node::<f64>(rhs, &[], &0.0, params)?;
                    a.powf(r).map_err(|e| locate(e, node))?
                }
                _ => {
                    let b = eval_node(rhs, coords, template, params)?;
                    match op {
                        BinaryOp::Add => a.add(&b),
                        BinaryOp::Sub => a.sub(&b),
                        BinaryOp::Mul => a.mul(&b),
                        BinaryOp::Div => a.div(&b).map_err(|e| locate(e, node))?,
                        BinaryOp::Pow => a.pow(&b).map_err(|e| locate(e, node))?,
                    }
                }
            }
        }
    };
    Ok(value)
}
