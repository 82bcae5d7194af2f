use crate::alphabeta::FamilyInstance;
use crate::error::{Error, Result};
use crate::expr::{self, Expr, Params, Symbols};
use crate::jets::{self, Jet};

use super::TangentSample;

/// A raw Lagrangian `L(x, ẋ)` written in the expression language.
///
/// The expression has `2n` coordinates: `x0 … x{n-1}` are the base point and
/// `x{n} … x{2n-1}` the fibre. [`velocity_symbols`] adds the friendlier
/// `xd{i}` and `<alias>_dot` spellings.
#[derive(Debug, Clone, PartialEq)]
pub struct DslLagrangian {
    pub dim: usize,
    pub expr: Expr,
    pub params: Params,
}

impl DslLagrangian {
    pub fn new(dim: usize, expr: Expr, params: Params) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("chart dimension must be positive".into()));
        }
        if let Some(i) = expr.max_coord() {
            if i >= 2 * dim {
                return Err(Error::Dimension(format!(
                    "coordinate x{i} out of range for a Lagrangian on a {dim}-dimensional chart"
                )));
            }
        }
        if let Some(p) = expr.params().into_iter().find(|p| !params.contains_key(p)) {
            return Err(Error::UnknownParameter(p));
        }
        Ok(Self { dim, expr, params })
    }

    /// Parse `source` with base aliases, velocity aliases and the given parameters.
    pub fn parse(dim: usize, source: &str, aliases: &[String], params: Params) -> Result<Self> {
        let symbols = velocity_symbols(dim, aliases).with_params(params.keys().cloned());
        let expr = expr::parse_with(source, &symbols)?;
        Self::new(dim, expr, params)
    }
}

/// Symbols for expressions over `(x, ẋ)`: `xd{i}` and `<alias>_dot` refer to
/// `ẋ^i`.
pub fn velocity_symbols(dim: usize, aliases: &[String]) -> Symbols {
    let mut symbols = Symbols::new(2 * dim);
    for i in 0..dim {
        symbols.aliases.insert(format!("xd{i}"), dim + i);
    }
    for (i, name) in aliases.iter().enumerate().take(dim) {
        symbols.aliases.insert(name.clone(), i);
        symbols.aliases.insert(format!("{name}_dot"), dim + i);
    }
    symbols
}

/// Definition of a Finsler Lagrangian on a single chart.
#[derive(Debug, Clone, PartialEq)]
pub enum LagrangianDef {
    /// `L = α(ẋ,ẋ) s^{-p} (c + m s)^{p+1}` with `s = β(ẋ)² / α(ẋ,ẋ)`.
    AlphaBeta(FamilyInstance),
    Dsl(DslLagrangian),
}

impl LagrangianDef {
    pub fn dim(&self) -> usize {
        match self {
            LagrangianDef::AlphaBeta(f) => f.dim,
            LagrangianDef::Dsl(d) => d.dim,
        }
    }

    pub fn family(&self) -> Option<&FamilyInstance> {
        match self {
            LagrangianDef::AlphaBeta(f) => Some(f),
            LagrangianDef::Dsl(_) => None,
        }
    }

    /// `L` on already-seeded coordinate jets `[x…, ẋ…]`.
    pub fn eval_jets(&self, coords: &[Jet]) -> Result<Jet> {
        let n = self.dim();
        if coords.len() != 2 * n {
            return Err(Error::Dimension(format!(
                "expected {} tangent coordinates, got {}",
                2 * n,
                coords.len()
            )));
        }
        match self {
            LagrangianDef::Dsl(d) => expr::eval(&d.expr, coords, &d.params),
            LagrangianDef::AlphaBeta(f) => f.lagrangian(&coords[..n], &coords[n..]),
        }
    }

    /// Plain float evaluation of `L` at `(x, ẋ)`.
    pub fn eval_f64(&self, x: &[f64], xdot: &[f64]) -> Result<f64> {
        let coords: Vec<f64> = x.iter().chain(xdot).copied().collect();
        let jets = jets::seed(&coords, &[], 1)?;
        Ok(self.eval_jets(&jets)?.value())
    }
}

/// Jet of `L` at the sample in all `2n` variables, to the requested order.
pub fn eval_l(def: &LagrangianDef, s: &TangentSample, order: usize) -> Result<Jet> {
    let coords = tangent_jets(def, s, order)?;
    def.eval_jets(&coords)
}

/// Seeded `[x…, ẋ…]` jets, every variable active.
pub(crate) fn tangent_jets(
    def: &LagrangianDef,
    s: &TangentSample,
    order: usize,
) -> Result<Vec<Jet>> {
    if s.dim() != def.dim() {
        return Err(Error::Dimension(format!(
            "sample has dimension {}, Lagrangian {}",
            s.dim(),
            def.dim()
        )));
    }
    let values: Vec<f64> = s.x().iter().chain(s.xdot()).copied().collect();
    let active: Vec<usize> = (0..values.len()).collect();
    jets::seed(&values, &active, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minkowski() -> LagrangianDef {
        LagrangianDef::Dsl(
            DslLagrangian::parse(4, "xd0^2 - xd1^2 - xd2^2 - xd3^2", &[], Params::new()).unwrap(),
        )
    }

    #[test]
    fn minkowski_value_and_hessian() {
        let s = TangentSample::new(vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let l = eval_l(&minkowski(), &s, 2).unwrap();
        assert_eq!(l.value(), 1.0);
        let diag = [1.0, -1.0, -1.0, -1.0];
        for a in 0..4 {
            for b in 0..4 {
                let h = 0.5 * l.partial(&[4 + a, 4 + b]).unwrap();
                assert_eq!(h, if a == b { diag[a] } else { 0.0 });
            }
        }
    }

    #[test]
    fn aliases_for_velocities() {
        let names: Vec<String> = ["t", "r"].map(String::from).to_vec();
        let def = DslLagrangian::parse(2, "t_dot^2 - r^2*r_dot^2", &names, Params::new()).unwrap();
        let v = LagrangianDef::Dsl(def)
            .eval_f64(&[0.0, 2.0], &[1.0, 1.0])
            .unwrap();
        assert_eq!(v, 1.0 - 4.0);
    }

    #[test]
    fn rejects_unknown_parameters() {
        let symbols = velocity_symbols(1, &[]).with_params(["k"]);
        let expr = expr::parse_with("k*xd0^2", &symbols).unwrap();
        assert!(DslLagrangian::new(1, expr, Params::new()).is_err());
    }
}
