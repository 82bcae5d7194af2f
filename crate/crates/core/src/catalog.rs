//! Named geometries with default samples and known answers.

use crate::alphabeta::FamilyInstance;
use crate::error::{Error, Result};
use crate::expr::{self, BinaryOp, Expr, Params, Symbols};
use crate::geometry::{
    probe_admissibility, DslLagrangian, LagrangianDef, SignatureConvention, TangentSample,
    Tolerances,
};
use crate::jets;

pub const NAMES: &[&str] = &[
    "minkowski4",
    "schwarzschild",
    "flrw-matter",
    "bogoslovsky",
    "kropina",
    "szabo-counterexample",
];

/// Parameter overrides accepted by the family entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub c: Option<f64>,
    pub m: Option<f64>,
    pub p: Option<f64>,
    /// Source of `φ(x, y)` in the chart `(u, v, x, y)`.
    pub phi: Option<String>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        *self == Overrides::default()
    }
}

/// One nonzero skew-Ricci component `½(R_ab − R_ba)` predicted in magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedSkew {
    pub a: usize,
    pub b: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Expected {
    pub is_berwald: Option<bool>,
    /// `L` is quadratic in `ẋ`.
    pub pseudo_riemannian: bool,
    /// Skew components at each default sample; every other one vanishes.
    pub skew: Vec<Vec<ExpectedSkew>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    pub aliases: Vec<String>,
    pub def: LagrangianDef,
    pub default_samples: Vec<TangentSample>,
    pub expected: Expected,
    /// Sign `σ` in `H = σ φ / (2c(p−1))` that satisfies the Berwald condition.
    pub h_sign: Option<f64>,
}

fn chart(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn sample(x: &[f64], xdot: &[f64]) -> TangentSample {
    TangentSample::new(x.to_vec(), xdot.to_vec()).expect("catalog samples are valid")
}

fn constant_matrix(diag: &[f64]) -> Vec<Vec<Expr>> {
    let n = diag.len();
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| Expr::constant(if a == b { diag[a] } else { 0.0 }))
                .collect()
        })
        .collect()
}

fn covector(components: &[f64]) -> Vec<Expr> {
    components.iter().map(|&v| Expr::constant(v)).collect()
}

fn dsl(dim: usize, source: &str, aliases: &[String], params: Params) -> LagrangianDef {
    LagrangianDef::Dsl(
        DslLagrangian::parse(dim, source, aliases, params).expect("catalog expression parses"),
    )
}

fn reject_overrides(name: &str, o: &Overrides) -> Result<()> {
    if o.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidOverride(format!(
            "{name} takes no parameter overrides"
        )))
    }
}

/// Look up a named geometry.
pub fn get(name: &str, overrides: &Overrides) -> Result<CatalogEntry> {
    let entry = match name {
        "minkowski4" => {
            reject_overrides(name, overrides)?;
            let aliases = chart(&["t", "x", "y", "z"]);
            CatalogEntry {
                name: name.into(),
                def: dsl(
                    4,
                    "t_dot^2 - x_dot^2 - y_dot^2 - z_dot^2",
                    &aliases,
                    Params::new(),
                ),
                aliases,
                default_samples: vec![
                    sample(&[0.0, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]),
                    sample(&[0.3, -1.2, 0.5, 2.0], &[1.3, 0.4, -0.2, 0.5]),
                    sample(&[1.0, 2.0, 3.0, 4.0], &[0.2, 1.0, 0.3, -0.4]),
                ],
                expected: Expected {
                    is_berwald: Some(true),
                    pseudo_riemannian: true,
                    skew: vec![Vec::new(); 3],
                },
                h_sign: None,
            }
        }
        "schwarzschild" => {
            reject_overrides(name, overrides)?;
            let aliases = chart(&["t", "r", "th", "ph"]);
            let params = Params::from([("M".to_string(), 1.0)]);
            let source =
                "(1 - 2*M/r)*t_dot^2 - r_dot^2/(1 - 2*M/r) - r^2*(th_dot^2 + sin(th)^2*ph_dot^2)";
            CatalogEntry {
                name: name.into(),
                def: dsl(4, source, &aliases, params),
                aliases,
                default_samples: vec![
                    sample(&[0.0, 6.0, 1.2, 0.3], &[1.0, 0.1, 0.02, 0.03]),
                    sample(&[2.5, 9.5, 0.8, 2.0], &[1.2, -0.3, 0.01, -0.02]),
                    sample(&[0.0, 4.0, 1.5, 0.0], &[0.1, 1.0, 0.2, 0.1]),
                ],
                expected: Expected {
                    is_berwald: Some(true),
                    pseudo_riemannian: true,
                    skew: vec![Vec::new(); 3],
                },
                h_sign: None,
            }
        }
        "flrw-matter" => {
            reject_overrides(name, overrides)?;
            let aliases = chart(&["t", "x", "y", "z"]);
            CatalogEntry {
                name: name.into(),
                def: dsl(
                    4,
                    "t_dot^2 - t^(4/3)*(x_dot^2 + y_dot^2 + z_dot^2)",
                    &aliases,
                    Params::new(),
                ),
                aliases,
                default_samples: vec![
                    sample(&[1.5, 0.0, 0.0, 0.0], &[1.0, 0.2, 0.1, -0.1]),
                    sample(&[0.7, 1.0, -2.0, 0.5], &[2.0, -0.3, 0.6, 0.4]),
                ],
                expected: Expected {
                    is_berwald: Some(true),
                    pseudo_riemannian: true,
                    skew: vec![Vec::new(); 2],
                },
                h_sign: None,
            }
        }
        "bogoslovsky" | "kropina" => family_entry(name, overrides)?,
        "szabo-counterexample" => counterexample(overrides)?,
        other => return Err(Error::UnknownCatalogEntry(other.to_string())),
    };
    verify_samples(&entry)?;
    Ok(entry)
}

fn family_entry(name: &str, o: &Overrides) -> Result<CatalogEntry> {
    if o.phi.is_some() {
        return Err(Error::InvalidOverride(format!("{name} has no phi")));
    }
    let aliases = chart(&["t", "x", "y", "z"]);
    let (alpha, p_default, samples) = if name == "bogoslovsky" {
        (
            constant_matrix(&[1.0, -1.0, -1.0, -1.0]),
            0.5,
            vec![
                sample(&[0.0, 0.0, 0.0, 0.0], &[1.0, 0.3, 0.2, 0.1]),
                sample(&[0.4, 1.0, -0.5, 2.0], &[1.5, -0.2, 0.4, 0.3]),
            ],
        )
    } else {
        // Static curved α; β = dt is parallel for any static α.
        let symbols = Symbols::new(4).with_chart_aliases(&aliases);
        let spatial = |s: &str| expr::parse_with(s, &symbols).expect("catalog expression parses");
        let zero = Expr::constant(0.0);
        let mut alpha = vec![vec![zero; 4]; 4];
        alpha[0][0] = Expr::constant(1.0);
        alpha[1][1] = spatial("-(1 + 0.2*y^2)");
        alpha[2][2] = spatial("-(1 + 0.1*z^2)");
        alpha[3][3] = spatial("-exp(0.3*x)");
        (
            alpha,
            1.0,
            vec![
                sample(&[0.0, 0.4, -0.7, 1.1], &[1.0, 0.3, 0.2, 0.1]),
                sample(&[1.0, -0.5, 0.9, 0.2], &[1.4, -0.4, 0.1, 0.5]),
            ],
        )
    };
    let inst = FamilyInstance::new(
        alpha,
        covector(&[1.0, 0.0, 0.0, 0.0]),
        o.c.unwrap_or(1.0),
        o.m.unwrap_or(0.0),
        o.p.unwrap_or(p_default),
        Some(Expr::constant(0.0)),
        Params::new(),
    )?;
    let n = samples.len();
    Ok(CatalogEntry {
        name: name.into(),
        aliases,
        def: LagrangianDef::AlphaBeta(inst),
        default_samples: samples,
        expected: Expected {
            is_berwald: Some(true),
            pseudo_riemannian: o.p.unwrap_or(p_default) == 0.0,
            skew: vec![Vec::new(); n],
        },
        h_sign: None,
    })
}

const COUNTEREXAMPLE_POINTS: [[f64; 4]; 3] = [
    [0.3, 0.7, 0.5, 0.4],
    [-0.2, 1.1, 0.8, -0.3],
    [0.9, -0.4, -0.6, 1.2],
];

/// `α = 2 du dv + v φ(x,y) du² + dx² + dy²`, `β = du`.
fn counterexample(o: &Overrides) -> Result<CatalogEntry> {
    let c = o.c.unwrap_or(1.0);
    let m = o.m.unwrap_or(0.0);
    let p = o.p.unwrap_or(2.0);
    if c == 0.0 {
        return Err(Error::InvalidOverride(
            "the counterexample needs c != 0".into(),
        ));
    }
    if p == 1.0 {
        return Err(Error::InvalidOverride(
            "the counterexample needs p != 1".into(),
        ));
    }
    let aliases = chart(&["u", "v", "x", "y"]);
    let symbols = Symbols::new(4).with_chart_aliases(&aliases);
    let phi_src = o.phi.as_deref().unwrap_or("x");
    let phi = expr::parse_with(phi_src, &symbols)
        .map_err(|e| Error::InvalidOverride(format!("phi: {e}")))?;
    if phi.max_coord().is_some_and(|i| i < 2) {
        return Err(Error::InvalidOverride(
            "phi may depend on x and y only".into(),
        ));
    }

    let zero = Expr::constant(0.0);
    let one = Expr::constant(1.0);
    let mut alpha = vec![vec![zero.clone(); 4]; 4];
    alpha[0][0] = Expr::binary(BinaryOp::Mul, Expr::coord(1), phi.clone());
    alpha[0][1] = one.clone();
    alpha[1][0] = one.clone();
    alpha[2][2] = one.clone();
    alpha[3][3] = one;
    let beta = vec![Expr::constant(1.0), zero.clone(), zero.clone(), zero];

    let bare = FamilyInstance::new(alpha.clone(), beta.clone(), c, m, p, None, Params::new())?;
    let h_sign = resolve_h_sign(&bare, &phi)?;
    let h_expr = Expr::binary(
        BinaryOp::Mul,
        Expr::constant(h_sign / (2.0 * c * (p - 1.0))),
        phi.clone(),
    );
    let inst = FamilyInstance::new(alpha, beta, c, m, p, Some(h_expr), Params::new())?;
    let def = LagrangianDef::AlphaBeta(inst);

    let mut samples = Vec::new();
    let mut skew = Vec::new();
    for x in COUNTEREXAMPLE_POINTS {
        let xdot = default_direction(&def, &x)?;
        let dphi = gradient(&phi, &x)?;
        let k = (p / (p - 1.0)).abs();
        skew.push(
            [2usize, 3]
                .iter()
                .filter(|&&i| dphi[i] != 0.0)
                .map(|&i| ExpectedSkew {
                    a: 0,
                    b: i,
                    magnitude: k * dphi[i].abs(),
                })
                .collect(),
        );
        samples.push(sample(&x, &xdot));
    }
    Ok(CatalogEntry {
        name: "szabo-counterexample".into(),
        aliases,
        def,
        default_samples: samples,
        expected: Expected {
            is_berwald: Some(true),
            pseudo_riemannian: p == 0.0 && m == 0.0,
            skew,
        },
        h_sign: Some(h_sign),
    })
}

fn gradient(e: &Expr, x: &[f64]) -> Result<Vec<f64>> {
    let active: Vec<usize> = (0..x.len()).collect();
    let xj = jets::seed(x, &active, 1)?;
    Ok(expr::eval(e, &xj, &Params::new())?.gradient())
}

/// Compare the fitted `H` with `φ / (2c(p−1))` where `φ ≠ 0`.
fn resolve_h_sign(inst: &FamilyInstance, phi: &Expr) -> Result<f64> {
    for x in COUNTEREXAMPLE_POINTS {
        let phi_val = expr::eval(phi, &jets::seed(&x, &[], 1)?, &Params::new())?.value();
        let nominal = phi_val / (2.0 * inst.c * (inst.p - 1.0));
        if nominal.abs() < 1e-8 {
            continue;
        }
        let fit = inst.check_berwald_condition(&x)?;
        return Ok(if (fit.h - nominal).abs() <= (fit.h + nominal).abs() {
            1.0
        } else {
            -1.0
        });
    }
    Ok(1.0)
}

/// First `ẋ` with `β(ẋ) > 0`, `ζ(ẋ,ẋ) > 0` and admissible, searching out
/// from `(1, 1, 0.1, 0.1)` along `ẋ^v`.
fn default_direction(def: &LagrangianDef, x: &[f64]) -> Result<Vec<f64>> {
    let LagrangianDef::AlphaBeta(inst) = def else {
        unreachable!("counterexample is a family instance")
    };
    let tol = Tolerances::default();
    let steps = [1.0, 2.0, 0.5, 4.0, 0.25, 8.0, -0.5, 16.0];
    for v in steps {
        let xdot = vec![1.0, v, 0.1, 0.1];
        let zeta = zeta_at(inst, x, &xdot)?;
        if zeta <= 0.0 {
            continue;
        }
        let s = sample(x, &xdot);
        if probe_admissibility(def, &s, SignatureConvention::default(), &tol).in_a0 {
            return Ok(xdot);
        }
    }
    Err(Error::NoAdmissibleDirections {
        found: 0,
        attempts: steps.len(),
    })
}

fn zeta_at(inst: &FamilyInstance, x: &[f64], xdot: &[f64]) -> Result<f64> {
    let xj = jets::seed(x, &[], 1)?;
    let alpha = inst.alpha_jets(&xj)?;
    let beta = inst.beta_jets(&xj)?;
    let n = inst.dim;
    let mut a2 = 0.0;
    let mut b1 = 0.0;
    for a in 0..n {
        b1 += beta[a].value() * xdot[a];
        for b in 0..n {
            a2 += alpha[[a, b]].value() * xdot[a] * xdot[b];
        }
    }
    Ok(inst.c * a2 + inst.m * b1 * b1)
}

fn verify_samples(entry: &CatalogEntry) -> Result<()> {
    let tol = Tolerances::default();
    for (i, s) in entry.default_samples.iter().enumerate() {
        let v = probe_admissibility(&entry.def, s, SignatureConvention::default(), &tol);
        if !v.in_a {
            return Err(Error::InvalidOverride(format!(
                "default sample {i} of {} is not admissible: {}",
                entry.name,
                v.failure_reason.unwrap_or_default()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_loads() {
        for name in NAMES {
            let e = get(name, &Overrides::default()).unwrap();
            assert!(!e.default_samples.is_empty());
        }
    }

    #[test]
    fn unknown_and_invalid() {
        assert!(matches!(
            get("nope", &Overrides::default()),
            Err(Error::UnknownCatalogEntry(_))
        ));
        let p1 = Overrides {
            p: Some(1.0),
            ..Overrides::default()
        };
        assert!(matches!(
            get("szabo-counterexample", &p1),
            Err(Error::InvalidOverride(_))
        ));
        assert!(matches!(
            get("minkowski4", &p1),
            Err(Error::InvalidOverride(_))
        ));
    }

    #[test]
    fn counterexample_expectations() {
        let o = Overrides {
            phi: Some("x + 2*y".into()),
            ..Overrides::default()
        };
        let e = get("szabo-counterexample", &o).unwrap();
        let skew = &e.expected.skew[0];
        assert_eq!(skew.len(), 2);
        assert_eq!((skew[0].b, skew[0].magnitude), (2, 2.0));
        assert_eq!((skew[1].b, skew[1].magnitude), (3, 4.0));
    }

    #[test]
    fn bogoslovsky_parameters() {
        let e = get(
            "bogoslovsky",
            &Overrides {
                p: Some(0.5),
                ..Overrides::default()
            },
        )
        .unwrap();
        let f = e.def.family().unwrap();
        assert_eq!((f.c, f.m, f.p), (1.0, 0.0, 0.5));
    }
}
