//! Scene files: which Lagrangian, which tangent samples, which options.
//!
//! Every error carries a JSON pointer into the scene document.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use finsler_core::alphabeta::FamilyInstance;
use finsler_core::catalog::{self, Overrides};
use finsler_core::expr::{self, Expr, Params, Symbols};
use finsler_core::geometry::{
    DslLagrangian, LagrangianDef, SignatureConvention, TangentSample, Tolerances,
};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq)]
pub struct SceneError {
    /// JSON pointer of the offending value, `""` for the document root.
    pub pointer: String,
    pub message: String,
}

impl SceneError {
    fn at(pointer: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            pointer: pointer.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for SceneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() {
            "/"
        } else {
            &self.pointer
        };
        write!(f, "scene error at {at}: {}", self.message)
    }
}

impl std::error::Error for SceneError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    #[serde(default)]
    chart: Option<ChartFile>,
    lagrangian: LagrangianFile,
    #[serde(default)]
    samples: Option<Vec<SampleFile>>,
    #[serde(default)]
    options: OptionsFile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChartFile {
    dim: usize,
    #[serde(default)]
    aliases: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum LagrangianFile {
    Catalog(CatalogFile),
    Dsl(DslFile),
    Family(FamilyFile),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    name: String,
    #[serde(default)]
    overrides: OverridesFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverridesFile {
    c: Option<f64>,
    m: Option<f64>,
    p: Option<f64>,
    phi: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DslFile {
    expr: String,
    #[serde(default)]
    params: Params,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    alpha: Vec<Vec<ExprFile>>,
    beta: Vec<ExprFile>,
    c: f64,
    m: f64,
    p: f64,
    #[serde(default)]
    h: Option<ExprFile>,
    #[serde(default)]
    params: Params,
}

/// A component given either as a number or as an expression string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ExprFile {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleFile {
    #[serde(default)]
    label: Option<String>,
    x: Vec<f64>,
    xdot: Vec<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionsFile {
    #[serde(default)]
    tolerances: TolerancesFile,
    directions: Option<usize>,
    seed: Option<u64>,
    signature_convention: Option<String>,
    reference_metric: Option<Vec<Vec<ExprFile>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TolerancesFile {
    degenerate: Option<f64>,
    null: Option<f64>,
    berwald: Option<f64>,
    sym: Option<f64>,
}

/// Where the Lagrangian came from, for the report header.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Catalog {
        name: String,
        overrides: BTreeMap<String, String>,
    },
    Dsl {
        expr: String,
    },
    Family,
}

impl Source {
    pub fn kind(&self) -> &'static str {
        match self {
            Source::Catalog { .. } => "catalog",
            Source::Dsl { .. } => "dsl",
            Source::Family => "family",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub label: Option<String>,
    pub point: TangentSample,
}

/// Options as written in the scene; unset values fall back to flags or
/// built-in defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneOptions {
    pub tol_degenerate: Option<f64>,
    pub tol_null: Option<f64>,
    pub tol_berwald: Option<f64>,
    pub tol_sym: Option<f64>,
    pub directions: Option<usize>,
    pub seed: Option<u64>,
    pub signature_convention: Option<SignatureConvention>,
}

impl SceneOptions {
    pub fn tolerances(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            degenerate: self.tol_degenerate.unwrap_or(d.degenerate),
            null: self.tol_null.unwrap_or(d.null),
            berwald: self.tol_berwald.unwrap_or(d.berwald),
            sym: self.tol_sym.unwrap_or(d.sym),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub dim: usize,
    pub aliases: Vec<String>,
    pub source: Source,
    pub def: LagrangianDef,
    pub samples: Vec<Sample>,
    pub options: SceneOptions,
    /// Reference metric for non-metricity, with the parameters it may use.
    pub reference_metric: Option<(Vec<Vec<Expr>>, Params)>,
}

impl Scene {
    pub fn from_path(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SceneError::at("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: SceneFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = pointer_of(e.path());
            SceneError::at(pointer, e.into_inner())
        })?;
        resolve(file)
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        let token = match seg {
            Segment::Seq { index } => index.to_string(),
            Segment::Map { key } => key.replace('~', "~0").replace('/', "~1"),
            Segment::Enum { variant } => variant.clone(),
            Segment::Unknown => continue,
        };
        out.push('/');
        out.push_str(&token);
    }
    out
}

fn parse_expr(src: &ExprFile, symbols: &Symbols, pointer: &str) -> Result<Expr, SceneError> {
    match src {
        ExprFile::Number(v) => Ok(Expr::constant(*v)),
        ExprFile::Text(s) => expr::parse_with(s, symbols).map_err(|e| SceneError::at(pointer, e)),
    }
}

fn parse_matrix(
    rows: &[Vec<ExprFile>],
    symbols: &Symbols,
    pointer: &str,
) -> Result<Vec<Vec<Expr>>, SceneError> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, e)| parse_expr(e, symbols, &format!("{pointer}/{i}/{j}")))
                .collect()
        })
        .collect()
}

fn check_square(rows: &[Vec<ExprFile>], dim: usize, pointer: &str) -> Result<(), SceneError> {
    if rows.len() != dim {
        return Err(SceneError::at(
            pointer,
            format!("expected {dim} rows, found {}", rows.len()),
        ));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(SceneError::at(
                format!("{pointer}/{i}"),
                format!("expected {dim} entries, found {}", row.len()),
            ));
        }
    }
    Ok(())
}

fn resolve(file: SceneFile) -> Result<Scene, SceneError> {
    let chart = file.chart;
    let convention = match &file.options.signature_convention {
        None => None,
        Some(s) => Some(SignatureConvention::from_label(s).ok_or_else(|| {
            SceneError::at(
                "/options/signature_convention",
                format!("unknown convention `{s}` (mostly-minus, mostly-plus, +---, -+++)"),
            )
        })?),
    };

    let (dim, aliases, source, def, defaults, params) = match file.lagrangian {
        LagrangianFile::Catalog(c) => {
            let o = c.overrides;
            let overrides = Overrides {
                c: o.c,
                m: o.m,
                p: o.p,
                phi: o.phi.clone(),
            };
            let entry = catalog::get(&c.name, &overrides).map_err(|e| {
                let ptr = match e {
                    finsler_core::Error::UnknownCatalogEntry(_) => "/lagrangian/catalog/name",
                    _ => "/lagrangian/catalog/overrides",
                };
                SceneError::at(ptr, e)
            })?;
            let dim = entry.def.dim();
            let aliases = match &chart {
                Some(ch) if ch.dim != dim => {
                    return Err(SceneError::at(
                        "/chart/dim",
                        format!("catalog entry `{}` is {dim}-dimensional", c.name),
                    ))
                }
                Some(ch) if !ch.aliases.is_empty() => ch.aliases.clone(),
                _ => entry.aliases.clone(),
            };
            let mut shown = BTreeMap::new();
            for (k, v) in [("c", o.c), ("m", o.m), ("p", o.p)] {
                if let Some(v) = v {
                    shown.insert(k.to_string(), v.to_string());
                }
            }
            if let Some(phi) = o.phi {
                shown.insert("phi".to_string(), phi);
            }
            let source = Source::Catalog {
                name: entry.name.clone(),
                overrides: shown,
            };
            let params = entry
                .def
                .family()
                .map(|f| f.params.clone())
                .unwrap_or_default();
            (
                dim,
                aliases,
                source,
                entry.def,
                entry.default_samples,
                params,
            )
        }
        LagrangianFile::Dsl(d) => {
            let ch =
                chart.ok_or_else(|| SceneError::at("/chart", "a dsl Lagrangian needs a chart"))?;
            check_chart(&ch)?;
            let def = DslLagrangian::parse(ch.dim, &d.expr, &ch.aliases, d.params.clone())
                .map_err(|e| SceneError::at("/lagrangian/dsl/expr", e))?;
            let source = Source::Dsl { expr: d.expr };
            (
                ch.dim,
                ch.aliases,
                source,
                LagrangianDef::Dsl(def),
                Vec::new(),
                d.params,
            )
        }
        LagrangianFile::Family(f) => {
            let ch = chart
                .ok_or_else(|| SceneError::at("/chart", "a family Lagrangian needs a chart"))?;
            check_chart(&ch)?;
            let dim = ch.dim;
            let symbols = Symbols::new(dim)
                .with_chart_aliases(&ch.aliases)
                .with_params(f.params.keys().cloned());
            check_square(&f.alpha, dim, "/lagrangian/family/alpha")?;
            if f.beta.len() != dim {
                return Err(SceneError::at(
                    "/lagrangian/family/beta",
                    format!("expected {dim} components, found {}", f.beta.len()),
                ));
            }
            let alpha = parse_matrix(&f.alpha, &symbols, "/lagrangian/family/alpha")?;
            let beta = f
                .beta
                .iter()
                .enumerate()
                .map(|(i, e)| parse_expr(e, &symbols, &format!("/lagrangian/family/beta/{i}")))
                .collect::<Result<Vec<_>, _>>()?;
            let h =
                f.h.as_ref()
                    .map(|e| parse_expr(e, &symbols, "/lagrangian/family/h"))
                    .transpose()?;
            let inst = FamilyInstance::new(alpha, beta, f.c, f.m, f.p, h, f.params.clone())
                .map_err(|e| SceneError::at("/lagrangian/family", e))?;
            (
                dim,
                ch.aliases,
                Source::Family,
                LagrangianDef::AlphaBeta(inst),
                Vec::new(),
                f.params,
            )
        }
    };

    let samples = match file.samples {
        Some(list) => {
            if list.is_empty() {
                return Err(SceneError::at(
                    "/samples",
                    "at least one sample is required",
                ));
            }
            let mut out = Vec::with_capacity(list.len());
            for (i, s) in list.into_iter().enumerate() {
                for (field, v) in [("x", &s.x), ("xdot", &s.xdot)] {
                    if v.len() != dim {
                        return Err(SceneError::at(
                            format!("/samples/{i}/{field}"),
                            format!("expected {dim} components, found {}", v.len()),
                        ));
                    }
                }
                let point = TangentSample::new(s.x, s.xdot)
                    .map_err(|e| SceneError::at(format!("/samples/{i}"), e))?;
                out.push(Sample {
                    label: s.label,
                    point,
                });
            }
            out
        }
        None if !defaults.is_empty() => defaults
            .into_iter()
            .enumerate()
            .map(|(i, point)| Sample {
                label: Some(format!("default-{i}")),
                point,
            })
            .collect(),
        None => {
            return Err(SceneError::at(
                "/samples",
                "samples are required unless a catalog entry supplies defaults",
            ))
        }
    };

    let reference_metric = match &file.options.reference_metric {
        None => None,
        Some(rows) => {
            check_square(rows, dim, "/options/reference_metric")?;
            let symbols = Symbols::new(dim)
                .with_chart_aliases(&aliases)
                .with_params(params.keys().cloned());
            Some((
                parse_matrix(rows, &symbols, "/options/reference_metric")?,
                params,
            ))
        }
    };

    let t = &file.options.tolerances;
    for (name, v) in [
        ("degenerate", t.degenerate),
        ("null", t.null),
        ("berwald", t.berwald),
        ("sym", t.sym),
    ] {
        if let Some(v) = v {
            if !(v.is_finite() && v > 0.0) {
                return Err(SceneError::at(
                    format!("/options/tolerances/{name}"),
                    "tolerances must be positive",
                ));
            }
        }
    }
    if file.options.directions.is_some_and(|d| d < 2) {
        return Err(SceneError::at(
            "/options/directions",
            "at least two directions are needed",
        ));
    }

    Ok(Scene {
        dim,
        aliases,
        source,
        def,
        samples,
        options: SceneOptions {
            tol_degenerate: t.degenerate,
            tol_null: t.null,
            tol_berwald: t.berwald,
            tol_sym: t.sym,
            directions: file.options.directions,
            seed: file.options.seed,
            signature_convention: convention,
        },
        reference_metric,
    })
}

fn check_chart(ch: &ChartFile) -> Result<(), SceneError> {
    if ch.dim == 0 {
        return Err(SceneError::at("/chart/dim", "dimension must be positive"));
    }
    if ch.aliases.len() > ch.dim {
        return Err(SceneError::at(
            "/chart/aliases",
            format!(
                "{} aliases for a {}-dimensional chart",
                ch.aliases.len(),
                ch.dim
            ),
        ));
    }
    Ok(())
}
