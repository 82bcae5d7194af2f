use std::fmt;

use thiserror::Error;

/// Which elementary operation left its domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Log,
    Sqrt,
    /// Non-integer power of a non-positive base, or a zero base with a
    /// negative exponent.
    Power,
    Division,
    /// `abs` is not differentiable at zero.
    Abs,
    NonFinite,
}

impl DomainKind {
    pub fn tag(self) -> &'static str {
        match self {
            DomainKind::Log => "log-domain",
            DomainKind::Sqrt => "sqrt-domain",
            DomainKind::Power => "power-domain",
            DomainKind::Division => "division-by-zero",
            DomainKind::Abs => "abs-nondifferentiable",
            DomainKind::NonFinite => "non-finite",
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownIdentifier,
    CoordinateOutOfRange,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),

    #[error("{kind} in `{location}`")]
    Domain { kind: DomainKind, location: String },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("jet order {requested} exceeds the available order {max}")]
    JetOrder { requested: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("the zero vector is not a tangent direction")]
    ZeroVelocity,

    #[error(
        "degenerate metric: smallest |eigenvalue| {min_abs_eigenvalue:e} against scale {scale:e}"
    )]
    DegenerateMetric { min_abs_eigenvalue: f64, scale: f64 },

    #[error("singular matrix in jet elimination")]
    Singular,

    #[error("only {found} admissible directions after {attempts} attempts")]
    NoAdmissibleDirections { found: usize, attempts: usize },

    #[error("geometry is not of Berwald type (deviation {deviation:e})")]
    NotBerwald { deviation: f64 },

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalogEntry(String),

    #[error("invalid override: {0}")]
    InvalidOverride(String),

    #[error("{0}")]
    Unsupported(String),
}

impl Error {
    pub fn domain(kind: DomainKind, location: String) -> Self {
        Error::Domain { kind, location }
    }

    /// Short machine-readable tag for admissibility reporting.
    pub fn reason_tag(&self) -> String {
        match self {
            Error::Domain { kind, .. } => kind.tag().to_string(),
            Error::DegenerateMetric { .. } | Error::Singular => "degenerate-metric".to_string(),
            Error::ZeroVelocity => "zero-velocity".to_string(),
            other => other.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
