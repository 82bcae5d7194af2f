//! Finsler geometry at a tangent-bundle point: L-metric, Cartan trace,
//! geodesic spray, nonlinear connection, horizontal derivative, Chern–Rund
//! connection, hh-curvature and its Ricci tensor.
//!
//! Everything is derived from one jet of `L` in the `2n` variables `(x, ẋ)`.
//! Each stage differentiates the previous one and loses one order, so the
//! curvature needs `L` to order four.

mod admissibility;
mod lagrangian;
mod local;

pub use admissibility::{probe_admissibility, AdmissibilityVerdict};
pub use lagrangian::{eval_l, velocity_symbols, DslLagrangian, LagrangianDef};
pub use local::{
    cartan_trace, chern_rund, commutator_check, connection, curvature_contraction, evaluate,
    hh_curvature, horizontal_derivative, identity_residuals, metric, nonlinear_connection, spray,
    volume_log, ConnectionValue, CurvatureValue, IdentityResiduals, LocalGeometry, MetricValue,
    SampleGeometry,
};

use crate::error::{Error, Result};

/// A point `(x, ẋ)` of the slit tangent bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentSample {
    x: Vec<f64>,
    xdot: Vec<f64>,
}

impl TangentSample {
    pub fn new(x: Vec<f64>, xdot: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != xdot.len() {
            return Err(Error::Dimension(format!(
                "base point has {} components, direction {}",
                x.len(),
                xdot.len()
            )));
        }
        if xdot.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroVelocity);
        }
        if x.iter().chain(&xdot).any(|v| !v.is_finite()) {
            return Err(Error::Dimension("non-finite sample coordinate".into()));
        }
        Ok(Self { x, xdot })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn xdot(&self) -> &[f64] {
        &self.xdot
    }

    /// Same base point, direction scaled by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.x.clone(),
            self.xdot.iter().map(|v| v * lambda).collect(),
        )
    }

    pub fn with_direction(&self, xdot: Vec<f64>) -> Result<Self> {
        Self::new(self.x.clone(), xdot)
    }
}

/// Which sign of `L` and which signature mark the timelike cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignatureConvention {
    /// `L > 0` with signature `(+,-,-,-)`.
    #[default]
    MostlyMinus,
    /// `L < 0` with signature `(-,+,+,+)`.
    MostlyPlus,
}

impl SignatureConvention {
    pub fn label(self) -> &'static str {
        match self {
            SignatureConvention::MostlyMinus => "+---",
            SignatureConvention::MostlyPlus => "-+++",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "+---" | "mostly-minus" => Some(SignatureConvention::MostlyMinus),
            "-+++" | "mostly-plus" => Some(SignatureConvention::MostlyPlus),
            _ => None,
        }
    }
}

/// Numerical thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Eigenvalues with `|λ| <= degenerate · max|λ|` count as zero.
    pub degenerate: f64,
    /// `|L| < null · max|λ(g)| · |ẋ|²` counts as null.
    pub null: f64,
    /// Relative bound on the direction dependence of the Chern–Rund connection.
    pub berwald: f64,
    /// Bound on skew Ricci components, scaled by `max(1, max|Ricci|)`.
    pub sym: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            degenerate: 1e-10,
            null: 1e-10,
            berwald: 1e-7,
            sym: 1e-7,
        }
    }
}

/// `max|a - b| / max(1, max|a|, max|b|)` over paired components.
pub fn scaled_residual<'a>(
    a: impl IntoIterator<Item = &'a f64>,
    b: impl IntoIterator<Item = &'a f64>,
) -> f64 {
    let mut diff = 0.0f64;
    let mut scale = 1.0f64;
    for (x, y) in a.into_iter().zip(b) {
        diff = diff.max((x - y).abs());
        scale = scale.max(x.abs()).max(y.abs());
    }
    diff / scale
}
