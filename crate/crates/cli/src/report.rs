//! The machine-readable geometry report.
//!
//! Floats are written with 17 significant digits in exponent form, so a
//! report parses back to the same bits and re-serializes to the same bytes.
//! Non-finite values become `null`.

use ndarray::{Array2, Array3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Real {
    pub fn text(self) -> Option<String> {
        self.0.is_finite().then(|| format!("{:.16e}", self.0))
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.text() {
            Some(t) => RawValue::from_string(t)
                .map_err(serde::ser::Error::custom)?
                .serialize(serializer),
            None => serializer.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Real(
            Option::<f64>::deserialize(deserializer)?.unwrap_or(f64::NAN),
        ))
    }
}

impl From<f64> for Real {
    fn from(v: f64) -> Self {
        Real(v)
    }
}

pub type Vector = Vec<Real>;
pub type Matrix = Vec<Vec<Real>>;
pub type Tensor3 = Vec<Vec<Vec<Real>>>;

pub fn vector(v: &[f64]) -> Vector {
    v.iter().copied().map(Real).collect()
}

pub fn matrix(a: &Array2<f64>) -> Matrix {
    a.outer_iter()
        .map(|row| row.iter().copied().map(Real).collect())
        .collect()
}

pub fn tensor3(a: &Array3<f64>) -> Tensor3 {
    a.outer_iter().map(|m| matrix(&m.to_owned())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: Tool,
    pub command: String,
    pub scene: SceneSummary,
    pub settings: Settings,
    pub samples: Vec<SampleReport>,
    pub geometry: GeometrySummary,
    pub warnings: Vec<String>,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tool {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub kind: String,
    pub name: Option<String>,
    pub overrides: std::collections::BTreeMap<String, String>,
    pub dim: usize,
    pub aliases: Vec<String>,
    pub reference_metric: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub seed: u64,
    pub directions: usize,
    pub signature_convention: String,
    pub tolerances: TolerancesReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TolerancesReport {
    pub degenerate: Real,
    pub null: Real,
    pub berwald: Real,
    pub sym: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub index: usize,
    pub label: Option<String>,
    pub x: Vector,
    pub xdot: Vector,
    pub admissibility: Admissibility,
    pub local: Option<LocalReport>,
    pub berwald_condition: Option<BerwaldConditionReport>,
    pub berwald: Option<BerwaldReport>,
    pub obstruction: Option<ObstructionSummary>,
    pub causal: Option<CausalReport>,
    pub nonmetricity: Option<NonMetricitySummary>,
    pub errors: Vec<StageError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub in_a: bool,
    pub in_n: bool,
    pub in_a0: bool,
    pub in_t: bool,
    pub l_value: Real,
    pub signature: Option<[usize; 3]>,
    pub failure_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalReport {
    pub lagrangian: Real,
    pub metric: MetricSummary,
    pub spray: Vector,
    pub nonlinear_connection: Matrix,
    pub chern_rund: Tensor3,
    pub cartan_trace: Vector,
    pub ricci: Matrix,
    pub skew_ricci: Matrix,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub det: Real,
    pub signature: [usize; 3],
    pub eigenvalues: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub euler: Real,
    pub spray_contraction: Real,
    pub nonlinear_euler: Real,
    pub cartan_contraction: Real,
    pub skew_identity: Real,
    pub commutator: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerwaldConditionReport {
    pub residual: Real,
    pub h: Real,
    pub dh: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerwaldReport {
    pub is_berwald: bool,
    pub max_gamma_deviation: Real,
    pub directions_tested: usize,
    pub directions_rejected: usize,
    pub affine_connection: Tensor3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionSummary {
    pub ricci: Matrix,
    pub skew: Matrix,
    pub skew_max_abs: Real,
    pub metrizability_necessary_condition_met: bool,
    pub phi_constancy_residual: Real,
    pub hh_ricci_residual: Real,
    pub closed_form: Option<ClosedFormReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormReport {
    pub ricci: Matrix,
    pub skew: Matrix,
    pub f: Real,
    pub h: Real,
    pub dh: Vector,
    pub proves_non_metrizable: bool,
    /// Scaled difference to the pipeline Ricci tensor.
    pub ricci_residual: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalReport {
    pub p_case: String,
    pub det_zeta: Real,
    pub det_formula: Real,
    pub zeta_signature: [usize; 3],
    pub viable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonMetricitySummary {
    pub reference: String,
    pub q: Tensor3,
    pub q_norm: Real,
    pub direct_residual: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    /// `None` when no Berwald test ran or none succeeded.
    pub is_berwald: Option<bool>,
    pub max_gamma_deviation: Option<Real>,
    pub max_skew: Option<Real>,
    pub non_metrizable: bool,
    pub causal_viable: Option<bool>,
    pub samples_with_errors: usize,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
