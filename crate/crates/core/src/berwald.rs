//! Berwald detection, the affine connection it induces on the base, its
//! Ricci tensor and the non-metricity against a reference metric.

use ndarray::{Array2, Array3, Array4};
use rand::Rng;

use crate::alphabeta::{christoffel, metric_jets};
use crate::error::{Error, Result};
use crate::expr::{Expr, Params};
use crate::geometry::{
    probe_admissibility, LagrangianDef, LocalGeometry, SignatureConvention, TangentSample,
    Tolerances,
};
use crate::jets::{self, Jet};
use crate::linalg;

/// How fibre directions are drawn around a known admissible one.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSampling {
    pub seed_direction: Vec<f64>,
    /// Number of admissible directions wanted, including the seed.
    pub count: usize,
    pub max_attempts: usize,
    /// Draws are `seed + spread·|seed|·u` with `u` uniform in the unit cube.
    pub spread: f64,
    /// Largest accepted `max|λ| / min|λ|` over the eigenvalues of the
    /// L-metric. Close to the null cone the connection loses accuracy roughly
    /// like the cube of this ratio.
    pub max_condition: f64,
}

impl DirectionSampling {
    pub fn around(seed_direction: Vec<f64>) -> Self {
        Self {
            seed_direction,
            count: 16,
            max_attempts: 200,
            spread: 0.25,
            max_condition: 1e4,
        }
    }
}

/// Connection coefficients at a point together with their first
/// derivatives, `gradient[[a, b, c, m]] = ∂_m Γ^a_bc`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineConnection {
    pub x: Vec<f64>,
    pub gamma: Array3<f64>,
    pub gradient: Array4<f64>,
}

impl AffineConnection {
    /// First-order Taylor field of the connection about `x`, for use with
    /// [`ricci_affine`].
    pub fn as_field(&self) -> impl Fn(&[Jet]) -> Result<Array3<Jet>> + '_ {
        move |y: &[Jet]| {
            let n = self.x.len();
            let dy: Vec<Jet> = y
                .iter()
                .zip(&self.x)
                .map(|(j, x0)| j.add_const(-x0))
                .collect();
            Ok(Array3::from_shape_fn((n, n, n), |(a, b, c)| {
                let mut acc = dy[0].lift(self.gamma[[a, b, c]]);
                for m in 0..n {
                    acc = &acc + &dy[m].scale(self.gradient[[a, b, c, m]]);
                }
                acc
            }))
        }
    }

    /// `R^c_adb` of the affine connection, indexed `[[c, a, d, b]]`.
    pub fn riemann(&self) -> Array4<f64> {
        riemann_from_parts(&self.gamma, &self.gradient)
    }

    pub fn ricci(&self) -> Array2<f64> {
        ricci_from_parts(&self.gamma, &self.gradient)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerwaldVerdict {
    pub is_berwald: bool,
    /// `max_k max|Γ(x,ẋ_k) − Γ(x,ẋ_0)| / max(1, max|Γ(x,ẋ_0)|)`.
    pub max_gamma_deviation: f64,
    /// Direction average of `Γ` and `∂_x Γ`.
    pub affine_connection: AffineConnection,
    pub directions_tested: usize,
    pub directions_rejected: usize,
    pub directions: Vec<Vec<f64>>,
}

struct DirectionData {
    xdot: Vec<f64>,
    condition: f64,
    gamma: Array3<f64>,
    gradient: Array4<f64>,
}

fn connection_at(
    def: &LagrangianDef,
    s: &TangentSample,
    tol: &Tolerances,
) -> Result<DirectionData> {
    let geom = LocalGeometry::new(def, s, 4, tol)?;
    let conn = geom.connection()?;
    let eigenvalues = &geom.metric_value().eigenvalues;
    let (lo, hi) = eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), l| {
            (lo.min(l.abs()), hi.max(l.abs()))
        });
    Ok(DirectionData {
        xdot: s.xdot().to_vec(),
        condition: hi / lo,
        gamma: conn.chern_rund.map(Jet::value),
        gradient: conn.chern_rund_x_gradient(&geom),
    })
}

/// Sample Chern–Rund coefficients over fibre directions at `x` and decide
/// whether they are direction independent.
///
/// A direction is used when it lies in A₀, its L-metric is no worse
/// conditioned than `sampling.max_condition`, and both the sign of L and the
/// signature of the L-metric agree with the first accepted direction.
pub fn detect_berwald<R: Rng + ?Sized>(
    def: &LagrangianDef,
    x: &[f64],
    sampling: &DirectionSampling,
    tol: &Tolerances,
    rng: &mut R,
) -> Result<BerwaldVerdict> {
    let seed = TangentSample::new(x.to_vec(), sampling.seed_direction.clone())?;
    let n = seed.dim();
    let norm = sampling
        .seed_direction
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    let mut accepted: Vec<DirectionData> = Vec::new();
    let mut rejected = 0usize;
    let mut reference = None;

    let mut try_direction = |xdot: Vec<f64>, accepted: &mut Vec<DirectionData>| -> bool {
        let Ok(s) = seed.with_direction(xdot) else {
            return false;
        };
        let verdict = probe_admissibility(def, &s, SignatureConvention::default(), tol);
        if !verdict.in_a0 {
            return false;
        }
        let Ok(d) = connection_at(def, &s, tol) else {
            return false;
        };
        if !(d.condition <= sampling.max_condition) {
            return false;
        }
        let key = (verdict.l_value > 0.0, verdict.signature);
        if *reference.get_or_insert(key) != key {
            return false;
        }
        accepted.push(d);
        true
    };

    if !try_direction(sampling.seed_direction.clone(), &mut accepted) {
        rejected += 1;
    }
    let mut attempts = 1;
    while accepted.len() < sampling.count && attempts < sampling.max_attempts {
        attempts += 1;
        let xdot: Vec<f64> = sampling
            .seed_direction
            .iter()
            .map(|v| v + sampling.spread * norm * rng.random_range(-1.0..1.0))
            .collect();
        if !try_direction(xdot, &mut accepted) {
            rejected += 1;
        }
    }
    if accepted.len() < 2 {
        return Err(Error::NoAdmissibleDirections {
            found: accepted.len(),
            attempts,
        });
    }

    let first = &accepted[0].gamma;
    let scale = linalg::max_abs(first.iter()).max(1.0);
    let deviation = accepted
        .iter()
        .map(|d| linalg::max_abs((&d.gamma - first).iter()))
        .fold(0.0, f64::max)
        / scale;
    let k = accepted.len() as f64;
    let gamma = accepted
        .iter()
        .fold(Array3::zeros((n, n, n)), |acc, d| acc + &d.gamma)
        / k;
    let gradient = accepted
        .iter()
        .fold(Array4::zeros((n, n, n, n)), |acc, d| acc + &d.gradient)
        / k;
    Ok(BerwaldVerdict {
        is_berwald: deviation < tol.berwald,
        max_gamma_deviation: deviation,
        affine_connection: AffineConnection {
            x: x.to_vec(),
            gamma,
            gradient,
        },
        directions_tested: accepted.len(),
        directions_rejected: rejected,
        directions: accepted.into_iter().map(|d| d.xdot).collect(),
    })
}

/// `R^c_adb = ∂_d Γ^c_ab − ∂_b Γ^c_ad + Γ^c_ds Γ^s_ab − Γ^c_bs Γ^s_ad`.
pub fn riemann_from_parts(gamma: &Array3<f64>, gradient: &Array4<f64>) -> Array4<f64> {
    let n = gamma.shape()[0];
    Array4::from_shape_fn((n, n, n, n), |(c, a, d, b)| {
        let mut r = gradient[[c, a, b, d]] - gradient[[c, a, d, b]];
        for s in 0..n {
            r += gamma[[c, d, s]] * gamma[[s, a, b]] - gamma[[c, b, s]] * gamma[[s, a, d]];
        }
        r
    })
}

/// `R_ab = ∂_m Γ^m_ab − ∂_b Γ^m_am + Γ^m_ms Γ^s_ab − Γ^m_bs Γ^s_am`.
pub fn ricci_from_parts(gamma: &Array3<f64>, gradient: &Array4<f64>) -> Array2<f64> {
    let n = gamma.shape()[0];
    Array2::from_shape_fn((n, n), |(a, b)| {
        let mut r = 0.0;
        for m in 0..n {
            r += gradient[[m, a, b, m]] - gradient[[m, a, m, b]];
            for s in 0..n {
                r += gamma[[m, m, s]] * gamma[[s, a, b]] - gamma[[m, b, s]] * gamma[[s, a, m]];
            }
        }
        r
    })
}

/// Ricci tensor of a connection given as jets over the base coordinates
/// (order at least one).
pub fn ricci_of_connection(gamma: &Array3<Jet>) -> Result<Array2<f64>> {
    let n = gamma.shape()[0];
    let order = gamma[[0, 0, 0]].order();
    if order < 1 {
        return Err(Error::JetOrder {
            requested: 1,
            max: order,
        });
    }
    let values = gamma.map(Jet::value);
    let gradient = Array4::from_shape_fn((n, n, n, n), |(a, b, c, m)| {
        gamma[[a, b, c]].derivative(m).value()
    });
    Ok(ricci_from_parts(&values, &gradient))
}

/// Ricci tensor of the connection field `field` at `x`.
pub fn ricci_affine<F>(x: &[f64], field: F) -> Result<Array2<f64>>
where
    F: Fn(&[Jet]) -> Result<Array3<Jet>>,
{
    let active: Vec<usize> = (0..x.len()).collect();
    let xj = jets::seed(x, &active, 1)?;
    ricci_of_connection(&field(&xj)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstructionReport {
    pub verdict: BerwaldVerdict,
    pub ricci: Array2<f64>,
    /// `(R − Rᵀ) / 2`.
    pub skew: Array2<f64>,
    pub skew_max_abs: f64,
    pub metrizability_necessary_condition_met: bool,
    /// `max_k max|−R^c_dab ẋ_k^d C_c(x,ẋ_k) − 2 skew_ab|`.
    pub phi_constancy_residual: f64,
    /// Scaled difference between the affine Ricci tensor and the hh-Ricci
    /// tensor at the seed direction.
    pub hh_ricci_residual: f64,
}

/// Ricci tensor of the induced affine connection and its skew part.
pub fn obstruction<R: Rng + ?Sized>(
    def: &LagrangianDef,
    x: &[f64],
    sampling: &DirectionSampling,
    tol: &Tolerances,
    rng: &mut R,
) -> Result<ObstructionReport> {
    let verdict = detect_berwald(def, x, sampling, tol, rng)?;
    if !verdict.is_berwald {
        return Err(Error::NotBerwald {
            deviation: verdict.max_gamma_deviation,
        });
    }
    obstruction_for(def, x, verdict, tol)
}

/// [`obstruction`] for an already computed Berwald verdict.
pub fn obstruction_for(
    def: &LagrangianDef,
    x: &[f64],
    verdict: BerwaldVerdict,
    tol: &Tolerances,
) -> Result<ObstructionReport> {
    let conn = &verdict.affine_connection;
    let ricci = ricci_affine(x, conn.as_field())?;
    let skew = (&ricci - &ricci.t()) * 0.5;
    let skew_max_abs = linalg::max_abs(skew.iter());
    let ricci_scale = linalg::max_abs(ricci.iter()).max(1.0);

    let riemann = conn.riemann();
    let mut phi_residual = 0.0f64;
    let mut hh_ricci_residual = 0.0;
    for (k, xdot) in verdict.directions.iter().enumerate() {
        let s = TangentSample::new(x.to_vec(), xdot.clone())?;
        let geom = LocalGeometry::new(def, &s, 4, tol)?;
        let cartan = geom.cartan_trace();
        let phi = crate::geometry::curvature_contraction(&riemann, xdot, &cartan);
        let r = linalg::max_abs((&phi + &(&skew * 2.0)).iter());
        phi_residual = phi_residual.max(r);
        if k == 0 {
            let hh = geom.connection()?.curvature(&geom)?;
            hh_ricci_residual = crate::geometry::scaled_residual(hh.ricci.iter(), ricci.iter());
        }
    }
    Ok(ObstructionReport {
        skew_max_abs,
        metrizability_necessary_condition_met: skew_max_abs < tol.sym * ricci_scale,
        verdict,
        ricci,
        skew,
        phi_constancy_residual: phi_residual,
        hh_ricci_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonMetricityReport {
    pub g: Array2<f64>,
    /// `D = Γ − γ[g]`.
    pub d: Array3<f64>,
    /// `Q_abc = −D^s_ac g_sb − D^s_ab g_sc`.
    pub q: Array3<f64>,
    pub q_norm: f64,
    /// `max|∇_a g_bc − Q_abc|` with `∇g` computed directly from `Γ`.
    pub direct_residual: f64,
}

/// Non-metricity of `conn` with respect to the reference metric `g_ref`.
pub fn nonmetricity(
    conn: &AffineConnection,
    g_ref: &[Vec<Expr>],
    params: &Params,
) -> Result<NonMetricityReport> {
    let x = &conn.x;
    let n = x.len();
    if g_ref.len() != n || g_ref.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension(format!(
            "reference metric must be {n}x{n}"
        )));
    }
    let active: Vec<usize> = (0..n).collect();
    let xj = jets::seed(x, &active, 1)?;
    let gj = metric_jets(g_ref, params, &xj)?;
    let g = linalg::values(&gj);
    crate::alphabeta::check_nondegenerate(&g)?;
    let g_inv = linalg::inverse(&gj)?;
    let lc = christoffel(&gj, &g_inv).map(Jet::value);
    let d = &conn.gamma - &lc;
    let q = Array3::from_shape_fn((n, n, n), |(a, b, c)| {
        (0..n)
            .map(|s| -d[[s, a, c]] * g[[s, b]] - d[[s, a, b]] * g[[s, c]])
            .sum()
    });
    let direct = Array3::from_shape_fn((n, n, n), |(a, b, c)| {
        let mut v = gj[[b, c]].derivative(a).value();
        for s in 0..n {
            v -= conn.gamma[[s, a, b]] * g[[s, c]] + conn.gamma[[s, a, c]] * g[[b, s]];
        }
        v
    });
    Ok(NonMetricityReport {
        q_norm: linalg::max_abs(q.iter()),
        direct_residual: linalg::max_abs((&direct - &q).iter()),
        g,
        d,
        q,
    })
}
