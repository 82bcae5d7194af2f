use ndarray::{Array2, Array3, Array4};

use super::lagrangian::{tangent_jets, LagrangianDef};
use super::{scaled_residual, TangentSample, Tolerances};
use crate::error::{DomainKind, Error, Result};
use crate::jets::Jet;
use crate::linalg;

/// The L-metric `g_ab = ½ ∂̇_a ∂̇_b L` at a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricValue {
    pub g: Array2<f64>,
    pub g_inv: Array2<f64>,
    pub det: f64,
    pub signature: (usize, usize, usize),
    pub eigenvalues: Vec<f64>,
}

impl MetricValue {
    /// Symmetrises `g` and rejects it when any eigenvalue is numerically zero.
    pub fn new(g: &Array2<f64>, tol_degenerate: f64) -> Result<Self> {
        let g = linalg::symmetrize(g);
        let eigenvalues = linalg::symmetric_eigenvalues(&g);
        let signature = linalg::signature(&eigenvalues, tol_degenerate);
        let scale = linalg::max_abs(&eigenvalues);
        if signature.2 > 0 {
            let min = eigenvalues
                .iter()
                .fold(f64::INFINITY, |m, v| m.min(v.abs()));
            return Err(Error::DegenerateMetric {
                min_abs_eigenvalue: min,
                scale,
            });
        }
        let gm = linalg::to_nalgebra(&g);
        let det = gm.determinant();
        let inv = gm.try_inverse().ok_or(Error::Singular)?;
        Ok(Self {
            g_inv: linalg::symmetrize(&linalg::from_nalgebra(&inv)),
            g,
            det,
            signature,
            eigenvalues,
        })
    }

    pub fn scale(&self) -> f64 {
        linalg::max_abs(&self.eigenvalues)
    }
}

/// Jets of `L`, `g` and `g⁻¹` at one sample; the starting point of every
/// other quantity.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    n: usize,
    coords: Vec<Jet>,
    lagrangian: Jet,
    metric: Array2<Jet>,
    metric_inv: Array2<Jet>,
    metric_value: MetricValue,
}

impl LocalGeometry {
    /// Evaluate `L` to `order` (at least 2) and build the metric jets.
    pub fn new(
        def: &LagrangianDef,
        s: &TangentSample,
        order: usize,
        tol: &Tolerances,
    ) -> Result<Self> {
        if order < 2 {
            return Err(Error::JetOrder {
                requested: 2,
                max: order,
            });
        }
        let n = def.dim();
        let coords = tangent_jets(def, s, order)?;
        let lagrangian = def.eval_jets(&coords)?;
        if !lagrangian.is_finite() {
            return Err(Error::domain(DomainKind::NonFinite, "L".into()));
        }
        let first: Vec<Jet> = (0..n).map(|a| lagrangian.derivative(n + a)).collect();
        let mut metric = Array2::from_elem((n, n), lagrangian.zero_like().truncate(order - 2));
        for a in 0..n {
            for b in a..n {
                let h = first[a].derivative(n + b).scale(0.5);
                metric[[a, b]] = h.clone();
                metric[[b, a]] = h;
            }
        }
        let metric_value = MetricValue::new(&linalg::values(&metric), tol.degenerate)?;
        let raw_inv = linalg::inverse(&metric)?;
        let metric_inv = Array2::from_shape_fn((n, n), |(a, b)| {
            (&raw_inv[[a, b]] + &raw_inv[[b, a]]).scale(0.5)
        });
        Ok(Self {
            n,
            coords,
            lagrangian,
            metric,
            metric_inv,
            metric_value,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.lagrangian.order()
    }

    /// Seeded base-point jets `x^a`.
    pub fn x(&self) -> &[Jet] {
        &self.coords[..self.n]
    }

    /// Seeded fibre jets `ẋ^a`.
    pub fn xdot(&self) -> &[Jet] {
        &self.coords[self.n..]
    }

    pub fn xdot_values(&self) -> Vec<f64> {
        self.xdot().iter().map(Jet::value).collect()
    }

    pub fn lagrangian(&self) -> &Jet {
        &self.lagrangian
    }

    pub fn metric(&self) -> &Array2<Jet> {
        &self.metric
    }

    pub fn metric_inv(&self) -> &Array2<Jet> {
        &self.metric_inv
    }

    pub fn metric_value(&self) -> &MetricValue {
        &self.metric_value
    }

    /// `∂_a f`.
    pub fn dx(&self, f: &Jet, a: usize) -> Jet {
        f.derivative(a)
    }

    /// `∂̇_a f`.
    pub fn dv(&self, f: &Jet, a: usize) -> Jet {
        f.derivative(self.n + a)
    }

    /// `G^a = ¼ g^{aq} (ẋ^m ∂_m ∂̇_q L − ∂_q L)`; two orders below `L`.
    pub fn spray(&self) -> Vec<Jet> {
        let n = self.n;
        let l = &self.lagrangian;
        let w: Vec<Jet> = (0..n)
            .map(|q| {
                let dq = self.dv(l, q);
                let mut acc = -&self.dx(l, q);
                for m in 0..n {
                    acc = &acc + &(&self.xdot()[m] * &self.dx(&dq, m));
                }
                acc
            })
            .collect();
        (0..n)
            .map(|a| {
                let mut acc = &self.metric_inv[[a, 0]] * &w[0];
                for q in 1..n {
                    acc = &acc + &(&self.metric_inv[[a, q]] * &w[q]);
                }
                acc.scale(0.25)
            })
            .collect()
    }

    /// Spray, nonlinear connection and Chern–Rund coefficients. Needs `L`
    /// to order 3; with order 4 the coefficients keep their first derivatives.
    pub fn connection(&self) -> Result<ConnectionJets> {
        let n = self.n;
        if self.order() < 3 {
            return Err(Error::JetOrder {
                requested: 3,
                max: self.order(),
            });
        }
        let spray = self.spray();
        let nonlinear = Array2::from_shape_fn((n, n), |(a, b)| self.dv(&spray[a], b));
        let conn = ConnectionJets {
            n,
            spray,
            nonlinear,
            chern_rund: Array3::from_elem((0, 0, 0), self.lagrangian.zero_like()),
        };

        // dg[[b, c, q]] = δ_b g_cq
        let mut dg = Array3::from_elem((n, n, n), self.lagrangian.zero_like());
        for b in 0..n {
            for c in 0..n {
                for q in c..n {
                    let h = conn.horizontal(self, &self.metric[[c, q]], b);
                    dg[[b, q, c]] = h.clone();
                    dg[[b, c, q]] = h;
                }
            }
        }
        let zero = dg[[0, 0, 0]].zero_like();
        let mut gamma = Array3::from_elem((n, n, n), zero.clone());
        for a in 0..n {
            for b in 0..n {
                for c in b..n {
                    let mut acc = zero.clone();
                    for q in 0..n {
                        let bracket = &(&dg[[b, c, q]] + &dg[[c, b, q]]) - &dg[[q, b, c]];
                        acc = &acc + &(&self.metric_inv[[a, q]] * &bracket);
                    }
                    let value = acc.scale(0.5);
                    gamma[[a, c, b]] = value.clone();
                    gamma[[a, b, c]] = value;
                }
            }
        }
        Ok(ConnectionJets {
            chern_rund: gamma,
            ..conn
        })
    }

    /// Cartan tensor `C_abc = ½ ∂̇_a g_bc` (values).
    pub fn cartan_tensor(&self) -> Array3<f64> {
        let n = self.n;
        Array3::from_shape_fn((n, n, n), |(a, b, c)| {
            0.5 * self.dv(&self.metric[[b, c]], a).value()
        })
    }

    /// Cartan trace `C_a = g^{bc} C_abc`.
    pub fn cartan_trace(&self) -> Vec<f64> {
        let n = self.n;
        let c = self.cartan_tensor();
        let ginv = &self.metric_value.g_inv;
        (0..n)
            .map(|a| {
                let mut acc = 0.0;
                for b in 0..n {
                    for q in 0..n {
                        acc += ginv[[b, q]] * c[[a, b, q]];
                    }
                }
                acc
            })
            .collect()
    }
}

/// Connection data as jets.
#[derive(Debug, Clone)]
pub struct ConnectionJets {
    n: usize,
    pub spray: Vec<Jet>,
    /// `nonlinear[[a, b]] = N^a_b = ∂̇_b G^a`.
    pub nonlinear: Array2<Jet>,
    /// `chern_rund[[a, b, c]] = Γ^a_bc`.
    pub chern_rund: Array3<Jet>,
}

impl ConnectionJets {
    /// `δ_a f = ∂_a f − N^b_a ∂̇_b f`.
    pub fn horizontal(&self, geom: &LocalGeometry, f: &Jet, a: usize) -> Jet {
        let mut acc = geom.dx(f, a);
        for b in 0..self.n {
            acc = &acc - &(&self.nonlinear[[b, a]] * &geom.dv(f, b));
        }
        acc
    }

    pub fn value(&self, cartan_trace: Vec<f64>) -> ConnectionValue {
        ConnectionValue {
            spray: self.spray.iter().map(Jet::value).collect(),
            nonlinear: linalg::values(&self.nonlinear),
            chern_rund: self.chern_rund.map(Jet::value),
            cartan_trace,
        }
    }

    /// `grad[[a, b, c, m]] = ∂_m Γ^a_bc` at fixed `ẋ`.
    pub fn chern_rund_x_gradient(&self, geom: &LocalGeometry) -> Array4<f64> {
        let n = self.n;
        Array4::from_shape_fn((n, n, n, n), |(a, b, c, m)| {
            geom.dx(&self.chern_rund[[a, b, c]], m).value()
        })
    }

    /// hh-curvature `R^c_adb = δ_d Γ^c_ab − δ_b Γ^c_ad + Γ^c_ds Γ^s_ab − Γ^c_bs Γ^s_ad`.
    pub fn curvature(&self, geom: &LocalGeometry) -> Result<CurvatureValue> {
        let n = self.n;
        if self.chern_rund[[0, 0, 0]].order() < 1 {
            return Err(Error::JetOrder {
                requested: 4,
                max: geom.order(),
            });
        }
        // dgamma[[c, a, b, d]] = δ_d Γ^c_ab
        let mut dgamma = Array4::<f64>::zeros((n, n, n, n));
        for c in 0..n {
            for a in 0..n {
                for b in a..n {
                    for d in 0..n {
                        let v = self
                            .horizontal(geom, &self.chern_rund[[c, a, b]], d)
                            .value();
                        dgamma[[c, a, b, d]] = v;
                        dgamma[[c, b, a, d]] = v;
                    }
                }
            }
        }
        let gamma = self.chern_rund.map(Jet::value);
        let riemann = Array4::from_shape_fn((n, n, n, n), |(c, a, d, b)| {
            let mut r = dgamma[[c, a, b, d]] - dgamma[[c, a, d, b]];
            for s in 0..n {
                r += gamma[[c, d, s]] * gamma[[s, a, b]] - gamma[[c, b, s]] * gamma[[s, a, d]];
            }
            r
        });
        Ok(CurvatureValue::from_riemann(riemann))
    }
}

/// Spray, nonlinear connection, Chern–Rund coefficients and Cartan trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionValue {
    pub spray: Vec<f64>,
    pub nonlinear: Array2<f64>,
    pub chern_rund: Array3<f64>,
    pub cartan_trace: Vec<f64>,
}

/// hh-curvature with its Ricci contraction.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureValue {
    /// `riemann[[c, a, d, b]] = R^c_adb`.
    pub riemann: Array4<f64>,
    /// `ricci[[a, b]] = R^m_amb`.
    pub ricci: Array2<f64>,
    /// `(R_ab − R_ba) / 2`.
    pub skew_ricci: Array2<f64>,
}

impl CurvatureValue {
    pub fn from_riemann(riemann: Array4<f64>) -> Self {
        let n = riemann.shape()[0];
        let ricci =
            Array2::from_shape_fn((n, n), |(a, b)| (0..n).map(|m| riemann[[m, a, m, b]]).sum());
        let skew_ricci = (&ricci - &ricci.t()) * 0.5;
        Self {
            riemann,
            ricci,
            skew_ricci,
        }
    }
}

/// `K_ab = R^c_dab ẋ^d w_c`.
pub fn curvature_contraction(riemann: &Array4<f64>, xdot: &[f64], w: &[f64]) -> Array2<f64> {
    let n = xdot.len();
    Array2::from_shape_fn((n, n), |(a, b)| {
        let mut acc = 0.0;
        for c in 0..n {
            for d in 0..n {
                acc += riemann[[c, d, a, b]] * xdot[d] * w[c];
            }
        }
        acc
    })
}

/// Scaled residuals of the identities every Finsler geometry satisfies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    /// `g_ab ẋ^a ẋ^b = L`.
    pub euler: f64,
    /// `Γ^a_bc ẋ^b ẋ^c = 2 G^a`.
    pub spray_contraction: f64,
    /// `N^a_b ẋ^b = 2 G^a`.
    pub nonlinear_euler: f64,
    /// `C_abc ẋ^a = 0`.
    pub cartan_contraction: f64,
    /// `R_ab − R_ba = −R^c_dab ẋ^d C_c`.
    pub skew_identity: f64,
    /// `[δ_a, δ_b] f = −R^c_dab ẋ^d ∂̇_c f` for `f = ln √|det g|`.
    pub commutator: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        [
            self.euler,
            self.spray_contraction,
            self.nonlinear_euler,
            self.cartan_contraction,
            self.skew_identity,
            self.commutator,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Everything computed at one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGeometry {
    pub lagrangian: f64,
    pub metric: MetricValue,
    pub connection: ConnectionValue,
    /// `[[a, b, c, m]] = ∂_m Γ^a_bc`.
    pub chern_rund_x_gradient: Array4<f64>,
    pub curvature: CurvatureValue,
    pub residuals: IdentityResiduals,
}

/// `f = ln √|det g|` as a jet; two orders below `L`.
pub fn volume_log(geom: &LocalGeometry) -> Result<Jet> {
    let det = linalg::determinant(geom.metric())?;
    Ok(det.abs()?.ln()?.scale(0.5))
}

/// Full chain at one sample with `L` to order four.
pub fn evaluate(
    def: &LagrangianDef,
    s: &TangentSample,
    tol: &Tolerances,
) -> Result<SampleGeometry> {
    let geom = LocalGeometry::new(def, s, 4, tol)?;
    let conn = geom.connection()?;
    let curvature = conn.curvature(&geom)?;
    let cartan = geom.cartan_trace();
    let residuals = residuals_from(&geom, &conn, &curvature, &cartan)?;
    Ok(SampleGeometry {
        lagrangian: geom.lagrangian().value(),
        metric: geom.metric_value().clone(),
        chern_rund_x_gradient: conn.chern_rund_x_gradient(&geom),
        connection: conn.value(cartan),
        curvature,
        residuals,
    })
}

fn residuals_from(
    geom: &LocalGeometry,
    conn: &ConnectionJets,
    curvature: &CurvatureValue,
    cartan_trace: &[f64],
) -> Result<IdentityResiduals> {
    let n = geom.dim();
    let v = geom.xdot_values();
    let g = &geom.metric_value().g;
    let l = geom.lagrangian().value();

    let mut gvv = 0.0;
    for a in 0..n {
        for b in 0..n {
            gvv += g[[a, b]] * v[a] * v[b];
        }
    }
    let euler = scaled_residual(&[gvv], &[l]);

    let two_g: Vec<f64> = conn.spray.iter().map(|j| 2.0 * j.value()).collect();
    let gamma_vv: Vec<f64> = (0..n)
        .map(|a| {
            let mut acc = 0.0;
            for b in 0..n {
                for c in 0..n {
                    acc += conn.chern_rund[[a, b, c]].value() * v[b] * v[c];
                }
            }
            acc
        })
        .collect();
    let spray_contraction = scaled_residual(&gamma_vv, &two_g);
    let n_v: Vec<f64> = (0..n)
        .map(|a| (0..n).map(|b| conn.nonlinear[[a, b]].value() * v[b]).sum())
        .collect();
    let nonlinear_euler = scaled_residual(&n_v, &two_g);

    let cartan = geom.cartan_tensor();
    let vmax = linalg::max_abs(&v);
    let cscale = (linalg::max_abs(cartan.iter()) * vmax).max(1.0);
    let mut cv = 0.0f64;
    for b in 0..n {
        for c in 0..n {
            let s: f64 = (0..n).map(|a| cartan[[a, b, c]] * v[a]).sum();
            cv = cv.max(s.abs());
        }
    }
    let cartan_contraction = cv / cscale;

    let antisym = &curvature.ricci - &curvature.ricci.t();
    let k = curvature_contraction(&curvature.riemann, &v, cartan_trace);
    let skew_identity = scaled_residual(antisym.iter(), (-&k).iter());

    let f = volume_log(geom)?;
    let commutator = commutator_residual(geom, conn, &curvature.riemann, &f)?;

    Ok(IdentityResiduals {
        euler,
        spray_contraction,
        nonlinear_euler,
        cartan_contraction,
        skew_identity,
        commutator,
    })
}

fn commutator_residual(
    geom: &LocalGeometry,
    conn: &ConnectionJets,
    riemann: &Array4<f64>,
    f: &Jet,
) -> Result<f64> {
    let n = geom.dim();
    if f.order() < 2 {
        return Err(Error::JetOrder {
            requested: 2,
            max: f.order(),
        });
    }
    let first: Vec<Jet> = (0..n).map(|b| conn.horizontal(geom, f, b)).collect();
    let lhs = Array2::from_shape_fn((n, n), |(a, b)| {
        conn.horizontal(geom, &first[b], a).value() - conn.horizontal(geom, &first[a], b).value()
    });
    let grad_v: Vec<f64> = (0..n).map(|c| geom.dv(f, c).value()).collect();
    let rhs = -curvature_contraction(riemann, &geom.xdot_values(), &grad_v);
    Ok(scaled_residual(lhs.iter(), rhs.iter()))
}

/// L-metric at the sample.
pub fn metric(def: &LagrangianDef, s: &TangentSample, tol: &Tolerances) -> Result<MetricValue> {
    Ok(LocalGeometry::new(def, s, 2, tol)?.metric_value().clone())
}

/// Geodesic spray coefficients `G^a`.
pub fn spray(def: &LagrangianDef, s: &TangentSample, tol: &Tolerances) -> Result<Vec<f64>> {
    let geom = LocalGeometry::new(def, s, 2, tol)?;
    Ok(geom.spray().iter().map(Jet::value).collect())
}

/// `N^a_b = ∂̇_b G^a`.
pub fn nonlinear_connection(
    def: &LagrangianDef,
    s: &TangentSample,
    tol: &Tolerances,
) -> Result<Array2<f64>> {
    let geom = LocalGeometry::new(def, s, 3, tol)?;
    let spray = geom.spray();
    let n = geom.dim();
    Ok(Array2::from_shape_fn((n, n), |(a, b)| {
        geom.dv(&spray[a], b).value()
    }))
}

/// Chern–Rund coefficients `Γ^a_bc`.
pub fn chern_rund(def: &LagrangianDef, s: &TangentSample, tol: &Tolerances) -> Result<Array3<f64>> {
    let geom = LocalGeometry::new(def, s, 3, tol)?;
    Ok(geom.connection()?.chern_rund.map(Jet::value))
}

/// Cartan trace `C_a`.
pub fn cartan_trace(def: &LagrangianDef, s: &TangentSample, tol: &Tolerances) -> Result<Vec<f64>> {
    Ok(LocalGeometry::new(def, s, 3, tol)?.cartan_trace())
}

pub fn connection(
    def: &LagrangianDef,
    s: &TangentSample,
    tol: &Tolerances,
) -> Result<ConnectionValue> {
    let geom = LocalGeometry::new(def, s, 3, tol)?;
    let conn = geom.connection()?;
    Ok(conn.value(geom.cartan_trace()))
}

/// `δ_a f` for a scalar field built from the local jets.
pub fn horizontal_derivative<F>(
    def: &LagrangianDef,
    s: &TangentSample,
    field: F,
    tol: &Tolerances,
) -> Result<Vec<f64>>
where
    F: Fn(&LocalGeometry) -> Result<Jet>,
{
    let geom = LocalGeometry::new(def, s, 4, tol)?;
    let conn = geom.connection()?;
    let f = field(&geom)?;
    if f.order() < 1 {
        return Err(Error::JetOrder {
            requested: 1,
            max: f.order(),
        });
    }
    Ok((0..geom.dim())
        .map(|a| conn.horizontal(&geom, &f, a).value())
        .collect())
}

pub fn hh_curvature(
    def: &LagrangianDef,
    s: &TangentSample,
    tol: &Tolerances,
) -> Result<CurvatureValue> {
    let geom = LocalGeometry::new(def, s, 4, tol)?;
    geom.connection()?.curvature(&geom)
}

/// Scaled residual of `[δ_a, δ_b] f = −R^c_dab ẋ^d ∂̇_c f`, maximised over `(a, b)`.
pub fn commutator_check<F>(
    def: &LagrangianDef,
    s: &TangentSample,
    field: F,
    tol: &Tolerances,
) -> Result<f64>
where
    F: Fn(&LocalGeometry) -> Result<Jet>,
{
    let geom = LocalGeometry::new(def, s, 4, tol)?;
    let conn = geom.connection()?;
    let curvature = conn.curvature(&geom)?;
    let f = field(&geom)?;
    commutator_residual(&geom, &conn, &curvature.riemann, &f)
}

pub fn identity_residuals(
    def: &LagrangianDef,
    s: &TangentSample,
    tol: &Tolerances,
) -> Result<IdentityResiduals> {
    Ok(evaluate(def, s, tol)?.residuals)
}
