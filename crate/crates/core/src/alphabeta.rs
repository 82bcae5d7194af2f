//! The `(α, β)` family `L = α s^{-p} (c + m s)^{p+1}`, `s = β²/α`: Berwald
//! condition, closed forms for the affine connection and its Ricci tensor,
//! and the causal classification by the effective metric `ζ = cα + mβ⊗β`.

use ndarray::{Array2, Array3};

use crate::berwald;
use crate::error::{DomainKind, Error, Result};
use crate::expr::{self, Expr, Params};
use crate::geometry::TangentSample;
use crate::jets::{self, Jet};
use crate::linalg;

/// One member of the family on a single chart.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyInstance {
    pub dim: usize,
    /// Symmetric matrix of expressions in `x`.
    pub alpha: Vec<Vec<Expr>>,
    pub beta: Vec<Expr>,
    pub c: f64,
    pub m: f64,
    pub p: f64,
    /// `H(x)` of the Berwald condition. Fitted pointwise when absent.
    pub h: Option<Expr>,
    pub params: Params,
}

impl FamilyInstance {
    pub fn new(
        alpha: Vec<Vec<Expr>>,
        beta: Vec<Expr>,
        c: f64,
        m: f64,
        p: f64,
        h: Option<Expr>,
        params: Params,
    ) -> Result<Self> {
        let dim = beta.len();
        if dim == 0 {
            return Err(Error::Dimension("beta has no components".into()));
        }
        if alpha.len() != dim || alpha.iter().any(|row| row.len() != dim) {
            return Err(Error::Dimension(format!(
                "alpha must be a {dim}x{dim} matrix"
            )));
        }
        for a in 0..dim {
            for b in 0..a {
                if alpha[a][b] != alpha[b][a] {
                    return Err(Error::Dimension(format!(
                        "alpha is not symmetric at ({a}, {b})"
                    )));
                }
            }
        }
        if ![c, m, p].iter().all(|v| v.is_finite()) {
            return Err(Error::Dimension("c, m and p must be finite".into()));
        }
        let exprs = alpha.iter().flatten().chain(&beta).chain(h.iter());
        for e in exprs {
            if let Some(i) = e.max_coord() {
                if i >= dim {
                    return Err(Error::Dimension(format!(
                        "coordinate x{i} out of range for a {dim}-dimensional chart"
                    )));
                }
            }
            if let Some(name) = e.params().into_iter().find(|k| !params.contains_key(k)) {
                return Err(Error::UnknownParameter(name));
            }
        }
        Ok(Self {
            dim,
            alpha,
            beta,
            c,
            m,
            p,
            h,
            params,
        })
    }

    /// `α_ab(x)` on jets of the base point.
    pub fn alpha_jets(&self, x: &[Jet]) -> Result<Array2<Jet>> {
        metric_jets(&self.alpha, &self.params, x)
    }

    pub fn beta_jets(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        self.beta
            .iter()
            .map(|e| expr::eval(e, x, &self.params))
            .collect()
    }

    /// `L` as a jet; `x` and `xdot` are jets over the same variables.
    ///
    /// Evaluated as `ζ(ẋ,ẋ)^{p+1} (β(ẋ)²)^{-p}`, which agrees with the
    /// `s`-form wherever both are defined and also covers `α(ẋ,ẋ) = 0`.
    pub fn lagrangian(&self, x: &[Jet], xdot: &[Jet]) -> Result<Jet> {
        let alpha = self.alpha_jets(x)?;
        let beta = self.beta_jets(x)?;
        let n = self.dim;
        let mut a2 = xdot[0].zero_like();
        for a in 0..n {
            for b in 0..n {
                a2 = &a2 + &(&alpha[[a, b]] * &(&xdot[a] * &xdot[b]));
            }
        }
        let b1 = jets::dot(&beta, xdot).expect("non-empty");
        let b2 = &b1 * &b1;
        let zeta = &a2.scale(self.c) + &b2.scale(self.m);
        if self.p == 0.0 {
            return Ok(zeta);
        }
        if self.p > 0.0 && b1.value() == 0.0 {
            return Err(Error::domain(DomainKind::Power, "beta(xdot)^(-2p)".into()));
        }
        let head = zeta
            .powf(self.p + 1.0)
            .map_err(|e| relocate(e, "zeta(xdot,xdot)^(p+1)"))?;
        let tail = b2
            .powf(-self.p)
            .map_err(|e| relocate(e, "beta(xdot)^(-2p)"))?;
        Ok(&head * &tail)
    }

    /// Exact-valued `α`, `α⁻¹`, `β`, `β^a`, `α⁻¹(β,β)`, Christoffel symbols and
    /// `∇β` at plain base-point coordinates.
    pub fn fields_at(&self, x: &[f64], order: usize) -> Result<FieldJets> {
        self.check_point(x)?;
        let active: Vec<usize> = (0..self.dim).collect();
        let xj = jets::seed(x, &active, order)?;
        self.fields(&xj)
    }

    /// Same as [`FamilyInstance::fields_at`] on seeded jets (at least order 1).
    pub fn fields(&self, x: &[Jet]) -> Result<FieldJets> {
        let n = self.dim;
        let alpha = self.alpha_jets(x)?;
        check_nondegenerate(&linalg::values(&alpha))?;
        let alpha_inv = linalg::inverse(&alpha)?;
        let beta = self.beta_jets(x)?;
        let beta_up: Vec<Jet> = (0..n)
            .map(|a| jets::dot(alpha_inv.row(a), &beta).expect("non-empty"))
            .collect();
        let q = jets::dot(&beta_up, &beta).expect("non-empty");
        let gamma = christoffel(&alpha, &alpha_inv);
        let nabla_beta = Array2::from_shape_fn((n, n), |(a, b)| {
            let mut acc = beta[b].derivative(a);
            for c in 0..n {
                acc = &acc - &(&gamma[[c, a, b]] * &beta[c]);
            }
            acc
        });
        Ok(FieldJets {
            alpha,
            alpha_inv,
            beta,
            beta_up,
            q,
            gamma,
            nabla_beta,
        })
    }

    /// Bracket multiplying `H` in the Berwald condition:
    /// `[c(1−p) + m q] β_a β_b + c p q α_ab`.
    fn condition_tensor(&self, f: &FieldJets) -> Array2<Jet> {
        let n = self.dim;
        let k = f.q.scale(self.m).add_const(self.c * (1.0 - self.p));
        let cpq = f.q.scale(self.c * self.p);
        Array2::from_shape_fn((n, n), |(a, b)| {
            &(&k * &(&f.beta[a] * &f.beta[b])) + &(&cpq * &f.alpha[[a, b]])
        })
    }

    /// Least-squares `H` for `∇_a β_b = H B_ab` on the given fields, as a jet
    /// one order below the Christoffel symbols.
    fn fit_h(&self, f: &FieldJets) -> Jet {
        let b = self.condition_tensor(f);
        let nb = &f.nabla_beta;
        let bb = jets::dot(b.iter(), b.iter()).expect("non-empty");
        if bb.value() == 0.0 {
            return nb[[0, 0]].zero_like();
        }
        let nbb = jets::dot(nb.iter(), b.iter()).expect("non-empty");
        nbb.checked_div(&bb).expect("nonzero denominator")
    }

    /// `H` on jets: the expression when given, the pointwise fit otherwise.
    pub fn h_jet(&self, x: &[Jet], fields: &FieldJets) -> Result<Jet> {
        match &self.h {
            Some(e) => expr::eval(e, x, &self.params),
            None => Ok(self.fit_h(fields)),
        }
    }

    /// Fit the Berwald condition at `x`.
    pub fn check_berwald_condition(&self, x: &[f64]) -> Result<BerwaldFit> {
        let f = self.fields_at(x, 2)?;
        let h = self.fit_h(&f);
        let b = self.condition_tensor(&f);
        let residual = f
            .nabla_beta
            .iter()
            .zip(b.iter())
            .map(|(nb, bb)| (nb.value() - h.value() * bb.value()).abs())
            .fold(0.0, f64::max);
        Ok(BerwaldFit {
            residual,
            h: h.value(),
            dh: h.gradient(),
        })
    }

    /// Affine connection `Γ = γ − H (cp(δβ + βδ) − β^a (m ββ + cp α))` on jets.
    pub fn closed_form_connection_jets(&self, x: &[Jet]) -> Result<Array3<Jet>> {
        let f = self.fields(x)?;
        let h = self.h_jet(x, &f)?;
        Ok(self.connection_from(&f, &h))
    }

    fn connection_from(&self, f: &FieldJets, h: &Jet) -> Array3<Jet> {
        let n = self.dim;
        let cp = self.c * self.p;
        Array3::from_shape_fn((n, n, n), |(a, b, c)| {
            let mut bracket = &(&f.beta[b] * &f.beta[c]).scale(self.m) + &f.alpha[[b, c]].scale(cp);
            bracket = -&(&f.beta_up[a] * &bracket);
            if a == b {
                bracket = &bracket + &f.beta[c].scale(cp);
            }
            if a == c {
                bracket = &bracket + &f.beta[b].scale(cp);
            }
            &f.gamma[[a, b, c]] - &(h * &bracket)
        })
    }

    pub fn closed_form_connection(&self, x: &[f64]) -> Result<Array3<f64>> {
        self.check_point(x)?;
        let active: Vec<usize> = (0..self.dim).collect();
        let xj = jets::seed(x, &active, 1)?;
        Ok(self.closed_form_connection_jets(&xj)?.map(Jet::value))
    }

    /// `G^a = ½ Γ^a_bc ẋ^b ẋ^c` with the closed-form connection.
    pub fn closed_form_spray(&self, s: &TangentSample) -> Result<Vec<f64>> {
        let gamma = self.closed_form_connection(s.x())?;
        let v = s.xdot();
        let n = self.dim;
        Ok((0..n)
            .map(|a| {
                let mut acc = 0.0;
                for b in 0..n {
                    for c in 0..n {
                        acc += gamma[[a, b, c]] * v[b] * v[c];
                    }
                }
                0.5 * acc
            })
            .collect())
    }

    /// Closed-form Ricci tensor of the affine connection, its skew part and
    /// the scalar `f = ½(4cp − m α⁻¹(β,β))`. The displayed formula is the
    /// four-dimensional one.
    pub fn closed_form_ricci(&self, x: &[f64]) -> Result<ClosedFormRicci> {
        if self.dim != 4 {
            return Err(Error::Unsupported(format!(
                "closed-form Ricci tensor is only available in dimension 4, not {}",
                self.dim
            )));
        }
        self.check_point(x)?;
        let n = self.dim;
        let active: Vec<usize> = (0..n).collect();
        let xj = jets::seed(x, &active, 2)?;
        let f = self.fields(&xj)?;
        let h = self.h_jet(&xj, &f)?;
        let ricci_gamma = berwald::ricci_of_connection(&f.gamma)?;

        let (c, m, p) = (self.c, self.m, self.p);
        let cp = c * p;
        let q = f.q.value();
        let hv = h.value();
        let dh = h.gradient();
        let beta: Vec<f64> = f.beta.iter().map(Jet::value).collect();
        let beta_up: Vec<f64> = f.beta_up.iter().map(Jet::value).collect();
        let alpha = linalg::values(&f.alpha);
        let beta_dh: f64 = (0..n).map(|a| beta_up[a] * dh[a]).sum();

        let ricci = Array2::from_shape_fn((n, n), |(b, d)| {
            ricci_gamma[[b, d]]
                + cp * alpha[[b, d]] * (hv * hv * q * (c + 3.0 * cp + m * q) + beta_dh)
                + beta[b] * beta[d] * (2.0 * cp * hv * hv * (c + m * q) + m * beta_dh)
                - beta[b] * dh[d] * (m * q - 3.0 * cp)
                - cp * beta[d] * dh[b]
        });
        let f_scalar = 0.5 * (4.0 * cp - m * q);
        let wedge = Array2::from_shape_fn((n, n), |(a, b)| beta[a] * dh[b] - beta[b] * dh[a]);
        let skew = &wedge * f_scalar;
        Ok(ClosedFormRicci {
            ricci,
            skew,
            f: f_scalar,
            beta_wedge_dh: wedge,
            h: hv,
            dh,
        })
    }

    /// Causal type of the instance at the sample's base point.
    pub fn classify_causal(&self, s: &TangentSample, tol_degenerate: f64) -> Result<CausalClass> {
        let x = s.x();
        let f = self.fields_at(x, 1)?;
        let n = self.dim;
        let alpha = linalg::values(&f.alpha);
        let beta: Vec<f64> = f.beta.iter().map(Jet::value).collect();
        let zeta = Array2::from_shape_fn((n, n), |(a, b)| {
            self.c * alpha[[a, b]] + self.m * beta[a] * beta[b]
        });
        let det_zeta = linalg::to_nalgebra(&zeta).determinant();
        let det_alpha = linalg::to_nalgebra(&alpha).determinant();
        let det_formula = self.c.powi(n as i32 - 1) * det_alpha * (self.c + self.m * f.q.value());
        let zeta_signature =
            linalg::signature(&linalg::symmetric_eigenvalues(&zeta), tol_degenerate);
        let p_case = PCase::of(self.p);
        let lorentzian = zeta_signature.2 == 0 && zeta_signature.0.min(zeta_signature.1) == 1;
        let det_ok = if n == 4 { det_zeta < 0.0 } else { true };
        let viable = !matches!(p_case, PCase::PLtM1) && self.p != -1.0 && lorentzian && det_ok;
        Ok(CausalClass {
            p_case,
            det_zeta,
            det_formula,
            zeta_signature,
            viable,
        })
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "base point has {} components, chart {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }
}

fn relocate(err: Error, location: &str) -> Error {
    match err {
        Error::Domain { kind, .. } => Error::domain(kind, location.to_string()),
        other => other,
    }
}

/// Jets of the background data of a family instance.
#[derive(Debug, Clone)]
pub struct FieldJets {
    pub alpha: Array2<Jet>,
    pub alpha_inv: Array2<Jet>,
    pub beta: Vec<Jet>,
    /// `β^a = α^{ab} β_b`.
    pub beta_up: Vec<Jet>,
    /// `α⁻¹(β,β)`.
    pub q: Jet,
    /// Christoffel symbols of `α`, `gamma[[a, b, c]] = γ^a_bc`.
    pub gamma: Array3<Jet>,
    /// `nabla_beta[[a, b]] = ∇_a β_b`.
    pub nabla_beta: Array2<Jet>,
}

/// Result of fitting `∇_a β_b = H B_ab` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerwaldFit {
    /// Max-abs residual of the condition with the fitted `H`.
    pub residual: f64,
    pub h: f64,
    /// `∂_a H` of the fit, from fitting on jets of the base point.
    pub dh: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormRicci {
    pub ricci: Array2<f64>,
    /// `f (β_a ∂_b H − β_b ∂_a H)`.
    pub skew: Array2<f64>,
    pub f: f64,
    pub beta_wedge_dh: Array2<f64>,
    pub h: f64,
    pub dh: Vec<f64>,
}

impl ClosedFormRicci {
    /// Non-metrizable when `f ≠ 0` and `β ∧ dH ≠ 0`, both above `tol`.
    pub fn proves_non_metrizable(&self, tol: f64) -> bool {
        self.f.abs() > tol && linalg::max_abs(self.beta_wedge_dh.iter()) > tol
    }
}

/// Range of the exponent `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PCase {
    PGt0,
    PBetween,
    PLtM1,
    /// `p = 0` or `p = −1`.
    Boundary,
}

impl PCase {
    pub fn of(p: f64) -> Self {
        if p > 0.0 {
            PCase::PGt0
        } else if p < -1.0 {
            PCase::PLtM1
        } else if p < 0.0 && p > -1.0 {
            PCase::PBetween
        } else {
            PCase::Boundary
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            PCase::PGt0 => "p_gt_0",
            PCase::PBetween => "p_between",
            PCase::PLtM1 => "p_lt_m1",
            PCase::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalClass {
    pub p_case: PCase,
    /// Numerical determinant of `ζ = cα + mβ⊗β`.
    pub det_zeta: f64,
    /// `c^{n−1} det α (c + m α⁻¹(β,β))`.
    pub det_formula: f64,
    pub zeta_signature: (usize, usize, usize),
    pub viable: bool,
}

/// Matrix of jets from a symmetric expression matrix.
pub fn metric_jets(exprs: &[Vec<Expr>], params: &Params, x: &[Jet]) -> Result<Array2<Jet>> {
    let n = exprs.len();
    let mut out = Array2::from_elem((n, n), x[0].zero_like());
    for a in 0..n {
        for b in a..n {
            let v = expr::eval(&exprs[a][b], x, params)?;
            out[[b, a]] = v.clone();
            out[[a, b]] = v;
        }
    }
    Ok(out)
}

/// Levi-Civita symbols `γ^a_bc = ½ g^{ad}(∂_b g_dc + ∂_c g_db − ∂_d g_bc)`; the
/// first `n` jet variables are the base coordinates.
pub fn christoffel(g: &Array2<Jet>, g_inv: &Array2<Jet>) -> Array3<Jet> {
    let n = g.nrows();
    let dg = Array3::from_shape_fn((n, n, n), |(k, a, b)| g[[a, b]].derivative(k));
    let zero = dg[[0, 0, 0]].zero_like();
    let mut out = Array3::from_elem((n, n, n), zero.clone());
    for a in 0..n {
        for b in 0..n {
            for c in b..n {
                let mut acc = zero.clone();
                for d in 0..n {
                    let t = &(&dg[[b, d, c]] + &dg[[c, d, b]]) - &dg[[d, b, c]];
                    acc = &acc + &(&g_inv[[a, d]] * &t);
                }
                let v = acc.scale(0.5);
                out[[a, c, b]] = v.clone();
                out[[a, b, c]] = v;
            }
        }
    }
    out
}

pub(crate) fn check_nondegenerate(g: &Array2<f64>) -> Result<()> {
    let ev = linalg::symmetric_eigenvalues(&linalg::symmetrize(g));
    let scale = linalg::max_abs(&ev);
    let min = ev.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if scale == 0.0 || min <= 1e-12 * scale {
        return Err(Error::DegenerateMetric {
            min_abs_eigenvalue: min,
            scale,
        });
    }
    Ok(())
}
