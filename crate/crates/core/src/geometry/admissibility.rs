use super::lagrangian::{tangent_jets, LagrangianDef};
use super::{SignatureConvention, TangentSample, Tolerances};
use crate::error::{DomainKind, Error};
use crate::linalg;

/// Pointwise membership of a sample in the sets `A`, `N`, `A₀` and `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityVerdict {
    pub in_a: bool,
    /// `NaN` when `L` could not be evaluated.
    pub l_value: f64,
    pub in_n: bool,
    pub in_a0: bool,
    pub in_t: bool,
    pub signature: Option<(usize, usize, usize)>,
    pub failure_reason: Option<String>,
}

impl AdmissibilityVerdict {
    fn failed(l_value: f64, signature: Option<(usize, usize, usize)>, reason: String) -> Self {
        Self {
            in_a: false,
            l_value,
            in_n: false,
            in_a0: false,
            in_t: false,
            signature,
            failure_reason: Some(reason),
        }
    }
}

/// Classify a sample. `L` has to be smooth to order four and `g`
/// nondegenerate for the sample to be admissible; every failure is reported
/// through `failure_reason` instead of an error.
pub fn probe_admissibility(
    def: &LagrangianDef,
    s: &TangentSample,
    convention: SignatureConvention,
    tol: &Tolerances,
) -> AdmissibilityVerdict {
    let l = match tangent_jets(def, s, 4).and_then(|c| def.eval_jets(&c)) {
        Ok(l) => l,
        Err(e) => return AdmissibilityVerdict::failed(f64::NAN, None, e.reason_tag()),
    };
    if !l.is_finite() {
        let e = Error::domain(DomainKind::NonFinite, "L".into());
        return AdmissibilityVerdict::failed(f64::NAN, None, e.reason_tag());
    }
    let n = def.dim();
    let g = ndarray::Array2::from_shape_fn((n, n), |(a, b)| {
        0.5 * l.derivative(n + a).derivative(n + b).value()
    });
    let g = linalg::symmetrize(&g);
    let eigenvalues = linalg::symmetric_eigenvalues(&g);
    let signature = linalg::signature(&eigenvalues, tol.degenerate);
    let value = l.value();
    if signature.2 > 0 {
        return AdmissibilityVerdict::failed(value, Some(signature), "degenerate-metric".into());
    }

    let speed2: f64 = s.xdot().iter().map(|v| v * v).sum();
    let in_n = value.abs() < tol.null * linalg::max_abs(&eigenvalues) * speed2;
    let in_a0 = !in_n;
    let lorentzian = match convention {
        SignatureConvention::MostlyMinus => value > 0.0 && signature == (1, n - 1, 0),
        SignatureConvention::MostlyPlus => value < 0.0 && signature == (n - 1, 1, 0),
    };
    AdmissibilityVerdict {
        in_a: true,
        l_value: value,
        in_n,
        in_a0,
        in_t: in_a0 && lorentzian,
        signature: Some(signature),
        failure_reason: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Params;
    use crate::geometry::DslLagrangian;

    fn minkowski() -> LagrangianDef {
        LagrangianDef::Dsl(
            DslLagrangian::parse(4, "xd0^2 - xd1^2 - xd2^2 - xd3^2", &[], Params::new()).unwrap(),
        )
    }

    fn probe(xdot: [f64; 4], conv: SignatureConvention) -> AdmissibilityVerdict {
        let s = TangentSample::new(vec![0.0; 4], xdot.to_vec()).unwrap();
        probe_admissibility(&minkowski(), &s, conv, &Tolerances::default())
    }

    #[test]
    fn timelike_and_null() {
        let t = probe([1.0, 0.0, 0.0, 0.0], SignatureConvention::MostlyMinus);
        assert!(t.in_a && t.in_a0 && t.in_t && !t.in_n);
        let n = probe([1.0, 1.0, 0.0, 0.0], SignatureConvention::MostlyMinus);
        assert!(n.in_a && n.in_n && !n.in_a0 && !n.in_t);
    }

    #[test]
    fn flipped_convention() {
        let t = probe([1.0, 0.0, 0.0, 0.0], SignatureConvention::MostlyPlus);
        assert!(t.in_a0 && !t.in_t);
    }

    #[test]
    fn degenerate_hessian() {
        let def = LagrangianDef::Dsl(DslLagrangian::parse(2, "xd0^2", &[], Params::new()).unwrap());
        let s = TangentSample::new(vec![0.0; 2], vec![1.0, 0.0]).unwrap();
        let v = probe_admissibility(
            &def,
            &s,
            SignatureConvention::MostlyMinus,
            &Tolerances::default(),
        );
        assert!(!v.in_a);
        assert_eq!(v.failure_reason.as_deref(), Some("degenerate-metric"));
    }
}
