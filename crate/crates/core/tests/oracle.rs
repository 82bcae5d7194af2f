//! Jet derivatives of catalog Lagrangians and connections against the
//! finite-difference oracle.

mod common;

use common::{all_entries, close, order_scale};
use finsler_core::catalog::CatalogEntry;
use finsler_core::geometry::{chern_rund, eval_l, LocalGeometry, TangentSample, Tolerances};
use finsler_oracle::fd_partial;
use proptest::prelude::*;
use std::sync::LazyLock;

static ENTRIES: LazyLock<Vec<CatalogEntry>> = LazyLock::new(all_entries);

fn multi_index() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..8usize, 1..=4).prop_map(|mut v| {
        v.sort();
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lagrangian_jets_match_oracle(e in 0..8usize, k in 0..3usize, idx in multi_index()) {
        let entry = &ENTRIES[e];
        let s = &entry.default_samples[k % entry.default_samples.len()];
        let jet = eval_l(&entry.def, s, 4).unwrap();
        let point: Vec<f64> = s.x().iter().chain(s.xdot()).copied().collect();
        let f = |y: &[f64]| entry.def.eval_f64(&y[..4], &y[4..]);
        let fd = fd_partial(f, &point, &idx, None).unwrap();
        let jv = jet.partial(&idx).unwrap();
        let tol = if idx.len() <= 2 { 1e-6 } else { 1e-4 };
        // errors are measured against the size of the derivative tensor of that order
        let scale = order_scale(&jet, 8, idx.len());
        prop_assert!((jv - fd).abs() <= tol * scale, "{} {idx:?}: jet {jv} fd {fd} scale {scale}", entry.name);
    }
}

#[test]
fn connection_gradient_matches_oracle() {
    let tol = Tolerances::default();
    for entry in all_entries() {
        for s in &entry.default_samples {
            let geom = LocalGeometry::new(&entry.def, s, 4, &tol).unwrap();
            let grad = geom.connection().unwrap().chern_rund_x_gradient(&geom);
            for (a, b, c) in [(0, 0, 0), (0, 0, 2), (2, 0, 0), (1, 0, 3), (1, 1, 1)] {
                for m in 0..4 {
                    let comp = |y: &[f64]| -> finsler_core::Result<f64> {
                        let t = TangentSample::new(y.to_vec(), s.xdot().to_vec())?;
                        Ok(chern_rund(&entry.def, &t, &tol)?[[a, b, c]])
                    };
                    let fd = fd_partial(comp, s.x(), &[m], Some(1e-4)).unwrap();
                    let jv = grad[[a, b, c, m]];
                    assert!(
                        close(jv, fd, 1e-6),
                        "{} ∂_{m}Γ^{a}_{b}{c}: jet {jv} fd {fd}",
                        entry.name
                    );
                }
            }
        }
    }
}
