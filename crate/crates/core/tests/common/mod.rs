#![allow(dead_code)]

use finsler_core::catalog::{self, CatalogEntry, Overrides};
use finsler_core::geometry::{
    probe_admissibility, LagrangianDef, SignatureConvention, TangentSample, Tolerances,
};
use finsler_core::jets::Jet;

pub fn entry(name: &str) -> CatalogEntry {
    catalog::get(name, &Overrides::default()).unwrap()
}

pub fn counterexample(phi: &str, c: f64, m: f64, p: f64) -> CatalogEntry {
    let o = Overrides {
        c: Some(c),
        m: Some(m),
        p: Some(p),
        phi: Some(phi.to_string()),
    };
    catalog::get("szabo-counterexample", &o).unwrap()
}

/// Every catalog entry with its defaults, plus a few counterexample variants.
pub fn all_entries() -> Vec<CatalogEntry> {
    let mut v: Vec<CatalogEntry> = catalog::NAMES.iter().map(|n| entry(n)).collect();
    v.push(counterexample("y", 2.0, 1.0, 3.0));
    v.push(counterexample("x + 2*y", 1.0, -1.0, 0.5));
    v
}

pub fn admissible(def: &LagrangianDef, s: &TangentSample) -> bool {
    probe_admissibility(
        def,
        s,
        SignatureConvention::default(),
        &Tolerances::default(),
    )
    .in_a0
}

/// `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn max_abs<'a>(v: impl IntoIterator<Item = &'a f64>) -> f64 {
    v.into_iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn max_diff<'a>(
    a: impl IntoIterator<Item = &'a f64>,
    b: impl IntoIterator<Item = &'a f64>,
) -> f64 {
    a.into_iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Sorted multi-indices of length `order` over `vars` variables.
pub fn multi_indices(vars: usize, order: usize) -> Vec<Vec<usize>> {
    if order == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for head in multi_indices(vars, order - 1) {
        let start = head.last().copied().unwrap_or(0);
        for v in start..vars {
            let mut idx = head.clone();
            idx.push(v);
            out.push(idx);
        }
    }
    out
}

/// `max(1, max |∂^α f|)` over all partials of the given order.
pub fn order_scale(jet: &Jet, vars: usize, order: usize) -> f64 {
    multi_indices(vars, order)
        .iter()
        .map(|i| jet.partial(i).unwrap().abs())
        .fold(1.0, f64::max)
}
