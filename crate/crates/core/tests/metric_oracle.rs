//! Pseudo-Riemannian entries against Christoffel symbols and Ricci tensors
//! computed by finite differences of a hand-written metric.

mod common;

use common::{entry, max_abs};
use finsler_core::geometry::{chern_rund, hh_curvature, Tolerances};
use finsler_oracle::fd_partial;
use nalgebra::Matrix4;
use std::convert::Infallible;

type Metric = fn(&[f64]) -> Matrix4<f64>;

fn schwarzschild(x: &[f64]) -> Matrix4<f64> {
    let (r, th) = (x[1], x[2]);
    let f = 1.0 - 2.0 / r;
    Matrix4::from_diagonal(&[f, -1.0 / f, -r * r, -r * r * th.sin().powi(2)].into())
}

fn flrw(x: &[f64]) -> Matrix4<f64> {
    let a2 = x[0].powf(4.0 / 3.0);
    Matrix4::from_diagonal(&[1.0, -a2, -a2, -a2].into())
}

fn christoffel(g: Metric, x: &[f64], step: f64) -> [[[f64; 4]; 4]; 4] {
    let g0 = g(x);
    let inv = g0.try_inverse().unwrap();
    let mut dg = [[[0.0; 4]; 4]; 4];
    for m in 0..4 {
        for a in 0..4 {
            for b in a..4 {
                let comp = |y: &[f64]| Ok::<_, Infallible>(g(y)[(a, b)]);
                let d = fd_partial(comp, x, &[m], Some(step)).unwrap();
                dg[m][a][b] = d;
                dg[m][b][a] = d;
            }
        }
    }
    let mut out = [[[0.0; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                out[a][b][c] = (0..4)
                    .map(|d| 0.5 * inv[(a, d)] * (dg[b][d][c] + dg[c][d][b] - dg[d][b][c]))
                    .sum();
            }
        }
    }
    out
}

/// `R_bd = ∂_a Γ^a_bd − ∂_d Γ^a_ba + Γ^a_ae Γ^e_bd − Γ^a_de Γ^e_ba`
fn ricci(g: Metric, x: &[f64]) -> [[f64; 4]; 4] {
    let inner = 1e-4;
    let outer = 1e-3;
    let gam = christoffel(g, x, inner);
    let dgam = |m: usize, a: usize, b: usize, c: usize| {
        let comp = |y: &[f64]| Ok::<_, Infallible>(christoffel(g, y, inner)[a][b][c]);
        fd_partial(comp, x, &[m], Some(outer)).unwrap()
    };
    let mut out = [[0.0; 4]; 4];
    for b in 0..4 {
        for d in 0..4 {
            let mut r = 0.0;
            for a in 0..4 {
                r += dgam(a, a, b, d) - dgam(d, a, b, a);
                for e in 0..4 {
                    r += gam[a][a][e] * gam[e][b][d] - gam[a][d][e] * gam[e][b][a];
                }
            }
            out[b][d] = r;
        }
    }
    out
}

fn check_connection(name: &str, g: Metric) {
    let e = entry(name);
    for s in &e.default_samples {
        let pipeline = chern_rund(&e.def, s, &Tolerances::default()).unwrap();
        let oracle = christoffel(g, s.x(), 1e-4);
        let scale = max_abs(pipeline.iter()).max(1.0);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let diff = (pipeline[[a, b, c]] - oracle[a][b][c]).abs();
                    assert!(
                        diff < 1e-8 * scale,
                        "{name} Γ^{a}_{b}{c}: {} vs {}",
                        pipeline[[a, b, c]],
                        oracle[a][b][c]
                    );
                }
            }
        }
    }
}

#[test]
fn schwarzschild_connection() {
    check_connection("schwarzschild", schwarzschild);
}

#[test]
fn flrw_connection() {
    check_connection("flrw-matter", flrw);
}

#[test]
fn schwarzschild_is_ricci_flat() {
    let e = entry("schwarzschild");
    for s in &e.default_samples {
        let r = hh_curvature(&e.def, s, &Tolerances::default())
            .unwrap()
            .ricci;
        assert!(max_abs(r.iter()) < 1e-9, "pipeline Ricci {r}");
        let oracle = ricci(schwarzschild, s.x());
        assert!(
            max_abs(oracle.iter().flatten()) < 1e-6,
            "oracle Ricci {oracle:?}"
        );
    }
}

#[test]
fn flrw_ricci_matches_oracle_and_dust_formula() {
    let e = entry("flrw-matter");
    for s in &e.default_samples {
        let r = hh_curvature(&e.def, s, &Tolerances::default())
            .unwrap()
            .ricci;
        let oracle = ricci(flrw, s.x());
        for a in 0..4 {
            for b in 0..4 {
                assert!(
                    (r[[a, b]] - oracle[a][b]).abs() < 1e-6,
                    "R_{a}{b}: {} vs {}",
                    r[[a, b]],
                    oracle[a][b]
                );
            }
        }
        // a = t^(2/3): R_tt = -3 a''/a, R_ii = a a'' + 2 a'^2
        let t = s.x()[0];
        let a = t.powf(2.0 / 3.0);
        let da = 2.0 / 3.0 * t.powf(-1.0 / 3.0);
        let dda = -2.0 / 9.0 * t.powf(-4.0 / 3.0);
        assert!((r[[0, 0]] + 3.0 * dda / a).abs() < 1e-10);
        for i in 1..4 {
            assert!((r[[i, i]] - (a * dda + 2.0 * da * da)).abs() < 1e-10);
        }
    }
}
