//! Small dense linear algebra over jets and floats.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::jets::Jet;

/// Inverse of a square jet matrix by Gauss–Jordan elimination with partial
/// pivoting on the values.
pub fn inverse(m: &Array2<Jet>) -> Result<Array2<Jet>> {
    let n = m.nrows();
    let mut a = m.clone();
    let any = &m[[0, 0]];
    let mut inv = Array2::from_shape_fn((n, n), |(i, j)| any.lift(if i == j { 1.0 } else { 0.0 }));
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[[i, col]]
                    .value()
                    .abs()
                    .total_cmp(&a[[j, col]].value().abs())
            })
            .expect("non-empty range");
        if a[[pivot, col]].value() == 0.0 {
            return Err(Error::Singular);
        }
        if pivot != col {
            for k in 0..n {
                a.swap([pivot, k], [col, k]);
                inv.swap([pivot, k], [col, k]);
            }
        }
        let r = a[[col, col]].recip()?;
        for k in 0..n {
            a[[col, k]] = &a[[col, k]] * &r;
            inv[[col, k]] = &inv[[col, k]] * &r;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let factor = a[[i, col]].clone();
            for k in 0..n {
                a[[i, k]] = &a[[i, k]] - &(&factor * &a[[col, k]]);
                inv[[i, k]] = &inv[[i, k]] - &(&factor * &inv[[col, k]]);
            }
        }
    }
    Ok(inv)
}

/// Determinant of a square jet matrix.
pub fn determinant(m: &Array2<Jet>) -> Result<Jet> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut det = m[[0, 0]].lift(1.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[[i, col]]
                    .value()
                    .abs()
                    .total_cmp(&a[[j, col]].value().abs())
            })
            .expect("non-empty range");
        if a[[pivot, col]].value() == 0.0 {
            return Err(Error::Singular);
        }
        if pivot != col {
            for k in 0..n {
                a.swap([pivot, k], [col, k]);
            }
            det = -&det;
        }
        det = &det * &a[[col, col]];
        let r = a[[col, col]].recip()?;
        for i in col + 1..n {
            let factor = &a[[i, col]] * &r;
            for k in col..n {
                a[[i, k]] = &a[[i, k]] - &(&factor * &a[[col, k]]);
            }
        }
    }
    Ok(det)
}

pub fn values(m: &Array2<Jet>) -> Array2<f64> {
    m.map(Jet::value)
}

pub fn to_nalgebra(m: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

pub fn from_nalgebra(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &Array2<f64>) -> Array2<f64> {
    (m + &m.t()) * 0.5
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &Array2<f64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(to_nalgebra(m));
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Signature `(n_plus, n_minus, n_zero)`; eigenvalues with
/// `|λ| <= tol · max|λ|` count as zero.
pub fn signature(eigenvalues: &[f64], tol: f64) -> (usize, usize, usize) {
    let scale = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut sig = (0, 0, 0);
    for &v in eigenvalues {
        if scale == 0.0 || v.abs() <= tol * scale {
            sig.2 += 1;
        } else if v > 0.0 {
            sig.0 += 1;
        } else {
            sig.1 += 1;
        }
    }
    sig
}

pub fn max_abs<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    values.into_iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::seed;

    #[test]
    fn inverse_and_determinant_of_jet_matrix() {
        let v = seed(&[2.0, 0.5], &[0, 1], 2).unwrap();
        let one = v[0].lift(1.0);
        let m = Array2::from_shape_vec(
            (2, 2),
            vec![v[0].clone(), v[1].clone(), v[1].clone(), -&one],
        )
        .unwrap();
        let inv = inverse(&m).unwrap();
        let det = determinant(&m).unwrap();
        // det = -x0 - x1², d/dx1 = -2 x1
        assert!((det.value() + 2.25).abs() < 1e-14);
        assert!((det.partial(&[1]).unwrap() + 1.0).abs() < 1e-14);
        assert!((det.partial(&[1, 1]).unwrap() + 2.0).abs() < 1e-14);
        for i in 0..2 {
            for j in 0..2 {
                let mut s = m[[i, 0]].zero_like();
                for k in 0..2 {
                    s = &s + &(&m[[i, k]] * &inv[[k, j]]);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                for (c, t) in s
                    .coefficients()
                    .iter()
                    .zip(std::iter::once(target).chain(std::iter::repeat(0.0)))
                {
                    assert!((c - t).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn signature_counts() {
        assert_eq!(signature(&[-1.0, -1.0, -1.0, 1.0], 1e-10), (1, 3, 0));
        assert_eq!(signature(&[0.0, 1e-14, 1.0], 1e-10), (1, 0, 2));
    }

    #[test]
    fn singular_jet_matrix() {
        let v = seed(&[1.0], &[0], 1).unwrap();
        let z = v[0].lift(0.0);
        let m = Array2::from_shape_vec((2, 2), vec![z.clone(), z.clone(), z.clone(), v[0].clone()])
            .unwrap();
        assert!(matches!(inverse(&m), Err(Error::Singular)));
    }
}
