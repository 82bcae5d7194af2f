//! Central finite differences with one level of Richardson extrapolation.
//!
//! Used by the test suites as an independent check on the jet engine. Mixed
//! partials are tensor products of one-dimensional central stencils.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("stencil point {point:?} left the domain: {message}")]
    StencilDomain { point: Vec<f64>, message: String },
    #[error("derivative order {0} not supported (1..=4)")]
    Order(usize),
    #[error("variable {index} out of range for a point of dimension {dim}")]
    Dimension { index: usize, dim: usize },
}

/// Base step for a derivative of total order `order`, before scaling by
/// `max(1, |x_i|)`. Higher orders need larger steps to keep cancellation
/// error below the truncation error.
pub fn default_step(order: usize) -> f64 {
    match order {
        0 | 1 => 1e-3,
        2 => 2e-3,
        3 => 5e-3,
        _ => 1e-2,
    }
}

/// Central stencil offsets and weights for the `k`-th derivative, step 1.
fn stencil(k: usize) -> &'static [(i32, f64)] {
    match k {
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => unreachable!("checked by caller"),
    }
}

/// Mixed partial `∂^k f / ∂x_{i1} … ∂x_{ik}` at `point`.
///
/// `multi_index` lists variables with repetition, so `[0, 1, 1]` is
/// `∂³/∂x0∂x1²`. `step` overrides [`default_step`]; either way the step for
/// variable `i` is scaled by `max(1, |x_i|)`. The result is the Richardson
/// combination `(4 D(h/2) − D(h)) / 3`.
pub fn fd_partial<F, E>(
    f: F,
    point: &[f64],
    multi_index: &[usize],
    step: Option<f64>,
) -> Result<f64, OracleError>
where
    F: Fn(&[f64]) -> Result<f64, E>,
    E: std::fmt::Display,
{
    let order = multi_index.len();
    if order == 0 || order > 4 {
        return Err(OracleError::Order(order));
    }
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for &i in multi_index {
        if i >= point.len() {
            return Err(OracleError::Dimension {
                index: i,
                dim: point.len(),
            });
        }
        match counts.iter_mut().find(|(v, _)| *v == i) {
            Some((_, k)) => *k += 1,
            None => counts.push((i, 1)),
        }
    }
    let base = step.unwrap_or_else(|| default_step(order));
    let coarse = difference(&f, point, &counts, base)?;
    let fine = difference(&f, point, &counts, base / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

fn difference<F, E>(
    f: &F,
    point: &[f64],
    counts: &[(usize, usize)],
    base: f64,
) -> Result<f64, OracleError>
where
    F: Fn(&[f64]) -> Result<f64, E>,
    E: std::fmt::Display,
{
    let steps: Vec<f64> = counts
        .iter()
        .map(|&(i, _)| base * point[i].abs().max(1.0))
        .collect();
    let stencils: Vec<&[(i32, f64)]> = counts.iter().map(|&(_, k)| stencil(k)).collect();
    let mut denom = 1.0;
    for (h, &(_, k)) in steps.iter().zip(counts) {
        denom *= h.powi(k as i32);
    }

    let mut total = 0.0;
    let mut idx = vec![0usize; counts.len()];
    let mut x = point.to_vec();
    loop {
        let mut w = 1.0;
        for (d, &j) in idx.iter().enumerate() {
            let (off, weight) = stencils[d][j];
            w *= weight;
            x[counts[d].0] = point[counts[d].0] + f64::from(off) * steps[d];
        }
        let v = f(&x).map_err(|e| OracleError::StencilDomain {
            point: x.clone(),
            message: e.to_string(),
        })?;
        if !v.is_finite() {
            return Err(OracleError::StencilDomain {
                point: x.clone(),
                message: "non-finite value".into(),
            });
        }
        total += w * v;

        let mut d = 0;
        loop {
            if d == idx.len() {
                return Ok(total / denom);
            }
            idx[d] += 1;
            if idx[d] < stencils[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// First derivatives in every variable.
pub fn fd_gradient<F, E>(f: F, point: &[f64]) -> Result<Vec<f64>, OracleError>
where
    F: Fn(&[f64]) -> Result<f64, E>,
    E: std::fmt::Display,
{
    (0..point.len())
        .map(|i| fd_partial(&f, point, &[i], None))
        .collect()
}
