//! Truncated multivariate Taylor arithmetic ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients of a function of `nvars`
//! variables up to a total degree `order <= MAX_ORDER`. Coefficients are the
//! Taylor coefficients, not the partial derivatives: the monomial
//! `x^α = Π x_i^{α_i}` carries `∂^α f / α!`. [`Jet::partial`] converts back.
//!
//! Arithmetic between jets of different orders truncates to the smaller
//! order, so a chain of differentiations can be tracked without bookkeeping
//! at the call sites: [`Jet::derivative`] lowers the order by one.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{DomainKind, Error, Result};

/// Highest total degree carried by any jet.
pub const MAX_ORDER: usize = 4;

/// Monomial enumeration and product tables for a fixed number of variables.
///
/// Monomials are graded: every monomial of degree `d` comes before any of
/// degree `d + 1`, so the jet of order `k` is a prefix of the jet of order
/// `k + 1` and truncation is a slice.
#[derive(Debug)]
pub struct Layout {
    nvars: usize,
    exponents: Vec<Vec<u8>>,
    /// `ends[d]` = number of monomials of degree `<= d`.
    ends: [usize; MAX_ORDER + 1],
    /// Product triples `(i, j, k)` with `x^i x^j = x^k`, sorted by `deg(k)`.
    products: Vec<(u32, u32, u32)>,
    /// `product_ends[d]` = number of triples with result degree `<= d`.
    product_ends: [usize; MAX_ORDER + 1],
    /// `raise[v][m]` = index of `m + e_v`, `u32::MAX` when it would exceed `MAX_ORDER`.
    raise: Vec<Vec<u32>>,
    index: HashMap<Vec<u8>, usize>,
}

impl Layout {
    fn build(nvars: usize) -> Self {
        let mut exponents: Vec<Vec<u8>> = Vec::new();
        let mut ends = [0usize; MAX_ORDER + 1];
        for (d, end) in ends.iter_mut().enumerate() {
            let mut current = vec![0u8; nvars];
            enumerate_degree(nvars, d as u8, 0, &mut current, &mut exponents);
            *end = exponents.len();
        }
        let degree: Vec<u8> = exponents.iter().map(|e| e.iter().sum()).collect();
        let index: HashMap<Vec<u8>, usize> = exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();

        let mut products = Vec::new();
        for (i, ei) in exponents.iter().enumerate() {
            for (j, ej) in exponents.iter().enumerate() {
                if usize::from(degree[i] + degree[j]) > MAX_ORDER {
                    continue;
                }
                let sum: Vec<u8> = ei.iter().zip(ej).map(|(a, b)| a + b).collect();
                let k = index[&sum];
                products.push((i as u32, j as u32, k as u32));
            }
        }
        products.sort_by_key(|&(_, _, k)| degree[k as usize]);
        let mut product_ends = [0usize; MAX_ORDER + 1];
        for (d, end) in product_ends.iter_mut().enumerate() {
            *end = products
                .iter()
                .take_while(|&&(_, _, k)| usize::from(degree[k as usize]) <= d)
                .count();
        }

        let raise = (0..nvars)
            .map(|v| {
                exponents
                    .iter()
                    .map(|e| {
                        let mut up = e.clone();
                        up[v] += 1;
                        index.get(&up).map_or(u32::MAX, |&k| k as u32)
                    })
                    .collect()
            })
            .collect();

        Self {
            nvars,
            exponents,
            ends,
            products,
            product_ends,
            raise,
            index,
        }
    }

    /// Shared layout for `nvars` variables.
    pub fn for_vars(nvars: usize) -> Arc<Layout> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Layout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry(nvars)
            .or_insert_with(|| Arc::new(Layout::build(nvars)))
            .clone()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Number of coefficients of a jet of the given order.
    pub fn len(&self, order: usize) -> usize {
        self.ends[order]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn exponent(&self, monomial: usize) -> &[u8] {
        &self.exponents[monomial]
    }

    pub fn monomial(&self, exponent: &[u8]) -> Option<usize> {
        self.index.get(exponent).copied()
    }
}

fn enumerate_degree(
    nvars: usize,
    left: u8,
    pos: usize,
    current: &mut [u8],
    out: &mut Vec<Vec<u8>>,
) {
    if nvars == 0 {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos == nvars - 1 {
        current[pos] = left;
        out.push(current.to_vec());
        current[pos] = 0;
        return;
    }
    for k in (0..=left).rev() {
        current[pos] = k;
        enumerate_degree(nvars, left - k, pos + 1, current, out);
    }
    current[pos] = 0;
}

/// Truncated Taylor polynomial in the variables of a [`Layout`].
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.layout.nvars)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.layout.nvars == other.layout.nvars
            && self.order == other.order
            && self.coeffs == other.coeffs
    }
}

/// One jet per input value; the variables listed in `active` become the jet
/// variables (in that order), everything else is held constant.
pub fn seed(values: &[f64], active: &[usize], order: usize) -> Result<Vec<Jet>> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::JetOrder {
            requested: order,
            max: MAX_ORDER,
        });
    }
    if let Some(&bad) = active.iter().find(|&&i| i >= values.len()) {
        return Err(Error::Dimension(format!(
            "active variable {bad} out of range for {} values",
            values.len()
        )));
    }
    let layout = Layout::for_vars(active.len());
    Ok(values
        .iter()
        .enumerate()
        .map(|(i, &v)| match active.iter().position(|&a| a == i) {
            Some(slot) => Jet::variable(&layout, order, v, slot),
            None => Jet::constant(&layout, order, v),
        })
        .collect())
}

impl Jet {
    pub fn constant(layout: &Arc<Layout>, order: usize, value: f64) -> Self {
        let mut coeffs = vec![0.0; layout.len(order)];
        coeffs[0] = value;
        Self {
            layout: layout.clone(),
            order,
            coeffs,
        }
    }

    pub fn variable(layout: &Arc<Layout>, order: usize, value: f64, slot: usize) -> Self {
        let mut jet = Self::constant(layout, order, value);
        if order >= 1 {
            jet.coeffs[1 + slot] = 1.0;
        }
        jet
    }

    /// Constant with the same layout and order as `self`.
    pub fn lift(&self, value: f64) -> Self {
        Self::constant(&self.layout, self.order, value)
    }

    pub fn zero_like(&self) -> Self {
        self.lift(0.0)
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    /// Raw Taylor coefficients in graded monomial order.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor coefficient of the monomial with the given exponent vector.
    pub fn coefficient(&self, exponent: &[u8]) -> Option<f64> {
        let m = self.layout.monomial(exponent)?;
        self.coeffs.get(m).copied()
    }

    /// Mixed partial `∂^k f / ∂x_{i1} … ∂x_{ik}` at the expansion point.
    ///
    /// `vars` lists variable slots with repetition, e.g. `[0, 1, 1]` for
    /// `∂³/∂x0∂x1²`. The result is the stored Taylor coefficient times
    /// `Π α_i!`.
    pub fn partial(&self, vars: &[usize]) -> Result<f64> {
        if vars.len() > self.order {
            return Err(Error::JetOrder {
                requested: vars.len(),
                max: self.order,
            });
        }
        let mut exponent = vec![0u8; self.layout.nvars];
        for &v in vars {
            if v >= self.layout.nvars {
                return Err(Error::Dimension(format!(
                    "variable {v} out of range for a jet in {} variables",
                    self.layout.nvars
                )));
            }
            exponent[v] += 1;
        }
        let m = self
            .layout
            .monomial(&exponent)
            .expect("exponent within the layout");
        let factor: f64 = exponent.iter().map(|&a| factorial(a)).product();
        Ok(self.coeffs[m] * factor)
    }

    /// Gradient of the value with respect to every jet variable.
    pub fn gradient(&self) -> Vec<f64> {
        assert!(self.order >= 1, "gradient of an order-0 jet");
        self.coeffs[1..=self.layout.nvars].to_vec()
    }

    /// Truncate to a lower order.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self {
            layout: self.layout.clone(),
            order,
            coeffs: self.coeffs[..self.layout.len(order)].to_vec(),
        }
    }

    /// Jet of `∂f/∂x_var`, one order lower.
    ///
    /// # Panics
    ///
    /// Panics on an order-0 jet.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(self.order >= 1, "derivative of an order-0 jet");
        let order = self.order - 1;
        let n = self.layout.len(order);
        let raise = &self.layout.raise[var];
        let coeffs = (0..n)
            .map(|m| {
                let up = raise[m] as usize;
                let mult = f64::from(self.layout.exponents[m][var]) + 1.0;
                mult * self.coeffs[up]
            })
            .collect();
        Self {
            layout: self.layout.clone(),
            order,
            coeffs,
        }
    }

    fn check_layout(&self, other: &Self) {
        assert_eq!(
            self.layout.nvars, other.layout.nvars,
            "jets over different variable sets"
        );
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            layout: self.layout.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    pub fn add_const(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += k;
        out
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        self.check_layout(other);
        let order = self.order.min(other.order);
        let n = self.layout.len(order);
        Self {
            layout: self.layout.clone(),
            order,
            coeffs: (0..n).map(|i| f(self.coeffs[i], other.coeffs[i])).collect(),
        }
    }

    fn product(&self, other: &Self) -> Self {
        self.check_layout(other);
        let order = self.order.min(other.order);
        let mut coeffs = vec![0.0; self.layout.len(order)];
        for &(i, j, k) in &self.layout.products[..self.layout.product_ends[order]] {
            coeffs[k as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
        }
        Self {
            layout: self.layout.clone(),
            order,
            coeffs,
        }
    }

    /// `Σ_j t_j h^j` where `h = self - value`; `taylor[j] = f^{(j)}(value) / j!`.
    pub fn compose(&self, taylor: &[f64]) -> Self {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let top = self.order.min(taylor.len() - 1);
        let mut acc = self.lift(taylor[top]);
        for j in (0..top).rev() {
            acc = acc.product(&h).add_const(taylor[j]);
        }
        acc
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        let t: Vec<f64> = (0..=self.order).map(|j| e / factorial(j as u8)).collect();
        self.compose(&t)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let t: Vec<f64> = (0..=self.order)
            .map(|j| cycle[j % 4] / factorial(j as u8))
            .collect();
        self.compose(&t)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let t: Vec<f64> = (0..=self.order)
            .map(|j| cycle[j % 4] / factorial(j as u8))
            .collect();
        self.compose(&t)
    }

    pub fn ln(&self) -> Result<Self> {
        let a = self.value();
        if !(a > 0.0) {
            return Err(Error::domain(DomainKind::Log, format!("ln({a})")));
        }
        let mut t = vec![a.ln()];
        for j in 1..=self.order {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            t.push(sign / (j as f64 * a.powi(j as i32)));
        }
        Ok(self.compose(&t))
    }

    pub fn sqrt(&self) -> Result<Self> {
        let a = self.value();
        if a < 0.0 || (a == 0.0 && self.order > 0) {
            return Err(Error::domain(DomainKind::Sqrt, format!("sqrt({a})")));
        }
        Ok(self.compose(&power_series(a, 0.5, self.order)))
    }

    pub fn abs(&self) -> Result<Self> {
        let a = self.value();
        if a == 0.0 && self.order > 0 {
            return Err(Error::domain(DomainKind::Abs, "abs(0)".to_string()));
        }
        Ok(if a < 0.0 { -self } else { self.clone() })
    }

    pub fn recip(&self) -> Result<Self> {
        let a = self.value();
        if a == 0.0 || !a.is_finite() {
            return Err(Error::domain(DomainKind::Division, format!("1/{a}")));
        }
        let mut t = Vec::with_capacity(self.order + 1);
        let mut term = 1.0 / a;
        for _ in 0..=self.order {
            t.push(term);
            term *= -1.0 / a;
        }
        Ok(self.compose(&t))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.recip()?)
    }

    /// Integer power; negative bases are fine, a zero base only for `k >= 0`.
    pub fn powi(&self, k: i32) -> Result<Self> {
        if k < 0 {
            return self.recip()?.powi(-k);
        }
        let mut result = self.lift(1.0);
        let mut base = self.clone();
        let mut e = k as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(result)
    }

    /// Real power with a constant exponent. Integer-valued exponents go
    /// through [`Jet::powi`]; otherwise the base must be positive.
    pub fn powf(&self, r: f64) -> Result<Self> {
        if r.fract() == 0.0 && r.abs() <= f64::from(i32::MAX) {
            return self.powi(r as i32);
        }
        let a = self.value();
        if a < 0.0 || (a == 0.0 && (self.order > 0 || r < 0.0)) {
            return Err(Error::domain(DomainKind::Power, format!("({a})^{r}")));
        }
        Ok(self.compose(&power_series(a, r, self.order)))
    }

    /// `self^exponent` for a non-constant exponent, via `exp(e ln b)`.
    pub fn pow(&self, exponent: &Self) -> Result<Self> {
        let a = self.value();
        if !(a > 0.0) {
            return Err(Error::domain(
                DomainKind::Power,
                format!("({a})^({})", exponent.value()),
            ));
        }
        Ok((exponent * &self.ln()?).exp())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

/// Taylor coefficients of `t ↦ t^r` about `a > 0`: `binom(r, j) a^{r-j}`.
fn power_series(a: f64, r: f64, order: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(order + 1);
    let mut binom = 1.0;
    for j in 0..=order {
        t.push(binom * a.powf(r - j as f64));
        binom *= (r - j as f64) / (j as f64 + 1.0);
    }
    t
}

fn factorial(k: u8) -> f64 {
    (1..=u32::from(k)).map(f64::from).product()
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.product(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// `Σ_i a_i b_i` over paired jets.
pub fn dot<'a>(
    a: impl IntoIterator<Item = &'a Jet>,
    b: impl IntoIterator<Item = &'a Jet>,
) -> Option<Jet> {
    a.into_iter()
        .zip(b)
        .map(|(x, y)| x * y)
        .reduce(|acc, t| &acc + &t)
}
