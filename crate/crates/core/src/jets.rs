//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients `∂^m f(p) / m!` of a scalar for
//! every multi-index `m` with `|m| <= order`. Monomials are kept in graded
//! order so that truncating to a lower order is a prefix of the storage.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{GeometryError, Result};

/// Highest derivative order a jet can carry.
pub const MAX_ORDER: usize = 4;

const NONE: u32 = u32::MAX;

struct JetSpace {
    dim: usize,
    monomials: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, u32>,
    /// number of monomials of degree <= k
    prefix: [usize; MAX_ORDER + 1],
    /// (i, j, k): coefficient k receives a_i * b_j; sorted by degree of k
    triples: Vec<(u32, u32, u32)>,
    triple_prefix: [usize; MAX_ORDER + 1],
    /// raise[v][i] is the index of monomial i times x_v
    raise: Vec<Vec<u32>>,
}

impl JetSpace {
    fn build(dim: usize) -> Self {
        let mut monomials: Vec<Vec<u8>> = Vec::new();
        let mut prefix = [0usize; MAX_ORDER + 1];
        for deg in 0..=MAX_ORDER {
            let mut current = vec![0u8; dim];
            push_compositions(&mut monomials, &mut current, 0, deg);
            prefix[deg] = monomials.len();
        }
        if dim == 0 {
            monomials.truncate(1);
            prefix = [1; MAX_ORDER + 1];
        }
        let index: HashMap<Vec<u8>, u32> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i as u32))
            .collect();

        let mut triples = Vec::new();
        let mut triple_prefix = [0usize; MAX_ORDER + 1];
        let mut deg_done = 0usize;
        for (k, mk) in monomials.iter().enumerate() {
            let deg: usize = mk.iter().map(|&e| e as usize).sum();
            while deg_done < deg {
                triple_prefix[deg_done] = triples.len();
                deg_done += 1;
            }
            let mut mi = vec![0u8; dim];
            loop {
                let mj: Vec<u8> = mk.iter().zip(&mi).map(|(a, b)| a - b).collect();
                triples.push((index[&mi], index[&mj], k as u32));
                // odometer over divisors of mk
                let mut v = 0;
                while v < dim {
                    if mi[v] < mk[v] {
                        mi[v] += 1;
                        break;
                    }
                    mi[v] = 0;
                    v += 1;
                }
                if v == dim {
                    break;
                }
            }
        }
        for slot in triple_prefix.iter_mut().skip(deg_done) {
            *slot = triples.len();
        }

        let mut raise = vec![vec![NONE; monomials.len()]; dim];
        for (i, m) in monomials.iter().enumerate() {
            for (v, row) in raise.iter_mut().enumerate() {
                let mut up = m.clone();
                up[v] += 1;
                if let Some(&j) = index.get(&up) {
                    row[i] = j;
                }
            }
        }
        JetSpace {
            dim,
            monomials,
            index,
            prefix,
            triples,
            triple_prefix,
            raise,
        }
    }
}

fn push_compositions(out: &mut Vec<Vec<u8>>, current: &mut Vec<u8>, pos: usize, remaining: usize) {
    if pos + 1 >= current.len() {
        if let Some(last) = current.len().checked_sub(1) {
            current[last] = remaining as u8;
            out.push(current.clone());
            current[last] = 0;
        } else if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e as u8;
        push_compositions(out, current, pos + 1, remaining - e);
    }
    current[pos] = 0;
}

fn space(dim: usize) -> Arc<JetSpace> {
    static SPACES: OnceLock<Mutex<HashMap<usize, Arc<JetSpace>>>> = OnceLock::new();
    let map = SPACES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(dim)
        .or_insert_with(|| Arc::new(JetSpace::build(dim)))
        .clone()
}

/// Truncated Taylor expansion of a scalar in `dim` variables.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    order: usize,
    coeffs: Vec<f64>,
    fault: Option<&'static str>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.dim())
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .field("fault", &self.fault)
            .finish()
    }
}

impl Jet {
    fn from_parts(space: Arc<JetSpace>, order: usize, coeffs: Vec<f64>, fault: Option<&'static str>) -> Self {
        Jet { space, order, coeffs, fault }
    }

    /// A plain number; combines with jets of any dimension as a constant.
    pub fn scalar(value: f64) -> Self {
        Jet::from_parts(space(0), MAX_ORDER, vec![value], None)
    }

    pub fn constant(dim: usize, order: usize, value: f64) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let sp = space(dim);
        let mut coeffs = vec![0.0; sp.prefix[order]];
        coeffs[0] = value;
        Jet::from_parts(sp, order, coeffs, None)
    }

    /// The coordinate function `x_var` expanded around `value`.
    pub fn variable(dim: usize, order: usize, var: usize, value: f64) -> Self {
        assert!(var < dim, "variable {var} out of range for dimension {dim}");
        let mut j = Jet::constant(dim, order, value);
        if order >= 1 {
            // degree-one monomials are stored in descending-lex order: e_0, e_1, ...
            j.coeffs[1 + var] = 1.0;
        }
        j
    }

    /// All coordinates of `point` as independent variables.
    pub fn variables(point: &[f64], order: usize) -> Vec<Jet> {
        (0..point.len())
            .map(|i| Jet::variable(point.len(), order, i, point[i]))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn fault(&self) -> Option<&'static str> {
        self.fault
    }

    /// Number of stored coefficients for a `dim`-variable jet of the given order.
    pub fn storage_len(dim: usize, order: usize) -> usize {
        space(dim).prefix[order.min(MAX_ORDER)]
    }

    /// Exponent vectors in storage order.
    pub fn multi_indices(&self) -> &[Vec<u8>] {
        &self.space.monomials[..self.coeffs.len()]
    }

    /// Taylor coefficient of the monomial with exponents `m` (zero beyond the order).
    pub fn coeff(&self, m: &[u8]) -> f64 {
        assert_eq!(m.len(), self.dim(), "multi-index length");
        match self.space.index.get(m) {
            Some(&i) if (i as usize) < self.coeffs.len() => self.coeffs[i as usize],
            _ => 0.0,
        }
    }

    /// Partial derivative `∂^m f(p)` for exponent vector `m`.
    pub fn derivative(&self, m: &[u8]) -> f64 {
        let fact: f64 = m.iter().map(|&e| factorial(e as usize)).product();
        self.coeff(m) * fact
    }

    /// Partial derivative along the listed variables, e.g. `[0, 2, 2]` is ∂0∂2∂2.
    pub fn partial_value(&self, vars: &[usize]) -> f64 {
        if self.dim() == 0 {
            return if vars.is_empty() { self.value() } else { 0.0 };
        }
        let mut m = vec![0u8; self.dim()];
        for &v in vars {
            m[v] += 1;
        }
        self.derivative(&m)
    }

    /// First derivatives at the expansion point.
    pub fn gradient(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|v| if self.order >= 1 { self.coeffs[1 + v] } else { f64::NAN })
            .collect()
    }

    /// The jet of `∂f/∂x_var`, one order lower.
    pub fn partial(&self, var: usize) -> Jet {
        if self.dim() == 0 {
            return Jet::scalar(0.0);
        }
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let o = self.order - 1;
        let n = self.space.prefix[o];
        let sp = &self.space;
        let coeffs = (0..n)
            .map(|i| {
                let up = sp.raise[var][i] as usize;
                (sp.monomials[i][var] as f64 + 1.0) * self.coeffs[up]
            })
            .collect();
        Jet::from_parts(self.space.clone(), o, coeffs, self.fault)
    }

    /// Drop coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order || self.dim() == 0 {
            return self.clone();
        }
        let n = self.space.prefix[order];
        Jet::from_parts(self.space.clone(), order, self.coeffs[..n].to_vec(), self.fault)
    }

    /// Set every monomial that involves a variable with index `>= first` to zero.
    pub fn restrict_below(&self, first: usize) -> Jet {
        let mut out = self.clone();
        for (c, m) in out.coeffs.iter_mut().zip(&self.space.monomials) {
            if m[first.min(m.len())..].iter().any(|&e| e > 0) {
                *c = 0.0;
            }
        }
        out
    }

    /// Give a plain scalar the dimension and order of `like`.
    pub fn broadcast_to(&self, like: &Jet) -> Jet {
        if self.dim() != 0 || like.dim() == 0 {
            return self.clone();
        }
        let mut out = like.constant_like(self.value());
        out.fault = self.fault;
        if self.fault.is_some() {
            out.coeffs.iter_mut().for_each(|c| *c = f64::NAN);
        }
        out
    }

    /// Same dimension and order with the given constant value.
    pub fn constant_like(&self, value: f64) -> Jet {
        if self.dim() == 0 {
            return Jet::scalar(value);
        }
        Jet::constant(self.dim(), self.order, value)
    }

    fn faulted(&self, primitive: &'static str) -> Jet {
        Jet::from_parts(
            self.space.clone(),
            self.order,
            vec![f64::NAN; self.coeffs.len()],
            Some(primitive),
        )
    }

    /// `f(a + h) = Σ c_k h^k` where `a` is the value of `self`.
    fn compose(&self, c: &[f64; MAX_ORDER + 1]) -> Jet {
        if self.fault.is_some() {
            return self.clone();
        }
        if self.dim() == 0 || self.order == 0 {
            return self.constant_like(c[0]);
        }
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = self.constant_like(c[self.order]);
        for k in (0..self.order).rev() {
            acc = &acc * &h;
            acc.coeffs[0] += c[k];
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut c = [0.0; MAX_ORDER + 1];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = e / factorial(k);
        }
        self.compose(&c)
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        if a <= 0.0 || a.is_nan() {
            return self.faulted("ln");
        }
        let mut c = [0.0; MAX_ORDER + 1];
        c[0] = a.ln();
        for (k, ck) in c.iter_mut().enumerate().skip(1) {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            *ck = sign / (k as f64 * a.powi(k as i32));
        }
        self.compose(&c)
    }

    fn binomial_series(&self, r: f64) -> Jet {
        let a = self.value();
        let mut c = [0.0; MAX_ORDER + 1];
        let mut binom = 1.0;
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = binom * a.powf(r - k as f64);
            binom *= (r - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&c)
    }

    pub fn sqrt(&self) -> Jet {
        let a = self.value();
        if a < 0.0 || a.is_nan() || (a == 0.0 && self.order > 0 && self.dim() > 0) {
            return self.faulted("sqrt");
        }
        if a == 0.0 {
            return self.constant_like(0.0);
        }
        self.binomial_series(0.5)
    }

    /// Real power; the base must be positive.
    pub fn powf(&self, r: f64) -> Jet {
        let a = self.value();
        if a <= 0.0 || a.is_nan() {
            return self.faulted("pow");
        }
        self.binomial_series(r)
    }

    pub fn powi(&self, n: i32) -> Jet {
        if n < 0 {
            return self.recip().powi(-n);
        }
        let mut acc = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        if a == 0.0 || a.is_nan() {
            return self.faulted("div");
        }
        let mut c = [0.0; MAX_ORDER + 1];
        for (k, ck) in c.iter_mut().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            *ck = sign / a.powi(k as i32 + 1);
        }
        self.compose(&c)
    }

    pub fn sin(&self) -> Jet {
        let (s, co) = self.value().sin_cos();
        let cycle = [s, co, -s, -co];
        self.compose(&periodic(&cycle))
    }

    pub fn cos(&self) -> Jet {
        let (s, co) = self.value().sin_cos();
        let cycle = [co, -s, -co, s];
        self.compose(&periodic(&cycle))
    }

    pub fn tan(&self) -> Jet {
        if self.value().cos() == 0.0 {
            return self.faulted("tan");
        }
        &self.sin() / &self.cos()
    }

    pub fn sinh(&self) -> Jet {
        let a = self.value();
        let cycle = [a.sinh(), a.cosh(), a.sinh(), a.cosh()];
        self.compose(&periodic(&cycle))
    }

    pub fn cosh(&self) -> Jet {
        let a = self.value();
        let cycle = [a.cosh(), a.sinh(), a.cosh(), a.sinh()];
        self.compose(&periodic(&cycle))
    }

    pub fn tanh(&self) -> Jet {
        &self.sinh() / &self.cosh()
    }

    pub fn asinh(&self) -> Jet {
        let r = (self * self + 1.0).sqrt();
        if self.value() >= 0.0 {
            (self + &r).ln()
        } else {
            // avoids cancellation in x + sqrt(x^2+1) for negative x
            -((&r - self).ln())
        }
    }
}

fn periodic(cycle: &[f64; 4]) -> [f64; MAX_ORDER + 1] {
    let mut c = [0.0; MAX_ORDER + 1];
    for (k, ck) in c.iter_mut().enumerate() {
        *ck = cycle[k % 4] / factorial(k);
    }
    c
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn merge_fault(a: &Jet, b: &Jet) -> Option<&'static str> {
    a.fault.or(b.fault)
}

fn add_jets(a: &Jet, b: &Jet, sign: f64) -> Jet {
    if b.dim() == 0 && a.dim() != 0 {
        let mut out = a.clone();
        out.coeffs[0] += sign * b.value();
        out.fault = merge_fault(a, b);
        return out;
    }
    if a.dim() == 0 && b.dim() != 0 {
        let mut out = if sign > 0.0 { b.clone() } else { -b };
        out.coeffs[0] += a.value();
        out.fault = merge_fault(a, b);
        return out;
    }
    assert_eq!(a.dim(), b.dim(), "jets over different variable sets");
    let order = a.order.min(b.order);
    let n = a.space.prefix[order];
    let coeffs = a.coeffs[..n]
        .iter()
        .zip(&b.coeffs[..n])
        .map(|(x, y)| x + sign * y)
        .collect();
    Jet::from_parts(a.space.clone(), order, coeffs, merge_fault(a, b))
}

fn mul_jets(a: &Jet, b: &Jet) -> Jet {
    if a.dim() == 0 {
        let mut out = b * a.value();
        out.fault = merge_fault(a, b);
        return out;
    }
    if b.dim() == 0 {
        let mut out = a * b.value();
        out.fault = merge_fault(a, b);
        return out;
    }
    assert_eq!(a.dim(), b.dim(), "jets over different variable sets");
    let order = a.order.min(b.order);
    let sp = &a.space;
    let mut coeffs = vec![0.0; sp.prefix[order]];
    for &(i, j, k) in &sp.triples[..sp.triple_prefix[order]] {
        coeffs[k as usize] += a.coeffs[i as usize] * b.coeffs[j as usize];
    }
    Jet::from_parts(a.space.clone(), order, coeffs, merge_fault(a, b))
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c = -*c);
        out
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
        impl $trait<f64> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                self.$method(&Jet::scalar(rhs))
            }
        }
        impl $trait<f64> for Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                (&self).$method(&Jet::scalar(rhs))
            }
        }
        impl $trait<&Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&Jet::scalar(self)).$method(rhs)
            }
        }
        impl $trait<Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&Jet::scalar(self)).$method(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| add_jets(a, b, 1.0));
jet_binop!(Sub, sub, |a, b| add_jets(a, b, -1.0));
jet_binop!(Mul, mul, |a, b| {
    if b.dim() == 0 && a.dim() != 0 {
        let mut out = a.clone();
        let s = b.value();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out.fault = merge_fault(a, b);
        return out;
    }
    if a.dim() == 0 && b.dim() == 0 {
        let mut out = Jet::scalar(a.value() * b.value());
        out.fault = merge_fault(a, b);
        return out;
    }
    mul_jets(a, b)
});
jet_binop!(Div, div, |a, b| {
    if b.dim() == 0 {
        if b.value() == 0.0 {
            return a.faulted("div");
        }
        let mut out = a * (1.0 / b.value());
        out.fault = merge_fault(a, b);
        return out;
    }
    a * &b.recip()
});

impl std::iter::Sum for Jet {
    fn sum<I: Iterator<Item = Jet>>(iter: I) -> Jet {
        iter.fold(Jet::scalar(0.0), |acc, x| acc + x)
    }
}

impl<'a> std::iter::Sum<&'a Jet> for Jet {
    fn sum<I: Iterator<Item = &'a Jet>>(iter: I) -> Jet {
        iter.fold(Jet::scalar(0.0), |acc, x| acc + x)
    }
}

/// A base point plus a nonzero tangent vector in one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagPoint {
    pub chart: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl FlagPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        FlagPoint::in_chart(0, x, y)
    }

    pub fn in_chart(chart: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(GeometryError::Dimension { expected: x.len(), got: y.len() });
        }
        if y.iter().all(|&v| v == 0.0) {
            return Err(GeometryError::ZeroDirection);
        }
        Ok(FlagPoint { chart, x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Coordinates `(x, y)` concatenated.
    pub fn coords(&self) -> Vec<f64> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    pub fn scaled(&self, lambda: f64) -> FlagPoint {
        FlagPoint {
            chart: self.chart,
            x: self.x.clone(),
            y: self.y.iter().map(|v| v * lambda).collect(),
        }
    }
}

/// Taylor-expand `f` around `point` in the variables listed in `active`;
/// every other argument is held fixed.
pub fn lift<F>(f: F, point: &[f64], order: usize, active: &[usize]) -> Result<Jet>
where
    F: Fn(&[Jet]) -> Jet,
{
    if order > MAX_ORDER {
        return Err(GeometryError::Parameter(format!("jet order {order} exceeds {MAX_ORDER}")));
    }
    let mut slot = vec![None; point.len()];
    for (k, &v) in active.iter().enumerate() {
        if v >= point.len() || slot[v].is_some() {
            return Err(GeometryError::Parameter(format!("bad active variable {v}")));
        }
        slot[v] = Some(k);
    }
    let dim = active.len();
    let args: Vec<Jet> = point
        .iter()
        .zip(&slot)
        .map(|(&p, s)| match s {
            Some(k) => Jet::variable(dim, order, *k, p),
            None => Jet::constant(dim, order, p),
        })
        .collect();
    let out = f(&args);
    check(out)
}

/// Lift a function of `(x, y)` at a flag.
pub fn lift_flag<F>(f: F, p: &FlagPoint, order: usize, active: &[usize]) -> Result<Jet>
where
    F: Fn(&[Jet], &[Jet]) -> Jet,
{
    let n = p.dim();
    lift(|z| f(&z[..n], &z[n..]), &p.coords(), order, active)
}

/// Turn a faulted jet into an error naming the offending primitive.
pub fn check(j: Jet) -> Result<Jet> {
    match j.fault {
        Some(primitive) => Err(GeometryError::Domain { primitive }),
        None if j.coeffs.iter().any(|c| !c.is_finite()) => Err(GeometryError::Domain { primitive: "non-finite" }),
        None => Ok(j),
    }
}

/// Result of a finite-difference derivative estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct FdEstimate {
    pub value: f64,
    /// base step along each variable
    pub steps: Vec<f64>,
    /// set when a step is lost in the rounding of its coordinate
    pub warning: Option<String>,
}

/// Default base step for a stencil of total order `k` at coordinate `x`.
///
/// Truncation error after one Richardson level is O(h^4); the larger steps
/// for higher orders keep rounding error (≈ eps / h^k) below it.
pub fn default_step(k: usize, x: f64) -> f64 {
    let base = match k {
        0 | 1 => 1e-5,
        2 => 1e-3,
        _ => 5e-3,
    };
    base * x.abs().max(1.0)
}

fn stencil(k: usize) -> &'static [(f64, f64)] {
    match k {
        0 => &[(0.0, 1.0)],
        1 => &[(-1.0, -0.5), (1.0, 0.5)],
        2 => &[(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
        _ => &[(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
    }
}

fn central(f: &dyn Fn(&[f64]) -> Vec<f64>, point: &[f64], m: &[usize], steps: &[f64]) -> Vec<f64> {
    let axes: Vec<usize> = (0..m.len()).filter(|&v| m[v] > 0).collect();
    let mut total: Vec<f64> = Vec::new();
    let mut pick = vec![0usize; axes.len()];
    let mut arg = point.to_vec();
    loop {
        let mut w = 1.0;
        for (a, &v) in axes.iter().enumerate() {
            let (off, wt) = stencil(m[v])[pick[a]];
            arg[v] = point[v] + off * steps[v];
            w *= wt;
        }
        let val = f(&arg);
        if total.is_empty() {
            total = vec![0.0; val.len()];
        }
        for (t, v) in total.iter_mut().zip(&val) {
            *t += w * v;
        }
        let mut a = 0;
        while a < axes.len() {
            pick[a] += 1;
            if pick[a] < stencil(m[axes[a]]).len() {
                break;
            }
            pick[a] = 0;
            a += 1;
        }
        if a == axes.len() {
            break;
        }
    }
    let scale: f64 = axes.iter().map(|&v| steps[v].powi(m[v] as i32)).product();
    total.iter().map(|t| t / scale).collect()
}

/// Central-difference estimate of `∂^m f(point)` with one Richardson level.
///
/// `multi_index[v]` is the derivative count along variable `v`; the total
/// order is at most 3. `step` overrides the default base step for all axes.
/// The error of the returned value is O(h^4).
pub fn fd_derivative(
    f: &dyn Fn(&[f64]) -> f64,
    point: &[f64],
    multi_index: &[usize],
    step: Option<f64>,
) -> Result<FdEstimate> {
    let (v, steps, warning) = fd_core(&|z: &[f64]| vec![f(z)], point, multi_index, step)?;
    Ok(FdEstimate { value: v[0], steps, warning })
}

/// [`fd_derivative`] applied componentwise to a vector-valued map.
pub fn fd_derivative_vec(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    point: &[f64],
    multi_index: &[usize],
    step: Option<f64>,
) -> Result<(Vec<f64>, Option<String>)> {
    let (v, _, warning) = fd_core(f, point, multi_index, step)?;
    Ok((v, warning))
}

type FdParts = (Vec<f64>, Vec<f64>, Option<String>);

fn fd_core(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    point: &[f64],
    multi_index: &[usize],
    step: Option<f64>,
) -> Result<FdParts> {
    if multi_index.len() != point.len() {
        return Err(GeometryError::Dimension { expected: point.len(), got: multi_index.len() });
    }
    let total: usize = multi_index.iter().sum();
    if total > 3 {
        return Err(GeometryError::Parameter(format!("finite-difference order {total} exceeds 3")));
    }
    if let Some(h) = step {
        if !(h > 0.0) || !h.is_finite() {
            return Err(GeometryError::Parameter(format!("step must be positive, got {h}")));
        }
    }
    if total == 0 {
        return Ok((f(point), vec![0.0; point.len()], None));
    }
    let steps: Vec<f64> = point
        .iter()
        .map(|&x| step.unwrap_or_else(|| default_step(total, x)))
        .collect();
    let mut warning = None;
    for (v, (&x, &h)) in point.iter().zip(&steps).enumerate() {
        if multi_index[v] > 0 && (x + 0.5 * h == x || h < x.abs() * 1e-13) {
            warning = Some(format!("step {h:e} underflows coordinate {v} = {x:e}"));
        }
    }
    let half: Vec<f64> = steps.iter().map(|h| 0.5 * h).collect();
    let coarse = central(f, point, multi_index, &steps);
    let fine = central(f, point, multi_index, &half);
    let value = fine.iter().zip(&coarse).map(|(a, b)| (4.0 * a - b) / 3.0).collect();
    Ok((value, steps, warning))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bilinear_product() {
        let j = lift(|z| &z[0] * &z[1], &[2.0, 3.0], 2, &[0, 1]).unwrap();
        assert_eq!(j.value(), 6.0);
        assert_eq!(j.partial_value(&[0]), 3.0);
        assert_eq!(j.partial_value(&[1]), 2.0);
        assert_eq!(j.partial_value(&[0, 1]), 1.0);
        assert_eq!(j.partial_value(&[0, 0]), 0.0);
    }

    #[test]
    fn tanh_squared() {
        let j = lift(|z| z[0].tanh().powi(2), &[1.0], 1, &[0]).unwrap();
        let t = 1f64.tanh();
        assert_relative_eq!(j.value(), t * t, epsilon = 1e-15);
        assert_relative_eq!(j.value(), 0.580026, epsilon = 1e-6);
        let c = 1f64.cosh();
        assert_relative_eq!(j.partial_value(&[0]), 2.0 * t / (c * c), epsilon = 1e-14);
    }

    #[test]
    fn constant_has_no_derivatives() {
        let j = lift(|z| z[0].constant_like(5.0), &[0.3, -1.0], 3, &[0, 1]).unwrap();
        assert_eq!(j.value(), 5.0);
        assert!(j.coeffs()[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn inactive_variables_are_frozen() {
        let j = lift(|z| &z[0] * &z[1] * &z[1], &[2.0, 3.0], 2, &[0]).unwrap();
        assert_eq!(j.dim(), 1);
        assert_eq!(j.partial_value(&[0]), 9.0);
    }

    #[test]
    fn domain_fault_names_primitive() {
        let err = lift(|z| z[0].sqrt(), &[-1.0], 2, &[0]).unwrap_err();
        assert_eq!(err, GeometryError::Domain { primitive: "sqrt" });
        let err = lift(|z| (&z[0] - 1.0).ln() + &z[0], &[1.0], 1, &[0]).unwrap_err();
        assert_eq!(err, GeometryError::Domain { primitive: "ln" });
    }

    #[test]
    fn fourth_order_univariate_series() {
        let x = 0.37f64;
        let cases: Vec<(fn(&Jet) -> Jet, [f64; 5])> = vec![
            (|j| j.exp(), [x.exp(); 5]),
            (|j| j.sin(), [x.sin(), x.cos(), -x.sin(), -x.cos(), x.sin()]),
            (
                |j| j.ln(),
                [x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / x.powi(3), -6.0 / x.powi(4)],
            ),
            (
                |j| j.asinh(),
                {
                    let s = 1.0 + x * x;
                    [
                        x.asinh(),
                        s.powf(-0.5),
                        -x * s.powf(-1.5),
                        (2.0 * x * x - 1.0) * s.powf(-2.5),
                        (9.0 * x - 6.0 * x.powi(3)) * s.powf(-3.5),
                    ]
                },
            ),
        ];
        for (f, d) in cases {
            let j = lift(|z| f(&z[0]), &[x], 4, &[0]).unwrap();
            for k in 0..=4 {
                let m = [k as u8];
                assert_relative_eq!(j.derivative(&m), d[k], epsilon = 1e-12, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn tan_and_tanh_derivatives() {
        let x = -0.6f64;
        let t = x.tan();
        let j = lift(|z| z[0].tan(), &[x], 4, &[0]).unwrap();
        let s = 1.0 + t * t;
        assert_relative_eq!(j.derivative(&[3]), 2.0 * s * (1.0 + 3.0 * t * t), max_relative = 1e-12);
        assert_relative_eq!(j.derivative(&[4]), 8.0 * t * s * (2.0 + 3.0 * t * t), max_relative = 1e-12);
        let u = x.tanh();
        let j = lift(|z| z[0].tanh(), &[x], 4, &[0]).unwrap();
        let s = 1.0 - u * u;
        assert_relative_eq!(j.derivative(&[4]), 8.0 * u * (2.0 - 3.0 * u * u) * s, max_relative = 1e-12);
    }

    #[test]
    fn partial_lowers_order() {
        let j = lift(|z| z[0].powi(3) * &z[1], &[1.5, 2.0], 4, &[0, 1]).unwrap();
        let d = j.partial(0);
        assert_eq!(d.order(), 3);
        assert_relative_eq!(d.value(), 3.0 * 1.5 * 1.5 * 2.0);
        assert_relative_eq!(d.partial_value(&[0, 1]), 6.0 * 1.5);
    }

    #[test]
    fn fd_examples() {
        let sq = |x: &[f64]| x[0] * x[0];
        let e = fd_derivative(&sq, &[1.0], &[1], Some(1e-4)).unwrap();
        assert!((e.value - 2.0).abs() <= 1e-8);
        let s = |x: &[f64]| x[0].sin();
        let e = fd_derivative(&s, &[0.0], &[3], Some(1e-2)).unwrap();
        assert!((e.value + 1.0).abs() <= 1e-4);
        let c = |_: &[f64]| 4.0;
        let e = fd_derivative(&c, &[0.3, 2.0], &[1, 1], None).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn fd_guards() {
        let f = |x: &[f64]| x[0];
        assert!(fd_derivative(&f, &[0.0], &[4], None).is_err());
        assert!(fd_derivative(&f, &[0.0], &[1], Some(0.0)).is_err());
        let e = fd_derivative(&f, &[1e20], &[1], Some(1e-3)).unwrap();
        assert!(e.warning.is_some());
    }

    #[test]
    fn flag_point_rejects_zero_direction() {
        assert_eq!(FlagPoint::new(vec![0.0], vec![0.0]), Err(GeometryError::ZeroDirection));
    }
}
