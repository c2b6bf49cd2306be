//! Levi-Civita calculus for a Riemannian metric `h_ij(x)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{GeometryError, Result};
use crate::fields::{ScalarField, VectorField};
use crate::jets::{check, Jet};
use crate::linalg;

type MatrixFn = dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync;

/// A Riemannian metric given by its component matrix (row-major).
#[derive(Clone)]
pub struct RiemannMetric {
    dim: usize,
    h: Arc<MatrixFn>,
}

impl fmt::Debug for RiemannMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RiemannMetric(dim = {})", self.dim)
    }
}

impl RiemannMetric {
    pub fn new(dim: usize, h: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static) -> Self {
        RiemannMetric { dim, h: Arc::new(h) }
    }

    pub fn euclidean(dim: usize) -> Self {
        RiemannMetric::new(dim, move |_| {
            linalg::identity(dim).into_iter().map(Jet::scalar).collect()
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[Jet]) -> Vec<Jet> {
        let out = (self.h)(x);
        assert_eq!(out.len(), self.dim * self.dim, "metric returned wrong number of components");
        match x.first() {
            Some(like) => out.iter().map(|c| c.broadcast_to(like)).collect(),
            None => out,
        }
    }

    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        let xs: Vec<Jet> = x.iter().map(|&v| Jet::scalar(v)).collect();
        (self.h)(&xs).iter().map(Jet::value).collect()
    }

    /// `h(u, u)` at `x`.
    pub fn norm2(&self, x: &[f64], u: &[f64]) -> f64 {
        linalg::quad(&self.values(x), u, u)
    }

    /// Positive definiteness at `x`.
    pub fn check(&self, x: &[f64]) -> Result<()> {
        linalg::check_positive_definite(&self.values(x), self.dim)
    }
}

/// Jets of the metric, its inverse and its Christoffel symbols around one point.
pub struct RiemannFrame {
    n: usize,
    h: Vec<Jet>,
    hinv: Vec<Jet>,
    /// Γ^k_ij stored at `k n² + i n + j`
    gamma: Vec<Jet>,
    x: Vec<Jet>,
    cond: f64,
}

impl RiemannFrame {
    /// Expand the metric to `order` around `x`; Christoffel symbols carry `order - 1`.
    pub fn new(metric: &RiemannMetric, x: &[f64], order: usize) -> Result<Self> {
        let n = metric.dim();
        if x.len() != n {
            return Err(GeometryError::Dimension { expected: n, got: x.len() });
        }
        let xj = Jet::variables(x, order);
        let h = metric
            .eval(&xj)
            .into_iter()
            .map(check)
            .collect::<Result<Vec<_>>>()?;
        let hv: Vec<f64> = h.iter().map(Jet::value).collect();
        linalg::check_positive_definite(&hv, n)?;
        let (hinv, cond) = linalg::inverse_jets(&h, n)?;
        let dh: Vec<Vec<Jet>> = (0..n).map(|l| h.iter().map(|c| c.partial(l)).collect()).collect();
        let mut gamma = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let g: Jet = (0..n)
                        .map(|l| {
                            let t = &dh[i][j * n + l] + &dh[j][i * n + l] - &dh[l][i * n + j];
                            &hinv[k * n + l] * &t
                        })
                        .sum();
                    gamma.push(g * 0.5);
                }
            }
        }
        Ok(RiemannFrame { n, h, hinv, gamma, x: xj, cond })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Condition estimate of the metric matrix at the base point.
    pub fn condition(&self) -> f64 {
        self.cond
    }

    pub fn ill_conditioned(&self) -> bool {
        self.cond > linalg::COND_WARN
    }

    /// Coordinate jets of the base point.
    pub fn coords(&self) -> &[Jet] {
        &self.x
    }

    pub fn metric(&self) -> &[Jet] {
        &self.h
    }

    pub fn inverse(&self) -> &[Jet] {
        &self.hinv
    }

    pub fn gamma(&self, k: usize, i: usize, j: usize) -> &Jet {
        &self.gamma[(k * self.n + i) * self.n + j]
    }

    pub fn christoffel_values(&self) -> Vec<f64> {
        self.gamma.iter().map(Jet::value).collect()
    }

    pub fn lower(&self, v: &[Jet]) -> Vec<Jet> {
        linalg::mat_vec(&self.h, v)
    }

    pub fn raise(&self, w: &[Jet]) -> Vec<Jet> {
        linalg::mat_vec(&self.hinv, w)
    }

    /// `b_{i;j} = ∂_j b_i − Γ^k_ij b_k`, stored at `i n + j`.
    pub fn cov_1form(&self, b: &[Jet]) -> Vec<Jet> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let corr: Jet = (0..n).map(|k| self.gamma(k, i, j) * &b[k]).sum();
                out.push(b[i].partial(j) - corr);
            }
        }
        out
    }

    /// `V^i_{;k} = ∂_k V^i + Γ^i_kj V^j`, stored at `i n + k`.
    pub fn cov_vector(&self, v: &[Jet]) -> Vec<Jet> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for k in 0..n {
                let corr: Jet = (0..n).map(|j| self.gamma(i, k, j) * &v[j]).sum();
                out.push(v[i].partial(k) + corr);
            }
        }
        out
    }

    /// `T_{ij;k}` for a covariant 2-tensor, stored at `(i n + j) n + k`.
    pub fn cov_2form(&self, t: &[Jet]) -> Vec<Jet> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = t[i * n + j].partial(k);
                    for l in 0..n {
                        acc = acc - self.gamma(l, k, i) * &t[l * n + j] - self.gamma(l, k, j) * &t[i * n + l];
                    }
                    out.push(acc);
                }
            }
        }
        out
    }

    /// `T^i_{j;k}` for a (1,1)-tensor, stored at `(i n + j) n + k`.
    pub fn cov_mixed(&self, t: &[Jet]) -> Vec<Jet> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = t[i * n + j].partial(k);
                    for l in 0..n {
                        acc = acc + self.gamma(i, k, l) * &t[l * n + j] - self.gamma(l, k, j) * &t[i * n + l];
                    }
                    out.push(acc);
                }
            }
        }
        out
    }

    /// Covariant Hessian `f_{;ij}`.
    pub fn hessian(&self, f: &Jet) -> Vec<Jet> {
        let df: Vec<Jet> = (0..self.n).map(|i| f.partial(i)).collect();
        self.cov_1form(&df)
    }

    /// `V^i_{;i}`
    pub fn divergence(&self, v: &[Jet]) -> Jet {
        let dv = self.cov_vector(v);
        (0..self.n).map(|i| dv[i * self.n + i].clone()).sum()
    }

    /// Ricci tensor `R_jk`, two orders below the frame.
    pub fn ricci(&self) -> Vec<Jet> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                let mut acc = Jet::scalar(0.0);
                for i in 0..n {
                    acc = acc + self.gamma(i, j, k).partial(i) - self.gamma(i, i, j).partial(k);
                    for p in 0..n {
                        acc = acc + self.gamma(i, i, p) * self.gamma(p, j, k) - self.gamma(i, k, p) * self.gamma(p, i, j);
                    }
                }
                out.push(acc);
            }
        }
        out
    }

    /// Trace `h^{ij} T_ij` of a covariant 2-tensor.
    pub fn trace(&self, t: &[Jet]) -> Jet {
        self.hinv.iter().zip(t).map(|(a, b)| a * b).sum()
    }
}

pub(crate) fn contract2(t: &[f64], u: &[f64], v: &[f64]) -> f64 {
    linalg::quad(t, u, v)
}

pub(crate) fn values(jets: &[Jet]) -> Vec<f64> {
    jets.iter().map(Jet::value).collect()
}

/// Christoffel symbols `Γ^k_ij` at `x`, stored at `k n² + i n + j`.
pub fn christoffel(h: &RiemannMetric, x: &[f64]) -> Result<Vec<f64>> {
    Ok(RiemannFrame::new(h, x, 1)?.christoffel_values())
}

/// `Ric(y) = R_jk y^j y^k`.
pub fn riemann_ricci(h: &RiemannMetric, x: &[f64], y: &[f64]) -> Result<f64> {
    let fr = RiemannFrame::new(h, x, 2)?;
    Ok(contract2(&values(&fr.ricci()), y, y))
}

/// `b_{i;j}` at `x`, stored at `i n + j`.
pub fn covariant_derivative_1form(h: &RiemannMetric, b: &VectorField, x: &[f64]) -> Result<Vec<f64>> {
    let fr = RiemannFrame::new(h, x, 1)?;
    let bj = b.eval(fr.coords());
    Ok(values(&fr.cov_1form(&bj)))
}

/// `f_{;ij} y^i y^j`.
pub fn hessian(h: &RiemannMetric, f: &ScalarField, x: &[f64], y: &[f64]) -> Result<f64> {
    let fr = RiemannFrame::new(h, x, 2)?;
    let fj = check(f.eval(fr.coords()))?;
    Ok(contract2(&values(&fr.hessian(&fj)), y, y))
}

/// `ℒ_V̂(h²) = 2 V_{i;j} y^i y^j`.
pub fn lie_h2(h: &RiemannMetric, v: &VectorField, x: &[f64], y: &[f64]) -> Result<f64> {
    let fr = RiemannFrame::new(h, x, 1)?;
    let vl = fr.lower(&v.eval(fr.coords()));
    Ok(2.0 * contract2(&values(&fr.cov_1form(&vl)), y, y))
}

/// `ℒ_V̂(W₀) = (V^k W_{j;k} + W^k V_{k;j}) y^j`.
pub fn lie_w0(h: &RiemannMetric, w: &VectorField, v: &VectorField, x: &[f64], y: &[f64]) -> Result<f64> {
    let fr = RiemannFrame::new(h, x, 1)?;
    Ok(lie_w0_in(&fr, &w.eval(fr.coords()), &v.eval(fr.coords()), y))
}

pub(crate) fn lie_w0_in(fr: &RiemannFrame, w: &[Jet], v: &[Jet], y: &[f64]) -> f64 {
    let n = fr.dim();
    let dw = values(&fr.cov_1form(&fr.lower(w)));
    let dv = values(&fr.cov_1form(&fr.lower(v)));
    let (wv, vv) = (values(w), values(v));
    let mut s = 0.0;
    for j in 0..n {
        for k in 0..n {
            s += (vv[k] * dw[j * n + k] + wv[k] * dv[k * n + j]) * y[j];
        }
    }
    s
}

/// `V_{i;j} + V_{j;i} − 4 c h_ij` at `x`.
pub fn conformal_residual(h: &RiemannMetric, v: &VectorField, c: &ScalarField, x: &[f64]) -> Result<Vec<f64>> {
    let fr = RiemannFrame::new(h, x, 1)?;
    let cv = c.value(x);
    Ok(conformal_residual_in(&fr, &v.eval(fr.coords()), cv))
}

pub(crate) fn conformal_residual_in(fr: &RiemannFrame, v: &[Jet], c: f64) -> Vec<f64> {
    let n = fr.dim();
    let dv = values(&fr.cov_1form(&fr.lower(v)));
    let h = values(fr.metric());
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = dv[i * n + j] + dv[j * n + i] - 4.0 * c * h[i * n + j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
    use approx::assert_relative_eq;

    fn cigar_h() -> RiemannMetric {
        RiemannMetric::new(2, |x| {
            let t = x[0].tanh();
            vec![Jet::scalar(1.0), Jet::scalar(0.0), Jet::scalar(0.0), &t * &t]
        })
    }

    fn sphere_h(mu: f64, n: usize) -> RiemannMetric {
        RiemannMetric::new(n, move |x| {
            let r2: Jet = x.iter().map(|v| v * v).sum();
            let q = r2 * mu + 1.0;
            let qi = q.recip();
            let qi2 = &qi * &qi;
            let mut out = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let d = if i == j { qi.clone() } else { Jet::scalar(0.0) };
                    out.push(d - &x[i] * &x[j] * &qi2 * mu);
                }
            }
            out
        })
    }

    #[test]
    fn euclidean_is_flat() {
        let h = RiemannMetric::euclidean(3);
        assert!(christoffel(&h, &[0.1, 0.2, 0.3]).unwrap().iter().all(|&g| g == 0.0));
        assert_eq!(riemann_ricci(&h, &[0.1, 0.2, 0.3], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn cigar_christoffel() {
        let g = christoffel(&cigar_h(), &[1.0, 0.4]).unwrap();
        let c = 1f64.cosh();
        assert_relative_eq!(g[3], -1f64.tanh() / (c * c), epsilon = 1e-14);
        assert_relative_eq!(g[3], -0.319853, epsilon = 5e-6);
        assert_relative_eq!(g[4 + 1], 2.0 / 2f64.sinh(), epsilon = 1e-14);
        assert_relative_eq!(g[4 + 2], 0.551380, epsilon = 1e-4);
    }

    #[test]
    fn sphere_christoffel_closed_form() {
        let (mu, n) = (1.0, 3);
        let x = [0.3, -0.2, 0.5];
        let g = christoffel(&sphere_h(mu, n), &x).unwrap();
        let q = 1.0 + mu * x.iter().map(|v| v * v).sum::<f64>();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                    let expect = -mu / q * (x[i] * d(k, j) + x[j] * d(k, i));
                    assert_relative_eq!(g[(k * n + i) * n + j], expect, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn sphere_and_cigar_ricci() {
        let h = sphere_h(1.0, 3);
        let (x, y) = ([0.3, -0.2, 0.5], [0.7, 0.1, -0.4]);
        assert_relative_eq!(riemann_ricci(&h, &x, &y).unwrap(), 2.0 * h.norm2(&x, &y), max_relative = 1e-12);
        let h = cigar_h();
        let (x, y) = ([0.8, 2.0], [0.3, -1.1]);
        let c = 0.8f64.cosh();
        assert_relative_eq!(
            riemann_ricci(&h, &x, &y).unwrap(),
            2.0 / (c * c) * h.norm2(&x, &y),
            max_relative = 1e-12
        );
    }

    #[test]
    fn hessian_examples() {
        let e = RiemannMetric::euclidean(2);
        let f = ScalarField::new(|x| x.iter().map(|v| v * v).sum::<Jet>() * 0.5);
        assert_relative_eq!(hessian(&e, &f, &[0.3, 0.1], &[1.0, 2.0]).unwrap(), 5.0, epsilon = 1e-14);
        let f = ScalarField::new(|x| x[0].cosh().ln() * -2.0);
        let h = cigar_h();
        let (x, y) = ([1.2, 0.0], [0.6, 0.9]);
        let c = 1.2f64.cosh();
        assert_relative_eq!(
            hessian(&h, &f, &x, &y).unwrap(),
            -2.0 / (c * c) * h.norm2(&x, &y),
            max_relative = 1e-12
        );
    }

    #[test]
    fn lie_derivative_examples() {
        let e = RiemannMetric::euclidean(3);
        let (x, y) = ([0.2, -0.4, 0.9], [1.0, 0.5, -2.0]);
        let q = VectorField::affine(vec![0.0, 0.3, 0.2, -0.3, 0.0, 0.1, -0.2, -0.1, 0.0], vec![0.0; 3]);
        assert!(lie_h2(&e, &q, &x, &y).unwrap().abs() < 1e-15);
        let radial = VectorField::affine(linalg::identity(3), vec![0.0; 3]);
        assert_relative_eq!(lie_h2(&e, &radial, &x, &y).unwrap(), 2.0 * 5.25, epsilon = 1e-13);
        let zero = VectorField::zero(3);
        assert_eq!(lie_w0(&e, &q, &zero, &x, &y).unwrap(), 0.0);
    }

    #[test]
    fn conformal_examples() {
        let e = RiemannMetric::euclidean(2);
        let r = conformal_residual(&e, &VectorField::zero(2), &ScalarField::constant(1.0), &[0.1, 0.2]).unwrap();
        assert_eq!(r, vec![-4.0, 0.0, 0.0, -4.0]);
        let sigma = 0.3;
        let w = VectorField::affine(vec![-2.0 * sigma, 0.4, -0.4, -2.0 * sigma], vec![0.1, -0.2]);
        let r = conformal_residual(&e, &w, &ScalarField::constant(-sigma), &[0.5, -0.7]).unwrap();
        assert!(max_abs(&r) < 1e-14);
    }

    #[test]
    fn not_positive_definite_is_rejected() {
        let h = RiemannMetric::new(2, |_| vec![Jet::scalar(1.0), Jet::scalar(2.0), Jet::scalar(2.0), Jet::scalar(1.0)]);
        assert!(matches!(christoffel(&h, &[0.0, 0.0]), Err(GeometryError::NotPositiveDefinite { .. })));
    }
}
