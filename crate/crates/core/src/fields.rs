//! Scalar and vector fields on a chart, evaluable on jets.

use std::fmt;
use std::sync::Arc;

use crate::jets::Jet;

type ScalarFn = dyn Fn(&[Jet]) -> Jet + Send + Sync;
type VectorFn = dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync;

/// A smooth function of the base coordinates.
#[derive(Clone)]
pub struct ScalarField(Arc<ScalarFn>);

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarField(..)")
    }
}

impl ScalarField {
    pub fn new(f: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static) -> Self {
        ScalarField(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        ScalarField::new(move |_| Jet::scalar(c))
    }

    /// `½ Σ x_i²`
    pub fn half_square_norm() -> Self {
        ScalarField::new(|x| x.iter().map(|v| v * v).sum::<Jet>() * 0.5)
    }

    pub fn eval(&self, x: &[Jet]) -> Jet {
        let out = (self.0)(x);
        match x.first() {
            Some(like) => out.broadcast_to(like),
            None => out,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let xs: Vec<Jet> = x.iter().map(|&v| Jet::scalar(v)).collect();
        (self.0)(&xs).value()
    }

    /// `self + eps * other`
    pub fn plus_scaled(&self, other: &ScalarField, eps: f64) -> ScalarField {
        let (a, b) = (self.clone(), other.clone());
        ScalarField::new(move |x| a.eval(x) + b.eval(x) * eps)
    }
}

/// Components of a vector field or a 1-form in chart coordinates.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    f: Arc<VectorFn>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField(dim = {})", self.dim)
    }
}

impl VectorField {
    pub fn new(dim: usize, f: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static) -> Self {
        VectorField { dim, f: Arc::new(f) }
    }

    pub fn zero(dim: usize) -> Self {
        VectorField::new(dim, move |_| vec![Jet::scalar(0.0); dim])
    }

    /// `A x + c` with `A` row-major.
    pub fn affine(a: Vec<f64>, c: Vec<f64>) -> Self {
        let n = c.len();
        assert_eq!(a.len(), n * n, "affine field needs an n x n matrix");
        VectorField::new(n, move |x| {
            (0..n)
                .map(|i| (0..n).map(|j| &x[j] * a[i * n + j]).sum::<Jet>() + c[i])
                .collect()
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[Jet]) -> Vec<Jet> {
        let out = (self.f)(x);
        assert_eq!(out.len(), self.dim, "vector field returned wrong number of components");
        match x.first() {
            Some(like) => out.iter().map(|c| c.broadcast_to(like)).collect(),
            None => out,
        }
    }

    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        let xs: Vec<Jet> = x.iter().map(|&v| Jet::scalar(v)).collect();
        (self.f)(&xs).iter().map(Jet::value).collect()
    }

    /// `self + eps * other`
    pub fn plus_scaled(&self, other: &VectorField, eps: f64) -> VectorField {
        let (a, b) = (self.clone(), other.clone());
        VectorField::new(self.dim, move |x| {
            a.eval(x)
                .into_iter()
                .zip(b.eval(x))
                .map(|(u, v)| u + v * eps)
                .collect()
        })
    }

    /// The field `x ↦ x_axis e_axis`, whose flow is not conformal for any metric here.
    pub fn axis_stretch(dim: usize, axis: usize) -> VectorField {
        VectorField::new(dim, move |x| {
            (0..dim)
                .map(|i| if i == axis { x[axis].clone() } else { Jet::scalar(0.0) })
                .collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_field_values() {
        let v = VectorField::affine(vec![0.0, 1.0, -1.0, 0.0], vec![0.5, 0.0]);
        assert_eq!(v.values(&[2.0, 3.0]), vec![3.5, -2.0]);
    }

    #[test]
    fn constant_field_broadcasts() {
        let x = Jet::variables(&[1.0, 2.0], 2);
        let c = ScalarField::constant(3.0).eval(&x);
        assert_eq!(c.dim(), 2);
        assert_eq!(c.gradient(), vec![0.0, 0.0]);
    }

    #[test]
    fn perturbation_adds() {
        let f = ScalarField::constant(1.0).plus_scaled(&ScalarField::half_square_norm(), 0.1);
        assert!((f.value(&[1.0, 1.0]) - 1.1).abs() < 1e-15);
    }
}
