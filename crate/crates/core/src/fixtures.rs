//! The worked examples of Randers gradient solitons, packaged as navigation data plus expected constants.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{GeometryError, Result};
use crate::fields::{ScalarField, VectorField};
use crate::finsler::{FinslerMetric, MeasureSpec};
use crate::jets::Jet;
use crate::randers::{from_navigation, NavigationData, RandersData};
use crate::riemann::RiemannMetric;

/// Registered fixture names.
pub const NAMES: [&str; 5] = ["gaussian", "gaussian-flat", "cigar", "shrinking", "expanding"];

/// Box in chart coordinates, optionally cut down to a ball in the coordinates from `ball.0` on.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub ball: Option<(usize, f64)>,
}

impl SampleDomain {
    pub fn contains(&self, x: &[f64]) -> bool {
        let in_box = x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a <= *v && *v <= *b);
        in_box
            && self.ball.map_or(true, |(start, r)| x[start..].iter().map(|v| v * v).sum::<f64>() <= r * r)
    }
}

/// Which residual bundles the fixture's declared constants are meant to satisfy.
#[derive(Clone, Debug, Default)]
pub struct Applicable {
    /// `Ric = κ_E F²` with `V = 0`
    pub einstein: Option<ScalarField>,
    /// An explicit soliton field `V` for the scalar `kappa`.
    pub drift: Option<VectorField>,
}

/// A gradient soliton `(M, F, e^{−f} dm_BH)` with navigation data `(h, W)`.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub nav: NavigationData,
    pub f: ScalarField,
    /// soliton scalar of `Ric_∞ = κF²`
    pub kappa: ScalarField,
    /// soliton scalar of `(h, f)`
    pub mu: ScalarField,
    /// constant S-curvature `σ`
    pub sigma: f64,
    pub flag_curvature: Option<ScalarField>,
    pub applicable: Applicable,
    pub domain: SampleDomain,
}

impl Fixture {
    pub fn dim(&self) -> usize {
        self.nav.dim()
    }

    pub fn metric(&self) -> FinslerMetric {
        self.nav.finsler_metric()
    }

    pub fn randers(&self) -> RandersData {
        from_navigation(&self.nav)
    }

    pub fn measure(&self) -> MeasureSpec {
        MeasureSpec::Weighted(self.f.clone())
    }

    /// True when the wind vanishes identically at the given points.
    pub fn is_riemannian(&self, xs: &[Vec<f64>]) -> bool {
        xs.iter().all(|x| self.nav.w().values(x).iter().all(|w| w.abs() < 1e-14))
    }

    pub fn perturbed(&self, p: Perturbation) -> Result<Fixture> {
        let mut out = self.clone();
        match p {
            Perturbation::F(eps) => out.f = self.f.plus_scaled(&ScalarField::half_square_norm(), eps),
            Perturbation::W(eps) => {
                let w = self.nav.w().plus_scaled(&VectorField::axis_stretch(self.dim(), 0), eps);
                out.nav = NavigationData::new(self.nav.h().clone(), w)?;
            }
            Perturbation::Kappa(eps) => {
                out.kappa = self.kappa.plus_scaled(&ScalarField::constant(1.0), eps);
                out.applicable.einstein =
                    self.applicable.einstein.as_ref().map(|k| k.plus_scaled(&ScalarField::constant(1.0), eps));
            }
            Perturbation::Mu(eps) => out.mu = self.mu.plus_scaled(&ScalarField::constant(1.0), eps),
        }
        out.name = format!("{}+{p}", self.name);
        Ok(out)
    }
}

/// Single-ingredient change used for negative controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Perturbation {
    /// `f + ε|x|²/2`
    F(f64),
    /// `W + ε x¹∂₁`
    W(f64),
    Kappa(f64),
    Mu(f64),
}

impl fmt::Display for Perturbation {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::F(e) => write!(out, "f:{e}"),
            Perturbation::W(e) => write!(out, "W:{e}"),
            Perturbation::Kappa(e) => write!(out, "kappa:{e}"),
            Perturbation::Mu(e) => write!(out, "mu:{e}"),
        }
    }
}

impl FromStr for Perturbation {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self> {
        let (field, eps) = s
            .split_once(':')
            .ok_or_else(|| GeometryError::Parameter(format!("perturbation `{s}` is not of the form field:eps")))?;
        let eps: f64 = eps
            .parse()
            .map_err(|_| GeometryError::Parameter(format!("perturbation size `{eps}` is not a number")))?;
        match field {
            "f" => Ok(Perturbation::F(eps)),
            "W" | "w" => Ok(Perturbation::W(eps)),
            "kappa" => Ok(Perturbation::Kappa(eps)),
            "mu" => Ok(Perturbation::Mu(eps)),
            other => Err(GeometryError::Parameter(format!("unknown perturbation field `{other}` (f, W, kappa, mu)"))),
        }
    }
}

/// Look a fixture up by name with its default parameters.
pub fn by_name(name: &str) -> Result<Fixture> {
    match name {
        "gaussian" => gaussian(1.0, &default_rotation(3), &[0.0; 3], 3),
        "gaussian-flat" => gaussian(1.0, &[0.0; 9], &[0.0; 3], 3),
        "cigar" => Ok(cigar()),
        "shrinking" => {
            let (q, d) = hopf_data(1.0, 0.0, 0.0, 0.5);
            shrinking_cylinder(2, 1.0, &q, &d)
        }
        "expanding" => {
            let (q, d) = hopf_data(1.0, 0.0, 0.0, 0.5);
            expanding_cylinder(2, &q, &d)
        }
        other => Err(GeometryError::Fixture(format!("unknown fixture `{other}`; known: {}", NAMES.join(", ")))),
    }
}

/// A skew matrix of norm about one half.
pub fn default_rotation(n: usize) -> Vec<f64> {
    let mut q = vec![0.0; n * n];
    let entries = [0.3, -0.4, 0.2];
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            let v = entries[k % entries.len()] / (1.0 + (k / entries.len()) as f64);
            q[i * n + j] = v;
            q[j * n + i] = -v;
            k += 1;
        }
    }
    q
}

fn check_skew(q: &[f64], n: usize) -> Result<()> {
    if q.len() != n * n {
        return Err(GeometryError::Dimension { expected: n * n, got: q.len() });
    }
    for i in 0..n {
        for j in 0..n {
            if (q[i * n + j] + q[j * n + i]).abs() > 1e-14 {
                return Err(GeometryError::Fixture(format!("Q is not skew-symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

fn op_norm_bound(q: &[f64]) -> f64 {
    q.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Euclidean `h`, `W = Qx + C`, `f = ρ|x|²/2`, `κ = ρ`, sampled in the ball where `‖W‖ ≤ 3/4`.
pub fn gaussian(rho: f64, q: &[f64], c: &[f64], n: usize) -> Result<Fixture> {
    check_skew(q, n)?;
    if c.len() != n {
        return Err(GeometryError::Dimension { expected: n, got: c.len() });
    }
    let c_norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rho != 0.0 && c_norm > 0.0 {
        return Err(GeometryError::Fixture("the f-condition forces C = 0 when ρ ≠ 0".into()));
    }
    if c_norm >= 0.75 {
        return Err(GeometryError::Fixture(format!("|C| = {c_norm} leaves no room for ‖W‖ < 1")));
    }
    let qn = op_norm_bound(q);
    let radius = if qn == 0.0 { 1.0 } else { (1.0f64).min((0.75 - c_norm) / qn) };
    let w = VectorField::affine(q.to_vec(), c.to_vec());
    let nav = NavigationData::new(RiemannMetric::euclidean(n), w)?;
    let f = ScalarField::new(move |x| x.iter().map(|v| v * v).sum::<Jet>() * (rho / 2.0));
    let drift = VectorField::affine((0..n * n).map(|k| if k % (n + 1) == 0 { rho } else { 0.0 }).collect(), vec![0.0; n]);
    let riemannian = qn == 0.0 && c_norm == 0.0;
    Ok(Fixture {
        name: if riemannian { "gaussian-flat".into() } else { "gaussian".into() },
        nav,
        f,
        kappa: ScalarField::constant(rho),
        mu: ScalarField::constant(rho),
        sigma: 0.0,
        flag_curvature: None,
        applicable: Applicable {
            einstein: (rho == 0.0 || !riemannian).then(|| ScalarField::constant(0.0)),
            drift: riemannian.then_some(drift),
        },
        domain: SampleDomain { lo: vec![-radius; n], hi: vec![radius; n], ball: Some((0, radius)) },
    })
}

/// `h = dt² + tanh²t dθ²`, `W = ∂_θ`, `f = −2 log cosh t`, steady with `K = 2/cosh²t`.
pub fn cigar() -> Fixture {
    let h = RiemannMetric::new(2, |x| {
        let th = x[0].tanh();
        vec![x[0].constant_like(1.0), Jet::scalar(0.0), Jet::scalar(0.0), &th * &th]
    });
    let w = VectorField::new(2, |_| vec![Jet::scalar(0.0), Jet::scalar(1.0)]);
    let nav = NavigationData::new(h, w).expect("cigar dimensions agree");
    let curvature = ScalarField::new(|x| x[0].cosh().powi(-2) * 2.0);
    Fixture {
        name: "cigar".into(),
        nav,
        f: ScalarField::new(|x| x[0].cosh().ln() * -2.0),
        kappa: ScalarField::constant(0.0),
        mu: ScalarField::constant(0.0),
        sigma: 0.0,
        flag_curvature: Some(curvature.clone()),
        applicable: Applicable { einstein: Some(curvature), drift: None },
        domain: SampleDomain { lo: vec![0.2, -PI], hi: vec![2.0, PI], ball: None },
    }
}

/// `Q = √μ [[0, p, q], [−p, 0, l], [−q, −l, 0]]` and `d = s (l, −q, p)` for `s = ±1`.
pub fn hopf_data(mu: f64, p: f64, q: f64, l: f64) -> (Vec<f64>, Vec<f64>) {
    let r = mu.sqrt();
    (vec![0.0, r * p, r * q, -r * p, 0.0, r * l, -r * q, -r * l, 0.0], vec![l, -q, p])
}

/// Residuals of `QᵀQ + μddᵀ = μ|d|²E` and `Qd = 0`, as maximum absolute entries.
pub fn killing_constraints(q: &[f64], d: &[f64], mu: f64) -> (f64, f64) {
    let k = d.len();
    let d2: f64 = d.iter().map(|v| v * v).sum();
    let mut gram: f64 = 0.0;
    let mut qd: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let qtq: f64 = (0..k).map(|r| q[r * k + i] * q[r * k + j]).sum();
            let e = if i == j { 1.0 } else { 0.0 };
            gram = gram.max((qtq + mu * d[i] * d[j] - mu * d2 * e).abs());
        }
        qd = qd.max((0..k).map(|j| q[i * k + j] * d[j]).sum::<f64>().abs());
    }
    (gram, qd)
}

/// Round sphere of curvature `μ` in projective coordinates on the upper hemisphere.
pub fn sphere_metric(k: usize, mu: f64) -> RiemannMetric {
    RiemannMetric::new(k, move |x| sphere_block(x, mu))
}

fn sphere_block(x: &[Jet], mu: f64) -> Vec<Jet> {
    let k = x.len();
    let r2: Jet = x.iter().map(|v| v * v).sum();
    let qi = (r2 * mu + 1.0).recip();
    let qi2 = &qi * &qi;
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let d = if i == j { qi.clone() } else { qi.constant_like(0.0) };
            out.push(d - &x[i] * &x[j] * &qi2 * mu);
        }
    }
    out
}

/// Inverse of [`sphere_metric`]: `(1 + μ|x|²)(δ + μ x xᵀ)`.
pub fn sphere_inverse(x: &[f64], mu: f64) -> Vec<f64> {
    let k = x.len();
    let q = 1.0 + mu * x.iter().map(|v| v * v).sum::<f64>();
    (0..k * k)
        .map(|ij| {
            let (i, j) = (ij / k, ij % k);
            q * (if i == j { 1.0 } else { 0.0 } + mu * x[i] * x[j])
        })
        .collect()
}

/// `Ŵ = Qx + μ⟨x, d⟩x + d` in projective coordinates.
pub fn sphere_killing(q: &[f64], d: &[f64], mu: f64) -> VectorField {
    let k = d.len();
    let (q, d) = (q.to_vec(), d.to_vec());
    VectorField::new(k, move |x| {
        let xd: Jet = x.iter().zip(&d).map(|(a, b)| a * *b).sum();
        (0..k)
            .map(|i| {
                let qx: Jet = (0..k).map(|j| &x[j] * q[i * k + j]).sum();
                qx + &xd * &x[i] * mu + d[i]
            })
            .collect()
    })
}

fn cylinder_checks(m: usize, q: &[f64], d: &[f64], mu: f64) -> Result<usize> {
    if m < 2 {
        return Err(GeometryError::Fixture(format!("m = {m}, need m ≥ 2")));
    }
    let k = 2 * m - 1;
    check_skew(q, k)?;
    if d.len() != k {
        return Err(GeometryError::Dimension { expected: k, got: d.len() });
    }
    let d2: f64 = d.iter().map(|v| v * v).sum();
    if d2 >= 1.0 {
        return Err(GeometryError::Fixture(format!("|d|² = {d2} must be below 1")));
    }
    let (gram, qd) = killing_constraints(q, d, mu);
    if gram > 1e-12 {
        return Err(GeometryError::Fixture(format!("QᵀQ + μddᵀ − μ|d|²E has an entry of size {gram:.3e}")));
    }
    if qd > 1e-12 {
        return Err(GeometryError::Fixture(format!("Qd has an entry of size {qd:.3e}")));
    }
    Ok(k)
}

fn lift_wind(k: usize, w_hat: VectorField) -> VectorField {
    VectorField::new(k + 1, move |x| {
        let mut out = vec![x[0].constant_like(0.0)];
        out.extend(w_hat.eval(&x[1..]));
        out
    })
}

/// `ℝ × S^{2m−1}` with `h² = dt² + ĥ²`, `W = Ŵ`, `f = (m−1)μt²`, `κ = 2(m−1)μ`.
pub fn shrinking_cylinder(m: usize, mu: f64, q: &[f64], d: &[f64]) -> Result<Fixture> {
    if mu <= 0.0 {
        return Err(GeometryError::Fixture(format!("curvature μ = {mu} must be positive")));
    }
    let k = cylinder_checks(m, q, d, mu)?;
    let h = RiemannMetric::new(k + 1, move |x| {
        let block = sphere_block(&x[1..], mu);
        let mut out = vec![x[0].constant_like(0.0); (k + 1) * (k + 1)];
        out[0] = x[0].constant_like(1.0);
        for i in 0..k {
            for j in 0..k {
                out[(i + 1) * (k + 1) + j + 1] = block[i * k + j].clone();
            }
        }
        out
    });
    let nav = NavigationData::new(h, lift_wind(k, sphere_killing(q, d, mu)))?;
    let mf = m as f64 - 1.0;
    let r = 2.0 / mu.sqrt();
    let mut lo = vec![-r; k + 1];
    let mut hi = vec![r; k + 1];
    lo[0] = -1.5;
    hi[0] = 1.5;
    Ok(Fixture {
        name: "shrinking".into(),
        nav,
        f: ScalarField::new(move |x| &x[0] * &x[0] * (mf * mu)),
        kappa: ScalarField::constant(2.0 * mf * mu),
        mu: ScalarField::constant(2.0 * mf * mu),
        sigma: 0.0,
        flag_curvature: None,
        applicable: Applicable::default(),
        domain: SampleDomain { lo, hi, ball: Some((1, r)) },
    })
}

/// `(0, 1) × S^{2m−1}` with `h² = dt² + t²ĥ²` (`μ = 1`), `W = Ŵ`, `f = −(m−1)t²`, `κ = −2(m−1)`.
pub fn expanding_cylinder(m: usize, q: &[f64], d: &[f64]) -> Result<Fixture> {
    let mu = 1.0;
    let k = cylinder_checks(m, q, d, mu)?;
    let h = RiemannMetric::new(k + 1, move |x| {
        let block = sphere_block(&x[1..], mu);
        let t2 = &x[0] * &x[0];
        let mut out = vec![x[0].constant_like(0.0); (k + 1) * (k + 1)];
        out[0] = x[0].constant_like(1.0);
        for i in 0..k {
            for j in 0..k {
                out[(i + 1) * (k + 1) + j + 1] = &block[i * k + j] * &t2;
            }
        }
        out
    });
    let nav = NavigationData::new(h, lift_wind(k, sphere_killing(q, d, mu)))?;
    let mf = m as f64 - 1.0;
    let r = 2.0;
    let mut lo = vec![-r; k + 1];
    let mut hi = vec![r; k + 1];
    lo[0] = 0.2;
    hi[0] = 0.9;
    Ok(Fixture {
        name: "expanding".into(),
        nav,
        f: ScalarField::new(move |x| &x[0] * &x[0] * -mf),
        kappa: ScalarField::constant(-2.0 * mf),
        mu: ScalarField::constant(-2.0 * mf),
        sigma: 0.0,
        flag_curvature: None,
        applicable: Applicable::default(),
        domain: SampleDomain { lo, hi, ball: Some((1, r)) },
    })
}
