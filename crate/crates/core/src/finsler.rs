//! Generic Finsler engine: everything is derived from `F(x, y)` through its spray.

use std::fmt;
use std::sync::Arc;

use crate::error::{GeometryError, Result};
use crate::fields::{ScalarField, VectorField};
use crate::jets::{check, fd_derivative_vec, FlagPoint, Jet};
use crate::linalg;
use crate::riemann::RiemannMetric;

type FinslerFn = dyn Fn(&[Jet], &[Jet]) -> Jet + Send + Sync;
type ChartPredicate = dyn Fn(&[f64]) -> bool + Send + Sync;

/// A chart of the manifold together with the region where it is valid.
#[derive(Clone)]
pub struct Chart {
    pub name: String,
    valid: Arc<ChartPredicate>,
}

impl Chart {
    pub fn new(name: &str, valid: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        Chart { name: name.to_string(), valid: Arc::new(valid) }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (self.valid)(x)
    }
}

/// A Finsler function evaluable on jets in `(x, y)`.
#[derive(Clone)]
pub struct FinslerMetric {
    dim: usize,
    f: Arc<FinslerFn>,
    bh_density: Option<ScalarField>,
    charts: Vec<Chart>,
}

impl fmt::Debug for FinslerMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FinslerMetric(dim = {})", self.dim)
    }
}

impl FinslerMetric {
    pub fn new(dim: usize, f: impl Fn(&[Jet], &[Jet]) -> Jet + Send + Sync + 'static) -> Self {
        FinslerMetric { dim, f: Arc::new(f), bh_density: None, charts: Vec::new() }
    }

    /// `F = √(h_ij y^i y^j)` with its Riemannian volume density.
    pub fn riemannian(h: &RiemannMetric) -> Self {
        let n = h.dim();
        let hf = h.clone();
        let hd = h.clone();
        FinslerMetric::new(n, move |x, y| {
            let hv = hf.eval(x);
            let mut s = Jet::scalar(0.0);
            for i in 0..n {
                for j in 0..n {
                    s = s + &hv[i * n + j] * &y[i] * &y[j];
                }
            }
            s.sqrt()
        })
        .with_bh_density(ScalarField::new(move |x| linalg::det_jets(&hd.eval(x), n).sqrt()))
    }

    /// Attach the Busemann-Hausdorff density used by [`MeasureSpec::BusemannHausdorff`].
    pub fn with_bh_density(mut self, sigma: ScalarField) -> Self {
        self.bh_density = Some(sigma);
        self
    }

    pub fn with_chart(mut self, chart: Chart) -> Self {
        self.charts.push(chart);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn bh_density(&self) -> Option<&ScalarField> {
        self.bh_density.as_ref()
    }

    /// Whether `x` lies in some declared chart (always true when none are declared).
    pub fn in_domain(&self, x: &[f64]) -> bool {
        self.charts.is_empty() || self.charts.iter().any(|c| c.contains(x))
    }

    pub fn eval_jets(&self, x: &[Jet], y: &[Jet]) -> Jet {
        (self.f)(x, y)
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let xs: Vec<Jet> = x.iter().map(|&v| Jet::scalar(v)).collect();
        let ys: Vec<Jet> = y.iter().map(|&v| Jet::scalar(v)).collect();
        (self.f)(&xs, &ys).value()
    }

    fn flag_jets(&self, p: &FlagPoint, order: usize) -> Result<Jet> {
        if p.dim() != self.dim {
            return Err(GeometryError::Dimension { expected: self.dim, got: p.dim() });
        }
        let z = Jet::variables(&p.coords(), order);
        let (x, y) = z.split_at(self.dim);
        let f = check(self.eval_jets(x, y))?;
        if !(f.value() > 0.0) {
            return Err(GeometryError::NonPositive { value: f.value() });
        }
        Ok(&f * &f)
    }
}

/// Volume form on the manifold.
#[derive(Clone, Debug)]
pub enum MeasureSpec {
    /// The metric's own Busemann-Hausdorff density.
    BusemannHausdorff,
    /// `e^{−f} dm_BH`
    Weighted(ScalarField),
    /// An explicit density `σ(x)`.
    Density(ScalarField),
}

impl MeasureSpec {
    /// `log σ(x)` evaluated on coordinate jets.
    pub fn log_density(&self, metric: &FinslerMetric, x: &[Jet]) -> Result<Jet> {
        let bh = || -> Result<Jet> {
            let sigma = metric
                .bh_density()
                .ok_or_else(|| GeometryError::Parameter("metric has no Busemann-Hausdorff density".into()))?;
            let s = check(sigma.eval(x))?;
            if !(s.value() > 0.0) {
                return Err(GeometryError::Domain { primitive: "density" });
            }
            check(s.ln())
        };
        match self {
            MeasureSpec::BusemannHausdorff => bh(),
            MeasureSpec::Weighted(f) => Ok(bh()? - check(f.eval(x))?),
            MeasureSpec::Density(sigma) => {
                let s = check(sigma.eval(x))?;
                if !(s.value() > 0.0) {
                    return Err(GeometryError::Domain { primitive: "density" });
                }
                check(s.ln())
            }
        }
    }
}

/// How derivatives are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffMode {
    #[default]
    Jet,
    Fd,
}

/// The parameter `N` of the weighted Ricci curvature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RicciWeight {
    Finite(f64),
    Infinite,
}

/// Curvature data at one flag. Matrices are row-major; `riemann[i n + k] = R^i_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureBundle {
    pub f: f64,
    pub g: Vec<f64>,
    pub g_inv: Vec<f64>,
    /// `C_ijk` at `(i n + j) n + k`
    pub cartan: Vec<f64>,
    pub spray: Vec<f64>,
    pub riemann: Vec<f64>,
    pub ricci: f64,
}

/// Jets of `F²`, `g`, `g^{-1}` and the spray around a flag, in the `2n` variables `(x, y)`.
struct FlagJets {
    n: usize,
    f2: Jet,
    g: Vec<Jet>,
    ginv: Vec<Jet>,
    spray: Vec<Jet>,
}

impl FlagJets {
    fn new(metric: &FinslerMetric, p: &FlagPoint, order: usize) -> Result<Self> {
        let n = metric.dim();
        let f2 = metric.flag_jets(p, order)?;
        let mut g = Vec::with_capacity(n * n);
        for i in 0..n {
            let di = f2.partial(n + i);
            for j in 0..n {
                g.push(di.partial(n + j) * 0.5);
            }
        }
        let gv: Vec<f64> = g.iter().map(Jet::value).collect();
        linalg::check_positive_definite(&gv, n)?;
        let (ginv, _) = linalg::inverse_jets(&g, n)?;
        let yj: Vec<Jet> = (0..n).map(|m| Jet::variable(2 * n, order - 2, n + m, p.y[m])).collect();
        let dx: Vec<Jet> = (0..n).map(|m| f2.partial(m)).collect();
        let bracket: Vec<Jet> = (0..n)
            .map(|l| {
                let mixed: Jet = (0..n).map(|m| dx[m].partial(n + l) * &yj[m]).sum();
                mixed - &dx[l]
            })
            .collect();
        let spray = (0..n)
            .map(|i| (0..n).map(|l| &ginv[i * n + l] * &bracket[l]).sum::<Jet>() * 0.25)
            .collect();
        Ok(FlagJets { n, f2, g, ginv, spray })
    }

    fn spray_values(&self) -> Vec<f64> {
        self.spray.iter().map(Jet::value).collect()
    }

    /// `(G, ∂G/∂x, ∂G/∂y)` with `dx[i n + k] = ∂G^i/∂x^k`.
    fn spray_first(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut dx = vec![0.0; n * n];
        let mut dy = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                dx[i * n + k] = self.spray[i].partial_value(&[k]);
                dy[i * n + k] = self.spray[i].partial_value(&[n + k]);
            }
        }
        (self.spray_values(), dx, dy)
    }

    fn riemann(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let g = &self.spray;
        let gv = self.spray_values();
        let mut r = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let mut acc = 2.0 * g[i].partial_value(&[k]);
                for j in 0..n {
                    acc -= y[j] * g[i].partial_value(&[j, n + k]);
                    acc += 2.0 * gv[j] * g[i].partial_value(&[n + j, n + k]);
                    acc -= g[i].partial_value(&[n + j]) * g[j].partial_value(&[n + k]);
                }
                r[i * n + k] = acc;
            }
        }
        r
    }

    fn bundle(&self, y: &[f64]) -> CurvatureBundle {
        let n = self.n;
        let mut cartan = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    cartan[(i * n + j) * n + k] = 0.25 * self.f2.partial_value(&[n + i, n + j, n + k]);
                }
            }
        }
        let riemann = self.riemann(y);
        let ricci = (0..n).map(|i| riemann[i * n + i]).sum();
        CurvatureBundle {
            f: self.f2.value().sqrt(),
            g: self.g.iter().map(Jet::value).collect(),
            g_inv: self.ginv.iter().map(Jet::value).collect(),
            cartan,
            spray: self.spray_values(),
            riemann,
            ricci,
        }
    }

    /// S-curvature as an order-`k` jet in `(x, y)`, where the frame has order `k + 3`.
    fn s_jet(&self, metric: &FinslerMetric, measure: &MeasureSpec, p: &FlagPoint) -> Result<Jet> {
        let n = self.n;
        let order = self.spray[0].order();
        let div: Jet = (0..n).map(|i| self.spray[i].partial(n + i)).sum();
        let xj: Vec<Jet> = (0..n).map(|i| Jet::variable(2 * n, order, i, p.x[i])).collect();
        let ls = measure.log_density(metric, &xj)?;
        let yj: Vec<Jet> = (0..n).map(|m| Jet::variable(2 * n, order, n + m, p.y[m])).collect();
        let drift: Jet = (0..n).map(|i| &yj[i] * &ls.partial(i)).sum();
        Ok(div - drift)
    }
}

/// Everything the soliton checks need at one flag.
#[derive(Clone, Debug)]
pub struct FlagAnalysis {
    pub point: FlagPoint,
    pub bundle: CurvatureBundle,
    pub tau: Option<f64>,
    pub s: Option<f64>,
    pub s_dot: Option<f64>,
}

impl FlagAnalysis {
    pub fn new(metric: &FinslerMetric, measure: Option<&MeasureSpec>, p: &FlagPoint, mode: DiffMode) -> Result<Self> {
        match mode {
            DiffMode::Jet => analyse_jet(metric, measure, p),
            DiffMode::Fd => analyse_fd(metric, measure, p),
        }
    }

    pub fn f2(&self) -> f64 {
        self.bundle.f * self.bundle.f
    }

    pub fn weighted_ricci(&self, weight: RicciWeight) -> Result<f64> {
        let n = self.point.dim() as f64;
        let (s, s_dot) = match (self.s, self.s_dot) {
            (Some(s), Some(d)) => (s, d),
            _ => return Err(GeometryError::Parameter("weighted Ricci needs a measure".into())),
        };
        match weight {
            RicciWeight::Infinite => Ok(self.bundle.ricci + s_dot),
            RicciWeight::Finite(big_n) if big_n > n => Ok(self.bundle.ricci + s_dot - s * s / (big_n - n)),
            RicciWeight::Finite(big_n) => Err(GeometryError::Parameter(format!(
                "weighted Ricci needs N > n, got N = {big_n}, n = {n}"
            ))),
        }
    }
}

fn analyse_jet(metric: &FinslerMetric, measure: Option<&MeasureSpec>, p: &FlagPoint) -> Result<FlagAnalysis> {
    let fj = FlagJets::new(metric, p, 4)?;
    let bundle = fj.bundle(&p.y);
    let (mut tau, mut s, mut s_dot) = (None, None, None);
    if let Some(m) = measure {
        let n = p.dim();
        let sj = fj.s_jet(metric, m, p)?;
        let gv = fj.spray_values();
        let mut sd = 0.0;
        for i in 0..n {
            sd += p.y[i] * sj.partial_value(&[i]) - 2.0 * gv[i] * sj.partial_value(&[n + i]);
        }
        s = Some(sj.value());
        s_dot = Some(sd);
        tau = Some(distortion_from(&bundle.g, n, metric, m, &p.x)?);
    }
    Ok(FlagAnalysis { point: p.clone(), bundle, tau, s, s_dot })
}

fn distortion_from(g: &[f64], n: usize, metric: &FinslerMetric, m: &MeasureSpec, x: &[f64]) -> Result<f64> {
    let det = linalg::det(g, n);
    if !(det > 0.0) {
        return Err(GeometryError::Domain { primitive: "det" });
    }
    let xs: Vec<Jet> = x.iter().map(|&v| Jet::scalar(v)).collect();
    Ok(0.5 * det.ln() - m.log_density(metric, &xs)?.value())
}

fn analyse_fd(metric: &FinslerMetric, measure: Option<&MeasureSpec>, p: &FlagPoint) -> Result<FlagAnalysis> {
    let n = p.dim();
    let z0 = p.coords();
    let f2 = |z: &[f64]| {
        let f = metric.eval(&z[..n], &z[n..]);
        vec![f * f]
    };
    let unit = |vars: &[usize]| {
        let mut m = vec![0usize; 2 * n];
        for &v in vars {
            m[v] += 1;
        }
        m
    };
    let d = |vars: &[usize]| -> Result<f64> { Ok(fd_derivative_vec(&f2, &z0, &unit(vars), None)?.0[0]) };

    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = 0.5 * d(&[n + i, n + j])?;
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    linalg::check_positive_definite(&g, n)?;
    let (g_inv, _) = linalg::inverse(&g, n)?;
    let mut bracket = vec![0.0; n];
    for l in 0..n {
        let mut acc = -d(&[l])?;
        for m in 0..n {
            acc += d(&[m, n + l])? * p.y[m];
        }
        bracket[l] = acc;
    }
    let spray: Vec<f64> = (0..n)
        .map(|i| 0.25 * (0..n).map(|l| g_inv[i * n + l] * bracket[l]).sum::<f64>())
        .collect();
    let mut cartan = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                cartan[(i * n + j) * n + k] = 0.25 * d(&[n + i, n + j, n + k])?;
            }
        }
    }

    // R from finite differences of the (jet-evaluated) spray
    let spray_at = |z: &[f64]| -> Vec<f64> {
        match FlagPoint::new(z[..n].to_vec(), z[n..].to_vec()).and_then(|q| FlagJets::new(metric, &q, 2)) {
            Ok(fj) => fj.spray_values(),
            Err(_) => vec![f64::NAN; n],
        }
    };
    let dg = |vars: &[usize]| -> Result<Vec<f64>> { Ok(fd_derivative_vec(&spray_at, &z0, &unit(vars), None)?.0) };
    let g0 = spray_at(&z0);
    let mut dgx = Vec::with_capacity(n);
    let mut dgy = Vec::with_capacity(n);
    for k in 0..n {
        dgx.push(dg(&[k])?);
        dgy.push(dg(&[n + k])?);
    }
    let mut riemann = vec![0.0; n * n];
    for k in 0..n {
        let mut mixed = Vec::with_capacity(n);
        let mut yy = Vec::with_capacity(n);
        for j in 0..n {
            mixed.push(dg(&[j, n + k])?);
            yy.push(dg(&[n + j, n + k])?);
        }
        for i in 0..n {
            let mut acc = 2.0 * dgx[k][i];
            for j in 0..n {
                acc -= p.y[j] * mixed[j][i];
                acc += 2.0 * g0[j] * yy[j][i];
                acc -= dgy[j][i] * dgy[k][j];
            }
            riemann[i * n + k] = acc;
        }
    }
    let ricci = (0..n).map(|i| riemann[i * n + i]).sum();
    let bundle = CurvatureBundle {
        f: f2(&z0)[0].sqrt(),
        g,
        g_inv,
        cartan,
        spray,
        riemann,
        ricci,
    };

    let (mut tau, mut s, mut s_dot) = (None, None, None);
    if let Some(m) = measure {
        let log_sigma = |z: &[f64]| -> Vec<f64> {
            let xs: Vec<Jet> = z[..n].iter().map(|&v| Jet::scalar(v)).collect();
            vec![m.log_density(metric, &xs).map(|j| j.value()).unwrap_or(f64::NAN)]
        };
        let mut sv = 0.0;
        for i in 0..n {
            sv += dgy[i][i] - p.y[i] * fd_derivative_vec(&log_sigma, &z0, &unit(&[i]), None)?.0[0];
        }
        let s_at = |z: &[f64]| -> Vec<f64> {
            let r = FlagPoint::new(z[..n].to_vec(), z[n..].to_vec())
                .and_then(|q| {
                    let fj = FlagJets::new(metric, &q, 3)?;
                    fj.s_jet(metric, m, &q)
                })
                .map(|j| j.value());
            vec![r.unwrap_or(f64::NAN)]
        };
        let mut sd = 0.0;
        for i in 0..n {
            sd += p.y[i] * fd_derivative_vec(&s_at, &z0, &unit(&[i]), None)?.0[0];
            sd -= 2.0 * g0[i] * fd_derivative_vec(&s_at, &z0, &unit(&[n + i]), None)?.0[0];
        }
        s = Some(sv);
        s_dot = Some(sd);
        tau = Some(distortion_from(&bundle.g, n, metric, m, &p.x)?);
    }
    Ok(FlagAnalysis { point: p.clone(), bundle, tau, s, s_dot })
}

/// `g_ij = ½ ∂²F²/∂y^i∂y^j`.
pub fn fundamental_tensor(metric: &FinslerMetric, p: &FlagPoint) -> Result<Vec<f64>> {
    let n = metric.dim();
    let f2 = metric.flag_jets(p, 2)?;
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = 0.5 * f2.partial_value(&[n + i, n + j]);
        }
    }
    linalg::check_positive_definite(&g, n)?;
    Ok(g)
}

/// Spray coefficients `G^i`.
pub fn spray(metric: &FinslerMetric, p: &FlagPoint) -> Result<Vec<f64>> {
    Ok(FlagJets::new(metric, p, 2)?.spray_values())
}

/// Full curvature bundle by jets.
pub fn curvature_bundle(metric: &FinslerMetric, p: &FlagPoint) -> Result<CurvatureBundle> {
    Ok(FlagJets::new(metric, p, 4)?.bundle(&p.y))
}

/// `R^i_k` stored at `i n + k`.
pub fn riemann_curvature(metric: &FinslerMetric, p: &FlagPoint) -> Result<Vec<f64>> {
    Ok(curvature_bundle(metric, p)?.riemann)
}

pub fn ricci(metric: &FinslerMetric, p: &FlagPoint) -> Result<f64> {
    Ok(curvature_bundle(metric, p)?.ricci)
}

/// `τ = log(√det g / σ)`.
pub fn distortion(metric: &FinslerMetric, m: &MeasureSpec, p: &FlagPoint) -> Result<f64> {
    let g = fundamental_tensor(metric, p)?;
    distortion_from(&g, p.dim(), metric, m, &p.x)
}

pub fn s_curvature(metric: &FinslerMetric, m: &MeasureSpec, p: &FlagPoint) -> Result<f64> {
    let fj = FlagJets::new(metric, p, 3)?;
    Ok(fj.s_jet(metric, m, p)?.value())
}

/// Derivative of the S-curvature along the geodesic through the flag.
pub fn s_dot(metric: &FinslerMetric, m: &MeasureSpec, p: &FlagPoint) -> Result<f64> {
    FlagAnalysis::new(metric, Some(m), p, DiffMode::Jet)?
        .s_dot
        .ok_or(GeometryError::Parameter("missing measure".into()))
}

/// `Ric_N = Ric + Ṡ − S²/(N − n)`; `Ric_∞ = Ric + Ṡ`.
pub fn weighted_ricci(metric: &FinslerMetric, m: &MeasureSpec, p: &FlagPoint, weight: RicciWeight) -> Result<f64> {
    if let RicciWeight::Finite(big_n) = weight {
        if big_n <= p.dim() as f64 {
            return Err(GeometryError::Parameter(format!("weighted Ricci needs N > n, got N = {big_n}")));
        }
    }
    FlagAnalysis::new(metric, Some(m), p, DiffMode::Jet)?.weighted_ricci(weight)
}

/// Lie derivative of `F²` along the complete lift of `V`.
pub fn lie_f2(metric: &FinslerMetric, v: &VectorField, p: &FlagPoint) -> Result<f64> {
    let n = metric.dim();
    let z = Jet::variables(&p.coords(), 1);
    let vj = v.eval(&z[..n]);
    let value: Vec<f64> = vj.iter().map(Jet::value).collect();
    let mut jac = vec![0.0; n * n];
    for i in 0..n {
        let c = check(vj[i].clone())?;
        for j in 0..n {
            jac[i * n + j] = c.partial_value(&[j]);
        }
    }
    lie_f2_local(metric, &LocalField { value, jacobian: jac }, p)
}

/// Value and first derivatives of a vector field at one point; `jacobian[i n + j] = ∂_j V^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalField {
    pub value: Vec<f64>,
    pub jacobian: Vec<f64>,
}

/// `ℒ_V̂ F² = V^i ∂F²/∂x^i + y^j ∂_j V^i ∂F²/∂y^i` from the 1-jet of `V`.
pub fn lie_f2_local(metric: &FinslerMetric, v: &LocalField, p: &FlagPoint) -> Result<f64> {
    let n = metric.dim();
    let f2 = metric.flag_jets(p, 1)?;
    let grad = f2.gradient();
    let mut s = 0.0;
    for i in 0..n {
        s += v.value[i] * grad[i];
        for j in 0..n {
            s += p.y[j] * v.jacobian[i * n + j] * grad[n + i];
        }
    }
    Ok(s)
}

/// Scalar flag-curvature fit `R^i_k ≈ K (F² δ^i_k − F F_{y^k} y^i)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlagCurvatureFit {
    pub k: f64,
    /// ‖R − K M‖ / ‖R‖
    pub residual: f64,
    pub flat: bool,
}

pub fn flag_curvature_fit(metric: &FinslerMetric, p: &FlagPoint) -> Result<FlagCurvatureFit> {
    let b = curvature_bundle(metric, p)?;
    Ok(fit_flag_curvature(&b, &p.y))
}

pub fn fit_flag_curvature(b: &CurvatureBundle, y: &[f64]) -> FlagCurvatureFit {
    let n = y.len();
    let f2 = b.f * b.f;
    let yl: Vec<f64> = (0..n).map(|k| (0..n).map(|l| b.g[k * n + l] * y[l]).sum()).collect();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            m[i * n + k] = if i == k { f2 } else { 0.0 } - yl[k] * y[i];
        }
    }
    let rr: f64 = b.riemann.iter().map(|r| r * r).sum::<f64>().sqrt();
    if rr <= 1e-12 * f2 {
        return FlagCurvatureFit { k: 0.0, residual: 0.0, flat: true };
    }
    let rm: f64 = b.riemann.iter().zip(&m).map(|(r, q)| r * q).sum();
    let mm: f64 = m.iter().map(|q| q * q).sum();
    let k = rm / mm;
    let mis: f64 = b.riemann.iter().zip(&m).map(|(r, q)| (r - k * q).powi(2)).sum::<f64>().sqrt();
    FlagCurvatureFit { k, residual: mis / rr, flat: false }
}

/// Local gradient field `V = grad_ĝ ψ` with `ĝ = g_Y`, `ψ = τ(·, Y)` for a
/// vector field `Y` extending `y` that is geodesic to second order at `x`.
///
/// Its complete lift satisfies `ℒ_V̂ F²(x, y) = 2 Ṡ(x, y)`.
pub fn gradient_lift(metric: &FinslerMetric, m: &MeasureSpec, p: &FlagPoint) -> Result<LocalField> {
    let n = metric.dim();
    let fj = FlagJets::new(metric, p, 4)?;
    let (g0, gx, gy) = fj.spray_first();
    let y0 = &p.y;
    let r2: f64 = y0.iter().map(|v| v * v).sum();
    // Y(x0 + u) = y0 + A u + ½ B(u, u)
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            a[i * n + k] = -2.0 * g0[i] * y0[k] / r2;
        }
    }
    let mut q = vec![0.0; n];
    for i in 0..n {
        for k in 0..n {
            q[i] += -2.0 * gx[i * n + k] * y0[k] + 4.0 * gy[i * n + k] * g0[k] + 2.0 * a[i * n + k] * g0[k];
        }
    }
    let z = Jet::variables(&vec![0.0; 2 * n], 4);
    let (u, v) = z.split_at(n);
    let proj: Jet = (0..n).map(|k| &u[k] * y0[k]).sum::<Jet>() * (1.0 / r2);
    let xs: Vec<Jet> = (0..n).map(|i| &u[i] + p.x[i]).collect();
    let ys: Vec<Jet> = (0..n)
        .map(|i| {
            let lin: Jet = (0..n).map(|k| &u[k] * a[i * n + k]).sum();
            &v[i] + lin + &proj * &proj * (0.5 * q[i]) + y0[i]
        })
        .collect();
    let f = check(metric.eval_jets(&xs, &ys))?;
    let f2 = &f * &f;
    let mut gh = Vec::with_capacity(n * n);
    for i in 0..n {
        let di = f2.partial(n + i);
        for j in 0..n {
            gh.push((di.partial(n + j) * 0.5).restrict_below(n));
        }
    }
    let det = linalg::det_jets(&gh, n);
    let xs2: Vec<Jet> = xs.iter().map(|c| c.truncate(2)).collect();
    let psi = check(det.ln() * 0.5 - m.log_density(metric, &xs2)?)?;
    let (ginv, _) = linalg::inverse_jets(&gh, n)?;
    let dpsi: Vec<Jet> = (0..n).map(|k| psi.partial(k)).collect();
    let vf = linalg::mat_vec(&ginv, &dpsi);
    let value = vf.iter().map(Jet::value).collect();
    let mut jacobian = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            jacobian[i * n + j] = vf[i].partial_value(&[j]);
        }
    }
    Ok(LocalField { value, jacobian })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn euclid(n: usize) -> FinslerMetric {
        FinslerMetric::riemannian(&RiemannMetric::euclidean(n))
    }

    fn flag(x: &[f64], y: &[f64]) -> FlagPoint {
        FlagPoint::new(x.to_vec(), y.to_vec()).unwrap()
    }

    fn sphere(mu: f64, n: usize) -> RiemannMetric {
        RiemannMetric::new(n, move |x| {
            let r2: Jet = x.iter().map(|v| v * v).sum();
            let qi = (r2 * mu + 1.0).recip();
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
    fn euclidean_flat() {
        let p = flag(&[0.1, 0.2, 0.3], &[1.0, -1.0, 0.5]);
        let b = curvature_bundle(&euclid(3), &p).unwrap();
        assert!(b.spray.iter().all(|g| g.abs() < 1e-15));
        assert!(b.riemann.iter().all(|r| r.abs() < 1e-14));
        let fit = flag_curvature_fit(&euclid(3), &p).unwrap();
        assert!(fit.flat && fit.k == 0.0 && fit.residual == 0.0);
        let bh = MeasureSpec::BusemannHausdorff;
        assert!(s_curvature(&euclid(3), &bh, &p).unwrap().abs() < 1e-15);
        assert!(distortion(&euclid(3), &bh, &p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn sphere_constant_curvature() {
        let h = sphere(1.0, 3);
        let metric = FinslerMetric::riemannian(&h);
        let p = flag(&[0.3, -0.2, 0.5], &[0.7, 0.1, -0.4]);
        let h2 = h.norm2(&p.x, &p.y);
        assert_relative_eq!(ricci(&metric, &p).unwrap(), 2.0 * h2, max_relative = 1e-10);
        let fit = flag_curvature_fit(&metric, &p).unwrap();
        assert_relative_eq!(fit.k, 1.0, max_relative = 1e-10);
        assert!(fit.residual < 1e-8);
    }

    #[test]
    fn riemannian_spray_matches_christoffel() {
        let h = sphere(0.7, 3);
        let metric = FinslerMetric::riemannian(&h);
        let p = flag(&[0.3, -0.2, 0.5], &[0.7, 0.1, -0.4]);
        let gamma = crate::riemann::christoffel(&h, &p.x).unwrap();
        let g = spray(&metric, &p).unwrap();
        for i in 0..3 {
            let expect = 0.5 * (0..3)
                .flat_map(|j| (0..3).map(move |k| (j, k)))
                .map(|(j, k)| gamma[(i * 3 + j) * 3 + k] * p.y[j] * p.y[k])
                .sum::<f64>();
            assert_relative_eq!(g[i], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn weighted_riemannian_measure() {
        let h = sphere(1.0, 2);
        let metric = FinslerMetric::riemannian(&h);
        let f = ScalarField::new(|x| x[0].sin() + &x[1] * &x[1]);
        let m = MeasureSpec::Weighted(f.clone());
        let p = flag(&[0.2, 0.4], &[0.3, -0.8]);
        assert_relative_eq!(distortion(&metric, &m, &p).unwrap(), f.value(&p.x), epsilon = 1e-12);
        let df = 0.2f64.cos() * 0.3 + 2.0 * 0.4 * -0.8;
        assert_relative_eq!(s_curvature(&metric, &m, &p).unwrap(), df, epsilon = 1e-12);
        let hess = crate::riemann::hessian(&h, &f, &p.x, &p.y).unwrap();
        assert_relative_eq!(s_dot(&metric, &m, &p).unwrap(), hess, epsilon = 1e-11);
    }

    #[test]
    fn weighted_ricci_rejects_small_n() {
        let p = flag(&[0.0, 0.0], &[1.0, 0.0]);
        let r = weighted_ricci(&euclid(2), &MeasureSpec::BusemannHausdorff, &p, RicciWeight::Finite(2.0));
        assert!(matches!(r, Err(GeometryError::Parameter(_))));
    }

    #[test]
    fn lie_f2_killing_and_zero() {
        let p = flag(&[0.3, -0.1], &[0.4, 0.9]);
        let rot = VectorField::affine(vec![0.0, 1.0, -1.0, 0.0], vec![0.2, 0.0]);
        assert!(lie_f2(&euclid(2), &rot, &p).unwrap().abs() < 1e-15);
        assert_eq!(lie_f2(&euclid(2), &VectorField::zero(2), &p).unwrap(), 0.0);
    }

    #[test]
    fn fd_agrees_with_jets_on_sphere() {
        let h = sphere(1.0, 2);
        let metric = FinslerMetric::riemannian(&h);
        let m = MeasureSpec::Weighted(ScalarField::new(|x| &x[0] * &x[1]));
        let p = flag(&[0.2, 0.4], &[0.3, -0.8]);
        let a = FlagAnalysis::new(&metric, Some(&m), &p, DiffMode::Jet).unwrap();
        let b = FlagAnalysis::new(&metric, Some(&m), &p, DiffMode::Fd).unwrap();
        assert_relative_eq!(a.bundle.ricci, b.bundle.ricci, max_relative = 1e-6);
        assert_relative_eq!(a.s_dot.unwrap(), b.s_dot.unwrap(), max_relative = 1e-6);
        assert_relative_eq!(a.s.unwrap(), b.s.unwrap(), max_relative = 1e-6);
    }
}
