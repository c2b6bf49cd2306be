//! Residual checkers for almost Ricci solitons and their Randers characterizations.

use crate::error::{GeometryError, Result};
use crate::fields::{ScalarField, VectorField};
use crate::finsler::{self, FinslerMetric, FlagAnalysis, DiffMode, MeasureSpec, RicciWeight};
use crate::jets::{check, FlagPoint};
use crate::linalg;
use crate::randers::{beta_frame, nav_frame, BetaDerivatives, NavigationData, NavigationTensors, RandersData};
use crate::report::{self, Accumulator, ResidualReport, Verdict};
use crate::riemann;

/// The vector field in `2Ric + ℒ_V̂F² = 2κF²`.
#[derive(Clone, Debug)]
pub enum SolitonField {
    /// A globally given field.
    Vector(VectorField),
    /// The local gradient field built from a measure at each flag.
    GradientLift(MeasureSpec),
}

/// A metric together with the data that should make it a soliton.
#[derive(Clone, Debug)]
pub struct SolitonCandidate {
    pub metric: FinslerMetric,
    pub field: SolitonField,
    pub kappa: ScalarField,
}

impl SolitonCandidate {
    pub fn residual(&self, p: &FlagPoint) -> Result<f64> {
        match &self.field {
            SolitonField::GradientLift(m) => gradient_soliton_residual(&self.metric, m, &self.kappa, p),
            v => almost_soliton_residual(&self.metric, v, &self.kappa, p),
        }
    }
}

/// `(2Ric + ℒ_V̂F² − 2κF²) / F²`.
pub fn almost_soliton_residual(metric: &FinslerMetric, v: &SolitonField, kappa: &ScalarField, p: &FlagPoint) -> Result<f64> {
    let b = finsler::curvature_bundle(metric, p)?;
    let lie = match v {
        SolitonField::Vector(v) => finsler::lie_f2(metric, v, p)?,
        SolitonField::GradientLift(m) => finsler::lie_f2_local(metric, &finsler::gradient_lift(metric, m, p)?, p)?,
    };
    let f2 = b.f * b.f;
    Ok((2.0 * b.ricci + lie - 2.0 * kappa.value(&p.x) * f2) / f2)
}

/// `(Ric_∞ − κF²) / F²`.
pub fn gradient_soliton_residual(metric: &FinslerMetric, m: &MeasureSpec, kappa: &ScalarField, p: &FlagPoint) -> Result<f64> {
    let a = FlagAnalysis::new(metric, Some(m), p, DiffMode::Jet)?;
    let f2 = a.f2();
    Ok((a.weighted_ricci(RicciWeight::Infinite)? - kappa.value(&p.x) * f2) / f2)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn normalized(y: &[f64], metric: &[f64]) -> Vec<f64> {
    let r = linalg::quad(metric, y, y).sqrt();
    y.iter().map(|v| v / r).collect()
}

/// Collects named residual rows over flags and turns them into reports.
struct Bundle {
    accs: Vec<Accumulator>,
}

impl Bundle {
    fn new(specs: &[(&str, &str)], tol: f64) -> Self {
        Bundle { accs: specs.iter().map(|(n, f)| Accumulator::new(n, f, tol)).collect() }
    }

    fn push(&mut self, k: usize, r: f64) {
        self.accs[k].push(r, 1.0);
    }

    fn finish(self) -> Vec<ResidualReport> {
        self.accs.iter().map(Accumulator::finish).collect()
    }
}

fn all_not_applicable(specs: &[(&str, &str)], tol: f64, why: &str) -> Vec<ResidualReport> {
    specs.iter().map(|(n, f)| ResidualReport::not_applicable(n, f, tol, why)).collect()
}

const CONFORMAL_DRIFT: [(&str, &str); 5] = [
    ("conformal-V", "V_{i;j} + V_{j;i} = 4c a_ij"),
    ("isotropic-S", "e_00 = 2σ(α² − β²)"),
    (
        "alpha-ricci",
        "αRic = (κ − 2c)(α² + β²) + t^i_i α² + 2t_00 − (n−1)σ²(3α² − β²) + 2(n−1)σ_0 β − (n−1)(s_0² + s_{0;0})",
    ),
    ("sigma-drift", "3(n−1)σ_0 = 2cβ − ℒ_V̂β"),
    ("s-divergence", "s^i_{0;i} = (κ − c)β + (n−1)(σ_0/2 + t_0 + 2σ s_0 + σ²β) − ℒ_V̂β/2"),
];

/// `(α, β)` characterization of `2Ric + ℒ_V̂F² = 2κF²`; `c` and `σ` are recovered pointwise.
pub fn conformal_drift_characterization(
    rd: &RandersData,
    v: &VectorField,
    kappa: &ScalarField,
    flags: &[FlagPoint],
    tol: f64,
) -> Result<Vec<ResidualReport>> {
    let n = rd.dim();
    let nf = n as f64 - 1.0;
    let mut bundle = Bundle::new(&CONFORMAL_DRIFT, tol);
    let mut beta_seen = false;
    let (mut c_lo, mut c_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in flags {
        let (frame, b) = beta_frame(rd, &p.x)?;
        let y = normalized(&p.y, &riemann::values(frame.metric()));
        let bd = BetaDerivatives::in_frame(&frame, &b, &y)?;
        beta_seen |= bd.b.iter().any(|c| c.abs() > 1e-14);
        let vj = v.eval(frame.coords()).into_iter().map(check).collect::<Result<Vec<_>>>()?;
        let vc = riemann::values(&frame.cov_1form(&frame.lower(&vj)));
        let vv = riemann::values(&vj);
        let c = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| bd.a_inv[i * n + j] * vc[i * n + j]).sum::<f64>()
            / (2.0 * n as f64);
        c_lo = c_lo.min(c);
        c_hi = c_hi.max(c);
        let mut conf: f64 = 0.0;
        let mut lb = 0.0;
        for i in 0..n {
            for j in 0..n {
                conf = conf.max((vc[i * n + j] + vc[j * n + i] - 4.0 * c * bd.a[i * n + j]).abs());
                lb += y[j] * (vv[i] * bd.b_cov[j * n + i] + bd.b_up[i] * vc[i * n + j]);
            }
        }
        let k = kappa.value(&p.x);
        let (beta, sg, s0) = (bd.beta, bd.sigma, bd.s0);
        let sig0 = bd.sigma0();
        bundle.push(0, conf);
        bundle.push(1, bd.e00 - 2.0 * sg * (1.0 - beta * beta));
        let ric = (k - 2.0 * c) * (1.0 + beta * beta) + bd.t_trace + 2.0 * bd.t00 - nf * sg * sg * (3.0 - beta * beta)
            + 2.0 * nf * sig0 * beta
            - nf * (s0 * s0 + bd.s0_0);
        bundle.push(2, bd.alpha_ric - ric);
        bundle.push(3, 3.0 * nf * sig0 - (2.0 * c * beta - lb));
        let si0i = (k - c) * beta + nf * (0.5 * sig0 + bd.t0 + 2.0 * sg * s0 + sg * sg * beta) - 0.5 * lb;
        bundle.push(4, bd.s_i0_i - si0i);
    }
    if !beta_seen {
        return Ok(all_not_applicable(&CONFORMAL_DRIFT, tol, "β vanishes on every sample: the metric is Riemannian"));
    }
    let note = format!("fitted c in [{c_lo:.6e}, {c_hi:.6e}]");
    Ok(bundle.finish().into_iter().map(|r| r.with_note(note.clone())).collect())
}

const NAVIGATION_DRIFT: [(&str, &str); 4] = [
    ("einstein-h", "hRic = μ h²"),
    ("conformal-W", "W_{i:j} + W_{j:i} = −4σ h_ij"),
    ("lie-h2", "ℒ_V̂h² = 2c h² − 6(n−1){(σ_i W^i) h² + σ_0 W_0}"),
    ("lie-W0", "ℒ_V̂W_0 = c W_0 − 3(n−1){2(σ_i W^i) W_0 − λσ_0}"),
];

/// Navigation characterization of `2Ric + ℒ_V̂F² = 2κF²` with
/// `c = κ − μ + (n−1)σ² + 2(n−1)σ_iW^i`.
pub fn navigation_drift_characterization(
    nav: &NavigationData,
    v: &VectorField,
    kappa: &ScalarField,
    mu: &ScalarField,
    flags: &[FlagPoint],
    tol: f64,
) -> Result<Vec<ResidualReport>> {
    let n = nav.dim();
    let nf = n as f64 - 1.0;
    let mut bundle = Bundle::new(&NAVIGATION_DRIFT, tol);
    let mut wind_seen = false;
    for p in flags {
        let (frame, w) = nav_frame(nav, &p.x)?;
        let nt = NavigationTensors::in_frame(&frame, &w)?;
        wind_seen |= nt.w.iter().any(|c| c.abs() > 1e-14);
        let y = normalized(&p.y, &nt.h);
        let (k, m) = (kappa.value(&p.x), mu.value(&p.x));
        let sw = dot(&nt.sigma_grad, &nt.w);
        let sig0 = dot(&nt.sigma_grad, &y);
        let w0 = dot(&nt.w_low, &y);
        let c = k - m + nf * nt.sigma * nt.sigma + 2.0 * nf * sw;
        bundle.push(0, linalg::quad(&nt.h_ricci, &y, &y) - m);
        bundle.push(1, 2.0 * nt.conformal_defect());
        let lh2 = riemann::lie_h2(nav.h(), v, &p.x, &y)?;
        bundle.push(2, lh2 - (2.0 * c - 6.0 * nf * (sw + sig0 * w0)));
        let lw0 = riemann::lie_w0(nav.h(), nav.w(), v, &p.x, &y)?;
        bundle.push(3, lw0 - (c * w0 - 3.0 * nf * (2.0 * sw * w0 - nt.lambda * sig0)));
    }
    if !wind_seen {
        return Ok(all_not_applicable(&NAVIGATION_DRIFT, tol, "W vanishes on every sample: the metric is Riemannian"));
    }
    Ok(bundle.finish())
}

const RANDERS_GRADIENT: [(&str, &str); 5] = [
    ("isotropic-S", "e_00 = 2σ(α² − β²)"),
    (
        "alpha-ricci",
        "αRic = κ(α² + β²) + 2t_00 + t^i_i α² − 2nσ_0 β − (n−1)(s_0² + s_{0;0} + 3σ²α² − σ²β²) − 2(s_0 + σβ) f_0 − Hess_α f(y)",
    ),
    (
        "sigma-f",
        "(2n−1)(1 − b²)σ_0 = σ(1 + b²) f_0 + f_i(s^i_0 − s^i β) + f_{;0j} b^j + (s_0 + 2σβ)(f_i b^i)",
    ),
    ("s-divergence", "s^i_{0;i} = κβ − σ_0 + (n−1)(t_0 + 2σ s_0 + σ²β) + σ f_0 + f_k s^k_0"),
    (
        "sigma-constant",
        "σ_i = 0 when σ(1 + b²) f_0 + f_i(s^i_0 − s^i β) + f_{;0j} b^j + (s_0 + 2σβ)(f_i b^i) = 0",
    ),
];

/// `(α, β)` characterization of `Ric_∞ = κF²` for `dm = e^{−f} dm_BH`.
pub fn randers_gradient_characterization(
    rd: &RandersData,
    f: &ScalarField,
    kappa: &ScalarField,
    flags: &[FlagPoint],
    tol: f64,
) -> Result<Vec<ResidualReport>> {
    let n = rd.dim();
    let nn = n as f64;
    let nf = nn - 1.0;
    let mut bundle = Bundle::new(&RANDERS_GRADIENT[..4], tol);
    let mut crit: f64 = 0.0;
    let mut grad = Accumulator::new(RANDERS_GRADIENT[4].0, RANDERS_GRADIENT[4].1, tol);
    for p in flags {
        let (frame, b) = beta_frame(rd, &p.x)?;
        let y = normalized(&p.y, &riemann::values(frame.metric()));
        let bd = BetaDerivatives::in_frame(&frame, &b, &y)?;
        let fj = check(f.eval(frame.coords()))?;
        let df = fj.gradient();
        let hess = riemann::values(&frame.hessian(&fj));
        let k = kappa.value(&p.x);
        let (beta, sg, s0, b2) = (bd.beta, bd.sigma, bd.s0, bd.b2);
        let sig0 = bd.sigma0();
        let f0 = dot(&df, &y);
        let fb = dot(&df, &bd.b_up);
        let s_i0: Vec<f64> = (0..n).map(|i| (0..n).map(|j| bd.s_mixed[i * n + j] * y[j]).sum()).collect();
        let fs0 = dot(&df, &s_i0);
        let fsb: f64 = (0..n).map(|i| df[i] * (s_i0[i] - bd.s_up[i] * beta)).sum();
        let f0b: f64 = (0..n).map(|j| (0..n).map(|i| hess[i * n + j] * y[i]).sum::<f64>() * bd.b_up[j]).sum();
        bundle.push(0, bd.e00 - 2.0 * sg * (1.0 - beta * beta));
        let ric = k * (1.0 + beta * beta) + 2.0 * bd.t00 + bd.t_trace - 2.0 * nn * sig0 * beta
            - nf * (s0 * s0 + bd.s0_0 + 3.0 * sg * sg - sg * sg * beta * beta)
            - 2.0 * (s0 + sg * beta) * f0
            - linalg::quad(&hess, &y, &y);
        bundle.push(1, bd.alpha_ric - ric);
        let rhs = sg * (1.0 + b2) * f0 + fsb + f0b + (s0 + 2.0 * sg * beta) * fb;
        bundle.push(2, (2.0 * nn - 1.0) * (1.0 - b2) * sig0 - rhs);
        let si0i = k * beta - sig0 + nf * (bd.t0 + 2.0 * sg * s0 + sg * sg * beta) + sg * f0 + fs0;
        bundle.push(3, bd.s_i0_i - si0i);
        crit = crit.max(rhs.abs());
        grad.push(bd.sigma_grad.iter().fold(0.0, |m: f64, g| m.max(g.abs())), 1.0);
    }
    let mut out = bundle.finish();
    out.push(if crit <= tol {
        grad.finish()
    } else {
        ResidualReport::not_applicable(RANDERS_GRADIENT[4].0, RANDERS_GRADIENT[4].1, tol, format!("constancy criterion not met ({crit:.3e})"))
    });
    Ok(out)
}

const NAVIGATION_GRADIENT: [(&str, &str); 5] = [
    ("riemann-soliton", "hRic + Hess_h f = μ h²"),
    ("conformal-W", "W_{i:j} + W_{j:i} = −4σ h_ij"),
    ("sigma-drift", "(2n−1)σ_0 = σ f_0 − f_k 𝒮^k_0 − f_{:0j} W^j"),
    ("sigma-wind", "(σ_i − σ f_i) W^i = κ − μ + (n−1)σ²"),
    ("f-condition", "σ f_0 − f_k 𝒮^k_0 − f_{:0j} W^j = 0"),
];

/// Navigation characterization of `Ric_∞ = κF²` for `dm = e^{−f} dm_BH`.
///
/// The last report is the condition that applies when `σ` is constant.
pub fn navigation_gradient_characterization(
    nav: &NavigationData,
    f: &ScalarField,
    kappa: &ScalarField,
    mu: &ScalarField,
    flags: &[FlagPoint],
    tol: f64,
) -> Result<Vec<ResidualReport>> {
    let n = nav.dim();
    let nf = n as f64 - 1.0;
    let mut bundle = Bundle::new(&NAVIGATION_GRADIENT, tol);
    let mut sigma_var: f64 = 0.0;
    for p in flags {
        let (frame, w) = nav_frame(nav, &p.x)?;
        let nt = NavigationTensors::in_frame(&frame, &w)?;
        let y = normalized(&p.y, &nt.h);
        let fj = check(f.eval(frame.coords()))?;
        let df = fj.gradient();
        let hess = riemann::values(&frame.hessian(&fj));
        let (k, m) = (kappa.value(&p.x), mu.value(&p.x));
        let sig0 = dot(&nt.sigma_grad, &y);
        let f0 = dot(&df, &y);
        let fs0 = dot(&df, &nt.s_nav_0(&y));
        let f0w = linalg::quad(&hess, &y, &nt.w);
        let drift = nt.sigma * f0 - fs0 - f0w;
        bundle.push(0, linalg::quad(&nt.h_ricci, &y, &y) + linalg::quad(&hess, &y, &y) - m);
        bundle.push(1, 2.0 * nt.conformal_defect());
        bundle.push(2, (2.0 * n as f64 - 1.0) * sig0 - drift);
        let lhs: f64 = (0..n).map(|i| (nt.sigma_grad[i] - nt.sigma * df[i]) * nt.w[i]).sum();
        bundle.push(3, lhs - (k - m + nf * nt.sigma * nt.sigma));
        bundle.push(4, drift);
        sigma_var = sigma_var.max(nt.sigma_grad.iter().fold(0.0, |a: f64, g| a.max(g.abs())));
    }
    let mut out = bundle.finish();
    if sigma_var > tol {
        let last = out.pop().expect("five reports");
        out.push(ResidualReport::not_applicable(
            &last.name,
            &last.paper_ref,
            tol,
            format!("σ is not constant (|dσ| up to {sigma_var:.3e})"),
        ));
    }
    Ok(out)
}

/// Which scalar equation to invert for `κ`.
#[derive(Clone, Debug)]
pub enum KappaKind {
    /// `Ric = κF²`
    Einstein,
    /// `Ric_∞ = κF²` for the given measure
    Gradient(MeasureSpec),
}

/// Pointwise soliton scalar recovered from data.
#[derive(Clone, Debug, PartialEq)]
pub struct KappaFit {
    /// `(x, κ(x))`
    pub table: Vec<(Vec<f64>, f64)>,
    /// Largest spread of the ratios at a single point.
    pub anisotropy: f64,
}

/// Least-squares `κ(x)` from several directions at each base point.
pub fn fit_kappa(metric: &FinslerMetric, kind: &KappaKind, samples: &[(Vec<f64>, Vec<Vec<f64>>)]) -> Result<KappaFit> {
    let mut table = Vec::with_capacity(samples.len());
    let mut anisotropy: f64 = 0.0;
    for (x, ys) in samples {
        if ys.len() < 2 {
            return Err(GeometryError::Rank(format!("{} directions at a point, need 2", ys.len())));
        }
        let mut ratios = Vec::with_capacity(ys.len());
        for y in ys {
            let p = FlagPoint::new(x.clone(), y.clone())?;
            let (value, f2) = match kind {
                KappaKind::Einstein => {
                    let b = finsler::curvature_bundle(metric, &p)?;
                    (b.ricci, b.f * b.f)
                }
                KappaKind::Gradient(m) => {
                    let a = FlagAnalysis::new(metric, Some(m), &p, DiffMode::Jet)?;
                    (a.weighted_ricci(RicciWeight::Infinite)?, a.f2())
                }
            };
            ratios.push(value / f2);
        }
        let kappa = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        anisotropy = anisotropy.max(hi - lo);
        table.push((x.clone(), kappa));
    }
    Ok(KappaFit { table, anisotropy })
}

/// Residual report of a scalar soliton residual over flags.
pub fn soliton_report(
    name: &str,
    formula: &str,
    tol: f64,
    flags: &[FlagPoint],
    residual: impl Fn(&FlagPoint) -> Result<f64>,
) -> Result<ResidualReport> {
    let mut rows = Vec::with_capacity(flags.len());
    for p in flags {
        rows.push((residual(p)?, 1.0));
    }
    Ok(report::summarize(name, formula, tol, rows))
}

/// True when every report passed or was not applicable, and at least one passed.
pub fn bundle_passes(reports: &[ResidualReport]) -> bool {
    report::all_pass(reports) && reports.iter().any(|r| r.verdict == Verdict::Pass)
}
