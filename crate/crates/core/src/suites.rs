//! Check suites over fixtures and over random data, shared by the binary, the examples and the tests.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{GeometryError, Result};
use crate::fields::VectorField;
use crate::finsler::{self, DiffMode, FlagAnalysis, MeasureSpec, RicciWeight};
use crate::fixtures::Fixture;
use crate::jets::{FlagPoint, Jet};
use crate::linalg;
use crate::randers::{self, eval_f_nav, from_navigation, to_navigation};
use crate::report::{summarize, ResidualReport};
use crate::sampling::{self, random_conformal_navigation, random_dim, random_field, random_navigation, random_randers, random_scalar, randers_flags};
use crate::soliton::{self, SolitonField};

/// Sample count, seed, tolerance and differentiation mode of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub mode: DiffMode,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { samples: 64, seed: 42, tol: 1e-7, mode: DiffMode::Jet }
    }
}

fn per_flag<T: Send>(flags: &[FlagPoint], f: impl Fn(&FlagPoint) -> Result<T> + Sync) -> Result<Vec<T>> {
    flags.par_iter().map(|p| f(p).map_err(|e| e.at(&p.x, &p.y))).collect()
}

fn unit(rows: Vec<f64>) -> Vec<(f64, f64)> {
    rows.into_iter().map(|r| (r, 1.0)).collect()
}

/// Every check that the fixture's declared constants should pass.
pub fn verify_fixture(fx: &Fixture, opts: &RunOptions) -> Result<Vec<ResidualReport>> {
    if opts.samples == 0 {
        return Err(GeometryError::Parameter("samples must be at least 1".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(GeometryError::Parameter(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let n = fx.dim();
    let tol = opts.tol;
    let metric = fx.metric();
    let m = fx.measure();
    let flags = sampling::sample_flags(fx, opts.samples, opts.seed)?;
    let mut out = Vec::new();

    let rows = per_flag(&flags, |p| {
        let a = FlagAnalysis::new(&metric, Some(&m), p, opts.mode)?;
        Ok(a.weighted_ricci(RicciWeight::Infinite)? / a.f2() - fx.kappa.value(&p.x))
    })?;
    out.push(summarize("gradient-soliton", "Ric_∞ = κF²", tol, unit(rows)));

    let bh = MeasureSpec::BusemannHausdorff;
    let rows = per_flag(&flags, |p| {
        let a = FlagAnalysis::new(&metric, Some(&bh), p, opts.mode)?;
        Ok(a.s.unwrap_or(f64::NAN) / a.bundle.f - (n as f64 + 1.0) * fx.sigma)
    })?;
    out.push(summarize("s-curvature", "S_BH = (n+1)σF", tol, unit(rows)));

    if opts.mode == DiffMode::Jet {
        let lift = SolitonField::GradientLift(m.clone());
        let rows = per_flag(&flags, |p| soliton::almost_soliton_residual(&metric, &lift, &fx.kappa, p))?;
        out.push(summarize("almost-soliton-lift", "2Ric + ℒ_V̂F² = 2κF², V = grad ψ", tol, unit(rows)));
        if let Some(v) = &fx.applicable.drift {
            let field = SolitonField::Vector(v.clone());
            let rows = per_flag(&flags, |p| soliton::almost_soliton_residual(&metric, &field, &fx.kappa, p))?;
            out.push(summarize("almost-soliton-drift", "2Ric + ℒ_V̂F² = 2κF²", tol, unit(rows)));
        }
    }

    if let Some(k) = &fx.applicable.einstein {
        let rows = per_flag(&flags, |p| {
            let a = FlagAnalysis::new(&metric, None, p, opts.mode)?;
            Ok(a.bundle.ricci / a.f2() - k.value(&p.x))
        })?;
        out.push(summarize("einstein", "Ric = κ_E F²", tol, unit(rows)));
    }

    if let Some(k) = &fx.flag_curvature {
        let fits = per_flag(&flags, |p| finsler::flag_curvature_fit(&metric, p))?;
        let rows = fits.iter().zip(&flags).map(|(fit, p)| (fit.k - k.value(&p.x), k.value(&p.x))).collect::<Vec<_>>();
        out.push(summarize("flag-curvature", "R^i_k = K(F²δ^i_k − F F_{y^k} y^i)", tol, rows));
        let rows = fits.iter().map(|fit| (fit.residual, 1.0)).collect::<Vec<_>>();
        out.push(summarize("flag-curvature-anisotropy", "‖R − K(F²δ − F F_y y)‖ / ‖R‖", tol, rows));
    }

    let rd = fx.randers();
    let fan_count = (opts.samples / 16).max(4);
    let fans = sampling::sample_fans(fx, fan_count, n * (n + 1) / 2 + 2, opts.seed ^ 0x5eed);
    let fits: Vec<_> = fans.par_iter().map(|(x, ys)| randers::fit_sigma_isotropic_s(&rd, x, ys)).collect::<Result<_>>()?;
    out.push(summarize("sigma-fit", "e_00 = 2σ(α² − β²), σ fitted", tol, fits.iter().map(|f| (f.sigma - fx.sigma, 1.0))));
    out.push(summarize("sigma-fit-residual", "e_00 − 2σ(α² − β²) at the fitted σ", tol, fits.iter().map(|f| (f.residual, 1.0))));

    if let Some(k) = &fx.applicable.einstein {
        let v0 = VectorField::zero(n);
        out.extend(
            soliton::conformal_drift_characterization(&rd, &v0, k, &flags, tol)?.into_iter().map(|r| r.prefixed("alpha-beta")),
        );
        out.extend(
            soliton::navigation_drift_characterization(&fx.nav, &v0, k, k, &flags, tol)?
                .into_iter()
                .map(|r| r.prefixed("navigation")),
        );
    }
    out.extend(
        soliton::randers_gradient_characterization(&rd, &fx.f, &fx.kappa, &flags, tol)?
            .into_iter()
            .map(|r| r.prefixed("alpha-beta-gradient")),
    );
    out.extend(
        soliton::navigation_gradient_characterization(&fx.nav, &fx.f, &fx.kappa, &fx.mu, &flags, tol)?
            .into_iter()
            .map(|r| r.prefixed("navigation-gradient")),
    );
    Ok(out)
}

/// Oracle-equivalence suites over random data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    RandersRicci,
    Navigation,
    LieIdentity,
    NavigationRicci,
    SDot,
    JetsVsFd,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::RandersRicci, Suite::Navigation, Suite::LieIdentity, Suite::NavigationRicci, Suite::SDot, Suite::JetsVsFd];

    pub fn name(self) -> &'static str {
        match self {
            Suite::RandersRicci => "randers-ricci",
            Suite::Navigation => "navigation",
            Suite::LieIdentity => "lie-identity",
            Suite::NavigationRicci => "navigation-ricci",
            Suite::SDot => "s-dot",
            Suite::JetsVsFd => "jets-vs-fd",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Suite::RandersRicci => "closed-form Randers Ricci against the spray trace",
            Suite::Navigation => "(α, β) ↔ (h, W) round trip and the navigation identities",
            Suite::LieIdentity => "Lie derivative of F² through α, β and through ξ = y − FW",
            Suite::NavigationRicci => "Ricci of F against the Ricci of h along ξ",
            Suite::SDot => "Ṡ for e^{−f} dm_BH against its navigation expression",
            Suite::JetsVsFd => "jet derivatives against finite differences on the curvature pipeline",
        }
    }

    /// Default number of random metrics and flags per metric.
    pub fn default_count(self) -> (usize, usize) {
        match self {
            Suite::RandersRicci => (100, 16),
            Suite::Navigation => (100, 10),
            Suite::LieIdentity => (100, 2),
            Suite::NavigationRicci => (40, 4),
            Suite::SDot => (40, 4),
            Suite::JetsVsFd => (25, 2),
        }
    }

    pub fn default_tol(self) -> f64 {
        match self {
            Suite::JetsVsFd => 1e-4,
            _ => 1e-8,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<_> = Suite::ALL.iter().map(|x| x.name()).collect();
            GeometryError::Parameter(format!("unknown suite `{s}`; known: {}", names.join(", ")))
        })
    }
}

/// Run one suite on `metrics` random metrics with `flags` flags each.
pub fn crosscheck(suite: Suite, metrics: usize, flags: usize, seed: u64, tol: f64) -> Result<Vec<ResidualReport>> {
    let cases: Vec<u64> = (0..metrics as u64).collect();
    let per_case = |case: u64| -> Result<Vec<Vec<f64>>> {
        let mut rng = sampling::rng(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(case));
        let n = random_dim(&mut rng);
        match suite {
            Suite::RandersRicci => randers_ricci_case(&mut rng, n, flags),
            Suite::Navigation => navigation_case(&mut rng, n, flags),
            Suite::LieIdentity => lie_case(&mut rng, n, flags),
            Suite::NavigationRicci => navigation_ricci_case(&mut rng, n, flags),
            Suite::SDot => s_dot_case(&mut rng, n, flags),
            Suite::JetsVsFd => jets_fd_case(&mut rng, n, flags),
        }
    };
    let results: Vec<Vec<Vec<f64>>> = cases.par_iter().map(|&c| per_case(c)).collect::<Result<_>>()?;
    let specs = suite_rows(suite);
    let mut out: Vec<ResidualReport> = specs
        .iter()
        .enumerate()
        .map(|(k, (name, formula))| {
            let rows = results.iter().flat_map(|case| case[k].iter().map(|&r| (r, 1.0))).collect::<Vec<_>>();
            summarize(name, formula, tol, rows)
        })
        .collect();
    if suite == Suite::JetsVsFd {
        out.push(jet_polynomial_report(seed, 1e-12));
    }
    Ok(out)
}

fn suite_rows(suite: Suite) -> &'static [(&'static str, &'static str)] {
    match suite {
        Suite::RandersRicci => &[("randers-ricci", "Ric closed form = Ric from the spray (relative)")],
        Suite::Navigation => &[
            ("round-trip", "(h, W) → (a, b) → (h, W)"),
            ("navigation-quadratic", "h² − 2FW_0 = λF²"),
            ("navigation-unit", "h(x, y − FW) = F(x, y)"),
        ],
        Suite::LieIdentity => &[
            ("lie-alpha-beta", "ℒ_V̂F² = (F/α)ℒ_V̂α² + 2Fℒ_V̂β"),
            ("lie-navigation", "ℒ_V̂F² through ξ = y − FW"),
        ],
        Suite::NavigationRicci => &[("navigation-ricci", "Ric − (n−1)(3σ_0/F + μ̃ − σ² − 2σ_iW^i)F² = hRic(ξ) − (n−1)μ̃h²(ξ)")],
        Suite::SDot => &[("s-dot", "Ṡ = (n+1)σ_0F − 2σf_0F + 2f_k𝒮^k_0 F + f_k𝒮^k F² + Hess_h f(y)")],
        Suite::JetsVsFd => &[
            ("fd-ricci", "Ric, jet vs finite differences (relative)"),
            ("fd-s", "S, jet vs finite differences (relative)"),
            ("fd-s-dot", "Ṡ, jet vs finite differences (relative)"),
        ],
    }
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b) / a.abs().max(b.abs()).max(scale)
}

fn randers_ricci_case<R: Rng>(rng: &mut R, n: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    let rd = random_randers(rng, n);
    let metric = rd.finsler_metric();
    let mut rows = Vec::with_capacity(count);
    for p in randers_flags(rng, &rd, count)? {
        let closed = randers::randers_ricci_closed_form(&rd, &p).map_err(|e| e.at(&p.x, &p.y))?;
        let b = finsler::curvature_bundle(&metric, &p).map_err(|e| e.at(&p.x, &p.y))?;
        rows.push(rel(closed, b.ricci, b.f * b.f));
    }
    Ok(vec![rows])
}

fn nav_flags<R: Rng>(rng: &mut R, nav: &crate::randers::NavigationData, count: usize) -> Result<Vec<FlagPoint>> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = sampling::random_flag(rng, nav.dim())?;
        if nav.lambda(&p.x).map_or(false, |l| l > sampling::DOMAIN_MARGIN) {
            out.push(p);
        }
    }
    Ok(out)
}

fn navigation_case<R: Rng>(rng: &mut R, n: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    let nav = random_navigation(rng, n);
    let back = to_navigation(&from_navigation(&nav));
    let (mut trip, mut quad, mut unit_rows) = (vec![], vec![], vec![]);
    for p in nav_flags(rng, &nav, count)? {
        let dh = linalg::max_abs_diff(&nav.h().values(&p.x), &back.h().values(&p.x));
        let dw = linalg::max_abs_diff(&nav.w().values(&p.x), &back.w().values(&p.x));
        trip.push(dh.max(dw));
        let h = nav.h().values(&p.x);
        let w = nav.w().values(&p.x);
        let f = eval_f_nav(&nav, &p.x, &p.y)?;
        let lambda = nav.lambda(&p.x)?;
        let w0 = linalg::quad(&h, &w, &p.y);
        quad.push(linalg::quad(&h, &p.y, &p.y) - 2.0 * f * w0 - lambda * f * f);
        let xi = randers::xi(&nav, &p.x, &p.y)?;
        unit_rows.push(linalg::quad(&h, &xi, &xi).sqrt() - f);
    }
    Ok(vec![trip, quad, unit_rows])
}

fn lie_case<R: Rng>(rng: &mut R, n: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    let rd = random_randers(rng, n);
    let nav = random_navigation(rng, n);
    let v = random_field(rng, n, 0.8);
    let (mut ab, mut nv) = (vec![], vec![]);
    for p in randers_flags(rng, &rd, count)? {
        let (l, r) = randers::lie_f2_split(&rd, &v, &p).map_err(|e| e.at(&p.x, &p.y))?;
        ab.push(rel(l, r, randers::eval_f(&rd, &p.x, &p.y)?.powi(2)));
    }
    for p in nav_flags(rng, &nav, count)? {
        let (l, r) = randers::lie_h_tilde_split(&nav, &v, &p).map_err(|e| e.at(&p.x, &p.y))?;
        nv.push(rel(l, r, eval_f_nav(&nav, &p.x, &p.y)?.powi(2)));
    }
    Ok(vec![ab, nv])
}

fn navigation_ricci_case<R: Rng>(rng: &mut R, n: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    let nav = random_conformal_navigation(rng, n);
    let mu: f64 = rng.gen_range(-1.0..1.0);
    let mut rows = vec![];
    for p in nav_flags(rng, &nav, count)? {
        let (l, r) = randers::ricci_navigation_split(&nav, &p, mu).map_err(|e| e.at(&p.x, &p.y))?;
        rows.push(rel(l, r, eval_f_nav(&nav, &p.x, &p.y)?.powi(2)));
    }
    Ok(vec![rows])
}

fn s_dot_case<R: Rng>(rng: &mut R, n: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    let nav = random_conformal_navigation(rng, n);
    let f = random_scalar(rng, n);
    let mut rows = vec![];
    for p in nav_flags(rng, &nav, count)? {
        let (l, r) = randers::s_dot_navigation_split(&nav, &f, &p).map_err(|e| e.at(&p.x, &p.y))?;
        rows.push(rel(l, r, eval_f_nav(&nav, &p.x, &p.y)?.powi(2)));
    }
    Ok(vec![rows])
}

fn jets_fd_case<R: Rng>(rng: &mut R, n: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    let rd = random_randers(rng, n);
    let metric = rd.finsler_metric();
    let m = MeasureSpec::Weighted(random_scalar(rng, n));
    let (mut ric, mut s, mut sd) = (vec![], vec![], vec![]);
    for p in randers_flags(rng, &rd, count)? {
        let jet = FlagAnalysis::new(&metric, Some(&m), &p, DiffMode::Jet).map_err(|e| e.at(&p.x, &p.y))?;
        let fd = FlagAnalysis::new(&metric, Some(&m), &p, DiffMode::Fd).map_err(|e| e.at(&p.x, &p.y))?;
        let f = jet.bundle.f;
        ric.push(rel(jet.bundle.ricci, fd.bundle.ricci, f * f));
        s.push(rel(jet.s.unwrap_or(f64::NAN), fd.s.unwrap_or(f64::NAN), f));
        sd.push(rel(jet.s_dot.unwrap_or(f64::NAN), fd.s_dot.unwrap_or(f64::NAN), f * f));
    }
    Ok(vec![ric, s, sd])
}

/// Every partial derivative of `(a + b·x)^4` through the jets against the closed form.
pub fn jet_polynomial_report(seed: u64, tol: f64) -> ResidualReport {
    let mut rng = sampling::rng(seed ^ 0x7e75);
    let mut rows = Vec::new();
    for _ in 0..20 {
        let n = rng.gen_range(1..=4usize);
        let a: f64 = rng.gen_range(-1.0..1.0);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xs = Jet::variables(&x, 4);
        let lin = xs.iter().zip(&b).fold(xs[0].constant_like(a), |acc, (v, c)| acc + v * *c);
        let p = &(&lin * &lin) * &(&lin * &lin);
        let base = a + x.iter().zip(&b).map(|(u, v)| u * v).sum::<f64>();
        for m in p.multi_indices().to_vec() {
            let k: usize = m.iter().map(|&e| e as usize).sum();
            let falling: f64 = (0..k).map(|j| (4 - j) as f64).product();
            let coef: f64 = m.iter().zip(&b).map(|(&e, c)| c.powi(e as i32)).product();
            let exact = falling * coef * base.powi(4 - k as i32);
            rows.push((p.derivative(&m) - exact, exact.abs().max(1.0)));
        }
    }
    let scaled: Vec<(f64, f64)> = rows.into_iter().map(|(r, s)| (r / s, 1.0)).collect();
    summarize("jet-polynomial", "∂^m (a + b·x)^4 from jets = closed form", tol, scaled)
}
