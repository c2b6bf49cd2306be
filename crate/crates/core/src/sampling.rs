//! Seeded sampling of flags and of random Randers data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{GeometryError, Result};
use crate::fields::{ScalarField, VectorField};
use crate::fixtures::{Fixture, SampleDomain};
use crate::jets::{FlagPoint, Jet};
use crate::randers::{NavigationData, RandersData};
use crate::riemann::RiemannMetric;

/// Smallest `λ` (or `1 − b²`) accepted at a sample.
pub const DOMAIN_MARGIN: f64 = 1e-3;
/// Smallest `F(x, y)` accepted at a sample.
pub const MIN_F: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform direction on the Euclidean unit sphere.
pub fn unit_direction<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r > 1e-8 {
            return v.into_iter().map(|c| c / r).collect();
        }
    }
}

pub fn point_in<R: Rng>(rng: &mut R, domain: &SampleDomain) -> Vec<f64> {
    loop {
        let x: Vec<f64> = domain.lo.iter().zip(&domain.hi).map(|(a, b)| rng.gen_range(*a..=*b)).collect();
        if domain.contains(&x) {
            return x;
        }
    }
}

/// Flags in the fixture's sample domain that pass every guard.
pub fn sample_flags(fx: &Fixture, count: usize, seed: u64) -> Result<Vec<FlagPoint>> {
    let metric = fx.metric();
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count {
        tries += 1;
        if tries > 1000 * count.max(1) {
            return Err(GeometryError::Domain { primitive: "flag sampling" });
        }
        let x = point_in(&mut r, &fx.domain);
        let y = unit_direction(&mut r, fx.dim());
        if !metric.in_domain(&x) || fx.nav.lambda(&x).map_or(true, |l| l < DOMAIN_MARGIN) {
            continue;
        }
        let f = metric.eval(&x, &y);
        if !(f >= MIN_F) {
            continue;
        }
        out.push(FlagPoint::new(x, y)?);
    }
    Ok(out)
}

/// `count` base points with `per_point` directions each, for least-squares fits.
pub fn sample_fans(fx: &Fixture, count: usize, per_point: usize, seed: u64) -> Vec<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let x = point_in(&mut r, &fx.domain);
            let ys = (0..per_point).map(|_| unit_direction(&mut r, fx.dim())).collect();
            (x, ys)
        })
        .collect()
}

fn symmetric<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-scale..scale);
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    m
}

/// `δ + A + x_k B_k + x_k x_l C_kl`-shaped metric, positive definite near the origin.
pub fn random_metric<R: Rng>(rng: &mut R, n: usize) -> RiemannMetric {
    let a = symmetric(rng, n, 0.15);
    let lin: Vec<Vec<f64>> = (0..n).map(|_| symmetric(rng, n, 0.1)).collect();
    let quad: Vec<Vec<f64>> = (0..n).map(|_| symmetric(rng, n, 0.05)).collect();
    let freq: f64 = rng.gen_range(0.5..1.5);
    RiemannMetric::new(n, move |x| {
        (0..n * n)
            .map(|ij| {
                let (i, j) = (ij / n, ij % n);
                let mut v = x[0].constant_like(if i == j { 1.0 } else { 0.0 } + a[ij]);
                for k in 0..n {
                    v = v + &x[k] * lin[k][ij];
                    v = v + (&x[k] * freq).sin() * &x[(k + 1) % n] * quad[k][ij];
                }
                v
            })
            .collect()
    })
}

/// Smooth field with components of size at most about `scale` near the origin.
pub fn random_field<R: Rng>(rng: &mut R, n: usize, scale: f64) -> VectorField {
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
    let b: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-scale..scale)).collect();
    let e: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..scale) * 0.5).collect();
    VectorField::new(n, move |x| {
        (0..n)
            .map(|i| {
                let mut v = x[0].constant_like(c[i]);
                for j in 0..n {
                    v = v + &x[j] * b[i * n + j];
                }
                v + (&x[i] * &x[(i + 1) % n]).cos() * e[i]
            })
            .collect()
    })
}

pub fn random_scalar<R: Rng>(rng: &mut R, n: usize) -> ScalarField {
    let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let s = symmetric(rng, n, 0.3);
    ScalarField::new(move |x| {
        let mut v = x[0].constant_like(0.0);
        for i in 0..n {
            v = v + &x[i] * g[i];
            for j in 0..n {
                v = v + &x[i] * &x[j] * s[i * n + j];
            }
        }
        v.sin()
    })
}

/// Random Randers data valid on the box `|x_i| ≤ 0.5`.
pub fn random_randers<R: Rng>(rng: &mut R, n: usize) -> RandersData {
    RandersData::new(random_metric(rng, n), random_field(rng, n, 0.12)).expect("same dimension")
}

/// Random navigation data valid on the box `|x_i| ≤ 0.5`.
pub fn random_navigation<R: Rng>(rng: &mut R, n: usize) -> NavigationData {
    NavigationData::new(random_metric(rng, n), random_field(rng, n, 0.12)).expect("same dimension")
}

/// `h = e^{2u} δ` with a Möbius wind `a + Qx + sx + 2⟨b, x⟩x − |x|²b`, so `W` is conformal for `h`.
pub fn random_conformal_navigation<R: Rng>(rng: &mut R, n: usize) -> NavigationData {
    let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect();
    let curv: f64 = rng.gen_range(-0.3..0.3);
    let h = RiemannMetric::new(n, move |x| {
        let mut u = x[0].constant_like(0.0);
        for i in 0..n {
            u = u + &x[i] * g[i] + (&x[i] * &x[i]) * curv;
        }
        let e = (u * 2.0).exp();
        (0..n * n).map(|ij| if ij % (n + 1) == 0 { e.clone() } else { e.constant_like(0.0) }).collect()
    });
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.15..0.15)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.15..0.15)).collect();
    let sc: f64 = rng.gen_range(-0.2..0.2);
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.gen_range(-0.2..0.2);
            q[i * n + j] = v;
            q[j * n + i] = -v;
        }
    }
    let w = VectorField::new(n, move |x| {
        let bx: Jet = x.iter().zip(&b).map(|(u, v)| u * *v).sum();
        let r2: Jet = x.iter().map(|u| u * u).sum();
        (0..n)
            .map(|i| {
                let qx: Jet = (0..n).map(|j| &x[j] * q[i * n + j]).sum();
                qx + &x[i] * sc + &bx * &x[i] * 2.0 - &r2 * b[i] + a[i]
            })
            .collect()
    });
    NavigationData::new(h, w).expect("same dimension")
}

/// A flag near the origin at which both `b² < 1` and `λ > 0` have margin.
pub fn random_flag<R: Rng>(rng: &mut R, n: usize) -> Result<FlagPoint> {
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
    FlagPoint::new(x, unit_direction(rng, n))
}

/// Flags for random Randers data, rejecting those that violate a domain guard.
pub fn randers_flags<R: Rng>(rng: &mut R, rd: &RandersData, count: usize) -> Result<Vec<FlagPoint>> {
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count {
        tries += 1;
        if tries > 1000 * count.max(1) {
            return Err(GeometryError::Domain { primitive: "random Randers flags" });
        }
        let p = random_flag(rng, rd.dim())?;
        if rd.b2(&p.x).map_or(true, |b2| b2 > 1.0 - DOMAIN_MARGIN) || rd.alpha().check(&p.x).is_err() {
            continue;
        }
        out.push(p);
    }
    Ok(out)
}

/// Dimension used by the random suites: 2 or 3.
pub fn random_dim<R: Rng>(rng: &mut R) -> usize {
    if rng.gen_bool(0.5) {
        2
    } else {
        3
    }
}

/// Jet-evaluated values are finite at the point.
pub fn finite_at(rd: &RandersData, x: &[f64]) -> bool {
    let xj: Vec<Jet> = x.iter().map(|&v| Jet::scalar(v)).collect();
    rd.alpha().eval(&xj).iter().chain(rd.beta().eval(&xj).iter()).all(|j| j.value().is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::by_name;

    #[test]
    fn same_seed_same_flags() {
        let fx = by_name("cigar").unwrap();
        let a = sample_flags(&fx, 16, 42).unwrap();
        let b = sample_flags(&fx, 16, 42).unwrap();
        let c = sample_flags(&fx, 16, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn samples_respect_domains() {
        for name in crate::fixtures::NAMES {
            let fx = by_name(name).unwrap();
            for p in sample_flags(&fx, 64, 1).unwrap() {
                assert!(fx.domain.contains(&p.x));
                assert!(fx.nav.lambda(&p.x).unwrap() >= DOMAIN_MARGIN);
                let r: f64 = p.y.iter().map(|v| v * v).sum();
                assert!((r - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_randers_is_valid_on_box() {
        let mut r = rng(9);
        for _ in 0..20 {
            let n = random_dim(&mut r);
            let rd = random_randers(&mut r, n);
            let flags = randers_flags(&mut r, &rd, 4).unwrap();
            for p in flags {
                assert!(rd.b2(&p.x).unwrap() < 1.0);
                assert!(finite_at(&rd, &p.x));
            }
        }
    }
}
