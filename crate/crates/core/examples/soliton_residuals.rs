//! Soliton residuals on the Gaussian Randers soliton: the weighted Ricci
//! equation, the almost-soliton equation with an explicit field and with the
//! gradient lift, and what a wrong soliton scalar looks like.

use finsler_solitons::fields::{ScalarField, VectorField};
use finsler_solitons::finsler::FinslerMetric;
use finsler_solitons::fixtures::by_name;
use finsler_solitons::sampling::sample_flags;
use finsler_solitons::soliton::{almost_soliton_residual, gradient_soliton_residual, SolitonCandidate, SolitonField};

fn main() {
    let fx = by_name("gaussian").unwrap();
    let metric = fx.metric();
    let m = fx.measure();
    let flags = sample_flags(&fx, 6, 1).unwrap();

    println!("Randers Gaussian soliton, W = Qx, f = |x|^2/2, kappa = 1");
    for p in &flags {
        let grad = gradient_soliton_residual(&metric, &m, &fx.kappa, p).unwrap();
        let lift = almost_soliton_residual(&metric, &SolitonField::GradientLift(m.clone()), &fx.kappa, p).unwrap();
        let off = gradient_soliton_residual(&metric, &m, &ScalarField::constant(1.1), p).unwrap();
        println!("  x = {:>7.3?}  gradient {grad:>9.1e}  lift {lift:>9.1e}  kappa = 1.1: {off:>8.3}", p.x);
    }

    // the flat case also solves the almost-soliton equation with V = x
    let flat = by_name("gaussian-flat").unwrap();
    let n = flat.dim();
    let candidate = SolitonCandidate {
        metric: FinslerMetric::riemannian(flat.nav.h()),
        field: SolitonField::Vector(VectorField::affine((0..n * n).map(|k| if k % (n + 1) == 0 { 1.0 } else { 0.0 }).collect(), vec![0.0; n])),
        kappa: ScalarField::constant(1.0),
    };
    let worst = sample_flags(&flat, 32, 2).unwrap().iter().map(|p| candidate.residual(p).unwrap().abs()).fold(0.0, f64::max);
    println!("Euclidean Gaussian with V = x: max residual {worst:.1e}");
}
