use finsler_solitons::fields::ScalarField;
use finsler_solitons::finsler::{self, MeasureSpec, RicciWeight};
use finsler_solitons::fixtures::{self, by_name, NAMES};
use finsler_solitons::jets::FlagPoint;
use finsler_solitons::linalg;
use finsler_solitons::randers::{eval_f, from_navigation, to_navigation};
use finsler_solitons::sampling::{self, random_navigation, random_randers, random_scalar, DOMAIN_MARGIN};
use finsler_solitons::soliton::{almost_soliton_residual, gradient_soliton_residual, SolitonField};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn scaled(p: &FlagPoint, s: f64) -> FlagPoint {
    FlagPoint::new(p.x.clone(), p.y.iter().map(|v| v * s).collect()).unwrap()
}

fn randers_case(seed: u64) -> (finsler_solitons::randers::RandersData, FlagPoint) {
    let mut r = sampling::rng(seed);
    let n = sampling::random_dim(&mut r);
    let rd = random_randers(&mut r, n);
    let p = sampling::randers_flags(&mut r, &rd, 1).unwrap().remove(0);
    (rd, p)
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn randers_norm_is_positively_homogeneous(seed in any::<u64>(), s in 0.05f64..20.0) {
        let (rd, p) = randers_case(seed);
        let f = eval_f(&rd, &p.x, &p.y).unwrap();
        let fs = eval_f(&rd, &p.x, &scaled(&p, s).y).unwrap();
        prop_assert!(f > 0.0);
        prop_assert!(close(fs, s * f, 1e-13));
    }

    #[test]
    fn euler_identities(seed in any::<u64>()) {
        let (rd, p) = randers_case(seed);
        let metric = rd.finsler_metric();
        let b = finsler::curvature_bundle(&metric, &p).unwrap();
        let n = rd.dim();
        prop_assert!(close(linalg::quad(&b.g, &p.y, &p.y), b.f * b.f, 1e-12));
        for i in 0..n {
            for j in 0..n {
                let c: f64 = (0..n).map(|k| b.cartan[(i * n + j) * n + k] * p.y[k]).sum();
                prop_assert!(c.abs() < 1e-11);
            }
        }
        for i in 0..n {
            let ry: f64 = (0..n).map(|k| b.riemann[i * n + k] * p.y[k]).sum();
            prop_assert!(ry.abs() < 1e-10 * b.f * b.f);
        }
    }

    #[test]
    fn curvatures_scale_with_direction(seed in any::<u64>(), s in 0.2f64..5.0) {
        let (rd, p) = randers_case(seed);
        let metric = rd.finsler_metric();
        let q = scaled(&p, s);
        let a = finsler::curvature_bundle(&metric, &p).unwrap();
        let b = finsler::curvature_bundle(&metric, &q).unwrap();
        for (u, v) in a.spray.iter().zip(&b.spray) {
            prop_assert!(close(*v, s * s * u, 1e-11));
        }
        prop_assert!(close(b.ricci, s * s * a.ricci, 1e-10));
        let m = MeasureSpec::BusemannHausdorff;
        let sa = finsler::s_curvature(&metric, &m, &p).unwrap();
        let sb = finsler::s_curvature(&metric, &m, &q).unwrap();
        prop_assert!(close(sb, s * sa, 1e-10));
    }

    #[test]
    fn navigation_round_trip(seed in any::<u64>()) {
        let mut r = sampling::rng(seed);
        let n = sampling::random_dim(&mut r);
        let nav = random_navigation(&mut r, n);
        let back = to_navigation(&from_navigation(&nav));
        let p = sampling::random_flag(&mut r, n).unwrap();
        prop_assume!(nav.lambda(&p.x).unwrap() > DOMAIN_MARGIN);
        prop_assert!(linalg::max_abs_diff(&nav.h().values(&p.x), &back.h().values(&p.x)) < 1e-12);
        prop_assert!(linalg::max_abs_diff(&nav.w().values(&p.x), &back.w().values(&p.x)) < 1e-12);
    }

    #[test]
    fn kappa_shift_is_affine(seed in any::<u64>(), c in -3.0f64..3.0) {
        let (rd, p) = randers_case(seed);
        let metric = rd.finsler_metric();
        let mut r = sampling::rng(seed ^ 1);
        let m = MeasureSpec::Weighted(random_scalar(&mut r, rd.dim()));
        let k0 = ScalarField::constant(0.0);
        let kc = ScalarField::constant(c);
        let g0 = gradient_soliton_residual(&metric, &m, &k0, &p).unwrap();
        let gc = gradient_soliton_residual(&metric, &m, &kc, &p).unwrap();
        prop_assert!(close(gc, g0 - c, 1e-12));
        let lift = SolitonField::GradientLift(m);
        let a0 = almost_soliton_residual(&metric, &lift, &k0, &p).unwrap();
        let ac = almost_soliton_residual(&metric, &lift, &kc, &p).unwrap();
        prop_assert!(close(ac, a0 - 2.0 * c, 1e-12));
    }

    #[test]
    fn finite_weight_tends_to_infinite(seed in any::<u64>()) {
        let (rd, p) = randers_case(seed);
        let metric = rd.finsler_metric();
        let m = MeasureSpec::BusemannHausdorff;
        let inf = finsler::weighted_ricci(&metric, &m, &p, RicciWeight::Infinite).unwrap();
        let big = finsler::weighted_ricci(&metric, &m, &p, RicciWeight::Finite(1e9)).unwrap();
        prop_assert!(close(big, inf, 1e-8));
    }

    #[test]
    fn sphere_chart_inverse(x in proptest::collection::vec(-2.0f64..2.0, 3), mu in 0.2f64..3.0) {
        let g = fixtures::sphere_metric(3, mu).values(&x);
        let gi = fixtures::sphere_inverse(&x, mu);
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| g[i * 3 + k] * gi[k * 3 + j]).sum();
                let id = if i == j { 1.0 } else { 0.0 };
                prop_assert!((v - id).abs() < 1e-12, "entry ({}, {}) = {}", i, j, v);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), k in 0usize..NAMES.len()) {
        let fx = by_name(NAMES[k]).unwrap();
        prop_assert_eq!(sampling::sample_flags(&fx, 8, seed).unwrap(), sampling::sample_flags(&fx, 8, seed).unwrap());
    }
}

#[test]
fn ricci_at_or_below_dimension_is_rejected() {
    let (rd, p) = randers_case(3);
    let metric = rd.finsler_metric();
    let n = rd.dim() as f64;
    let m = MeasureSpec::BusemannHausdorff;
    for w in [n, n - 0.5, 0.0] {
        assert!(finsler::weighted_ricci(&metric, &m, &p, RicciWeight::Finite(w)).is_err());
    }
}

#[test]
fn domain_guards_hold_on_a_thousand_points() {
    for name in NAMES {
        let fx = by_name(name).unwrap();
        let metric = fx.metric();
        for p in sampling::sample_flags(&fx, 1000, 11).unwrap() {
            assert!(fx.domain.contains(&p.x), "{name}");
            assert!(metric.in_domain(&p.x), "{name}");
            assert!(fx.nav.lambda(&p.x).unwrap() >= DOMAIN_MARGIN, "{name}");
            assert!(metric.eval(&p.x, &p.y) >= sampling::MIN_F, "{name}");
        }
    }
}

#[test]
fn wind_outside_unit_ball_is_rejected_at_evaluation() {
    let fx = fixtures::gaussian(1.0, &fixtures::default_rotation(3), &[0.0; 3], 3).unwrap();
    let far = [10.0, 0.0, 0.0];
    assert!(fx.nav.lambda(&far).map_or(true, |l| l <= 0.0));
    let p = FlagPoint::new(far.to_vec(), vec![1.0, 0.0, 0.0]).unwrap();
    assert!(finsler::curvature_bundle(&fx.metric(), &p).is_err());
}
