//! Zermelo navigation: build a Randers metric from a Riemannian metric and a
//! wind, go back again, and check the unit-speed identities.

use finsler_solitons::fields::VectorField;
use finsler_solitons::linalg::quad;
use finsler_solitons::randers::{eval_f, eval_f_nav, from_navigation, to_navigation, xi, NavigationData};
use finsler_solitons::riemann::RiemannMetric;

fn main() {
    let h = RiemannMetric::new(2, |x| {
        let c = (&x[0] * 0.5).cosh();
        vec![c.clone(), x[0].constant_like(0.1), x[0].constant_like(0.1), c * 2.0]
    });
    let w = VectorField::affine(vec![0.0, -0.3, 0.3, 0.0], vec![0.1, 0.0]);
    let nav = NavigationData::new(h, w).unwrap();
    let rd = from_navigation(&nav);
    let back = to_navigation(&rd);

    let x = [0.4, -0.6];
    println!("lambda = 1 - |W|^2 = {:.6}", nav.lambda(&x).unwrap());
    println!("|beta|_alpha^2     = {:.6}", rd.b2(&x).unwrap());
    let dh = nav.h().values(&x).iter().zip(back.h().values(&x)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("round trip: max |dh| = {dh:.1e}");

    let hx = nav.h().values(&x);
    let wx = nav.w().values(&x);
    for k in 0..6 {
        let a = k as f64 * std::f64::consts::PI / 3.0;
        let y = [a.cos(), a.sin()];
        let f = eval_f(&rd, &x, &y).unwrap();
        let g = eval_f_nav(&nav, &x, &y).unwrap();
        let v = xi(&nav, &x, &y).unwrap();
        let quadratic = quad(&hx, &y, &y) - 2.0 * f * quad(&hx, &wx, &y) - nav.lambda(&x).unwrap() * f * f;
        println!(
            "angle {a:.3}: F = {f:.9} (navigation {g:.9}), |y - F W|_h - F = {:.1e}, quadratic = {quadratic:.1e}",
            quad(&hx, &v, &v).sqrt() - f
        );
    }
}
