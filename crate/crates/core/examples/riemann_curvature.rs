//! Christoffel symbols, Ricci curvature and covariant derivatives of a
//! Riemannian metric given as a closure over jets.

use finsler_solitons::fields::{ScalarField, VectorField};
use finsler_solitons::fixtures::{hopf_data, sphere_killing, sphere_metric};
use finsler_solitons::riemann::{christoffel, hessian, lie_h2, riemann_ricci};

fn main() {
    // round 3-sphere of curvature mu in projective coordinates
    let mu = 0.5;
    let h = sphere_metric(3, mu);
    let x = [0.4, -0.2, 0.7];
    let y = [1.0, 0.3, -0.5];

    let gamma = christoffel(&h, &x).unwrap();
    println!("Gamma^0_00 = {:.6}, Gamma^1_02 = {:.6}", gamma[0], gamma[9 + 2]);

    let ric = riemann_ricci(&h, &x, &y).unwrap();
    let h2 = h.norm2(&x, &y);
    println!("Ric(y, y) / h(y, y) = {:.12}  (Einstein constant 2 mu = {})", ric / h2, 2.0 * mu);

    let (q, d) = hopf_data(mu, 0.2, -0.1, 0.4);
    let w = sphere_killing(&q, &d, mu);
    println!("Killing field: (L_W h)(y, y) = {:.2e}", lie_h2(&h, &w, &x, &y).unwrap());
    let radial = VectorField::affine(vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], vec![0.0; 3]);
    println!("radial field:  (L_V h)(y, y) = {:.4}", lie_h2(&h, &radial, &x, &y).unwrap());

    let f = ScalarField::new(|x| x.iter().map(|v| v * v).sum::<finsler_solitons::jets::Jet>());
    println!("Hess |x|^2 (y, y) = {:.6}", hessian(&h, &f, &x, &y).unwrap());
}
