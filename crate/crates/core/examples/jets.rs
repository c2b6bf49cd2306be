//! Taylor jets: every partial derivative up to order four in one pass, checked
//! against closed forms and a finite-difference stencil.

use finsler_solitons::jets::{fd_derivative, lift, Jet};

fn main() {
    let f = |z: &[Jet]| z[0].exp() * z[1].sin();
    let p = [0.3, 1.1];
    let j = lift(f, &p, 4, &[0, 1]).unwrap();

    let (ex, sy, cy) = (p[0].exp(), p[1].sin(), p[1].cos());
    let cases: [(&[u8], f64); 5] = [
        (&[0, 0], ex * sy),
        (&[1, 0], ex * sy),
        (&[0, 1], ex * cy),
        (&[1, 2], -ex * sy),
        (&[2, 2], -ex * sy),
    ];
    println!("{:>8}  {:>14}  {:>14}  {:>10}", "index", "jet", "exact", "fd error");
    for (m, exact) in cases {
        let jet = j.derivative(m);
        let mi: Vec<usize> = m.iter().map(|&k| k as usize).collect();
        let fd = if mi.iter().sum::<usize>() <= 3 {
            let g = |z: &[f64]| z[0].exp() * z[1].sin();
            format!("{:.1e}", (fd_derivative(&g, &p, &mi, None).unwrap().value - exact).abs())
        } else {
            "-".into()
        };
        println!("{:>8}  {jet:>14.10}  {exact:>14.10}  {fd:>10}", format!("{m:?}"));
    }

    // outside the domain of ln the jet carries a fault instead of a NaN
    let bad = lift(|z: &[Jet]| (&z[0] - 1.0).ln(), &p, 2, &[0]);
    println!("ln(x - 1) at x = 0.3: {}", bad.unwrap_err());
}
