//! Recover the soliton scalar from data alone: least squares over several
//! directions per point, for the Einstein equation and for the weighted one.

use finsler_solitons::fixtures::{by_name, cigar};
use finsler_solitons::sampling::sample_fans;
use finsler_solitons::soliton::{fit_kappa, KappaKind};

fn main() {
    let fx = cigar();
    let fans = sample_fans(&fx, 5, 4, 3);
    let fit = fit_kappa(&fx.metric(), &KappaKind::Einstein, &fans).unwrap();
    println!("cigar, Ric = kappa F^2 (anisotropy {:.1e})", fit.anisotropy);
    for (x, k) in &fit.table {
        println!("  t = {:.3}  kappa = {k:.10}  2/cosh^2 t = {:.10}", x[0], 2.0 / x[0].cosh().powi(2));
    }

    for name in ["shrinking", "expanding"] {
        let fx = by_name(name).unwrap();
        let fans = sample_fans(&fx, 4, 5, 3);
        let fit = fit_kappa(&fx.metric(), &KappaKind::Gradient(fx.measure()), &fans).unwrap();
        let ks: Vec<String> = fit.table.iter().map(|(_, k)| format!("{k:.10}")).collect();
        println!("{name}, Ric_inf = kappa F^2: [{}] (anisotropy {:.1e})", ks.join(", "), fit.anisotropy);
    }
}
