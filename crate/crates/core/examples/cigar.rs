//! Finsler curvature of the Randers cigar: fundamental tensor, spray, Ricci,
//! flag curvature and S-curvature at a few flags.

use finsler_solitons::finsler::{curvature_bundle, flag_curvature_fit, s_curvature, weighted_ricci, MeasureSpec, RicciWeight};
use finsler_solitons::fixtures::cigar;
use finsler_solitons::jets::FlagPoint;

fn main() {
    let fx = cigar();
    let metric = fx.metric();
    let bh = MeasureSpec::BusemannHausdorff;
    let m = fx.measure();

    println!("{:>5} {:>7} {:>9} {:>12} {:>12} {:>12} {:>10}", "t", "angle", "F", "Ric/F^2", "2/cosh^2 t", "K", "S_BH");
    for (t, a) in [(0.3f64, 0.0f64), (0.8, 1.0), (1.2, 2.5), (1.9, 4.0)] {
        let y = vec![a.cos(), a.sin()];
        let p = FlagPoint::new(vec![t, 0.7], y).unwrap();
        let b = curvature_bundle(&metric, &p).unwrap();
        let k = flag_curvature_fit(&metric, &p).unwrap();
        let s = s_curvature(&metric, &bh, &p).unwrap();
        println!(
            "{t:>5.2} {a:>7.2} {:>9.5} {:>12.9} {:>12.9} {:>12.9} {s:>10.1e}",
            b.f,
            b.ricci / (b.f * b.f),
            2.0 / t.cosh().powi(2),
            k.k
        );
        let rinf = weighted_ricci(&metric, &m, &p, RicciWeight::Infinite).unwrap();
        println!("      Ric_inf / F^2 with f = -2 log cosh t: {:.1e}", rinf / (b.f * b.f));
    }
}

