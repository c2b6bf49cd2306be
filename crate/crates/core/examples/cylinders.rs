//! Build shrinking and expanding cylinders from your own Killing data and run
//! the characterization bundles on them.

use finsler_solitons::fixtures::{expanding_cylinder, hopf_data, killing_constraints, shrinking_cylinder};
use finsler_solitons::sampling::sample_flags;
use finsler_solitons::soliton::{bundle_passes, navigation_gradient_characterization, randers_gradient_characterization};

fn main() {
    let mu = 2.0;
    let (q, d) = hopf_data(mu, 0.3, -0.2, 0.25);
    let (gram, qd) = killing_constraints(&q, &d, mu);
    println!("Killing constraints: {gram:.1e}, {qd:.1e}");

    let (q1, d1) = hopf_data(1.0, 0.3, -0.2, 0.25);
    let fixtures = [shrinking_cylinder(2, mu, &q, &d).unwrap(), expanding_cylinder(2, &q1, &d1).unwrap()];
    for fx in fixtures {
        let flags = sample_flags(&fx, 24, 5).unwrap();
        let rd = fx.randers();
        let mut reports = randers_gradient_characterization(&rd, &fx.f, &fx.kappa, &flags, 1e-8).unwrap();
        reports.extend(navigation_gradient_characterization(&fx.nav, &fx.f, &fx.kappa, &fx.mu, &flags, 1e-8).unwrap());
        println!("{} (kappa = {}):", fx.name, fx.kappa.value(&flags[0].x));
        for r in &reports {
            println!("  {:<18} {:<14} max {:.1e}", r.name, r.verdict.as_str(), r.max_abs);
        }
        println!("  bundle {}", if bundle_passes(&reports) { "passes" } else { "fails" });
    }

    // a wind that is not Killing for the round metric is rejected up front
    let err = shrinking_cylinder(2, mu, &q, &[0.25, 0.2, 0.4]).unwrap_err();
    println!("bad Killing data: {err}");
}
