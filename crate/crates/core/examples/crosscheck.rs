//! Closed-form identities against the generic spray pipeline on random Randers
//! and navigation data.

use finsler_solitons::suites::{crosscheck, Suite};

fn main() {
    let suites = [Suite::RandersRicci, Suite::Navigation, Suite::LieIdentity, Suite::NavigationRicci, Suite::SDot, Suite::JetsVsFd];
    for suite in suites {
        let reports = crosscheck(suite, 10, 4, 7, suite.default_tol()).unwrap();
        println!("{suite}: {}", suite.describe());
        for r in reports {
            println!("  {:<22} {:<5} max {:.2e} over {}", r.name, r.verdict.as_str(), r.max_abs, r.samples);
        }
    }
}
