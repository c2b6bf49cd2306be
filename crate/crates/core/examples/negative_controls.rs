//! Perturb one ingredient of a fixture by 1e-2 and watch the checks fail.

use finsler_solitons::fixtures::{by_name, Perturbation, NAMES};
use finsler_solitons::report::Verdict;
use finsler_solitons::suites::{verify_fixture, RunOptions};

fn main() {
    let opts = RunOptions { samples: 16, tol: 1e-6, ..RunOptions::default() };
    for name in NAMES {
        let fx = by_name(name).unwrap();
        for p in ["f:1e-2", "W:1e-2", "kappa:1e-2", "mu:1e-2"] {
            let bad = fx.perturbed(p.parse::<Perturbation>().unwrap()).unwrap();
            let reports = verify_fixture(&bad, &opts).unwrap();
            let failed: Vec<_> = reports.iter().filter(|r| r.verdict == Verdict::Fail).collect();
            let worst = failed.iter().max_by(|a, b| a.max_abs.total_cmp(&b.max_abs));
            match worst {
                Some(r) => println!("{:<22} {} checks fail, worst {} at {:.2e}", bad.name, failed.len(), r.name, r.max_abs),
                None => println!("{:<22} still passes", bad.name),
            }
        }
    }
}
