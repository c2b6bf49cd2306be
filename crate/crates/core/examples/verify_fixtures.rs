//! Run every check on every built-in fixture and print the text report.

use finsler_solitons::cli::{render, Format};
use finsler_solitons::fixtures::{by_name, NAMES};
use finsler_solitons::report::RunReport;
use finsler_solitons::suites::{verify_fixture, RunOptions};

fn main() {
    let opts = RunOptions { samples: 32, ..RunOptions::default() };
    let mut all = true;
    for name in NAMES {
        let fx = by_name(name).unwrap();
        let checks = verify_fixture(&fx, &opts).unwrap();
        let report = RunReport { fixture: Some(name.into()), suite: None, seed: opts.seed, samples: opts.samples, checks };
        all &= report.passed();
        print!("{}", render(&report, Format::Text).unwrap());
        println!();
    }
    println!("{}", if all { "all fixtures pass" } else { "some checks failed" });
}
