//! The end-to-end criteria, one line each.
//!
//! Built without the libtest harness so the lines are printed even when
//! output capture is on, and so criteria run one after another with
//! undisturbed timings.

use std::process::ExitCode;

use multisym::acceptance::{run_criterion, AcceptanceOptions, CRITERIA};

fn main() -> ExitCode {
    let quick = std::env::args().any(|a| a == "--quick");
    let opts = AcceptanceOptions {
        quick,
        ..AcceptanceOptions::default()
    };
    let mut failed = 0;
    for (id, _, _) in CRITERIA {
        let report = run_criterion(id, &opts);
        println!("{}", report.summary());
        failed += usize::from(!report.pass);
    }
    println!("acceptance: {} passed, {failed} failed", CRITERIA.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
