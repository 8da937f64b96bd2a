//! One PASS/FAIL line per criterion; fails unless exactly the known set
//! fails.

use std::process::ExitCode;

use stripemat::acceptance::{run_all, KNOWN_UNATTAINABLE};
use stripemat_core::transform::Budget;

fn main() -> ExitCode {
    let out = run_all(&Budget::default());
    for o in &out {
        println!("{} criterion {:>2} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.name, o.detail);
    }
    let failed: Vec<u8> = out.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!("known unattainable {KNOWN_UNATTAINABLE:?}, failed {failed:?}");
    if out.len() == 11 && failed == KNOWN_UNATTAINABLE {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
