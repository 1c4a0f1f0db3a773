//! Runs the twelve acceptance criteria and prints one verdict per criterion.

use std::process::ExitCode;

use levyflux::acceptance;

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for id in 1..=12 {
        let c = acceptance::run(id);
        print!("{c}");
        if !c.passed() {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 12 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: criteria {failed:?} fail");
        ExitCode::FAILURE
    }
}
