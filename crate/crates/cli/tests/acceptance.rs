//! One line per acceptance criterion; exits nonzero if any fails.

use std::process::ExitCode;

use ccsim::verify::{self, Status, VerifyOptions};

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as --nocapture; none apply here
    let results = verify::run(&VerifyOptions::default(), &mut std::io::stderr());
    for c in &results {
        println!("{}", c.line());
    }
    let failed = results.iter().filter(|c| c.status == Status::Fail).count();
    println!(
        "acceptance: {} passed, {failed} failed, {} skipped",
        results.iter().filter(|c| c.status == Status::Pass).count(),
        results.iter().filter(|c| c.status == Status::Skip).count()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
