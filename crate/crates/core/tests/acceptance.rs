//! Prints one line per acceptance criterion and exits nonzero on any failure.
//! Set `ITERCUR_DATA_DIR` to include the dataset criterion.

use itercur::verify::{run_all, Status, VerifyOptions};

fn main() {
    let reports = run_all(&VerifyOptions::default());
    for r in &reports {
        println!("{}", r.line());
    }
    let failed = reports.iter().filter(|r| r.status == Status::Fail).count();
    let skipped = reports.iter().filter(|r| r.status == Status::Skip).count();
    println!(
        "acceptance: {} passed, {failed} failed, {skipped} skipped",
        reports.len() - failed - skipped
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
