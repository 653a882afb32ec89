//! The brute-force oracle ledger: every closed form the crate relies on,
//! checked by exhaustive enumeration, plus the exact identity between
//! "pair a uniform truth with its sample" and "pair the sample with a
//! posterior-matched random ERM output".
//!
//! ```bash
//! cargo run --release --example exact_oracles
//! ```

use estimlab::cli::{selftest_checks, SelftestFault};
use estimlab::exactprob::{fraction_string, ratio};
use estimlab::shattered::{p1_p2_discrepancy, verify_p1_equals_p2, DEFAULT_P1P2_GUARD};

fn main() {
    println!("oracle ledger:");
    for check in selftest_checks(SelftestFault::None) {
        println!(
            "  {:<36} {} ({})",
            check.name,
            if check.pass { "ok" } else { "FAILED" },
            check.detail
        );
    }

    println!("\njoint-measure identity, exhaustively:");
    for (d, n) in [(2usize, 1usize), (2, 2), (3, 1), (3, 2)] {
        let report = verify_p1_equals_p2(d, n).expect("within guard");
        println!(
            "  d = {d}, n = {n}: {} states, max discrepancy {}",
            report.states,
            fraction_string(&report.max_discrepancy)
        );
    }

    let control = p1_p2_discrepancy(3, 2, &ratio(3, 5), DEFAULT_P1P2_GUARD).expect("within guard");
    println!(
        "  negative control (coin 3/5 on unseen points): max discrepancy {}",
        fraction_string(&control.max_discrepancy)
    );
}
