//! Auditing generic complexity bounds `loss < empirical + C(h, S)` with
//! the ERM that minimizes C: a zero bound is invalid whenever the ERM
//! overfits, a constant-one bound is valid but maximally loose on the
//! matched constant ERM (whose generalization gap is exactly zero), and
//! a weight bound sits in between.
//!
//! ```bash
//! cargo run --release --example bound_audit
//! ```

use estimlab::expharness::{audit_bound, BoundChoice, Setting};

fn main() {
    let setting = Setting::Shattered { d: 16, n: 8 };
    let trials = 20_000u64;
    println!("bound audit on {} at {trials} trials\n", setting.name());

    for bound in [BoundChoice::Zero, BoundChoice::One, BoundChoice::Weight] {
        let report = audit_bound(bound, &setting, trials, 606, 0).expect("valid setting");
        println!("bound `{}`:", report.bound);
        println!(
            "  validity rate {:.4} ({} violations of loss < empirical + C)",
            report.validity_rate, report.violation_count
        );
        println!(
            "  bound-min ERM: mean loss {:.4}, exceeds alpha = {} on a {:.4} fraction",
            report.mean_bound_min_loss, report.alpha_exact, report.overfit_rate
        );
        println!(
            "  looseness on matched constants: min {:.3} / p25 {:.3} / median {:.3} / p75 {:.3} / max {:.3} (mean {:.3})\n",
            report.looseness.min,
            report.looseness.p25,
            report.looseness.p50,
            report.looseness.p75,
            report.looseness.max,
            report.looseness.mean
        );
    }
}
