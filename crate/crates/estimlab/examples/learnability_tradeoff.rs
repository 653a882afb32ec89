//! The learnability-estimability trade-off over linear functionals at
//! q = 11: one biased ERM learns its matched family at the exact failure
//! level delta, and precisely because of that bias, no estimator can
//! track its loss over the two-class family with failure below eta > 0.4.
//!
//! ```bash
//! cargo run --release --example learnability_tradeoff
//! ```

use estimlab::exactprob::{decimal_string, delta_learn, eta_f, ratio};
use estimlab::expharness::{tradeoff_pair, tradeoff_report, EstimatorChoice, Family, Setting};

fn main() {
    let (q, d, n) = (11u64, 8usize, 4usize);
    let setting = Setting::Lin {
        q,
        d,
        n,
        family: Family::D0D1,
    };
    let nu = ratio(5, 11); // estimation accuracy (q-1)/2q
    let trials = 50_000u64;

    println!("setting: q = {q}, d = {d}, n = {n}; accuracy nu = 5/11; {trials} trials per item");
    println!(
        "exact levels: delta = {}, eta = {}\n",
        decimal_string(&delta_learn(q, n as u64), 8),
        decimal_string(&eta_f(q, n as u64), 8)
    );

    for estimator in [
        EstimatorChoice::Empirical,
        EstimatorChoice::Constant { value: ratio(0, 1) },
        EstimatorChoice::Constant { value: ratio(10, 11) },
        EstimatorChoice::RandomGuess,
    ] {
        let (c1, c2) = tradeoff_pair(&setting, &estimator, &nu, trials, 31, 0);
        let report = tradeoff_report(&c1, &c2).expect("matched pair");
        println!("estimator {}:", report.estimator);
        println!(
            "  item 1 ({}): rate {:.5} vs threshold {:.5} -> {}",
            report.item1.label,
            report.item1.rate,
            report.item1.threshold,
            if report.item1.holds { "holds" } else { "violated" }
        );
        println!(
            "  item 2 ({}): rate {:.5} vs threshold {:.5} -> {}",
            report.item2.label,
            report.item2.rate,
            report.item2.threshold,
            if report.item2.holds { "holds" } else { "violated" }
        );
        println!(
            "  verdict: {}\n",
            if report.violated {
                "trade-off confirmed (the biased learner cannot be estimated)"
            } else {
                "trade-off NOT confirmed"
            }
        );
    }
}
