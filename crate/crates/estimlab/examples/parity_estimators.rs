//! Parity setting (q = 2): even the optimal estimators fail often.
//!
//! The deterministic-learner estimator emits 0 when the reduced input
//! matrix reaches full rank and 1/2 otherwise; its exact failure
//! probability at accuracy 1/4 exceeds 0.32 on the diagonal n = d >= 6.
//! The randomized-learner estimator fails with probability at least
//! P(E-)/2 > 0.14, where E- is "full row rank but bias direction not
//! spanned". Both closed forms are cross-checked by simulation here.
//!
//! ```bash
//! cargo run --release --example parity_estimators
//! ```

use estimlab::exactprob::{
    decimal_string, fraction_string, parity_estimator_fail, prob_e_minus, ratio,
};
use estimlab::expharness::{
    run_experiment, EstimatorChoice, ExperimentConfig, Family, LearnerChoice, Setting,
};

fn main() {
    println!("exact failure of the optimal deterministic estimator on the diagonal n = d:");
    for d in [4u64, 6, 8, 12, 16, 20] {
        let v = parity_estimator_fail(d, d);
        let fraction = fraction_string(&v);
        let rendered = if fraction.len() <= 44 {
            format!("{} = {}", fraction, decimal_string(&v, 8))
        } else {
            format!("{} (fraction spans {} digits)", decimal_string(&v, 8), fraction.len())
        };
        println!(
            "  d = {:>2}: {rendered}  {}",
            d,
            if v > ratio(8, 25) { "(> 0.32)" } else { "" }
        );
    }

    println!("\nexact randomized-learner floor P(E-)/2 (always > 0.14):");
    for n in [1u64, 2, 4, 8, 16, 64] {
        let v = prob_e_minus(n) * ratio(1, 2);
        println!("  n = {:>2}: {}", n, decimal_string(&v, 8));
    }

    let trials = 100_000u64;
    println!("\nMonte-Carlo cross-checks at {trials} trials, biased ERM, accuracy 1/4:");
    let cells = [
        ("det, two-class family, n=4 < d=8", Setting::Lin { q: 2, d: 8, n: 4, family: Family::D0D1 },
         EstimatorChoice::ParityOptDet { c_nu: None }),
        ("det, full class, n=d=8", Setting::Lin { q: 2, d: 8, n: 8, family: Family::Full },
         EstimatorChoice::ParityOptDet { c_nu: None }),
        ("rand, two-class family, n=4 < d=8", Setting::Lin { q: 2, d: 8, n: 4, family: Family::D0D1 },
         EstimatorChoice::ParityOptRand { c_nu: None }),
    ];
    for (label, setting, estimator) in cells {
        let cfg = ExperimentConfig {
            setting,
            learner: LearnerChoice::BiasedErm,
            estimator,
            epsilon: ratio(1, 4),
            trials,
            master_seed: 1_771,
            workers: 0,
        };
        let (summary, _) = run_experiment(&cfg).expect("valid configuration");
        match (&summary.failure.theory_exact, summary.failure.z) {
            (Some(theory), Some(z)) => println!(
                "  {label}: failure rate {:.5} vs exact {} (z = {z:+.2})",
                summary.failure.rate, theory
            ),
            _ => println!(
                "  {label}: failure rate {:.5} (floor 0.14)",
                summary.failure.rate
            ),
        }
    }
}
