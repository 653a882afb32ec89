//! The shattered-domain model: a uniform random ERM on a size-d domain
//! has expected loss (d - m)/(2d) given m distinct seen points, and d
//! times its loss follows Binomial(d - m, 1/2) exactly. The matched
//! constant ERM has loss exactly zero, which is why no single estimator
//! can serve both at once.
//!
//! ```bash
//! cargo run --release --example shattered_erm
//! ```

use std::collections::BTreeMap;

use estimlab::exactprob::ratio;
use estimlab::expharness::{
    chi_square_binomial_half, run_experiment, EstimatorChoice, ExperimentConfig, LearnerChoice,
    Setting,
};

fn main() {
    let (d, n, trials) = (50usize, 25usize, 20_000u64);
    let cfg = ExperimentConfig {
        setting: Setting::Shattered { d, n },
        learner: LearnerChoice::UniformErm,
        estimator: EstimatorChoice::Empirical,
        epsilon: ratio(1, 8),
        trials,
        master_seed: 505,
        workers: 0,
    };
    let (summary, records) = run_experiment(&cfg).expect("valid configuration");

    println!("uniform random ERM on a shattered domain, d = {d}, n = {n}, {trials} trials");
    println!(
        "mean loss {:.5} vs per-trial mixture of (d-m)/2d = {:.5} (z = {:+.2})",
        summary.mean_true_loss,
        summary.mixture_expected_loss.expect("uniform run"),
        summary.loss_z.expect("uniform run"),
    );

    let mut by_m: BTreeMap<usize, BTreeMap<u64, u64>> = BTreeMap::new();
    for r in &records {
        let m = r.distinct_points.expect("shattered trial");
        let hamming = (r.true_loss * d as f64).round() as u64;
        *by_m.entry(m).or_default().entry(hamming).or_insert(0) += 1;
    }
    println!("\nconditional law: d * loss | m  ~  Binomial(d - m, 1/2)");
    for (m, counts) in &by_m {
        let mass: u64 = counts.values().sum();
        if mass < 2_000 {
            continue;
        }
        if let Some(outcome) = chi_square_binomial_half(counts, (d - m) as u64) {
            println!(
                "  m = {m} ({mass} trials): chi2 = {:>6.2}, dof = {:>2}, p = {:.3}",
                outcome.statistic, outcome.dof, outcome.p_value
            );
        }
    }

    let matched = ExperimentConfig {
        learner: LearnerChoice::MatchedConstant,
        ..cfg
    };
    let (msummary, _) = run_experiment(&matched).expect("valid configuration");
    println!(
        "\nmatched constant ERM: mean loss {} and {} estimator failures at accuracy 1/8",
        msummary.mean_true_loss, msummary.failure.count
    );
}
